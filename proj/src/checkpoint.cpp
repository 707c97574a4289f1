#include "gscap/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace gscap {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'C', 'A', 'P', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

void write_str(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ValidationError("checkpoint truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw ValidationError("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& in) {
    std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string read_str(std::istream& in) {
    std::uint64_t n = read_u64(in);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw ValidationError("checkpoint truncated");
    return s;
}

} // namespace

Tensor Model::smooth_semantics(const Tensor& raw) const {
    if (!params.config.uses_semantics()) return Tensor();
    return smooth(raw, sigma, effective_radius());
}

void save_checkpoint(const Model& model, const std::string& path) {
    model.params.validate();
    if (model.params.config.vocab_size != model.vocab.size()) {
        throw ContractError("checkpoint vocabulary size " + std::to_string(model.vocab.size()) +
                            " does not match configured vocab_size " +
                            std::to_string(model.params.config.vocab_size));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint file: " + path);
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    const CellConfig& c = model.params.config;
    write_u32(out, static_cast<std::uint32_t>(c.variant));
    write_u64(out, c.hidden_dim);
    write_u64(out, c.embed_dim);
    write_u64(out, c.semantic_dim);
    write_u64(out, c.visual_dim);
    write_u64(out, c.factor_dim);
    write_u64(out, c.vocab_size);
    write_f64(out, model.sigma);
    write_u64(out, model.radius);
    write_u64(out, model.vocab.hash());
    write_u64(out, model.vocab.size());
    for (const std::string& tok : model.vocab.tokens()) write_str(out, tok);

    std::uint64_t n_tensors = 0;
    visit_params(model.params, [&](const std::string&, const Tensor&) { ++n_tensors; });
    write_u64(out, n_tensors);
    visit_params(model.params, [&](const std::string& name, const Tensor& t) {
        write_str(out, name);
        write_u64(out, t.ndim());
        for (std::size_t d : t.shape()) write_u64(out, d);
        for (double v : t.data()) write_f64(out, v);
    });
    if (!out) throw ConfigError("failed while writing checkpoint: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw ValidationError("not a checkpoint file: " + path);
    }
    std::uint32_t version = read_u32(in);
    if (version != kVersion) {
        throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    }
    CellConfig config;
    std::uint32_t variant = read_u32(in);
    if (variant > 2) throw ValidationError("checkpoint has unknown cell variant id");
    config.variant = static_cast<CellVariant>(variant);
    config.hidden_dim = read_u64(in);
    config.embed_dim = read_u64(in);
    config.semantic_dim = read_u64(in);
    config.visual_dim = read_u64(in);
    config.factor_dim = read_u64(in);
    config.vocab_size = read_u64(in);

    Model model;
    model.sigma = read_f64(in);
    model.radius = read_u64(in);
    std::uint64_t stored_hash = read_u64(in);
    std::uint64_t n_tokens = read_u64(in);
    std::vector<std::string> tokens;
    tokens.reserve(n_tokens);
    for (std::uint64_t i = 0; i < n_tokens; ++i) tokens.push_back(read_str(in));
    model.vocab = Vocabulary::from_tokens(tokens);
    if (model.vocab.hash() != stored_hash) {
        throw ValidationError("checkpoint vocabulary hash mismatch");
    }

    model.params = CellParams::zeros(config);
    std::uint64_t n_tensors = read_u64(in);
    for (std::uint64_t i = 0; i < n_tensors; ++i) {
        std::string name = read_str(in);
        std::uint64_t ndim = read_u64(in);
        std::vector<std::size_t> shape;
        for (std::uint64_t d = 0; d < ndim; ++d) shape.push_back(read_u64(in));
        std::size_t total = 1;
        for (std::size_t d : shape) total *= d;
        std::vector<double> data(total);
        for (std::size_t k = 0; k < total; ++k) data[k] = read_f64(in);
        Tensor loaded(shape, std::move(data));
        bool placed = false;
        visit_params(model.params, [&](const std::string& pname, Tensor& t) {
            if (pname == name) {
                if (!t.same_shape(loaded)) {
                    throw ValidationError("checkpoint tensor '" + name + "' has shape " +
                                          shape_str(loaded) + ", config expects " + shape_str(t));
                }
                t = loaded;
                placed = true;
            }
        });
        if (!placed) throw ValidationError("checkpoint holds unknown tensor '" + name + "'");
    }
    model.params.validate();
    return model;
}

} // namespace gscap
