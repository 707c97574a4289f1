#include "gscap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gscap {

using nlohmann::json;

std::vector<TokenSeq> Dataset::all_captions() const {
    std::vector<TokenSeq> out;
    for (const DatasetItem& item : items) {
        out.insert(out.end(), item.captions.begin(), item.captions.end());
    }
    return out;
}

DatasetStats dataset_stats(const Dataset& dataset) {
    DatasetStats st;
    st.n_items = dataset.items.size();
    st.visual_dim = dataset.visual_dim();
    st.semantic_dim = dataset.semantic_dim();
    std::set<std::string> tokens;
    std::size_t total_len = 0;
    for (const DatasetItem& item : dataset.items) {
        st.n_captions += item.captions.size();
        for (const TokenSeq& cap : item.captions) {
            total_len += cap.size();
            tokens.insert(cap.begin(), cap.end());
        }
    }
    st.distinct_tokens = tokens.size();
    st.mean_caption_len =
        st.n_captions == 0 ? 0.0 : static_cast<double>(total_len) / static_cast<double>(st.n_captions);
    return st;
}

namespace {

Tensor tensor_from_json(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty()) {
        throw ValidationError(where + ": expected a nonempty number array");
    }
    std::vector<double> data;
    data.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw ValidationError(where + ": non-numeric entry");
        data.push_back(v.get<double>());
    }
    const std::size_t n = data.size();
    return Tensor({n}, std::move(data));
}

void validate_item(const DatasetItem& item, std::size_t v_dim, std::size_t s_dim) {
    const std::string who = "item '" + item.image_id + "'";
    if (item.v.size() != v_dim) {
        throw ValidationError(who + ": visual features have dim " + std::to_string(item.v.size()) +
                              ", expected " + std::to_string(v_dim));
    }
    if (item.s.size() != s_dim) {
        throw ValidationError(who + ": semantic features have dim " + std::to_string(item.s.size()) +
                              ", expected " + std::to_string(s_dim));
    }
    if (!item.v.all_finite()) throw ValidationError(who + ": non-finite visual features");
    for (std::size_t i = 0; i < item.s.size(); ++i) {
        if (!(item.s[i] >= 0.0 && item.s[i] <= 1.0)) {
            throw ValidationError(who + ": semantic likelihood out of [0,1] at index " +
                                  std::to_string(i));
        }
    }
    if (item.captions.empty()) throw ValidationError(who + ": no captions");
    for (const TokenSeq& cap : item.captions) {
        if (cap.empty()) throw ValidationError(who + ": empty caption");
    }
}

} // namespace

Dataset load_dataset(const std::string& path, std::size_t expected_visual_dim,
                     std::size_t expected_semantic_dim) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);
    Dataset ds;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    std::size_t v_dim = expected_visual_dim, s_dim = expected_semantic_dim;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("dataset line " + std::to_string(lineno) + ": " + e.what());
        }
        DatasetItem item;
        if (!rec.contains("image_id") || !rec["image_id"].is_string()) {
            throw ValidationError("dataset line " + std::to_string(lineno) + ": missing image_id");
        }
        item.image_id = rec["image_id"].get<std::string>();
        item.v = tensor_from_json(rec.value("v", json::array()), "item '" + item.image_id + "' v");
        item.s = tensor_from_json(rec.value("s", json::array()), "item '" + item.image_id + "' s");
        if (!rec.contains("captions") || !rec["captions"].is_array()) {
            throw ValidationError("item '" + item.image_id + "': missing captions array");
        }
        for (const auto& cap : rec["captions"]) {
            TokenSeq toks;
            if (cap.is_array()) {
                for (const auto& t : cap) toks.push_back(t.get<std::string>());
            } else if (cap.is_string()) {
                toks = split_tokens(cap.get<std::string>());
            } else {
                throw ValidationError("item '" + item.image_id + "': caption is neither array nor string");
            }
            item.captions.push_back(std::move(toks));
        }
        if (v_dim == 0) v_dim = item.v.size();
        if (s_dim == 0) s_dim = item.s.size();
        validate_item(item, v_dim, s_dim);
        if (!ids.insert(item.image_id).second) {
            throw ValidationError("duplicate image_id '" + item.image_id + "'");
        }
        ds.items.push_back(std::move(item));
    }
    if (ds.items.empty()) throw ValidationError("dataset file has no items: " + path);
    return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write dataset file: " + path);
    for (const DatasetItem& item : dataset.items) {
        json rec;
        rec["image_id"] = item.image_id;
        rec["v"] = item.v.data();
        rec["s"] = item.s.data();
        json caps = json::array();
        for (const TokenSeq& cap : item.captions) caps.push_back(cap);
        rec["captions"] = caps;
        out << rec.dump() << '\n';
    }
}

std::string synth_token_for_index(std::size_t index, std::size_t vocab_size) {
    std::ostringstream os;
    os << "w";
    os.fill('0');
    os.width(3);
    os << (index % vocab_size);
    return os.str();
}

Dataset synth_dataset(const SynthOptions& opts) {
    if (opts.n_items == 0 || opts.visual_dim == 0 || opts.semantic_dim == 0 ||
        opts.vocab_size == 0 || opts.caption_len == 0) {
        throw ConfigError("synth_dataset needs positive sizes");
    }
    const std::size_t k = std::min(opts.caption_len, opts.semantic_dim);
    Rng rng(opts.seed);

    // Fixed projection from semantic to visual space, shared by all items.
    Tensor proj = init_weights(opts.visual_dim, opts.semantic_dim, WeightScheme::Uniform,
                               rng.fork(0).next_u64());

    Dataset ds;
    Rng item_rng = rng.fork(1);
    for (std::size_t n = 0; n < opts.n_items; ++n) {
        DatasetItem item;
        std::ostringstream id;
        id << "img_";
        id.fill('0');
        id.width(4);
        id << n;
        item.image_id = id.str();

        // Pick k distinct semantic indices; likelihoods strictly decrease so
        // the top-k ordering (and hence the planted caption) is unambiguous.
        std::vector<std::size_t> indices(opts.semantic_dim);
        std::iota(indices.begin(), indices.end(), 0);
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + item_rng.uniform_index(indices.size() - i);
            std::swap(indices[i], indices[j]);
        }
        item.s = Tensor::vector(opts.semantic_dim);
        TokenSeq caption;
        for (std::size_t i = 0; i < k; ++i) {
            item.s[indices[i]] = 0.95 - 0.08 * static_cast<double>(i);
            caption.push_back(synth_token_for_index(indices[i], opts.vocab_size));
        }
        item.captions.push_back(std::move(caption));

        Tensor mixed = matvec(proj, item.s);
        for (double& v : mixed.data()) v += opts.visual_noise * item_rng.uniform(-1.0, 1.0);
        item.v = tanh_elem(mixed);
        ds.items.push_back(std::move(item));
    }
    return ds;
}

Tensor load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t embed_dim,
                       std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open embeddings file: " + path);
    std::unordered_map<std::string, std::vector<double>> table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string tok;
        is >> tok;
        std::vector<double> vec;
        double v;
        while (is >> v) vec.push_back(v);
        if (vec.size() != embed_dim) {
            throw ValidationError("embeddings line " + std::to_string(lineno) + " (token '" + tok +
                                  "') has " + std::to_string(vec.size()) + " values, expected " +
                                  std::to_string(embed_dim));
        }
        table[tok] = std::move(vec);
    }
    const std::size_t V = vocab.size();
    Tensor W = Tensor::matrix(V, embed_dim);
    Rng rng(seed);
    const double r = std::sqrt(6.0 / static_cast<double>(V + embed_dim));
    for (std::size_t i = 0; i < V; ++i) {
        auto it = table.find(vocab.token_at(i));
        if (it != table.end()) {
            for (std::size_t j = 0; j < embed_dim; ++j) W(i, j) = it->second[j];
        } else {
            Rng row = rng.fork(i);
            for (std::size_t j = 0; j < embed_dim; ++j) W(i, j) = row.uniform(-r, r);
        }
    }
    return W;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double held_out_frac,
                                          std::uint64_t seed) {
    if (held_out_frac < 0.0 || held_out_frac >= 1.0) {
        throw ConfigError("held_out_frac must be in [0,1)");
    }
    std::vector<std::size_t> order(dataset.items.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::size_t j = rng.uniform_index(i);
        std::swap(order[i - 1], order[j]);
    }
    std::size_t n_held = static_cast<std::size_t>(
        std::floor(held_out_frac * static_cast<double>(dataset.items.size())));
    Dataset train, held;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_held ? held : train).items.push_back(dataset.items[order[i]]);
    }
    return {std::move(train), std::move(held)};
}

} // namespace gscap
