#include "gscap/cells.hpp"

#include <cmath>

namespace gscap {

const char* const kGateNames[kNumGates] = {"i", "f", "o", "g"};

const char* variant_name(CellVariant v) {
    switch (v) {
        case CellVariant::Lstm: return "lstm";
        case CellVariant::Gst: return "gst";
        case CellVariant::Gsscn: return "gsscn";
    }
    return "?";
}

CellVariant variant_from_name(const std::string& name) {
    if (name == "lstm") return CellVariant::Lstm;
    if (name == "gst") return CellVariant::Gst;
    if (name == "gsscn") return CellVariant::Gsscn;
    throw ConfigError("unknown cell variant '" + name + "' (expected lstm, gst or gsscn)");
}

void CellConfig::validate() const {
    if (hidden_dim == 0 || embed_dim == 0 || visual_dim == 0 || vocab_size == 0) {
        throw ConfigError("cell dims (hidden, embed, visual, vocab) must all be positive");
    }
    if (uses_semantics() && semantic_dim == 0) {
        throw ConfigError(std::string(variant_name(variant)) + " cell requires a semantic dimension");
    }
    if (variant == CellVariant::Gsscn && factor_dim == 0) {
        throw ConfigError("gsscn cell requires a factor dimension");
    }
}

namespace {

void build_tensors(CellParams& p) {
    const CellConfig& c = p.config;
    const std::size_t d = c.hidden_dim, m = c.embed_dim, s = c.semantic_dim;
    const std::size_t f = c.factor_dim, V = c.vocab_size, vd = c.visual_dim;
    const std::size_t gate_in = c.variant == CellVariant::Gsscn ? f : m;
    const std::size_t gate_hid = c.variant == CellVariant::Gsscn ? f : d;
    for (std::size_t g = 0; g < kNumGates; ++g) {
        p.W_x[g] = Tensor::matrix(d, gate_in);
        p.W_h[g] = Tensor::matrix(d, gate_hid);
        p.b[g] = Tensor::vector(d);
    }
    p.W_hy = Tensor::matrix(V, d);
    p.W_E = Tensor::matrix(V, m);
    p.W_h0 = Tensor::matrix(d, vd);
    p.b_h0 = Tensor::vector(d);
    p.W_c0 = Tensor::matrix(d, vd);
    p.b_c0 = Tensor::vector(d);
    if (c.variant == CellVariant::Gst) {
        p.W_hm = Tensor::matrix(d, s);
        p.W_hn = Tensor::matrix(d, d);
    }
    if (c.variant == CellVariant::Gsscn) {
        for (std::size_t g = 0; g < kNumGates; ++g) {
            p.W_xm[g] = Tensor::matrix(f, s);
            p.W_xn[g] = Tensor::matrix(f, m);
            p.W_hm_g[g] = Tensor::matrix(f, s);
            p.W_hn_g[g] = Tensor::matrix(f, d);
        }
    }
}

} // namespace

CellParams CellParams::zeros(const CellConfig& config) {
    config.validate();
    CellParams p;
    p.config = config;
    build_tensors(p);
    return p;
}

CellParams CellParams::init(const CellConfig& config, std::uint64_t seed) {
    CellParams p = zeros(config);
    Rng master(seed);
    std::size_t index = 0;
    visit_params(p, [&](const std::string&, Tensor& t) {
        std::uint64_t sub = master.fork(index).next_u64();
        ++index;
        if (t.ndim() == 2) {
            t = init_weights(t.rows(), t.cols(), WeightScheme::Uniform, sub);
        }
        // biases stay zero
    });
    return p;
}

void CellParams::validate() const {
    config.validate();
    CellParams expected = zeros(config);
    bool ok = true;
    visit_params(*this, [&](const std::string& name, const Tensor& t) {
        if (!t.all_finite()) throw NumericError("non-finite entries in parameter " + name);
        Tensor* e = nullptr;
        visit_params(expected, [&](const std::string& ename, Tensor& et) {
            if (ename == name) e = &et;
        });
        if (!e || !e->same_shape(t)) ok = false;
    });
    if (!ok) throw ShapeError("parameter bundle does not match its config");
}

void visit_params(CellParams& params,
                  const std::function<void(const std::string&, Tensor&)>& fn) {
    for (std::size_t g = 0; g < kNumGates; ++g) fn(std::string("W_x") + kGateNames[g], params.W_x[g]);
    for (std::size_t g = 0; g < kNumGates; ++g) fn(std::string("W_h") + kGateNames[g], params.W_h[g]);
    for (std::size_t g = 0; g < kNumGates; ++g) fn(std::string("b_") + kGateNames[g], params.b[g]);
    fn("W_hy", params.W_hy);
    fn("W_E", params.W_E);
    fn("W_h0", params.W_h0);
    fn("b_h0", params.b_h0);
    fn("W_c0", params.W_c0);
    fn("b_c0", params.b_c0);
    if (params.config.variant == CellVariant::Gst) {
        fn("W_hm", params.W_hm);
        fn("W_hn", params.W_hn);
    }
    if (params.config.variant == CellVariant::Gsscn) {
        for (std::size_t g = 0; g < kNumGates; ++g) {
            fn(std::string("W_xm_") + kGateNames[g], params.W_xm[g]);
            fn(std::string("W_xn_") + kGateNames[g], params.W_xn[g]);
            fn(std::string("W_hm_") + kGateNames[g], params.W_hm_g[g]);
            fn(std::string("W_hn_") + kGateNames[g], params.W_hn_g[g]);
        }
    }
}

void visit_params(const CellParams& params,
                  const std::function<void(const std::string&, const Tensor&)>& fn) {
    visit_params(const_cast<CellParams&>(params),
                 [&](const std::string& name, Tensor& t) { fn(name, t); });
}

CellState init_state(const CellParams& params, const Tensor& v) {
    if (v.ndim() != 1 || v.size() != params.config.visual_dim) {
        throw ShapeError("visual features " + shape_str(v) + " do not match configured dim " +
                         std::to_string(params.config.visual_dim));
    }
    CellState st;
    Tensor zh = matvec(params.W_h0, v);
    add_inplace(zh, params.b_h0);
    st.h = tanh_elem(zh);
    Tensor zc = matvec(params.W_c0, v);
    add_inplace(zc, params.b_c0);
    st.c = tanh_elem(zc);
    st.t = 0;
    return st;
}

namespace {

// Shared tail of all three variants: gates from preactivations, memory and
// hidden updates. h_in is the (possibly revised/factored) hidden context the
// gates consumed; the caller has already produced the preactivations.
CellState finish_step(const std::array<Tensor, kNumGates>& pre, const CellState& state,
                      const Tensor& x, const Tensor& h_in, StepCache* cache) {
    std::array<Tensor, kNumGates> gate;
    for (std::size_t g = 0; g < kNumGates; ++g) {
        gate[g] = g == kGateG ? tanh_elem(pre[g]) : sigmoid(pre[g]);
        if (!gate[g].all_finite()) {
            throw NumericError(std::string("non-finite activation in gate ") + kGateNames[g] +
                               " at step " + std::to_string(state.t + 1));
        }
    }
    CellState next;
    next.c = add(hadamard(gate[kGateF], state.c), hadamard(gate[kGateI], gate[kGateG]));
    Tensor tc = tanh_elem(next.c);
    next.h = hadamard(gate[kGateO], tc);
    next.t = state.t + 1;
    if (cache) {
        cache->x = x;
        cache->h_prev = h_in;
        cache->c_prev = state.c;
        cache->gate = gate;
        cache->c = next.c;
        cache->tanh_c = tc;
    }
    return next;
}

std::array<Tensor, kNumGates> gate_preactivations(const CellParams& params, const Tensor& x,
                                                  const Tensor& h) {
    std::array<Tensor, kNumGates> pre;
    for (std::size_t g = 0; g < kNumGates; ++g) {
        pre[g] = matvec(params.W_x[g], x);
        add_inplace(pre[g], matvec(params.W_h[g], h));
        add_inplace(pre[g], params.b[g]);
    }
    return pre;
}

} // namespace

CellState lstm_step(const CellParams& params, const Tensor& x, const CellState& state,
                    StepCache* cache) {
    if (x.size() != params.W_x[0].cols() || state.h.size() != params.config.hidden_dim) {
        throw ShapeError("lstm_step input " + shape_str(x) + " / state " + shape_str(state.h) +
                         " do not match the cell config");
    }
    auto pre = gate_preactivations(params, x, state.h);
    return finish_step(pre, state, x, state.h, cache);
}

CellState gst_step(const CellParams& params, const Tensor& x, const CellState& state,
                   const Tensor& smoothed, StepCache* cache) {
    if (params.config.variant != CellVariant::Gst) {
        throw ContractError("gst_step called on a non-gst parameter bundle");
    }
    if (smoothed.size() != params.config.semantic_dim) {
        throw ContractError("gst_step requires smoothed semantic features of dim " +
                            std::to_string(params.config.semantic_dim));
    }
    // h_{t-1} <- (W_hm Shat) . (W_hn h_{t-1}), then the plain step runs on it.
    Tensor a = matvec(params.W_hm, smoothed);
    Tensor bb = matvec(params.W_hn, state.h);
    Tensor h_rev = hadamard(a, bb);
    CellState revised = state;
    revised.h = h_rev;
    CellState next = lstm_step(params, x, revised, cache);
    if (cache) {
        cache->gst_a = std::move(a);
        cache->gst_b = std::move(bb);
        cache->h_rev = std::move(h_rev);
        cache->h_orig = state.h;
    }
    return next;
}

CellState gsscn_step(const CellParams& params, const Tensor& x, const CellState& state,
                     const Tensor& smoothed, StepCache* cache) {
    if (params.config.variant != CellVariant::Gsscn) {
        throw ContractError("gsscn_step called on a non-gsscn parameter bundle");
    }
    if (smoothed.size() != params.config.semantic_dim) {
        throw ContractError("gsscn_step requires smoothed semantic features of dim " +
                            std::to_string(params.config.semantic_dim));
    }
    std::array<Tensor, kNumGates> pre;
    std::array<Tensor, kNumGates> fx_p, fx_q, fx, fh_r, fh_u, fh;
    for (std::size_t g = 0; g < kNumGates; ++g) {
        fx_p[g] = matvec(params.W_xm[g], smoothed);
        fx_q[g] = matvec(params.W_xn[g], x);
        fx[g] = hadamard(fx_p[g], fx_q[g]);
        fh_r[g] = matvec(params.W_hm_g[g], smoothed);
        fh_u[g] = matvec(params.W_hn_g[g], state.h);
        fh[g] = hadamard(fh_r[g], fh_u[g]);
        pre[g] = matvec(params.W_x[g], fx[g]);
        add_inplace(pre[g], matvec(params.W_h[g], fh[g]));
        add_inplace(pre[g], params.b[g]);
    }
    CellState next = finish_step(pre, state, x, state.h, cache);
    if (cache) {
        cache->fx_p = std::move(fx_p);
        cache->fx_q = std::move(fx_q);
        cache->fx = std::move(fx);
        cache->fh_r = std::move(fh_r);
        cache->fh_u = std::move(fh_u);
        cache->fh = std::move(fh);
    }
    return next;
}

CellState cell_step(const CellParams& params, const Tensor& x, const CellState& state,
                    const Tensor* smoothed, StepCache* cache) {
    switch (params.config.variant) {
        case CellVariant::Lstm:
            return lstm_step(params, x, state, cache);
        case CellVariant::Gst:
            if (!smoothed) throw ContractError("gst step requires smoothed semantic features");
            return gst_step(params, x, state, *smoothed, cache);
        case CellVariant::Gsscn:
            if (!smoothed) throw ContractError("gsscn step requires smoothed semantic features");
            return gsscn_step(params, x, state, *smoothed, cache);
    }
    throw ConfigError("unreachable cell variant");
}

Tensor project_logits(const CellParams& params, const Tensor& h) {
    return matvec(params.W_hy, h);
}

Tensor embed(const CellParams& params, std::size_t token_index) {
    const std::size_t V = params.config.vocab_size, m = params.config.embed_dim;
    if (token_index >= V) {
        throw IndexError("token index " + std::to_string(token_index) +
                         " out of range for vocabulary of size " + std::to_string(V));
    }
    Tensor out = Tensor::vector(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = params.W_E(token_index, j);
    return out;
}

std::uint64_t param_count(const CellConfig& config) {
    config.validate();
    const std::uint64_t d = config.hidden_dim, m = config.embed_dim, s = config.semantic_dim;
    const std::uint64_t f = config.factor_dim, V = config.vocab_size, vd = config.visual_dim;
    std::uint64_t n = 0;
    if (config.variant == CellVariant::Gsscn) {
        n += kNumGates * (d * f + d * f + d);
        n += kNumGates * (f * s + f * m + f * s + f * d);
    } else {
        n += kNumGates * (d * m + d * d + d);
    }
    n += V * d + V * m;
    n += 2 * (d * vd + d);
    if (config.variant == CellVariant::Gst) n += d * s + d * d;
    return n;
}

} // namespace gscap
