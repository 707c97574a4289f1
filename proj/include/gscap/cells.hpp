#ifndef GSCAP_CELLS_HPP
#define GSCAP_CELLS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>

#include "gscap/tensor.hpp"

namespace gscap {

enum class CellVariant { Lstm, Gst, Gsscn };

const char* variant_name(CellVariant v);
CellVariant variant_from_name(const std::string& name);

/// Gate order is fixed: input, forget, output, candidate.
inline constexpr std::size_t kGateI = 0;
inline constexpr std::size_t kGateF = 1;
inline constexpr std::size_t kGateO = 2;
inline constexpr std::size_t kGateG = 3;
inline constexpr std::size_t kNumGates = 4;
extern const char* const kGateNames[kNumGates];

struct CellConfig {
    CellVariant variant = CellVariant::Lstm;
    std::size_t hidden_dim = 0;   // d
    std::size_t embed_dim = 0;    // m
    std::size_t semantic_dim = 0; // s, required for Gst/Gsscn
    std::size_t visual_dim = 0;
    std::size_t factor_dim = 0;   // f, required for Gsscn
    std::size_t vocab_size = 0;   // V

    bool uses_semantics() const { return variant != CellVariant::Lstm; }
    void validate() const;
};

/// All learnable tensors for one cell variant. Gradient bundles reuse this
/// type; shapes always match the config the bundle was built from.
struct CellParams {
    CellConfig config;

    std::array<Tensor, kNumGates> W_x; // Lstm/Gst: [d x m]; Gsscn: [d x f]
    std::array<Tensor, kNumGates> W_h; // Lstm/Gst: [d x d]; Gsscn: [d x f]
    std::array<Tensor, kNumGates> b;   // [d]

    Tensor W_hy; // [V x d] output projection
    Tensor W_E;  // [V x m] embedding table

    Tensor W_h0, b_h0; // init MLP for h0: [d x v_dim], [d]
    Tensor W_c0, b_c0; // init MLP for c0

    // Gst hidden-state revision
    Tensor W_hm; // [d x s]
    Tensor W_hn; // [d x d]

    // Gsscn per-gate factored contexts
    std::array<Tensor, kNumGates> W_xm; // [f x s]
    std::array<Tensor, kNumGates> W_xn; // [f x m]
    std::array<Tensor, kNumGates> W_hm_g; // [f x s]
    std::array<Tensor, kNumGates> W_hn_g; // [f x d]

    static CellParams zeros(const CellConfig& config);
    static CellParams init(const CellConfig& config, std::uint64_t seed);

    void validate() const;
};

/// Visit every tensor of the variant in canonical order with its canonical
/// name. Checkpoint layout, gradient flattening and weight init all share
/// this enumeration.
void visit_params(CellParams& params,
                  const std::function<void(const std::string&, Tensor&)>& fn);
void visit_params(const CellParams& params,
                  const std::function<void(const std::string&, const Tensor&)>& fn);

struct CellState {
    Tensor h;
    Tensor c;
    std::size_t t = 0;
};

/// Per-step intermediates retained for backpropagation. Inference passes a
/// null cache.
struct StepCache {
    Tensor x;      // input fed to the step
    Tensor h_prev; // state entering the step
    Tensor c_prev;
    std::array<Tensor, kNumGates> gate; // post-nonlinearity i,f,o,g
    Tensor c;      // new memory
    Tensor tanh_c;
    // Gst revision
    Tensor gst_a;  // W_hm * Shat
    Tensor gst_b;  // W_hn * h_prev
    Tensor h_rev;  // gst_a . gst_b
    Tensor h_orig; // hidden state before the revision
    // Gsscn factored contexts
    std::array<Tensor, kNumGates> fx_p; // W_xm * Shat
    std::array<Tensor, kNumGates> fx_q; // W_xn * x
    std::array<Tensor, kNumGates> fx;   // p . q
    std::array<Tensor, kNumGates> fh_r; // W_hm_g * Shat
    std::array<Tensor, kNumGates> fh_u; // W_hn_g * h_prev
    std::array<Tensor, kNumGates> fh;   // r . u
};

/// h0 = tanh(W_h0 v + b_h0), c0 = tanh(W_c0 v + b_c0).
CellState init_state(const CellParams& params, const Tensor& v);

CellState lstm_step(const CellParams& params, const Tensor& x, const CellState& state,
                    StepCache* cache = nullptr);
CellState gst_step(const CellParams& params, const Tensor& x, const CellState& state,
                   const Tensor& smoothed, StepCache* cache = nullptr);
CellState gsscn_step(const CellParams& params, const Tensor& x, const CellState& state,
                     const Tensor& smoothed, StepCache* cache = nullptr);

/// Dispatch on the params' variant; `smoothed` may be null for plain Lstm.
CellState cell_step(const CellParams& params, const Tensor& x, const CellState& state,
                    const Tensor* smoothed, StepCache* cache = nullptr);

/// Raw logits W_hy * h; softmax is the caller's business.
Tensor project_logits(const CellParams& params, const Tensor& h);

/// Row lookup in the embedding table.
Tensor embed(const CellParams& params, std::size_t token_index);

/// Closed-form count of scalar parameters for the variant's shapes.
std::uint64_t param_count(const CellConfig& config);

} // namespace gscap

#endif
