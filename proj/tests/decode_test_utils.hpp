// Shared helpers for decoding tests: seeded random models and an exhaustive
// enumeration oracle that is independent of the beam-search implementation.
#ifndef GSCAP_DECODE_TEST_UTILS_HPP
#define GSCAP_DECODE_TEST_UTILS_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "gscap/decoding.hpp"

namespace gscap::testutil {

inline Model random_model(CellVariant variant, std::size_t vocab_size, std::uint64_t seed,
                          std::size_t hidden = 5) {
    Model m;
    std::vector<std::string> tokens = {Vocabulary::kBosToken, Vocabulary::kEosToken,
                                       Vocabulary::kUnkToken, Vocabulary::kPadToken};
    for (std::size_t i = tokens.size(); i < vocab_size; ++i) {
        tokens.push_back("w" + std::to_string(i));
    }
    m.vocab = Vocabulary::from_tokens(tokens);
    CellConfig c;
    c.variant = variant;
    c.hidden_dim = hidden;
    c.embed_dim = 4;
    c.visual_dim = 3;
    c.vocab_size = vocab_size;
    c.semantic_dim = variant == CellVariant::Lstm ? 0 : 4;
    c.factor_dim = variant == CellVariant::Gsscn ? 3 : 0;
    m.params = CellParams::init(c, seed);
    Rng rng(seed ^ 0xfeed);
    for (std::size_t g = 0; g < kNumGates; ++g) {
        for (auto& v : m.params.b[g].data()) v = rng.uniform(-0.5, 0.5);
    }
    m.sigma = 1.0;
    return m;
}

struct DecodeInputs {
    Tensor v;
    Tensor s;
};

inline DecodeInputs random_inputs(const Model& m, std::uint64_t seed) {
    Rng rng(seed);
    DecodeInputs in;
    in.v = Tensor::vector(m.params.config.visual_dim);
    for (auto& x : in.v.data()) x = rng.uniform(-1.0, 1.0);
    const std::size_t s_dim = m.params.config.uses_semantics() ? m.params.config.semantic_dim : 1;
    in.s = Tensor::vector(s_dim);
    for (auto& x : in.s.data()) x = rng.uniform();
    return in;
}

// Walks every sequence outcome: EOS-terminated ones shorter than max_len and
// every full-length sequence. Ranks exactly like the final beam ranking.
struct ExhaustiveDecoder {
    const Model& model;
    std::size_t max_len;
    Tensor smoothed;
    const Tensor* sm = nullptr;
    std::vector<Hypothesis> out;

    ExhaustiveDecoder(const Model& m, const Tensor& s_raw, std::size_t ml)
        : model(m), max_len(ml) {
        smoothed = model.smooth_semantics(s_raw);
        if (model.params.config.uses_semantics()) sm = &smoothed;
    }

    void walk(const CellState& state, std::size_t last_token, IndexSeq tokens, double lp,
              std::size_t steps) {
        CellState next = cell_step(model.params, embed(model.params, last_token), state, sm);
        Tensor logp = log_softmax(project_logits(model.params, next.h));
        for (std::size_t w = 0; w < logp.size(); ++w) {
            if (w == Vocabulary::kEos) {
                Hypothesis h;
                h.tokens = tokens;
                h.log_prob = lp + logp[w];
                h.scored_steps = steps + 1;
                h.finished = true;
                h.ended_by_eos = true;
                out.push_back(std::move(h));
            } else {
                IndexSeq ext = tokens;
                ext.push_back(w);
                if (ext.size() >= max_len) {
                    Hypothesis h;
                    h.tokens = ext;
                    h.log_prob = lp + logp[w];
                    h.scored_steps = steps + 1;
                    h.finished = true;
                    out.push_back(std::move(h));
                } else {
                    walk(next, w, ext, lp + logp[w], steps + 1);
                }
            }
        }
    }

    Hypothesis best(const Tensor& v) {
        out.clear();
        walk(init_state(model.params, v), Vocabulary::kBos, {}, 0.0, 0);
        std::stable_sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
            if (a.normalized_score() != b.normalized_score()) {
                return a.normalized_score() > b.normalized_score();
            }
            return a.tokens < b.tokens;
        });
        return out.front();
    }
};

} // namespace gscap::testutil

#endif
