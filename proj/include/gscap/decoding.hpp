#ifndef GSCAP_DECODING_HPP
#define GSCAP_DECODING_HPP

#include <cstddef>
#include <vector>

#include "gscap/checkpoint.hpp"

namespace gscap {

/// One decoded candidate. `tokens` holds the emitted words only (no BOS/EOS);
/// `log_prob` accumulates one log-softmax term per scored step, including the
/// EOS step when the hypothesis ended by emitting EOS.
struct Hypothesis {
    IndexSeq tokens;
    double log_prob = 0.0;
    CellState state;
    bool finished = false;
    bool ended_by_eos = false;
    std::size_t scored_steps = 0;

    double normalized_score() const {
        return log_prob / static_cast<double>(scored_steps == 0 ? 1 : scored_steps);
    }
};

struct DecodeOptions {
    std::size_t beam_size = 5;
    std::size_t max_len = 16;
    std::size_t no_repeat_n = 2; // 0 disables the repetition filter
};

/// Argmax decoding from the state induced by the visual features. Ties go to
/// the lowest token index. Stops at EOS or after max_len emitted tokens.
/// Semantic smoothing happens internally for the gst/gsscn variants.
Hypothesis greedy_decode(const Model& model, const Tensor& v, const Tensor& s_raw,
                         std::size_t max_len);

struct BeamResult {
    Hypothesis best;
    std::vector<Hypothesis> finished; // ranked: normalized score desc, ties lexicographic
};

/// Length-bounded beam search over cumulative log probabilities. EOS
/// extensions compete for beam slots like any token and retire to the
/// finished pool when they win one; finished hypotheses are ranked by
/// length-normalized log probability. An extension that would repeat an
/// n-gram of size no_repeat_n inside its own hypothesis is discarded.
BeamResult beam_decode(const Model& model, const Tensor& v, const Tensor& s_raw,
                       const DecodeOptions& opts);

/// Recompute a hypothesis' log probability by replaying its tokens.
double replay_log_prob(const Model& model, const Tensor& v, const Tensor& s_raw,
                       const Hypothesis& hyp);

} // namespace gscap

#endif
