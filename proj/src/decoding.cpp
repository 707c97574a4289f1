#include "gscap/decoding.hpp"

#include <algorithm>

namespace gscap {

namespace {

struct StepScores {
    CellState state;
    Tensor log_probs;
};

StepScores advance(const Model& model, const Tensor& x, const CellState& state,
                   const Tensor* smoothed) {
    StepScores out;
    out.state = cell_step(model.params, x, state, smoothed);
    out.log_probs = log_softmax(project_logits(model.params, out.state.h));
    return out;
}

// True when appending `token` creates an n-gram already present in `tokens`.
bool repeats_ngram(const IndexSeq& tokens, std::size_t token, std::size_t n) {
    if (n == 0 || tokens.size() + 1 < n) return false;
    IndexSeq tail(tokens.end() - (n - 1), tokens.end());
    tail.push_back(token);
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        bool same = true;
        for (std::size_t k = 0; k < n; ++k) {
            if (tokens[i + k] != tail[k]) {
                same = false;
                break;
            }
        }
        if (same) return true;
    }
    return false;
}

bool better_ranked(const Hypothesis& a, const Hypothesis& b) {
    const double sa = a.normalized_score(), sb = b.normalized_score();
    if (sa != sb) return sa > sb;
    return a.tokens < b.tokens;
}

} // namespace

Hypothesis greedy_decode(const Model& model, const Tensor& v, const Tensor& s_raw,
                         std::size_t max_len) {
    if (max_len < 1) throw ConfigError("max_len must be at least 1");
    Tensor smoothed = model.smooth_semantics(s_raw);
    const Tensor* sm = model.params.config.uses_semantics() ? &smoothed : nullptr;

    Hypothesis hyp;
    hyp.state = init_state(model.params, v);
    Tensor x = embed(model.params, Vocabulary::kBos);
    while (true) {
        StepScores step = advance(model, x, hyp.state, sm);
        hyp.state = step.state;
        std::size_t choice = 0;
        for (std::size_t w = 1; w < step.log_probs.size(); ++w) {
            if (step.log_probs[w] > step.log_probs[choice]) choice = w;
        }
        hyp.log_prob += step.log_probs[choice];
        ++hyp.scored_steps;
        if (choice == Vocabulary::kEos) {
            hyp.ended_by_eos = true;
            break;
        }
        hyp.tokens.push_back(choice);
        if (hyp.tokens.size() >= max_len) break;
        x = embed(model.params, choice);
    }
    hyp.finished = true;
    return hyp;
}

BeamResult beam_decode(const Model& model, const Tensor& v, const Tensor& s_raw,
                       const DecodeOptions& opts) {
    if (opts.beam_size < 1) throw ConfigError("beam_size must be at least 1");
    if (opts.max_len < 1) throw ConfigError("max_len must be at least 1");
    Tensor smoothed = model.smooth_semantics(s_raw);
    const Tensor* sm = model.params.config.uses_semantics() ? &smoothed : nullptr;

    Hypothesis root;
    root.state = init_state(model.params, v);
    std::vector<Hypothesis> active{root};
    std::vector<Hypothesis> finished;

    while (!active.empty()) {
        std::vector<Hypothesis> candidates;
        for (const Hypothesis& hyp : active) {
            const std::size_t last = hyp.tokens.empty() ? Vocabulary::kBos : hyp.tokens.back();
            StepScores step = advance(model, embed(model.params, last), hyp.state, sm);
            for (std::size_t w = 0; w < step.log_probs.size(); ++w) {
                if (w != Vocabulary::kEos && repeats_ngram(hyp.tokens, w, opts.no_repeat_n)) {
                    continue;
                }
                Hypothesis ext = hyp;
                ext.state = step.state;
                ext.log_prob += step.log_probs[w];
                ++ext.scored_steps;
                if (w == Vocabulary::kEos) {
                    ext.finished = true;
                    ext.ended_by_eos = true;
                } else {
                    ext.tokens.push_back(w);
                    if (ext.tokens.size() >= opts.max_len) ext.finished = true;
                }
                candidates.push_back(std::move(ext));
            }
        }
        // Every candidate competes for a beam slot on cumulative log
        // probability; winners that are finished retire to the pool.
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Hypothesis& a, const Hypothesis& b) {
                             if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                             return a.tokens < b.tokens;
                         });
        if (candidates.size() > opts.beam_size) candidates.resize(opts.beam_size);
        active.clear();
        for (Hypothesis& c : candidates) {
            (c.finished ? finished : active).push_back(std::move(c));
        }
    }

    if (finished.empty()) throw NumericError("beam search ended with no finished hypothesis");
    std::stable_sort(finished.begin(), finished.end(), better_ranked);
    BeamResult result;
    result.best = finished.front();
    result.finished = std::move(finished);
    return result;
}

double replay_log_prob(const Model& model, const Tensor& v, const Tensor& s_raw,
                       const Hypothesis& hyp) {
    Tensor smoothed = model.smooth_semantics(s_raw);
    const Tensor* sm = model.params.config.uses_semantics() ? &smoothed : nullptr;
    CellState state = init_state(model.params, v);
    Tensor x = embed(model.params, Vocabulary::kBos);
    double total = 0.0;
    for (std::size_t t = 0; t < hyp.tokens.size(); ++t) {
        StepScores step = advance(model, x, state, sm);
        total += step.log_probs[hyp.tokens[t]];
        state = step.state;
        x = embed(model.params, hyp.tokens[t]);
    }
    if (hyp.ended_by_eos) {
        StepScores step = advance(model, x, state, sm);
        total += step.log_probs[Vocabulary::kEos];
    }
    return total;
}

} // namespace gscap
