#include "gscap/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gscap/smoothing.hpp"

namespace gscap {

LossKind loss_kind_from_name(const std::string& name) {
    if (name == "xent" || name == "cross_entropy") return LossKind::CrossEntropy;
    if (name == "se" || name == "squared_error") return LossKind::SquaredError;
    throw ConfigError("unknown loss kind '" + name + "' (expected xent or se)");
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ConfigError("dropout_rate must be in [0,1)");
    }
}

namespace {

constexpr double kProbFloor = 1e-300; // keeps -log() finite on hard-zero probabilities

double loss_from_index(const Tensor& probs, std::size_t target, LossKind kind) {
    switch (kind) {
        case LossKind::CrossEntropy:
            return -std::log(std::max(probs[target], kProbFloor));
        case LossKind::SquaredError: {
            double acc = 0.0;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                double diff = probs[i] - (i == target ? 1.0 : 0.0);
                acc += diff * diff;
            }
            return 0.5 * acc;
        }
    }
    throw ConfigError("unreachable loss kind");
}

// Inverted dropout mask: entries are 0 or 1/keep. Empty tensor means "no
// dropout", which keeps the rate-0 path bit-exact.
Tensor make_mask(std::size_t n, double rate, Rng& rng) {
    if (rate <= 0.0) return Tensor();
    const double keep = 1.0 - rate;
    Tensor mask = Tensor::vector(n);
    for (std::size_t i = 0; i < n; ++i) mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
    return mask;
}

Tensor apply_mask(const Tensor& x, const Tensor& mask) {
    if (mask.size() == 0) return x;
    return hadamard(x, mask);
}

struct StepTape {
    StepCache cache;
    Tensor mask_emb, mask_entry, mask_exit;
    Tensor probs;
    Tensor h_exit;
    std::size_t input_token = 0;
    std::size_t target_token = 0;
};

struct SampleTape {
    Tensor v_drop;
    Tensor mask_v;
    CellState s0;
    std::vector<StepTape> steps;
};

// Teacher-forced forward pass; fills the tape when given one. The dropout
// draws depend only on dimensions and sequence length, so analytic and
// finite-difference evaluations with the same mask_seed see the same masks.
double run_forward(const CellParams& params, const TrainSample& sample, const TrainConfig& config,
                   Rng& mask_rng, SampleTape* tape) {
    if (sample.tokens.size() < 2) {
        throw ContractError("training sample must hold at least BOS and EOS");
    }
    if (params.config.uses_semantics() &&
        sample.smoothed.size() != params.config.semantic_dim) {
        throw ContractError("training sample lacks smoothed semantic features of dim " +
                            std::to_string(params.config.semantic_dim));
    }
    const double rate = config.dropout_rate;
    Tensor mask_v = make_mask(sample.v.size(), rate, mask_rng);
    Tensor v_drop = apply_mask(sample.v, mask_v);
    CellState st = init_state(params, v_drop);
    if (tape) {
        tape->mask_v = mask_v;
        tape->v_drop = v_drop;
        tape->s0 = st;
    }
    const Tensor* sm = params.config.uses_semantics() ? &sample.smoothed : nullptr;
    double loss_sum = 0.0;
    const std::size_t steps = sample.tokens.size() - 1;
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t tok_in = sample.tokens[t];
        const std::size_t target = sample.tokens[t + 1];
        Tensor e = embed(params, tok_in);
        Tensor m_emb = make_mask(e.size(), rate, mask_rng);
        Tensor e1 = apply_mask(e, m_emb);
        Tensor m_entry = make_mask(e1.size(), rate, mask_rng);
        Tensor x = apply_mask(e1, m_entry);

        StepTape stp;
        CellState next = cell_step(params, x, st, sm, tape ? &stp.cache : nullptr);

        Tensor m_exit = make_mask(next.h.size(), rate, mask_rng);
        Tensor h_exit = apply_mask(next.h, m_exit);
        Tensor probs = softmax(project_logits(params, h_exit));
        loss_sum += loss_from_index(probs, target, config.loss_kind);
        if (tape) {
            stp.mask_emb = std::move(m_emb);
            stp.mask_entry = std::move(m_entry);
            stp.mask_exit = std::move(m_exit);
            stp.probs = std::move(probs);
            stp.h_exit = std::move(h_exit);
            stp.input_token = tok_in;
            stp.target_token = target;
            tape->steps.push_back(std::move(stp));
        }
        st = next;
    }
    return loss_sum;
}

std::size_t total_steps(const std::vector<TrainSample>& batch) {
    std::size_t n = 0;
    for (const TrainSample& s : batch) {
        if (s.tokens.size() < 2) throw ContractError("training sample must hold at least BOS and EOS");
        n += s.tokens.size() - 1;
    }
    return n;
}

// d(mean loss)/d(logits) for one step, already scaled by inv_n.
Tensor logits_gradient(const Tensor& probs, std::size_t target, LossKind kind, double inv_n) {
    Tensor d = probs;
    switch (kind) {
        case LossKind::CrossEntropy:
            d[target] -= 1.0;
            scale_inplace(d, inv_n);
            return d;
        case LossKind::SquaredError: {
            // dL/dy = y - onehot, through the softmax Jacobian:
            // dz = y . (dy - (dy . y) 1)
            Tensor dy = probs;
            dy[target] -= 1.0;
            const double s = dot(dy, probs);
            Tensor dz = Tensor::vector(probs.size());
            for (std::size_t i = 0; i < probs.size(); ++i) dz[i] = probs[i] * (dy[i] - s);
            scale_inplace(dz, inv_n);
            return dz;
        }
    }
    throw ConfigError("unreachable loss kind");
}

void backprop_sample(const CellParams& params, const TrainSample& sample, const SampleTape& tape,
                     const TrainConfig& config, double inv_n, CellParams& grads) {
    const CellConfig& cfg = params.config;
    const std::size_t d = cfg.hidden_dim;
    Tensor dh_next = Tensor::vector(d);
    Tensor dc_next = Tensor::vector(d);
    for (std::size_t t = tape.steps.size(); t-- > 0;) {
        const StepTape& stp = tape.steps[t];
        const StepCache& cc = stp.cache;

        Tensor dlogits = logits_gradient(stp.probs, stp.target_token, config.loss_kind, inv_n);
        add_outer(grads.W_hy, dlogits, stp.h_exit);
        Tensor dh = apply_mask(matvec_t(params.W_hy, dlogits), stp.mask_exit);
        add_inplace(dh, dh_next);

        const Tensor& gi = cc.gate[kGateI];
        const Tensor& gf = cc.gate[kGateF];
        const Tensor& go = cc.gate[kGateO];
        const Tensor& gg = cc.gate[kGateG];

        Tensor dc = dc_next;
        std::array<Tensor, kNumGates> dpre;
        for (auto& p : dpre) p = Tensor::vector(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double tc = cc.tanh_c[i];
            dc[i] += dh[i] * go[i] * (1.0 - tc * tc);
            dpre[kGateO][i] = dh[i] * tc * go[i] * (1.0 - go[i]);
            dpre[kGateF][i] = dc[i] * cc.c_prev[i] * gf[i] * (1.0 - gf[i]);
            dpre[kGateI][i] = dc[i] * gg[i] * gi[i] * (1.0 - gi[i]);
            dpre[kGateG][i] = dc[i] * gi[i] * (1.0 - gg[i] * gg[i]);
        }
        for (std::size_t i = 0; i < d; ++i) dc_next[i] = dc[i] * gf[i];
        for (std::size_t g = 0; g < kNumGates; ++g) add_inplace(grads.b[g], dpre[g]);

        Tensor dx = Tensor::vector(cfg.embed_dim);
        Tensor dh_prev = Tensor::vector(d);
        if (cfg.variant == CellVariant::Gsscn) {
            for (std::size_t g = 0; g < kNumGates; ++g) {
                add_outer(grads.W_x[g], dpre[g], cc.fx[g]);
                Tensor dfx = matvec_t(params.W_x[g], dpre[g]);
                add_outer(grads.W_h[g], dpre[g], cc.fh[g]);
                Tensor dfh = matvec_t(params.W_h[g], dpre[g]);

                Tensor dp = hadamard(dfx, cc.fx_q[g]);
                add_outer(grads.W_xm[g], dp, sample.smoothed);
                Tensor dq = hadamard(dfx, cc.fx_p[g]);
                add_outer(grads.W_xn[g], dq, cc.x);
                add_inplace(dx, matvec_t(params.W_xn[g], dq));

                Tensor dr = hadamard(dfh, cc.fh_u[g]);
                add_outer(grads.W_hm_g[g], dr, sample.smoothed);
                Tensor du = hadamard(dfh, cc.fh_r[g]);
                add_outer(grads.W_hn_g[g], du, cc.h_prev);
                add_inplace(dh_prev, matvec_t(params.W_hn_g[g], du));
            }
        } else {
            Tensor dh_in = Tensor::vector(d);
            for (std::size_t g = 0; g < kNumGates; ++g) {
                add_outer(grads.W_x[g], dpre[g], cc.x);
                add_inplace(dx, matvec_t(params.W_x[g], dpre[g]));
                add_outer(grads.W_h[g], dpre[g], cc.h_prev);
                add_inplace(dh_in, matvec_t(params.W_h[g], dpre[g]));
            }
            if (cfg.variant == CellVariant::Gst) {
                // through h_rev = (W_hm Shat) . (W_hn h_prev)
                Tensor da = hadamard(dh_in, cc.gst_b);
                add_outer(grads.W_hm, da, sample.smoothed);
                Tensor db = hadamard(dh_in, cc.gst_a);
                add_outer(grads.W_hn, db, cc.h_orig);
                dh_prev = matvec_t(params.W_hn, db);
            } else {
                dh_prev = std::move(dh_in);
            }
        }

        if (config.fine_tune_embedding) {
            Tensor de = apply_mask(apply_mask(dx, stp.mask_entry), stp.mask_emb);
            for (std::size_t j = 0; j < de.size(); ++j) grads.W_E(stp.input_token, j) += de[j];
        }
        dh_next = std::move(dh_prev);
        if (!dh_next.all_finite() || !dc_next.all_finite()) {
            throw NumericError("non-finite gradient while backpropagating step " +
                               std::to_string(t + 1));
        }
    }
    // into the init MLPs
    for (std::size_t i = 0; i < d; ++i) {
        const double h0 = tape.s0.h[i];
        const double c0 = tape.s0.c[i];
        dh_next[i] *= 1.0 - h0 * h0;
        dc_next[i] *= 1.0 - c0 * c0;
    }
    add_outer(grads.W_h0, dh_next, tape.v_drop);
    add_inplace(grads.b_h0, dh_next);
    add_outer(grads.W_c0, dc_next, tape.v_drop);
    add_inplace(grads.b_c0, dc_next);
}

} // namespace

double loss_value(const Tensor& y_prob, const Tensor& y_true_onehot, LossKind kind) {
    if (!y_prob.same_shape(y_true_onehot)) {
        throw ShapeError("loss: prediction " + shape_str(y_prob) + " vs target " +
                         shape_str(y_true_onehot));
    }
    std::size_t ones = 0, target = 0;
    for (std::size_t i = 0; i < y_true_onehot.size(); ++i) {
        if (y_true_onehot[i] == 1.0) {
            ++ones;
            target = i;
        } else if (y_true_onehot[i] != 0.0) {
            throw ContractError("loss target is not one-hot (entry " + std::to_string(i) + ")");
        }
    }
    if (ones != 1) throw ContractError("loss target is not one-hot (has " + std::to_string(ones) +
                                       " ones)");
    return loss_from_index(y_prob, target, kind);
}

double forward_loss(const CellParams& params, const std::vector<TrainSample>& batch,
                    const TrainConfig& config, std::uint64_t mask_seed) {
    if (batch.empty()) throw ContractError("forward_loss on an empty batch");
    Rng mask_rng(mask_seed);
    double total = 0.0;
    for (const TrainSample& sample : batch) total += run_forward(params, sample, config, mask_rng, nullptr);
    return total / static_cast<double>(total_steps(batch));
}

CellParams backward(const CellParams& params, const std::vector<TrainSample>& batch,
                    const TrainConfig& config, std::uint64_t mask_seed, double* mean_loss_out) {
    if (batch.empty()) throw ContractError("backward on an empty batch");
    config.validate();
    CellParams grads = CellParams::zeros(params.config);
    Rng mask_rng(mask_seed);
    const double inv_n = 1.0 / static_cast<double>(total_steps(batch));
    double total = 0.0;
    for (const TrainSample& sample : batch) {
        SampleTape tape;
        total += run_forward(params, sample, config, mask_rng, &tape);
        backprop_sample(params, sample, tape, config, inv_n, grads);
    }
    visit_params(grads, [](const std::string& name, Tensor& t) {
        if (!t.all_finite()) throw NumericError("non-finite gradient for parameter " + name);
    });
    if (mean_loss_out) *mean_loss_out = total * inv_n;
    return grads;
}

void sgd_update(CellParams& params, const CellParams& grads, double learning_rate,
                double grad_clip) {
    double scale = 1.0;
    if (grad_clip > 0.0) {
        double sq = 0.0;
        visit_params(grads, [&](const std::string&, const Tensor& t) {
            for (double v : t.data()) sq += v * v;
        });
        const double norm = std::sqrt(sq);
        if (norm > grad_clip) scale = grad_clip / norm;
    }
    const double step = learning_rate * scale;
    std::vector<Tensor*> targets;
    visit_params(params, [&](const std::string&, Tensor& t) { targets.push_back(&t); });
    std::size_t i = 0;
    visit_params(grads, [&](const std::string&, const Tensor& g) {
        axpy(*targets[i], -step, g);
        ++i;
    });
}

CellParams finite_difference_gradients(const CellParams& params,
                                       const std::vector<TrainSample>& batch,
                                       const TrainConfig& config, std::uint64_t mask_seed,
                                       double epsilon) {
    if (epsilon <= 0.0) throw ConfigError("finite-difference epsilon must be positive");
    CellParams work = params;
    CellParams grads = CellParams::zeros(params.config);
    std::vector<std::pair<Tensor*, Tensor*>> pairs;
    {
        std::vector<Tensor*> ws, gs;
        visit_params(work, [&](const std::string&, Tensor& t) { ws.push_back(&t); });
        std::size_t i = 0;
        visit_params(grads, [&](const std::string& name, Tensor& t) {
            if (name == "W_E" && !config.fine_tune_embedding) {
                ++i;
                return;
            }
            pairs.emplace_back(ws[i], &t);
            ++i;
        });
    }
    for (auto& [w, g] : pairs) {
        for (std::size_t k = 0; k < w->size(); ++k) {
            const double orig = (*w)[k];
            (*w)[k] = orig + epsilon;
            const double up = forward_loss(work, batch, config, mask_seed);
            (*w)[k] = orig - epsilon;
            const double down = forward_loss(work, batch, config, mask_seed);
            (*w)[k] = orig;
            (*g)[k] = (up - down) / (2.0 * epsilon);
        }
    }
    return grads;
}

GradCheckReport gradient_check(const CellConfig& cell, const TrainConfig& config,
                               std::size_t seq_len, std::uint64_t seed, double epsilon) {
    cell.validate();
    if (seq_len == 0) throw ConfigError("gradient check needs seq_len >= 1");
    CellParams params = CellParams::init(cell, seed);
    Rng rng(seed ^ 0x9d2c5680u);
    std::vector<TrainSample> batch;
    for (int n = 0; n < 2; ++n) {
        TrainSample s;
        s.v = Tensor::vector(cell.visual_dim);
        for (double& v : s.v.data()) v = rng.uniform(-1.0, 1.0);
        if (cell.uses_semantics()) {
            Tensor raw = Tensor::vector(cell.semantic_dim);
            for (double& v : raw.data()) v = rng.uniform();
            s.smoothed = smooth(raw, 1.0);
        }
        s.tokens.push_back(Vocabulary::kBos);
        const std::size_t lo = cell.vocab_size > Vocabulary::kNumReserved
                                   ? Vocabulary::kNumReserved
                                   : 0;
        for (std::size_t t = 0; t + 1 < seq_len; ++t) {
            s.tokens.push_back(lo + rng.uniform_index(cell.vocab_size - lo));
        }
        s.tokens.push_back(Vocabulary::kEos);
        batch.push_back(std::move(s));
    }
    TrainConfig check_cfg = config;
    check_cfg.fine_tune_embedding = true; // exercise the embedding path as well
    const std::uint64_t mask_seed = seed ^ 0x5bd1e995u;
    CellParams analytic = backward(params, batch, check_cfg, mask_seed);
    CellParams numeric = finite_difference_gradients(params, batch, check_cfg, mask_seed, epsilon);

    GradCheckReport report;
    std::size_t within = 0;
    std::vector<std::pair<std::string, const Tensor*>> an, nu;
    visit_params(analytic, [&](const std::string& name, const Tensor& t) { an.emplace_back(name, &t); });
    visit_params(numeric, [&](const std::string& name, const Tensor& t) { nu.emplace_back(name, &t); });
    for (std::size_t i = 0; i < an.size(); ++i) {
        const Tensor& a = *an[i].second;
        const Tensor& n = *nu[i].second;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double denom = std::max(std::abs(a[k]) + std::abs(n[k]), 1e-8);
            const double rel = std::abs(a[k] - n[k]) / denom;
            ++report.n_params;
            if (rel <= 1e-4) ++within;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = an[i].first + "[" + std::to_string(k) + "]";
            }
        }
    }
    report.frac_within_tol =
        report.n_params == 0 ? 1.0 : static_cast<double>(within) / static_cast<double>(report.n_params);
    return report;
}

std::vector<TrainSample> make_samples(const Dataset& dataset, const Model& model) {
    std::vector<TrainSample> samples;
    for (const DatasetItem& item : dataset.items) {
        Tensor smoothed = model.smooth_semantics(item.s);
        for (const TokenSeq& caption : item.captions) {
            TrainSample s;
            s.v = item.v;
            s.smoothed = smoothed;
            s.tokens = model.vocab.encode(caption);
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

TrainResult train(const Dataset& dataset, const TrainRun& run) {
    if (dataset.items.empty()) throw ConfigError("cannot train on an empty dataset");
    run.train.validate();
    if (run.sigma <= 0.0) throw ConfigError("sigma must be positive");

    Model model;
    model.sigma = run.sigma;
    model.radius = run.radius;
    model.vocab = Vocabulary::build(dataset.all_captions(), run.max_vocab);

    CellConfig cell = run.cell;
    cell.vocab_size = model.vocab.size();
    cell.visual_dim = dataset.visual_dim();
    if (cell.uses_semantics()) cell.semantic_dim = dataset.semantic_dim();
    if (cell.variant == CellVariant::Gsscn && cell.factor_dim == 0) {
        cell.factor_dim = cell.hidden_dim;
    }
    cell.validate();

    model.params = CellParams::init(cell, run.train.seed);
    if (!run.embeddings_path.empty()) {
        model.params.W_E =
            load_embeddings(run.embeddings_path, model.vocab, cell.embed_dim, run.train.seed);
    }

    std::vector<TrainSample> samples = make_samples(dataset, model);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    Rng shuffle_rng(run.train.seed ^ 0x8badf00dULL);
    TrainResult result;
    for (std::size_t epoch = 0; epoch < run.train.epochs; ++epoch) {
        Rng epoch_rng = shuffle_rng.fork(epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = epoch_rng.uniform_index(i);
            std::swap(order[i - 1], order[j]);
        }
        double loss_weighted = 0.0;
        std::size_t steps_seen = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += run.train.batch_size) {
            const std::size_t end = std::min(order.size(), start + run.train.batch_size);
            std::vector<TrainSample> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);
            const std::uint64_t mask_seed =
                Rng(run.train.seed).fork(epoch).fork(batch_index).next_u64();
            double batch_loss = 0.0;
            CellParams grads;
            try {
                grads = backward(model.params, batch, run.train, mask_seed, &batch_loss);
            } catch (const NumericError& e) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(batch_index + 1) + ": " + e.what());
            }
            if (!std::isfinite(batch_loss)) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(batch_index + 1) + ": loss is not finite");
            }
            sgd_update(model.params, grads, run.train.learning_rate, run.train.grad_clip);
            const std::size_t batch_steps = total_steps(batch);
            loss_weighted += batch_loss * static_cast<double>(batch_steps);
            steps_seen += batch_steps;
            ++batch_index;
        }
        result.epoch_loss.push_back(loss_weighted / static_cast<double>(steps_seen));
    }
    result.model = std::move(model);
    return result;
}

void write_loss_csv(const std::vector<double>& epoch_loss, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write loss trace: " + path);
    out << "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", epoch_loss[i]);
        out << (i + 1) << ',' << buf << '\n';
    }
}

} // namespace gscap
