#ifndef GSCAP_TRAINING_HPP
#define GSCAP_TRAINING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "gscap/cells.hpp"
#include "gscap/checkpoint.hpp"
#include "gscap/dataset.hpp"

namespace gscap {

enum class LossKind { CrossEntropy, SquaredError };

LossKind loss_kind_from_name(const std::string& name); // "xent" | "se"

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double dropout_rate = 0.5;
    LossKind loss_kind = LossKind::CrossEntropy;
    std::uint64_t seed = 1;
    double grad_clip = 0.0; // <= 0 disables clipping
    bool fine_tune_embedding = false;

    void validate() const;
};

/// One teacher-forced sequence: predict tokens[1..] from tokens[..len-2],
/// starting from the state induced by the visual features.
struct TrainSample {
    Tensor v;
    Tensor smoothed; // empty for the plain lstm variant
    IndexSeq tokens; // BOS ... EOS
};

/// Per-position loss between a probability vector and a one-hot target.
/// SquaredError: 0.5 * ||y - y_true||^2. CrossEntropy: -log y[true].
double loss_value(const Tensor& y_prob, const Tensor& y_true_onehot, LossKind kind);

/// Mean loss over every (sample, step) pair of the batch. `mask_seed` drives
/// the dropout masks, so repeated calls see identical masks.
double forward_loss(const CellParams& params, const std::vector<TrainSample>& batch,
                    const TrainConfig& config, std::uint64_t mask_seed);

/// Hand-derived backpropagation through time. Returns a bundle with the same
/// shapes as `params`; the embedding gradient stays zero unless
/// fine_tune_embedding is set. Smoothed features are treated as constants.
CellParams backward(const CellParams& params, const std::vector<TrainSample>& batch,
                    const TrainConfig& config, std::uint64_t mask_seed,
                    double* mean_loss_out = nullptr);

/// W <- W - lr * grad, with optional global-norm clipping of the whole
/// gradient bundle first.
void sgd_update(CellParams& params, const CellParams& grads, double learning_rate,
                double grad_clip = 0.0);

/// Central finite differences of forward_loss over every trainable parameter.
/// Deliberately the slow route; it is the check the analytic path answers to.
CellParams finite_difference_gradients(const CellParams& params,
                                       const std::vector<TrainSample>& batch,
                                       const TrainConfig& config, std::uint64_t mask_seed,
                                       double epsilon);

struct GradCheckReport {
    double max_rel_error = 0.0;
    double frac_within_tol = 0.0; // fraction of parameters with rel error <= 1e-4
    std::size_t n_params = 0;
    std::string worst_param;
};

/// Build a seeded random instance of the given config, run analytic vs
/// finite-difference gradients and report the agreement.
GradCheckReport gradient_check(const CellConfig& cell, const TrainConfig& config,
                               std::size_t seq_len, std::uint64_t seed, double epsilon);

struct TrainRun {
    CellConfig cell; // dims; semantic/visual/vocab sizes are filled from the data
    TrainConfig train;
    double sigma = 1.0;
    std::size_t radius = 0; // 0 means default_radius(sigma)
    std::size_t max_vocab = 20000;
    std::string embeddings_path; // optional GloVe-style table
};

struct TrainResult {
    Model model;
    std::vector<double> epoch_loss;
};

TrainResult train(const Dataset& dataset, const TrainRun& run);

void write_loss_csv(const std::vector<double>& epoch_loss, const std::string& path);

/// Build the teacher-forcing samples for a dataset (smoothing included).
std::vector<TrainSample> make_samples(const Dataset& dataset, const Model& model);

} // namespace gscap

#endif
