#ifndef GSCAP_CHECKPOINT_HPP
#define GSCAP_CHECKPOINT_HPP

#include <string>

#include "gscap/cells.hpp"
#include "gscap/smoothing.hpp"
#include "gscap/vocab.hpp"

namespace gscap {

/// Everything needed to decode with a trained cell: parameters, smoothing
/// hyperparameters and the vocabulary the model was trained against.
struct Model {
    CellParams params;
    double sigma = 1.0;
    std::size_t radius = 0; // 0 means default_radius(sigma)
    Vocabulary vocab;

    std::size_t effective_radius() const { return radius == 0 ? default_radius(sigma) : radius; }

    /// Smooth raw semantic features with the model's hyperparameters; returns
    /// an empty tensor for the plain Lstm variant (which ignores semantics).
    Tensor smooth_semantics(const Tensor& raw) const;
};

/// Binary container, little-endian, versioned. Layout documented in the
/// README. Tensors are stored by canonical name so the format is stable
/// against field reordering.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

} // namespace gscap

#endif
