#ifndef GSCAP_SMOOTHING_HPP
#define GSCAP_SMOOTHING_HPP

#include <cstddef>
#include <optional>

#include "gscap/tensor.hpp"

namespace gscap {

/// Semantic likelihood vector and its Gaussian-smoothed counterpart. The raw
/// entries are per-tag occurrence likelihoods in [0,1]; smoothing spreads the
/// sparse mass over neighbouring tag indices while keeping the dimension.
struct SemanticFeatures {
    Tensor raw;
    std::optional<Tensor> smoothed;
    double sigma = 1.0;

    void validate() const;
};

/// Default truncation radius: ceil(3*sigma), at least 1. Captures >99.7% of
/// the kernel mass before renormalisation.
std::size_t default_radius(double sigma);

/// Discrete Gaussian weights over offsets [-radius, +radius], renormalised to
/// sum exactly 1. weights[k] is the coefficient for offset k - radius.
Tensor gaussian_kernel(double sigma, std::size_t radius);

/// 1-D convolution of S with gaussian_kernel(sigma, radius), reflect-padded at
/// the boundaries. Output dimension equals input dimension.
Tensor smooth(const Tensor& S, double sigma, std::size_t radius);

/// Radius defaulted from sigma.
Tensor smooth(const Tensor& S, double sigma);

} // namespace gscap

#endif
