#include "gscap/smoothing.hpp"

#include <cmath>
#include <string>

namespace gscap {

void SemanticFeatures::validate() const {
    if (raw.ndim() != 1 || raw.size() == 0) {
        throw ValidationError("semantic features must be a nonempty vector");
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double v = raw[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValidationError("semantic likelihood out of [0,1] at index " +
                                  std::to_string(i) + ": " + std::to_string(v));
        }
    }
    if (sigma <= 0.0) throw DomainError("smoothing sigma must be positive");
    if (smoothed) {
        if (smoothed->size() != raw.size()) {
            throw ValidationError("smoothed features must keep the raw dimension");
        }
        for (double v : smoothed->data()) {
            if (v < 0.0) throw ValidationError("smoothed features must be nonnegative");
        }
    }
}

std::size_t default_radius(double sigma) {
    if (sigma <= 0.0) throw DomainError("smoothing sigma must be positive");
    double r = std::ceil(3.0 * sigma);
    return r < 1.0 ? 1 : static_cast<std::size_t>(r);
}

Tensor gaussian_kernel(double sigma, std::size_t radius) {
    if (sigma <= 0.0) throw DomainError("gaussian_kernel: sigma must be positive");
    if (radius < 1) throw DomainError("gaussian_kernel: radius must be >= 1");
    const std::size_t width = 2 * radius + 1;
    Tensor w = Tensor::vector(width);
    double total = 0.0;
    for (std::size_t k = 0; k < width; ++k) {
        double off = static_cast<double>(k) - static_cast<double>(radius);
        w[k] = std::exp(-(off * off) / (2.0 * sigma * sigma));
        total += w[k];
    }
    for (std::size_t k = 0; k < width; ++k) w[k] /= total;
    return w;
}

namespace {

// Reflect index into [0, n): ... 2 1 | 0 1 2 ... n-1 | n-1 n-2 ...
std::size_t reflect(long long j, long long n) {
    while (j < 0 || j >= n) {
        if (j < 0) j = -j - 1;
        if (j >= n) j = 2 * n - 1 - j;
    }
    return static_cast<std::size_t>(j);
}

} // namespace

Tensor smooth(const Tensor& S, double sigma, std::size_t radius) {
    if (S.ndim() != 1 || S.size() == 0) throw DomainError("smooth: input must be a nonempty vector");
    require_finite(S, "smooth input");
    const Tensor kernel = gaussian_kernel(sigma, radius);
    const long long n = static_cast<long long>(S.size());
    const long long r = static_cast<long long>(radius);
    Tensor out = Tensor::vector(S.size());
    for (long long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long long k = -r; k <= r; ++k) {
            acc += kernel[static_cast<std::size_t>(k + r)] * S[reflect(i + k, n)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

Tensor smooth(const Tensor& S, double sigma) { return smooth(S, sigma, default_radius(sigma)); }

} // namespace gscap
