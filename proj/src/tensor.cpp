#include "gscap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gscap {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {
    for (std::size_t d : shape_) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(*this));
    }
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (product(shape_) != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(*this));
    }
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor Tensor::from(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged initializer for matrix");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
    if (ndim() != 2) throw ShapeError("rows() on non-matrix tensor " + shape_str(*this));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (ndim() != 2) throw ShapeError("cols() on non-matrix tensor " + shape_str(*this));
    return shape_[1];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string shape_str(const Tensor& t) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < t.shape().size(); ++i) {
        if (i) os << "x";
        os << t.shape()[i];
    }
    os << "]";
    return os.str();
}

// splitmix64; state walks the Weyl sequence, output is the mixed state.
Rng::Rng(std::uint64_t seed) : state_(seed), seed_(seed) {}

std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t Rng::uniform_index(std::size_t n) {
    if (n == 0) throw DomainError("uniform_index over empty range");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

Rng Rng::fork(std::uint64_t stream) const {
    Rng child(seed_ ^ (0x6a09e667f3bcc909ULL + stream * 0x3c6ef372fe94f82bULL));
    child.next_u64();
    return child;
}

Tensor matvec(const Tensor& W, const Tensor& x) {
    if (W.ndim() != 2 || x.ndim() != 1 || W.cols() != x.size()) {
        throw ShapeError("matvec shape mismatch: W " + shape_str(W) + " vs x " + shape_str(x));
    }
    Tensor out = Tensor::vector(W.rows());
    const std::size_t r = W.rows(), c = W.cols();
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        const double* wrow = W.data().data() + i * c;
        for (std::size_t j = 0; j < c; ++j) acc += wrow[j] * x[j];
        out[i] = acc;
    }
    return out;
}

Tensor matvec_t(const Tensor& W, const Tensor& y) {
    if (W.ndim() != 2 || y.ndim() != 1 || W.rows() != y.size()) {
        throw ShapeError("matvec_t shape mismatch: W " + shape_str(W) + " vs y " + shape_str(y));
    }
    Tensor out = Tensor::vector(W.cols());
    const std::size_t r = W.rows(), c = W.cols();
    for (std::size_t i = 0; i < r; ++i) {
        const double yi = y[i];
        const double* wrow = W.data().data() + i * c;
        for (std::size_t j = 0; j < c; ++j) out[j] += wrow[j] * yi;
    }
    return out;
}

void add_outer(Tensor& W, const Tensor& u, const Tensor& v) {
    if (W.ndim() != 2 || W.rows() != u.size() || W.cols() != v.size()) {
        throw ShapeError("add_outer shape mismatch: W " + shape_str(W) + ", u " + shape_str(u) +
                         ", v " + shape_str(v));
    }
    const std::size_t r = W.rows(), c = W.cols();
    for (std::size_t i = 0; i < r; ++i) {
        double* wrow = W.data().data() + i * c;
        const double ui = u[i];
        for (std::size_t j = 0; j < c; ++j) wrow[j] += ui * v[j];
    }
}

Tensor softmax(const Tensor& y) {
    if (y.size() == 0) throw DomainError("softmax of empty vector");
    double mx = y[0];
    for (std::size_t i = 1; i < y.size(); ++i) mx = std::max(mx, y[i]);
    Tensor out = Tensor::vector(y.size());
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        out[i] = std::exp(y[i] - mx);
        total += out[i];
    }
    for (std::size_t i = 0; i < y.size(); ++i) out[i] /= total;
    return out;
}

Tensor log_softmax(const Tensor& y) {
    if (y.size() == 0) throw DomainError("log_softmax of empty vector");
    double mx = y[0];
    for (std::size_t i = 1; i < y.size(); ++i) mx = std::max(mx, y[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += std::exp(y[i] - mx);
    const double lse = mx + std::log(total);
    Tensor out = Tensor::vector(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] - lse;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

Tensor tanh_elem(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) v = std::tanh(v);
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("hadamard shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("add shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("sub shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("add_inplace shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

void axpy(Tensor& y, double alpha, const Tensor& x) {
    if (!y.same_shape(x)) {
        throw ShapeError("axpy shape mismatch: " + shape_str(y) + " vs " + shape_str(x));
    }
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void scale_inplace(Tensor& a, double s) {
    for (double& v : a.data()) v *= s;
}

double dot(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("dot shape mismatch: " + shape_str(a) + " vs " + shape_str(b));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    return acc;
}

Tensor init_weights(std::size_t rows, std::size_t cols, WeightScheme scheme,
                    std::uint64_t seed, double value) {
    if (rows == 0 || cols == 0) throw ShapeError("init_weights needs positive dimensions");
    Tensor out = Tensor::matrix(rows, cols);
    switch (scheme) {
        case WeightScheme::Constant:
            out.fill(value);
            break;
        case WeightScheme::Uniform: {
            Rng rng(seed);
            const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (double& v : out.data()) v = rng.uniform(-r, r);
            break;
        }
        default:
            throw ConfigError("unknown weight init scheme");
    }
    return out;
}

void require_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw NumericError("non-finite values in " + what);
}

} // namespace gscap
