#ifndef GSCAP_TENSOR_HPP
#define GSCAP_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gscap/error.hpp"

namespace gscap {

/// Dense row-major array of doubles with explicit shape. Used both as a
/// vector (ndim 1) and as a matrix (ndim 2); every cell equation in the
/// toolkit is expressed on these.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor vector(std::size_t n) { return Tensor({n}); }
    static Tensor matrix(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
    static Tensor from(std::initializer_list<double> values);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;
    void fill(double v);

private:
    std::vector<std::size_t> shape_;
    std::size_t cols_ = 0; // cached for 2-D indexing
    std::vector<double> data_;
};

std::string shape_str(const Tensor& t);

/// Deterministic generator for weight init, dropout masks and the synthetic
/// dataset. The uint64 -> [0,1) mapping is spelled out here so outputs are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                       // [0,1)
    double uniform(double lo, double hi);
    std::size_t uniform_index(std::size_t n); // [0,n)

    /// Derive an independent stream, e.g. one per epoch or per mask site.
    Rng fork(std::uint64_t stream) const;

private:
    std::uint64_t state_;
    std::uint64_t seed_;
};

enum class WeightScheme { Uniform, Constant };

/// result[i] = sum_j W(i,j) * x[j]
Tensor matvec(const Tensor& W, const Tensor& x);
/// result[j] = sum_i W(i,j) * y[i]   (transpose apply; backprop workhorse)
Tensor matvec_t(const Tensor& W, const Tensor& y);
/// W(i,j) += u[i] * v[j]
void add_outer(Tensor& W, const Tensor& u, const Tensor& v);

Tensor softmax(const Tensor& y);
Tensor log_softmax(const Tensor& y);
Tensor sigmoid(const Tensor& x);
Tensor tanh_elem(const Tensor& x);
Tensor hadamard(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
void add_inplace(Tensor& a, const Tensor& b);
void axpy(Tensor& y, double alpha, const Tensor& x); // y += alpha * x
void scale_inplace(Tensor& a, double s);
double dot(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);

/// Deterministic weight init. Uniform draws from (-r, r) with
/// r = sqrt(6 / (rows + cols)); Constant fills with `value`.
Tensor init_weights(std::size_t rows, std::size_t cols, WeightScheme scheme,
                    std::uint64_t seed, double value = 0.0);

void require_finite(const Tensor& t, const std::string& what);

} // namespace gscap

#endif
