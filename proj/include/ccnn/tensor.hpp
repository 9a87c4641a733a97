#pragma once

#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccnn {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

// Scalar helpers that work for both real and complex element types. std::conj
// on a double promotes to std::complex, which is not what the real layers want.
inline double conjugate(double x) { return x; }
inline Complex conjugate(const Complex& z) { return std::conj(z); }
inline double real_part(double x) { return x; }
inline double real_part(const Complex& z) { return z.real(); }
inline double imag_part(double) { return 0.0; }
inline double imag_part(const Complex& z) { return z.imag(); }
inline double magnitude(double x) { return x < 0 ? -x : x; }
inline double magnitude(const Complex& z) { return std::abs(z); }
inline double squared_magnitude(double x) { return x * x; }
inline double squared_magnitude(const Complex& z) { return z.real() * z.real() + z.imag() * z.imag(); }

/// Argument in (-pi, pi]; phase(0) == 0.
double phase(const Complex& z);

/**
 * Dense row-major tensor. Extents are all >= 1 and the data length always
 * equals their product; the layout of a (channels, rows, cols) tensor is
 * data[(c * rows + r) * cols + col].
 */
template <typename T>
class Tensor {
public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(count(shape_), T{});
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != count(shape_)) {
      throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_to_string(shape_));
    }
  }

  static Tensor filled(Shape shape, T value) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = value;
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  T& at(std::size_t ch, std::size_t r, std::size_t c) {
    return data_[(ch * shape_[1] + r) * shape_[2] + c];
  }
  const T& at(std::size_t ch, std::size_t r, std::size_t c) const {
    return data_[(ch * shape_[1] + r) * shape_[2] + c];
  }

  /// New extents, all zeros; keeps the allocation when it is large enough.
  void reset(Shape shape) {
    validate_shape(shape);
    shape_ = std::move(shape);
    data_.assign(count(shape_), T{});
  }

  /// Same data, different extents; the element count must be preserved.
  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& other) {
    require_same_shape(other, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }
  Tensor& operator*=(T scale) {
    for (auto& v : data_) v *= scale;
    return *this;
  }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(T s, Tensor a) { return a *= s; }

  bool operator==(const Tensor& other) const = default;

  void fill(T value) {
    for (auto& v : data_) v = value;
  }

  static std::size_t count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

private:
  static void validate_shape(const Shape& shape) {
    if (shape.empty()) throw std::invalid_argument("tensor shape must have at least one extent");
    for (auto e : shape) {
      if (e == 0) throw std::invalid_argument("tensor extents must be >= 1, got " + shape_to_string(shape));
    }
  }

  void require_same_shape(const Tensor& other, const char* op) const {
    if (other.shape_ != shape_) {
      throw std::invalid_argument(std::string("shape mismatch in ") + op + ": " + shape_to_string(shape_) +
                                  " vs " + shape_to_string(other.shape_));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using ComplexTensor = Tensor<Complex>;
using RealTensor = Tensor<double>;

/**
 * Columns of sliding-window patches plus the geometry mapping them back to
 * the source tensor.
 *
 * `matrix` has shape (channels * window_h * window_w, positions);
 * `source_index(k)` is the flat index in the source tensor of matrix cell k
 * (row-major over the matrix). Many cells share one source index when
 * windows overlap.
 */
template <typename T>
struct PatchMatrix {
  Tensor<T> matrix;
  Shape source_shape;
  std::size_t window_h = 0;
  std::size_t window_w = 0;
  std::size_t stride = 1;
  std::size_t out_h = 0;
  std::size_t out_w = 0;

  std::size_t source_index(std::size_t k) const;
};

/// Bilinear sum of elementwise products; no conjugation.
template <typename T>
T dot(const Tensor<T>& z, const Tensor<T>& w);

/// Conjugate transpose of a rank-2 tensor.
template <typename T>
Tensor<T> hermitian(const Tensor<T>& w);

/// Plain matrix product of rank-2 tensors.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// a * b^H for rank-2 tensors, without materializing b^H.
template <typename T>
Tensor<T> matmul_hermitian_rhs(const Tensor<T>& a, const Tensor<T>& b);

/// a^H * b for rank-2 tensors.
template <typename T>
Tensor<T> matmul_hermitian_lhs(const Tensor<T>& a, const Tensor<T>& b);

/// sqrt(dot(conj(z), z)).
template <typename T>
double frobenius_norm(const Tensor<T>& z);

template <typename T>
Tensor<T> conjugated(const Tensor<T>& z);

/// Valid-mode patch extraction from a (channels, rows, cols) tensor.
template <typename T>
PatchMatrix<T> im2col(const Tensor<T>& input, std::size_t window_h, std::size_t window_w, std::size_t stride);

/// im2col into an existing patch matrix, reusing its storage.
template <typename T>
void im2col_into(const Tensor<T>& input, std::size_t window_h, std::size_t window_w, std::size_t stride,
                 PatchMatrix<T>& out);

/// Adjoint of im2col: every source index receives the sum of its cells.
template <typename T>
Tensor<T> col2im_accumulate(const PatchMatrix<T>& deltas);

/// Scatter-add of `cells` (shaped like patches.matrix) back through the geometry of `patches`.
template <typename T>
Tensor<T> col2im_accumulate(const PatchMatrix<T>& patches, const Tensor<T>& cells);

}  // namespace ccnn
