#include "ccnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <type_traits>
#include <vector>

namespace ccnn {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

double phase(const Complex& z) {
  if (z.real() == 0.0 && z.imag() == 0.0) return 0.0;
  double a = std::atan2(z.imag(), z.real());
  // atan2 returns -pi for (negative, -0.0); fold onto the closed end.
  if (a <= -std::numbers::pi) a = std::numbers::pi;
  return a;
}

namespace {

template <typename T>
void require_rank2(const Tensor<T>& t, const char* what) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(what) + " expects a matrix, got shape " + shape_to_string(t.shape()));
  }
}

}  // namespace

template <typename T>
T dot(const Tensor<T>& z, const Tensor<T>& w) {
  if (z.shape() != w.shape()) {
    throw std::invalid_argument("dot: shape mismatch " + shape_to_string(z.shape()) + " vs " +
                                shape_to_string(w.shape()));
  }
  T acc{};
  for (std::size_t i = 0; i < z.size(); ++i) acc += z[i] * w[i];
  return acc;
}

template <typename T>
Tensor<T> hermitian(const Tensor<T>& w) {
  require_rank2(w, "hermitian");
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  Tensor<T> out({cols, rows});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(j, i) = conjugate(w.at(i, j));
  return out;
}

namespace {

// Wider vectors where the CPU has them; with contraction disabled every clone
// computes bit-identical results.
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define CCNN_SIMD_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define CCNN_SIMD_CLONES
#endif

CCNN_SIMD_CLONES void axpy_row(Complex* __restrict row, Complex s, const Complex* __restrict b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) row[j] += s * b[j];
}

CCNN_SIMD_CLONES void axpy_row(double* __restrict row, double s, const double* __restrict b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) row[j] += s * b[j];
}

// out (m x n) += A (m x k) * B (k x n), with A given through `a_at(i, p)`.
// Each output accumulates over p in increasing order; the inner loop is an
// axpy over contiguous rows. Zero coefficients are skipped: backward deltas
// behind max pooling and ReLU are mostly zero.
template <typename T, typename AAt>
void axpy_product(T* out, AAt a_at, const T* b, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T s = a_at(i, p);
      if (s == T{}) continue;
      axpy_row(out + i * n, s, b + p * n, n);
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: inner dimensions differ " + shape_to_string(a.shape()) + " * " +
                                shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out({m, n});
  const T* pa = a.data().data();
  axpy_product(out.data().data(), [&](std::size_t i, std::size_t p) { return pa[i * k + p]; }, b.data().data(), m, k,
               n);
  return out;
}

template <typename T>
Tensor<T> matmul_hermitian_rhs(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul_hermitian_rhs");
  require_rank2(b, "matmul_hermitian_rhs");
  if (a.dim(1) != b.dim(1)) {
    throw std::invalid_argument("matmul_hermitian_rhs: column counts differ " + shape_to_string(a.shape()) +
                                " vs " + shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  const T* pb = b.data().data();
  const T* pa = a.data().data();
  const auto nonzero = static_cast<std::size_t>(std::count_if(pa, pa + m * k, [](const T& v) { return v != T{}; }));
  if (4 * nonzero < m * k) {
    // Sparse a: gather columns of b directly, still in p order.
    Tensor<T> out({m, n});
    T* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const T s = pa[i * k + p];
        if (s == T{}) continue;
        for (std::size_t j = 0; j < n; ++j) po[i * n + j] += s * conjugate(pb[j * k + p]);
      }
    return out;
  }
  // b^H laid out (k x n) so the product runs over contiguous rows.
  std::vector<T> bh(k * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) bh[p * n + j] = conjugate(pb[j * k + p]);
  Tensor<T> out({m, n});
  axpy_product(out.data().data(), [&](std::size_t i, std::size_t p) { return pa[i * k + p]; }, bh.data(), m, k, n);
  return out;
}

template <typename T>
Tensor<T> matmul_hermitian_lhs(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul_hermitian_lhs");
  require_rank2(b, "matmul_hermitian_lhs");
  if (a.dim(0) != b.dim(0)) {
    throw std::invalid_argument("matmul_hermitian_lhs: row counts differ " + shape_to_string(a.shape()) +
                                " vs " + shape_to_string(b.shape()));
  }
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor<T> out({m, n});
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  const auto nonzero = static_cast<std::size_t>(std::count_if(pb, pb + k * n, [](const T& v) { return v != T{}; }));
  if (4 * nonzero < k * n) {
    // Sparse b: scatter each nonzero b[p, j] down column j, still in p order.
    T* po = out.data().data();
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t j = 0; j < n; ++j) {
        const T s = pb[p * n + j];
        if (s == T{}) continue;
        for (std::size_t i = 0; i < m; ++i) po[i * n + j] += conjugate(pa[p * m + i]) * s;
      }
    return out;
  }
  axpy_product(out.data().data(), [&](std::size_t i, std::size_t p) { return conjugate(pa[p * m + i]); },
               b.data().data(), m, k, n);
  return out;
}

template <typename T>
double frobenius_norm(const Tensor<T>& z) {
  double acc = 0.0;
  for (const auto& v : z.values()) acc += squared_magnitude(v);
  return std::sqrt(acc);
}

template <typename T>
Tensor<T> conjugated(const Tensor<T>& z) {
  Tensor<T> out = z;
  for (auto& v : out.values()) v = conjugate(v);
  return out;
}

template <typename T>
void im2col_into(const Tensor<T>& input, std::size_t window_h, std::size_t window_w, std::size_t stride,
                 PatchMatrix<T>& pm) {
  if (input.rank() != 3) {
    throw std::invalid_argument("im2col expects (channels, rows, cols), got " + shape_to_string(input.shape()));
  }
  if (stride == 0) throw std::invalid_argument("im2col: stride must be >= 1");
  if (window_h == 0 || window_w == 0) throw std::invalid_argument("im2col: window extents must be >= 1");
  const std::size_t channels = input.dim(0), rows = input.dim(1), cols = input.dim(2);
  if (window_h > rows || window_w > cols) {
    throw std::invalid_argument("im2col: window " + std::to_string(window_h) + "x" + std::to_string(window_w) +
                                " larger than input " + shape_to_string(input.shape()));
  }
  pm.window_h = window_h;
  pm.window_w = window_w;
  pm.stride = stride;
  pm.out_h = (rows - window_h) / stride + 1;
  pm.out_w = (cols - window_w) / stride + 1;
  pm.source_shape = input.shape();
  const std::size_t patch = channels * window_h * window_w;
  const std::size_t positions = pm.out_h * pm.out_w;
  pm.matrix.reset({patch, positions});
  const T* in = input.data().data();
  T* cell = pm.matrix.data().data();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t kr = 0; kr < window_h; ++kr)
      for (std::size_t kc = 0; kc < window_w; ++kc)
        for (std::size_t oy = 0; oy < pm.out_h; ++oy) {
          const T* src = in + (c * rows + oy * stride + kr) * cols + kc;
          for (std::size_t ox = 0; ox < pm.out_w; ++ox) *cell++ = src[ox * stride];
        }
}

template <typename T>
PatchMatrix<T> im2col(const Tensor<T>& input, std::size_t window_h, std::size_t window_w, std::size_t stride) {
  PatchMatrix<T> pm;
  im2col_into(input, window_h, window_w, stride, pm);
  return pm;
}

template <typename T>
std::size_t PatchMatrix<T>::source_index(std::size_t k) const {
  const std::size_t positions = out_h * out_w;
  const std::size_t row = k / positions, pos = k % positions;
  const std::size_t c = row / (window_h * window_w);
  const std::size_t kr = (row / window_w) % window_h, kc = row % window_w;
  const std::size_t oy = pos / out_w, ox = pos % out_w;
  return (c * source_shape[1] + oy * stride + kr) * source_shape[2] + ox * stride + kc;
}

template <typename T>
Tensor<T> col2im_accumulate(const PatchMatrix<T>& patches, const Tensor<T>& cells) {
  if (cells.shape() != patches.matrix.shape() || patches.source_shape.size() != 3) {
    throw std::invalid_argument("col2im_accumulate: cells " + shape_to_string(cells.shape()) +
                                " do not match the patch matrix " + shape_to_string(patches.matrix.shape()));
  }
  const std::size_t channels = patches.source_shape[0], rows = patches.source_shape[1],
                    cols = patches.source_shape[2];
  Tensor<T> out(patches.source_shape);
  T* o = out.data().data();
  const T* cell = cells.data().data();
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t kr = 0; kr < patches.window_h; ++kr)
      for (std::size_t kc = 0; kc < patches.window_w; ++kc)
        for (std::size_t oy = 0; oy < patches.out_h; ++oy) {
          T* dst = o + (c * rows + oy * patches.stride + kr) * cols + kc;
          for (std::size_t ox = 0; ox < patches.out_w; ++ox) dst[ox * patches.stride] += *cell++;
        }
  return out;
}

template <typename T>
Tensor<T> col2im_accumulate(const PatchMatrix<T>& deltas) {
  return col2im_accumulate(deltas, deltas.matrix);
}

#define CCNN_INSTANTIATE(T)                                                                         \
  template struct PatchMatrix<T>;                                                                   \
  template T dot<T>(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> hermitian<T>(const Tensor<T>&);                                                \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> matmul_hermitian_rhs<T>(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> matmul_hermitian_lhs<T>(const Tensor<T>&, const Tensor<T>&);                   \
  template double frobenius_norm<T>(const Tensor<T>&);                                              \
  template Tensor<T> conjugated<T>(const Tensor<T>&);                                               \
  template PatchMatrix<T> im2col<T>(const Tensor<T>&, std::size_t, std::size_t, std::size_t);       \
  template void im2col_into<T>(const Tensor<T>&, std::size_t, std::size_t, std::size_t, PatchMatrix<T>&); \
  template Tensor<T> col2im_accumulate<T>(const PatchMatrix<T>&);                                   \
  template Tensor<T> col2im_accumulate<T>(const PatchMatrix<T>&, const Tensor<T>&);

CCNN_INSTANTIATE(double)
CCNN_INSTANTIATE(Complex)

#undef CCNN_INSTANTIATE

}  // namespace ccnn
