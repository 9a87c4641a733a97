#include "ccnn/backprop.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ccnn/pool_windows.hpp"

namespace ccnn {

namespace fault {
namespace {
std::atomic<bool> g_affine_sign_flip{false};
}
void set_affine_sign_flip(bool enabled) { g_affine_sign_flip = enabled; }
bool affine_sign_flip() { return g_affine_sign_flip; }
}  // namespace fault

template <typename T>
AffineGrads<T> affine_backward(const Tensor<T>& delta_next, const AffineWeights<T>& w, const Tensor<T>& z,
                               bool want_input_delta) {
  if (delta_next.rank() != 2 || z.rank() != 2 || delta_next.dim(0) != w.out_dim() || z.dim(0) != w.in_dim() ||
      delta_next.dim(1) != z.dim(1)) {
    throw std::invalid_argument("affine_backward: delta " + shape_to_string(delta_next.shape()) + ", weight " +
                                shape_to_string(w.weight.shape()) + ", input " + shape_to_string(z.shape()) +
                                " are inconsistent");
  }
  AffineGrads<T> g;
  if (want_input_delta) g.delta = matmul_hermitian_lhs(w.weight, delta_next);
  g.weight = matmul_hermitian_rhs(delta_next, z);
  if (fault::affine_sign_flip()) g.weight *= T(-1.0);
  g.bias = Tensor<T>({w.out_dim()});
  const std::size_t cols = delta_next.dim(1);
  for (std::size_t i = 0; i < w.out_dim(); ++i) {
    T acc{};
    for (std::size_t j = 0; j < cols; ++j) acc += delta_next.at(i, j);
    g.bias[i] = acc;
  }
  return g;
}

Complex activation_backward(const Complex& delta_next, const RealJacobian& j) {
  const double re = delta_next.real(), im = delta_next.imag();
  return re * Complex(j.du_dx, j.du_dy) + Complex(0.0, im) * Complex(j.dv_dy, -j.dv_dx);
}

Complex holomorphic_activation_backward(const Complex& delta_next, const Complex& fprime) {
  // Cauchy-Riemann: u_x = v_y = Re f', v_x = -u_y = Im f'.
  return activation_backward(delta_next, RealJacobian{fprime.real(), -fprime.imag(), fprime.imag(), fprime.real()});
}

ComplexTensor sector_relu_backward(const ComplexTensor& delta_next, const ComplexTensor& z_forward,
                                   const SectorParams& p) {
  if (delta_next.shape() != z_forward.shape()) {
    throw std::invalid_argument("sector_relu_backward: delta " + shape_to_string(delta_next.shape()) +
                                " vs forward input " + shape_to_string(z_forward.shape()));
  }
  ComplexTensor out(delta_next.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = sector_passes(z_forward[i], p) ? holomorphic_activation_backward(delta_next[i], Complex{1.0, 0.0})
                                            : Complex{};
  }
  return out;
}

ComplexTensor projection_backward(const RealTensor& delta_next, const ComplexTensor& z_forward, ProjectionKind kind) {
  if (delta_next.size() != z_forward.size()) {
    throw std::invalid_argument("projection_backward: delta " + shape_to_string(delta_next.shape()) +
                                " vs forward input " + shape_to_string(z_forward.shape()));
  }
  ComplexTensor out(z_forward.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = z_forward[i].real(), y = z_forward[i].imag();
    RealJacobian j;
    if (kind == ProjectionKind::squared_magnitude) {
      j.du_dx = 2.0 * x;
      j.du_dy = 2.0 * y;
    } else {
      const double r = std::abs(z_forward[i]);
      if (r == 0.0) throw std::domain_error("magnitude projection is not differentiable at 0");
      j.du_dx = x / r;
      j.du_dy = y / r;
    }
    out[i] = activation_backward(Complex{delta_next[i], 0.0}, j);
  }
  return out;
}

template <typename T>
Tensor<T> pool_backward(const Tensor<T>& delta_next, const PoolResult<T>& forward) {
  if (delta_next.size() != forward.argmax.size() || delta_next.shape() != forward.output.shape()) {
    throw std::invalid_argument("pool_backward: delta " + shape_to_string(delta_next.shape()) +
                                " does not match the recorded pooling output " +
                                shape_to_string(forward.output.shape()));
  }
  Tensor<T> out(forward.input_shape);
  for (std::size_t o = 0; o < delta_next.size(); ++o) {
    const std::size_t src = forward.argmax[o];
    if (src >= out.size()) throw std::invalid_argument("pool_backward: stale argmax map");
    out[src] += delta_next[o];
  }
  return out;
}

namespace {

// Derivatives d softmax / d z_k = p_k (1 + alpha (z_k - s)), where p_k are the
// normalized exponential weights; softmax is holomorphic in every z_k.
std::vector<Complex> softmax_derivatives(std::span<const Complex> values, double alpha) {
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& z : values) shift = std::max(shift, alpha * z.real());
  std::vector<Complex> e(values.size());
  Complex num{}, den{};
  for (std::size_t k = 0; k < values.size(); ++k) {
    e[k] = std::exp(alpha * values[k] - shift);
    num += values[k] * e[k];
    den += e[k];
  }
  const Complex s = num / den;
  std::vector<Complex> d(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) d[k] = e[k] / den * (1.0 + alpha * (values[k] - s));
  return d;
}

}  // namespace

std::vector<Complex> softmax_pool_backward(const Complex& delta_next, std::span<const Complex> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("softmax_pool_backward of an empty set");
  std::vector<Complex> d = softmax_derivatives(values, alpha);
  for (auto& v : d) v = holomorphic_activation_backward(delta_next, v);
  return d;
}

std::vector<Complex> dual_softmax_pool_backward(const Complex& delta_next, std::span<const Complex> values,
                                                double alpha) {
  if (values.empty()) throw std::invalid_argument("dual_softmax_pool_backward of an empty set");
  // Softmax has real Taylor coefficients, so i conj(softmax(i conj z)) equals
  // i softmax(-i z): holomorphic in z with d/dz_k = softmax'_k evaluated at -i z.
  std::vector<Complex> rotated(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) rotated[k] = Complex{0.0, -1.0} * values[k];
  std::vector<Complex> d = softmax_derivatives(rotated, alpha);
  for (auto& v : d) v = holomorphic_activation_backward(delta_next, v);
  return d;
}

ComplexTensor softmax_pool_tensor_backward(const ComplexTensor& delta_next, const ComplexTensor& input,
                                           const PoolSpec& p) {
  const PoolGeometry g = PoolGeometry::of(input.shape(), p);
  if (delta_next.size() != g.output_size()) {
    throw std::invalid_argument("softmax_pool_tensor_backward: delta " + shape_to_string(delta_next.shape()) +
                                " does not match pooled output size");
  }
  ComplexTensor out(input.shape());
  std::vector<Complex> window;
  std::vector<std::size_t> where;
  for (std::size_t o = 0; o < delta_next.size(); ++o) {
    window.clear();
    where.clear();
    g.for_each_in_window(o, [&](std::size_t src) {
      window.push_back(input[src]);
      where.push_back(src);
    });
    const auto d = p.kind == PoolKind::dual_softmax ? dual_softmax_pool_backward(delta_next[o], window, p.alpha)
                                                    : softmax_pool_backward(delta_next[o], window, p.alpha);
    for (std::size_t k = 0; k < d.size(); ++k) out[where[k]] += d[k];
  }
  return out;
}

template <typename T>
ConvGrads<T> conv_backward(const Tensor<T>& delta_next, const ConvWeights<T>& w, const PatchMatrix<T>& patches,
                           bool want_input_delta) {
  w.validate();
  const std::size_t positions = patches.out_h * patches.out_w;
  if (delta_next.size() != w.count() * positions || patches.matrix.dim(1) != positions ||
      patches.matrix.dim(0) != w.in_channels() * w.kernel_h() * w.kernel_w()) {
    throw std::invalid_argument("conv_backward: delta " + shape_to_string(delta_next.shape()) +
                                " does not match the cached patch matrix " + shape_to_string(patches.matrix.shape()));
  }
  const Tensor<T> delta_matrix = delta_next.reshaped({w.count(), positions});
  AffineWeights<T> affine{w.kernels.reshaped({w.count(), patches.matrix.dim(0)}), w.bias};
  AffineGrads<T> ag = affine_backward(delta_matrix, affine, patches.matrix, want_input_delta);
  ConvGrads<T> g;
  g.kernels = ag.weight.reshaped(w.kernels.shape());
  g.bias = std::move(ag.bias);
  if (want_input_delta) g.delta = col2im_accumulate(patches, ag.delta);
  return g;
}

template AffineGrads<double> affine_backward(const Tensor<double>&, const AffineWeights<double>&,
                                             const Tensor<double>&, bool);
template AffineGrads<Complex> affine_backward(const Tensor<Complex>&, const AffineWeights<Complex>&,
                                              const Tensor<Complex>&, bool);
template Tensor<double> pool_backward(const Tensor<double>&, const PoolResult<double>&);
template Tensor<Complex> pool_backward(const Tensor<Complex>&, const PoolResult<Complex>&);
template ConvGrads<double> conv_backward(const Tensor<double>&, const ConvWeights<double>&,
                                         const PatchMatrix<double>&, bool);
template ConvGrads<Complex> conv_backward(const Tensor<Complex>&, const ConvWeights<Complex>&,
                                          const PatchMatrix<Complex>&, bool);

}  // namespace ccnn
