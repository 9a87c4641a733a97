#pragma once

#include <span>
#include <vector>

#include "ccnn/layers.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

// Every delta here follows the convention delta = dl/dX + i dl/dY, where
// X + iY is the value being differentiated; weight gradients are
// dl/dA + i dl/dB for weights A + iB. Gradient descent steps along -gradient.

template <typename T>
struct AffineGrads {
  Tensor<T> delta;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
struct ConvGrads {
  Tensor<T> delta;
  Tensor<T> kernels;
  Tensor<T> bias;
};

/// Partial derivatives of f = u + iv with respect to x and y at one point.
struct RealJacobian {
  double du_dx = 0.0, du_dy = 0.0, dv_dx = 0.0, dv_dy = 0.0;
};

/// delta_in = W^H delta_next; grad W = delta_next Z^H; grad bias = row sums of delta_next.
template <typename T>
AffineGrads<T> affine_backward(const Tensor<T>& delta_next, const AffineWeights<T>& w, const Tensor<T>& z,
                               bool want_input_delta = true);

/**
 * General pointwise activation backward:
 *   delta = dRe * (du/dx + i du/dy) + i dIm * (dv/dy - i dv/dx)
 * The holomorphic and projection forms below are specializations.
 */
Complex activation_backward(const Complex& delta_next, const RealJacobian& j);

/// delta_next * conj(f'(z)) for complex-differentiable f.
Complex holomorphic_activation_backward(const Complex& delta_next, const Complex& fprime);

/// Passes delta where the forward pass let z through, zero elsewhere.
ComplexTensor sector_relu_backward(const ComplexTensor& delta_next, const ComplexTensor& z_forward,
                                   const SectorParams& p = {});

/// Only the real part of delta_next is meaningful; the projection output is real.
ComplexTensor projection_backward(const RealTensor& delta_next, const ComplexTensor& z_forward, ProjectionKind kind);

/// Routes each output delta to its recorded winner; overlapping windows accumulate.
template <typename T>
Tensor<T> pool_backward(const Tensor<T>& delta_next, const PoolResult<T>& forward);

/// Backward of softmax_pool over one window.
std::vector<Complex> softmax_pool_backward(const Complex& delta_next, std::span<const Complex> values, double alpha);
std::vector<Complex> dual_softmax_pool_backward(const Complex& delta_next, std::span<const Complex> values,
                                                double alpha);

/// Windowed softmax / dual-softmax backward; `input` is the forward input.
ComplexTensor softmax_pool_tensor_backward(const ComplexTensor& delta_next, const ComplexTensor& input,
                                           const PoolSpec& p);

/// Reshape-back, affine backward on the cached patch matrix, col2im accumulate.
/// With want_input_delta false the returned delta is left empty (first layer).
template <typename T>
ConvGrads<T> conv_backward(const Tensor<T>& delta_next, const ConvWeights<T>& w, const PatchMatrix<T>& patches,
                           bool want_input_delta = true);

namespace fault {
/// Fault injection for the gradient checker: when set, affine_backward (and so
/// conv_backward) returns the negated weight gradient.
void set_affine_sign_flip(bool enabled);
bool affine_sign_flip();
}  // namespace fault

}  // namespace ccnn
