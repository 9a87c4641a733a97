#pragma once

#include <utility>

#include "ccnn/layers.hpp"
#include "ccnn/network_spec.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

// Real-valued layers. Affine and convolution are the shared templates in
// layers.hpp/backprop.hpp instantiated for double; ReLU and max pooling
// compare values directly.

inline double relu(double x) { return x >= 0.0 ? x : 0.0; }
RealTensor relu(const RealTensor& x);
RealTensor relu_backward(const RealTensor& delta_next, const RealTensor& x_forward);

/// Max pooling by value (ties to the first element in row-major order).
PoolResult<double> max_pool(const RealTensor& input, const PoolSpec& p);

/**
 * One complex kernel A + iB, shape (C, kh, kw), as the two real kernels
 * [A, -B] and [B, A] of shape (2C, kh, kw). Applied to the stacked input
 * [X, Y] they produce the real and imaginary parts of the complex response.
 */
std::pair<RealTensor, RealTensor> realify_kernel(const ComplexTensor& kernel);

/**
 * Real convolution equivalent to a complex one. Output channels are laid out
 * as [Re of every kernel, Im of every kernel], matching the input stacking of
 * complex_to_stacked, so realified layers can be chained.
 */
ConvWeights<double> realify_conv(const ConvWeights<Complex>& w);

/// (C, H, W) complex to (2C, H, W) real: channels [X_0..X_{C-1}, Y_0..Y_{C-1}].
RealTensor complex_to_stacked(const ComplexTensor& z);
ComplexTensor stacked_to_complex(const RealTensor& x);

/**
 * Real network of the same architecture with every convolution doubled,
 * ReLU and max pooling replaced by their real versions, and the projection
 * replaced by a trainable affine map onto `classes` scores.
 */
NetworkSpec build_real_counterpart(const NetworkSpec& complex_spec);

}  // namespace ccnn
