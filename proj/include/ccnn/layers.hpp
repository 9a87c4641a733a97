#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "ccnn/tensor.hpp"

namespace ccnn {

/// Fully connected weights: weight is (out, in), bias is (out).
template <typename T>
struct AffineWeights {
  Tensor<T> weight;
  Tensor<T> bias;

  std::size_t in_dim() const { return weight.dim(1); }
  std::size_t out_dim() const { return weight.dim(0); }
};

/**
 * Convolution kernels stored as one (count, channels, kh, kw) tensor so each
 * kernel flattens to one row of the affine matrix used on the patch matrix.
 */
template <typename T>
struct ConvWeights {
  Tensor<T> kernels;
  Tensor<T> bias;
  std::size_t stride = 1;

  std::size_t count() const { return kernels.dim(0); }
  std::size_t in_channels() const { return kernels.dim(1); }
  std::size_t kernel_h() const { return kernels.dim(2); }
  std::size_t kernel_w() const { return kernels.dim(3); }

  Tensor<T> kernel(std::size_t k) const;
  void validate() const;
};

/// Closed sector [theta1, theta2] of arguments that the complex ReLU passes.
struct SectorParams {
  double theta1 = 0.0;
  double theta2 = std::numbers::pi / 2;

  SectorParams() = default;
  SectorParams(double lo, double hi);

  bool is_first_quadrant() const { return theta1 == 0.0 && theta2 == std::numbers::pi / 2; }
  bool operator==(const SectorParams&) const = default;
};

enum class PoolKind { max_by_magnitude, softmax, dual_softmax, global_max_by_magnitude };
enum class ProjectionKind { magnitude, squared_magnitude };

struct PoolSpec {
  std::size_t window_h = 2;
  std::size_t window_w = 2;
  std::size_t stride = 1;
  PoolKind kind = PoolKind::max_by_magnitude;
  double alpha = 0.0;

  void validate() const;
  bool operator==(const PoolSpec&) const = default;
};

/// Output of an argmax-style pooling pass: winners are flat input indices.
template <typename T>
struct PoolResult {
  Tensor<T> output;
  std::vector<std::size_t> argmax;
  Shape input_shape;
};

template <typename T>
Tensor<T> affine_forward(const Tensor<T>& z, const AffineWeights<T>& w);

/**
 * Valid-mode convolution computed as im2col, an affine map with one kernel per
 * row, and a reshape to (count, out_h, out_w). If `patches` is non-null the
 * patch matrix is left there for the backward pass.
 */
template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const ConvWeights<T>& w, PatchMatrix<T>* patches = nullptr);

bool sector_passes(const Complex& z, const SectorParams& p);
Complex sector_relu(const Complex& z, const SectorParams& p = {});
ComplexTensor sector_relu(const ComplexTensor& z, const SectorParams& p = {});

/// Max-by-magnitude pooling per channel; global kind pools the whole spatial extent.
PoolResult<Complex> max_by_magnitude_pool(const ComplexTensor& input, const PoolSpec& p);

// softmax_alpha({z}) = sum z e^{alpha z} / sum e^{alpha z}
Complex softmax_pool(std::span<const Complex> values, double alpha);

/// i * conj(softmax_alpha({i * conj(z)})): selects by imaginary part as alpha grows.
Complex dual_softmax_pool(std::span<const Complex> values, double alpha);

/// Windowed softmax / dual-softmax pooling over every channel of a (C, H, W) tensor.
ComplexTensor softmax_pool_forward(const ComplexTensor& input, const PoolSpec& p);

double projection(const Complex& z, ProjectionKind kind);
RealTensor projection(const ComplexTensor& z, ProjectionKind kind);

}  // namespace ccnn
