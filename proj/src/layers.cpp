#include "ccnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ccnn/pool_windows.hpp"

namespace ccnn {

template <typename T>
Tensor<T> ConvWeights<T>::kernel(std::size_t k) const {
  const std::size_t n = in_channels() * kernel_h() * kernel_w();
  std::vector<T> vals(kernels.values().begin() + static_cast<std::ptrdiff_t>(k * n),
                      kernels.values().begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
  return Tensor<T>({in_channels(), kernel_h(), kernel_w()}, std::move(vals));
}

template <typename T>
void ConvWeights<T>::validate() const {
  if (kernels.rank() != 4) {
    throw std::invalid_argument("conv kernels must be (count, channels, kh, kw), got " +
                                shape_to_string(kernels.shape()));
  }
  if (bias.size() != count()) {
    throw std::invalid_argument("conv bias count " + std::to_string(bias.size()) + " != kernel count " +
                                std::to_string(count()));
  }
  if (stride == 0) throw std::invalid_argument("conv stride must be >= 1");
}

SectorParams::SectorParams(double lo, double hi) : theta1(lo), theta2(hi) {
  if (!(lo > -std::numbers::pi && lo <= 0.0 && hi >= 0.0 && hi < std::numbers::pi)) {
    throw std::invalid_argument("sector bounds must satisfy -pi < theta1 <= 0 <= theta2 < pi");
  }
}

void PoolSpec::validate() const {
  if (stride == 0) throw std::invalid_argument("pool stride must be >= 1");
  if (kind != PoolKind::global_max_by_magnitude && (window_h == 0 || window_w == 0)) {
    throw std::invalid_argument("pool window extents must be >= 1");
  }
  if ((kind == PoolKind::softmax || kind == PoolKind::dual_softmax) && !std::isfinite(alpha)) {
    throw std::invalid_argument("softmax pooling alpha must be finite");
  }
}

template <typename T>
Tensor<T> affine_forward(const Tensor<T>& z, const AffineWeights<T>& w) {
  if (z.rank() != 2) throw std::invalid_argument("affine_forward expects a matrix input");
  if (w.bias.size() != w.out_dim()) throw std::invalid_argument("affine bias length does not match output dim");
  if (w.in_dim() != z.dim(0)) {
    throw std::invalid_argument("affine_forward: weight " + shape_to_string(w.weight.shape()) +
                                " incompatible with input " + shape_to_string(z.shape()));
  }
  Tensor<T> out = matmul(w.weight, z);
  const std::size_t cols = out.dim(1);
  for (std::size_t i = 0; i < out.dim(0); ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) += w.bias[i];
  return out;
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& input, const ConvWeights<T>& w, PatchMatrix<T>* patches) {
  w.validate();
  if (input.rank() != 3 || input.dim(0) != w.in_channels()) {
    throw std::invalid_argument("conv_forward: input " + shape_to_string(input.shape()) + " does not match kernels " +
                                shape_to_string(w.kernels.shape()));
  }
  PatchMatrix<T> local;
  PatchMatrix<T>& pm = patches ? *patches : local;
  im2col_into(input, w.kernel_h(), w.kernel_w(), w.stride, pm);
  AffineWeights<T> affine{w.kernels.reshaped({w.count(), w.in_channels() * w.kernel_h() * w.kernel_w()}), w.bias};
  return affine_forward(pm.matrix, affine).reshaped({w.count(), pm.out_h, pm.out_w});
}

bool sector_passes(const Complex& z, const SectorParams& p) {
  if (p.is_first_quadrant()) return z.real() >= 0.0 && z.imag() >= 0.0;
  if (z == Complex{}) return true;
  const double a = phase(z);
  return a >= p.theta1 && a <= p.theta2;
}

Complex sector_relu(const Complex& z, const SectorParams& p) { return sector_passes(z, p) ? z : Complex{}; }

ComplexTensor sector_relu(const ComplexTensor& z, const SectorParams& p) {
  ComplexTensor out = z;
  for (auto& v : out.values())
    if (!sector_passes(v, p)) v = Complex{};
  return out;
}

PoolResult<Complex> max_by_magnitude_pool(const ComplexTensor& input, const PoolSpec& p) {
  p.validate();
  if (p.kind != PoolKind::max_by_magnitude && p.kind != PoolKind::global_max_by_magnitude) {
    throw std::invalid_argument("max_by_magnitude_pool called with a softmax pool spec");
  }
  return argmax_pool(input, p, [](const Complex& z) { return squared_magnitude(z); });
}

Complex softmax_pool(std::span<const Complex> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("softmax_pool of an empty set");
  // Shift every exponent by the largest real exponent; the factor cancels.
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& z : values) shift = std::max(shift, alpha * z.real());
  Complex num{}, den{};
  for (const auto& z : values) {
    const Complex e = std::exp(alpha * z - shift);
    num += z * e;
    den += e;
  }
  return num / den;
}

Complex dual_softmax_pool(std::span<const Complex> values, double alpha) {
  std::vector<Complex> rotated(values.size());
  const Complex i{0.0, 1.0};
  for (std::size_t k = 0; k < values.size(); ++k) rotated[k] = i * std::conj(values[k]);
  return i * std::conj(softmax_pool(rotated, alpha));
}

ComplexTensor softmax_pool_forward(const ComplexTensor& input, const PoolSpec& p) {
  p.validate();
  if (p.kind != PoolKind::softmax && p.kind != PoolKind::dual_softmax) {
    throw std::invalid_argument("softmax_pool_forward called with a max pool spec");
  }
  const PoolGeometry g = PoolGeometry::of(input.shape(), p);
  ComplexTensor out({g.channels, g.out_h, g.out_w});
  std::vector<Complex> window;
  for (std::size_t o = 0; o < out.size(); ++o) {
    window.clear();
    g.for_each_in_window(o, [&](std::size_t src) { window.push_back(input[src]); });
    out[o] = p.kind == PoolKind::softmax ? softmax_pool(window, p.alpha) : dual_softmax_pool(window, p.alpha);
  }
  return out;
}

double projection(const Complex& z, ProjectionKind kind) {
  return kind == ProjectionKind::squared_magnitude ? squared_magnitude(z) : std::abs(z);
}

RealTensor projection(const ComplexTensor& z, ProjectionKind kind) {
  RealTensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = projection(z[i], kind);
  return out;
}

template struct ConvWeights<double>;
template struct ConvWeights<Complex>;
template Tensor<double> affine_forward(const Tensor<double>&, const AffineWeights<double>&);
template Tensor<Complex> affine_forward(const Tensor<Complex>&, const AffineWeights<Complex>&);
template Tensor<double> conv_forward(const Tensor<double>&, const ConvWeights<double>&, PatchMatrix<double>*);
template Tensor<Complex> conv_forward(const Tensor<Complex>&, const ConvWeights<Complex>&, PatchMatrix<Complex>*);

}  // namespace ccnn
