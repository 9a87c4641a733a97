#include "ccnn/equivalence.hpp"

#include <stdexcept>
#include <string>

#include "ccnn/pool_windows.hpp"

namespace ccnn {

RealTensor relu(const RealTensor& x) {
  RealTensor out = x;
  for (auto& v : out.values()) v = relu(v);
  return out;
}

RealTensor relu_backward(const RealTensor& delta_next, const RealTensor& x_forward) {
  if (delta_next.shape() != x_forward.shape()) {
    throw std::invalid_argument("relu_backward: delta " + shape_to_string(delta_next.shape()) + " vs input " +
                                shape_to_string(x_forward.shape()));
  }
  RealTensor out(delta_next.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x_forward[i] >= 0.0 ? delta_next[i] : 0.0;
  return out;
}

PoolResult<double> max_pool(const RealTensor& input, const PoolSpec& p) {
  p.validate();
  if (p.kind != PoolKind::max_by_magnitude && p.kind != PoolKind::global_max_by_magnitude) {
    throw std::invalid_argument("real max_pool supports only max and global pooling");
  }
  return argmax_pool(input, p, [](double x) { return x; });
}

std::pair<RealTensor, RealTensor> realify_kernel(const ComplexTensor& kernel) {
  if (kernel.rank() != 3) {
    throw std::invalid_argument("realify_kernel expects (channels, kh, kw), got " + shape_to_string(kernel.shape()));
  }
  const std::size_t c = kernel.dim(0), h = kernel.dim(1), w = kernel.dim(2);
  RealTensor re_kernel({2 * c, h, w});
  RealTensor im_kernel({2 * c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t col = 0; col < w; ++col) {
        const Complex k = kernel.at(ch, r, col);
        re_kernel.at(ch, r, col) = k.real();
        re_kernel.at(c + ch, r, col) = -k.imag();
        im_kernel.at(ch, r, col) = k.imag();
        im_kernel.at(c + ch, r, col) = k.real();
      }
    }
  }
  return {std::move(re_kernel), std::move(im_kernel)};
}

ConvWeights<double> realify_conv(const ConvWeights<Complex>& w) {
  w.validate();
  const std::size_t k = w.count(), c = w.in_channels(), h = w.kernel_h(), kw = w.kernel_w();
  const std::size_t per = 2 * c * h * kw;
  ConvWeights<double> out;
  out.stride = w.stride;
  out.kernels = RealTensor({2 * k, 2 * c, h, kw});
  out.bias = RealTensor({2 * k});
  for (std::size_t i = 0; i < k; ++i) {
    const auto [re, im] = realify_kernel(w.kernel(i));
    std::copy(re.values().begin(), re.values().end(), out.kernels.values().begin() + static_cast<std::ptrdiff_t>(i * per));
    std::copy(im.values().begin(), im.values().end(),
              out.kernels.values().begin() + static_cast<std::ptrdiff_t>((k + i) * per));
    out.bias[i] = w.bias[i].real();
    out.bias[k + i] = w.bias[i].imag();
  }
  return out;
}

RealTensor complex_to_stacked(const ComplexTensor& z) {
  if (z.rank() != 3) throw std::invalid_argument("complex_to_stacked expects (channels, rows, cols)");
  const std::size_t c = z.dim(0), plane = z.dim(1) * z.dim(2);
  RealTensor out({2 * c, z.dim(1), z.dim(2)});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < plane; ++i) {
      out[ch * plane + i] = z[ch * plane + i].real();
      out[(c + ch) * plane + i] = z[ch * plane + i].imag();
    }
  }
  return out;
}

ComplexTensor stacked_to_complex(const RealTensor& x) {
  if (x.rank() != 3 || x.dim(0) % 2 != 0) {
    throw std::invalid_argument("stacked_to_complex expects (2C, rows, cols), got " + shape_to_string(x.shape()));
  }
  const std::size_t c = x.dim(0) / 2, plane = x.dim(1) * x.dim(2);
  ComplexTensor out({c, x.dim(1), x.dim(2)});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < plane; ++i) out[ch * plane + i] = Complex{x[ch * plane + i], x[(c + ch) * plane + i]};
  return out;
}

NetworkSpec build_real_counterpart(const NetworkSpec& complex_spec) {
  if (complex_spec.domain != Domain::complex) throw std::invalid_argument("build_real_counterpart needs a complex spec");
  const std::size_t classes = complex_spec.classes();
  NetworkSpec real;
  real.domain = Domain::real;
  real.input = complex_spec.input;
  real.input[0] *= 2;
  for (const auto& l : complex_spec.layers) {
    switch (l.kind) {
      case LayerKind::conv: {
        LayerSpec d = l;
        d.kernels *= 2;
        real.layers.push_back(d);
        break;
      }
      case LayerKind::relu:
        real.layers.push_back(LayerSpec::relu());
        break;
      case LayerKind::pool:
        if (l.pool.kind != PoolKind::max_by_magnitude && l.pool.kind != PoolKind::global_max_by_magnitude) {
          throw std::invalid_argument("build_real_counterpart: softmax pooling has no real counterpart here");
        }
        real.layers.push_back(l);
        break;
      case LayerKind::projection:
        real.layers.push_back(LayerSpec::affine(classes));
        break;
      case LayerKind::affine:
        throw std::invalid_argument("build_real_counterpart: complex affine layers are not supported");
    }
  }
  real.shapes();
  return real;
}

}  // namespace ccnn
