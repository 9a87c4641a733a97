#include "ccnn/network.hpp"

#include <stdexcept>
#include <string>
#include <type_traits>

#include "ccnn/backprop.hpp"
#include "ccnn/equivalence.hpp"
#include "ccnn/parallel.hpp"

namespace ccnn {

namespace {

template <typename T>
constexpr bool is_complex = std::is_same_v<T, Complex>;

}  // namespace

template <typename T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  const Domain want = is_complex<T> ? Domain::complex : Domain::real;
  if (spec_.domain != want) {
    throw std::invalid_argument(std::string("a ") + to_string(want) + " network cannot run a " +
                                to_string(spec_.domain) + " spec");
  }
  shapes_ = spec_.shapes();
  classes_ = spec_.classes();
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const Shape& in = shapes_[i];
    if (l.kind == LayerKind::conv) {
      first_param_.push_back(static_cast<std::ptrdiff_t>(params_.size()));
      params_.emplace_back(Shape{l.kernels, in[0], l.kernel_h, l.kernel_w});
      params_.emplace_back(Shape{l.kernels});
    } else if (l.kind == LayerKind::affine) {
      first_param_.push_back(static_cast<std::ptrdiff_t>(params_.size()));
      params_.emplace_back(Shape{l.out_features, Tensor<T>::count(in)});
      params_.emplace_back(Shape{l.out_features});
    } else {
      first_param_.push_back(-1);
    }
  }
}

template <typename T>
void Network<T>::initialize(Rng& rng) {
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (first_param_[i] < 0) continue;
    const LayerSpec& l = spec_.layers[i];
    Tensor<T>& w = params_[static_cast<std::size_t>(first_param_[i])];
    std::size_t fan_in = 0, fan_out = 0;
    if (l.kind == LayerKind::conv) {
      const std::size_t area = l.kernel_h * l.kernel_w;
      fan_in = shapes_[i][0] * area;
      fan_out = l.kernels * area;
    } else {
      fan_in = w.dim(1);
      fan_out = w.dim(0);
    }
    w = glorot_init<T>(w.shape(), fan_in, fan_out, rng);
    params_[static_cast<std::size_t>(first_param_[i]) + 1].fill(T{});
  }
}

template <typename T>
Parameters<T> Network<T>::zero_gradients() const {
  Parameters<T> g;
  g.reserve(params_.size());
  for (const auto& p : params_) g.emplace_back(p.shape());
  return g;
}

template <typename T>
std::vector<double> Network<T>::forward(const Tensor<T>& input, ForwardCache<T>* cache) const {
  if (input.shape() != shapes_.front()) {
    throw std::invalid_argument("network input " + shape_to_string(input.shape()) + " does not match spec " +
                                shape_to_string(shapes_.front()));
  }
  if (cache) cache->layers.resize(spec_.layers.size());
  Tensor<T> x = input;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    LayerCache<T>* lc = cache ? &cache->layers[i] : nullptr;
    if (lc) lc->input = x;
    switch (l.kind) {
      case LayerKind::conv: {
        const auto p = static_cast<std::size_t>(first_param_[i]);
        ConvWeights<T> w{params_[p], params_[p + 1], l.stride};
        x = conv_forward(x, w, lc ? &lc->patches : nullptr);
        break;
      }
      case LayerKind::relu:
        if constexpr (is_complex<T>) x = sector_relu(x, l.sector);
        else x = relu(x);
        break;
      case LayerKind::pool: {
        if constexpr (is_complex<T>) {
          if (l.pool.kind == PoolKind::softmax || l.pool.kind == PoolKind::dual_softmax) {
            x = softmax_pool_forward(x, l.pool);
            break;
          }
          PoolResult<T> r = max_by_magnitude_pool(x, l.pool);
          x = r.output;
          if (lc) lc->pool = std::move(r);
        } else {
          PoolResult<T> r = max_pool(x, l.pool);
          x = r.output;
          if (lc) lc->pool = std::move(r);
        }
        break;
      }
      case LayerKind::projection: {
        if constexpr (is_complex<T>) {
          const RealTensor proj = projection(x, l.projection);
          for (std::size_t k = 0; k < x.size(); ++k) x[k] = Complex{proj[k], 0.0};
        }
        break;
      }
      case LayerKind::affine: {
        const auto p = static_cast<std::size_t>(first_param_[i]);
        AffineWeights<T> w{params_[p], params_[p + 1]};
        x = affine_forward(x.reshaped({x.size(), 1}), w).reshaped(shapes_[i + 1]);
        break;
      }
    }
  }
  std::vector<double> scores(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) scores[k] = real_part(x[k]);
  return scores;
}

template <typename T>
Parameters<T> Network<T>::backward(const ForwardCache<T>& cache, std::span<const double> score_delta) const {
  if (cache.layers.size() != spec_.layers.size()) {
    throw std::invalid_argument("network backward: missing forward cache (run forward with caching first)");
  }
  if (score_delta.size() != classes_) {
    throw std::invalid_argument("network backward: expected " + std::to_string(classes_) + " score deltas, got " +
                                std::to_string(score_delta.size()));
  }
  Parameters<T> grads = zero_gradients();
  Tensor<T> delta(shapes_.back());
  for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = T(score_delta[k]);

  // Layers before the first parameterized one never need an input delta.
  std::size_t lowest = spec_.layers.size();
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    if (first_param_[i] >= 0) {
      lowest = i;
      break;
    }
  }

  for (std::size_t n = spec_.layers.size(); n-- > lowest;) {
    const LayerSpec& l = spec_.layers[n];
    const LayerCache<T>& lc = cache.layers[n];
    if (lc.input.shape() != shapes_[n]) throw std::invalid_argument("network backward: stale forward cache");
    const bool need_delta = n > lowest;
    switch (l.kind) {
      case LayerKind::conv: {
        const auto p = static_cast<std::size_t>(first_param_[n]);
        ConvWeights<T> w{params_[p], params_[p + 1], l.stride};
        ConvGrads<T> g = conv_backward(delta, w, lc.patches, need_delta);
        grads[p] = std::move(g.kernels);
        grads[p + 1] = std::move(g.bias);
        delta = std::move(g.delta);
        break;
      }
      case LayerKind::relu:
        if constexpr (is_complex<T>) delta = sector_relu_backward(delta, lc.input, l.sector);
        else delta = relu_backward(delta, lc.input);
        break;
      case LayerKind::pool:
        if constexpr (is_complex<T>) {
          if (l.pool.kind == PoolKind::softmax || l.pool.kind == PoolKind::dual_softmax) {
            delta = softmax_pool_tensor_backward(delta, lc.input, l.pool);
            break;
          }
        }
        delta = pool_backward(delta, lc.pool);
        break;
      case LayerKind::projection:
        if constexpr (is_complex<T>) {
          RealTensor re(delta.shape());
          for (std::size_t k = 0; k < delta.size(); ++k) re[k] = delta[k].real();
          delta = projection_backward(re, lc.input, l.projection);
        }
        break;
      case LayerKind::affine: {
        const auto p = static_cast<std::size_t>(first_param_[n]);
        AffineWeights<T> w{params_[p], params_[p + 1]};
        AffineGrads<T> g = affine_backward(delta.reshaped({delta.size(), 1}), w,
                                           lc.input.reshaped({lc.input.size(), 1}), need_delta);
        grads[p] = std::move(g.weight);
        grads[p + 1] = std::move(g.bias);
        if (need_delta) delta = g.delta.reshaped(shapes_[n]);
        break;
      }
    }
  }
  return grads;
}

template <typename T>
Parameters<T> network_backward(const Network<T>& net, const ForwardCache<T>& cache,
                               std::span<const double> score_delta) {
  return net.backward(cache, score_delta);
}

namespace {

void check_batch(std::size_t inputs, std::size_t labels) {
  if (inputs == 0) throw std::invalid_argument("empty batch");
  if (inputs != labels) throw std::invalid_argument("input and label counts differ");
}

}  // namespace

template <typename T>
ScoredBatch score_batch(const Network<T>& net, std::span<const Tensor<T>* const> inputs,
                        std::span<const std::size_t> labels, unsigned threads) {
  check_batch(inputs.size(), labels.size());
  ScoredBatch b;
  b.scores = RealTensor({net.classes(), inputs.size()});
  b.labels.assign(labels.begin(), labels.end());
  // A reused cache per worker avoids reallocating the patch matrices.
  parallel_chunks(inputs.size(), threads, [&](std::size_t begin, std::size_t end) {
    ForwardCache<T> cache;
    for (std::size_t j = begin; j < end; ++j) {
      const auto s = net.forward(*inputs[j], &cache);
      for (std::size_t c = 0; c < s.size(); ++c) b.scores.at(c, j) = s[c];
    }
  });
  return b;
}

template <typename T>
BatchGradient<T> loss_and_gradients(const Network<T>& net, std::span<const Tensor<T>* const> inputs,
                                    std::span<const std::size_t> labels, unsigned threads) {
  check_batch(inputs.size(), labels.size());
  const std::size_t n = inputs.size();
  ScoredBatch b;
  b.scores = RealTensor({net.classes(), n});
  b.labels.assign(labels.begin(), labels.end());
  // Each item's loss delta depends only on its own scores, so forward and
  // backward run per item with one reused cache per worker.
  std::vector<Parameters<T>> per_sample(n);
  parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end) {
    ForwardCache<T> cache;
    for (std::size_t j = begin; j < end; ++j) {
      const auto s = net.forward(*inputs[j], &cache);
      for (std::size_t c = 0; c < s.size(); ++c) b.scores.at(c, j) = s[c];
      per_sample[j] = net.backward(cache, logistic_loss_delta(s, labels[j], n));
    }
  });
  BatchGradient<T> out;
  out.loss = logistic_loss(b).loss;
  out.accuracy = accuracy(b);
  out.grads = net.zero_gradients();
  for (const auto& g : per_sample)
    for (std::size_t p = 0; p < g.size(); ++p) out.grads[p] += g[p];
  return out;
}

template class Network<double>;
template class Network<Complex>;
template Parameters<double> network_backward(const Network<double>&, const ForwardCache<double>&,
                                             std::span<const double>);
template Parameters<Complex> network_backward(const Network<Complex>&, const ForwardCache<Complex>&,
                                              std::span<const double>);
template ScoredBatch score_batch(const Network<double>&, std::span<const Tensor<double>* const>,
                                 std::span<const std::size_t>, unsigned);
template ScoredBatch score_batch(const Network<Complex>&, std::span<const Tensor<Complex>* const>,
                                 std::span<const std::size_t>, unsigned);
template BatchGradient<double> loss_and_gradients(const Network<double>&, std::span<const Tensor<double>* const>,
                                                  std::span<const std::size_t>, unsigned);
template BatchGradient<Complex> loss_and_gradients(const Network<Complex>&, std::span<const Tensor<Complex>* const>,
                                                   std::span<const std::size_t>, unsigned);

}  // namespace ccnn
