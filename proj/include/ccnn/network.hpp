#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ccnn/layers.hpp"
#include "ccnn/loss.hpp"
#include "ccnn/network_spec.hpp"
#include "ccnn/optim.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

/// What one layer's backward pass needs from its forward pass.
template <typename T>
struct LayerCache {
  Tensor<T> input;
  PatchMatrix<T> patches;  // conv
  PoolResult<T> pool;      // argmax pooling
};

template <typename T>
struct ForwardCache {
  std::vector<LayerCache<T>> layers;
};

/**
 * A feed-forward network over one (channels, rows, cols) input at a time.
 * Complex networks (T = Complex) end in a projection layer; real networks
 * (T = double) end in an affine layer. Either way the last tensor's real
 * parts are the class scores.
 *
 * Parameters are stored flat, two tensors per conv or affine layer
 * (weights then bias), in layer order.
 */
template <typename T>
class Network {
public:
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<Shape>& shapes() const { return shapes_; }
  std::size_t classes() const { return classes_; }

  Parameters<T>& params() { return params_; }
  const Parameters<T>& params() const { return params_; }

  /// Glorot-uniform weights, zero biases, drawn in layer order.
  void initialize(Rng& rng);

  std::vector<double> forward(const Tensor<T>& input, ForwardCache<T>* cache = nullptr) const;

  /// Gradients of the loss w.r.t. every parameter, given d loss / d scores.
  Parameters<T> backward(const ForwardCache<T>& cache, std::span<const double> score_delta) const;

  Parameters<T> zero_gradients() const;

private:
  NetworkSpec spec_;
  std::vector<Shape> shapes_;
  std::vector<std::ptrdiff_t> first_param_;  // per layer, -1 when the layer has no parameters
  Parameters<T> params_;
  std::size_t classes_ = 0;
};

using ComplexNetwork = Network<Complex>;
using RealNetwork = Network<double>;

/// Chains every layer's backward pass from the loss delta to the first layer.
template <typename T>
Parameters<T> network_backward(const Network<T>& net, const ForwardCache<T>& cache,
                               std::span<const double> score_delta);

template <typename T>
struct BatchGradient {
  double loss = 0.0;
  double accuracy = 0.0;
  Parameters<T> grads;
};

/// Scores of every input as a (classes, batch) matrix.
template <typename T>
ScoredBatch score_batch(const Network<T>& net, std::span<const Tensor<T>* const> inputs,
                        std::span<const std::size_t> labels, unsigned threads = 1);

/**
 * Mean logistic loss over the batch and its gradient. Per-sample gradients
 * are summed in batch order, so the result is bit-identical for any thread
 * count.
 */
template <typename T>
BatchGradient<T> loss_and_gradients(const Network<T>& net, std::span<const Tensor<T>* const> inputs,
                                    std::span<const std::size_t> labels, unsigned threads = 1);

}  // namespace ccnn
