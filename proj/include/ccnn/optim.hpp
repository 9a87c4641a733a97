#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "ccnn/tensor.hpp"

namespace ccnn {

/// All trainable tensors of a model in a fixed order.
template <typename T>
using Parameters = std::vector<Tensor<T>>;

using Rng = std::mt19937_64;

/// Piecewise-constant learning rate: entry (start, rate) applies from `start` on.
struct LrSchedule {
  std::vector<std::pair<std::size_t, double>> steps;

  double at(std::size_t iteration) const;
  void validate() const;
};

struct TrainConfig {
  double momentum = 0.9;
  LrSchedule schedule{{{0, 0.01}}};
  std::size_t batch_size = 100;
  std::size_t iterations = 5000;
  std::uint64_t seed = 1;

  void validate() const;
};

template <typename T>
struct MomentumState {
  Parameters<T> velocity;

  static MomentumState zeros_like(const Parameters<T>& weights);
};

double lr_at(const LrSchedule& schedule, std::size_t iteration);

/**
 * One step of SGD with Nesterov momentum:
 *   Z <- mu Z - eta grad(W + mu Z)
 *   W <- W + Z
 * Real and imaginary parts are updated as independent real coordinates, with
 * the gradient in the dl/dA + i dl/dB convention.
 */
template <typename T>
void nesterov_step(Parameters<T>& weights, MomentumState<T>& state,
                   const std::function<Parameters<T>(const Parameters<T>&)>& grad_at, double eta, double mu);

/// Glorot uniform; complex entries draw Re and Im independently on +-limit/sqrt(2).
template <typename T>
Tensor<T> glorot_init(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

double glorot_limit(std::size_t fan_in, std::size_t fan_out);

/// batch_size distinct indices drawn uniformly from [0, dataset_size).
std::vector<std::size_t> minibatch_indices(std::size_t dataset_size, std::size_t batch_size, Rng& rng);

}  // namespace ccnn
