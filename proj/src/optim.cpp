#include "ccnn/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace ccnn {

void LrSchedule::validate() const {
  if (steps.empty()) throw std::invalid_argument("learning-rate schedule is empty");
  if (steps.front().first != 0) throw std::invalid_argument("learning-rate schedule must start at iteration 0");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (!(steps[i].second > 0.0)) throw std::invalid_argument("learning rates must be positive");
    if (i && steps[i].first <= steps[i - 1].first) {
      throw std::invalid_argument("learning-rate thresholds must be strictly increasing");
    }
  }
}

double LrSchedule::at(std::size_t iteration) const {
  validate();
  double rate = steps.front().second;
  for (const auto& [start, r] : steps) {
    if (iteration >= start) rate = r;
  }
  return rate;
}

double lr_at(const LrSchedule& schedule, std::size_t iteration) { return schedule.at(iteration); }

void TrainConfig::validate() const {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  schedule.validate();
}

template <typename T>
MomentumState<T> MomentumState<T>::zeros_like(const Parameters<T>& weights) {
  MomentumState<T> s;
  s.velocity.reserve(weights.size());
  for (const auto& w : weights) s.velocity.emplace_back(w.shape());
  return s;
}

template <typename T>
void nesterov_step(Parameters<T>& weights, MomentumState<T>& state,
                   const std::function<Parameters<T>(const Parameters<T>&)>& grad_at, double eta, double mu) {
  if (state.velocity.size() != weights.size()) throw std::invalid_argument("momentum state does not match weights");
  Parameters<T> lookahead = weights;
  for (std::size_t p = 0; p < weights.size(); ++p) {
    auto& la = lookahead[p].values();
    const auto& z = state.velocity[p].values();
    if (la.size() != z.size()) throw std::invalid_argument("momentum tensor shape mismatch");
    for (std::size_t i = 0; i < la.size(); ++i) la[i] += mu * z[i];
  }
  const Parameters<T> grads = grad_at(lookahead);
  if (grads.size() != weights.size()) throw std::invalid_argument("gradient count does not match weights");
  for (std::size_t p = 0; p < weights.size(); ++p) {
    auto& w = weights[p].values();
    auto& z = state.velocity[p].values();
    const auto& g = grads[p].values();
    if (g.size() != w.size()) throw std::invalid_argument("gradient tensor shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      z[i] = mu * z[i] - eta * g[i];
      w[i] += z[i];
    }
  }
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0) throw std::invalid_argument("glorot fans must be >= 1");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename T>
Tensor<T> glorot_init(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor<T> t(shape);
  if constexpr (std::is_same_v<T, Complex>) {
    const double a = glorot_limit(fan_in, fan_out) / std::sqrt(2.0);
    std::uniform_real_distribution<double> u(-a, a);
    for (auto& v : t.values()) {
      const double re = u(rng);
      const double im = u(rng);
      v = Complex{re, im};
    }
  } else {
    const double a = glorot_limit(fan_in, fan_out);
    std::uniform_real_distribution<double> u(-a, a);
    for (auto& v : t.values()) v = u(rng);
  }
  return t;
}

std::vector<std::size_t> minibatch_indices(std::size_t dataset_size, std::size_t batch_size, Rng& rng) {
  if (batch_size > dataset_size) {
    throw std::invalid_argument("batch size " + std::to_string(batch_size) + " exceeds dataset size " +
                                std::to_string(dataset_size));
  }
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  if (batch_size == dataset_size) {
    for (std::size_t i = 0; i < dataset_size; ++i) out.push_back(i);
    return out;
  }
  // Floyd's sampling keeps the cost proportional to the batch, not the dataset.
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = dataset_size - batch_size; j < dataset_size; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng);
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      seen.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

template struct MomentumState<double>;
template struct MomentumState<Complex>;
template void nesterov_step(Parameters<double>&, MomentumState<double>&,
                            const std::function<Parameters<double>(const Parameters<double>&)>&, double, double);
template void nesterov_step(Parameters<Complex>&, MomentumState<Complex>&,
                            const std::function<Parameters<Complex>(const Parameters<Complex>&)>&, double, double);
template Tensor<double> glorot_init<double>(const Shape&, std::size_t, std::size_t, Rng&);
template Tensor<Complex> glorot_init<Complex>(const Shape&, std::size_t, std::size_t, Rng&);

}  // namespace ccnn
