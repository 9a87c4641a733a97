#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ccnn/network.hpp"
#include "ccnn/optim.hpp"

namespace ccnn {

/// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-12);

/**
 * Smallest gradient a central difference can check to relative tolerance
 * `tol`: one rounding of the loss moves the difference quotient by about
 * eps * |loss| / step, so smaller gradients are compared against this
 * magnitude instead of their own.
 */
double resolvable_gradient(double loss, double step, double tol);

struct GradCoordinate {
  std::size_t tensor = 0;
  std::size_t index = 0;
  bool imaginary = false;
  double analytic = 0.0;
  double numeric = 0.0;
  double error = 0.0;
};

struct GradReport {
  double tolerance = 0.0;
  double floor = 0.0;  // denominator floor of the relative errors
  double max_error = 0.0;
  std::size_t coordinates = 0;
  std::vector<double> errors;          // one per real coordinate, in parameter order (Re then Im)
  std::vector<GradCoordinate> worst;   // up to 5, largest error first
  bool passed = true;

  std::string summary() const;
};

/**
 * Central differences (l(w + h) - l(w - h)) / 2h for every real coordinate,
 * Re and Im separately, assembled as dl/dA + i dl/dB.
 */
template <typename T>
Parameters<T> finite_diff_grads(const std::function<double(const Parameters<T>&)>& loss, const Parameters<T>& at,
                                double step = 1e-5);

/// Same, with the network's mean logistic loss over a batch as the objective.
template <typename T>
Parameters<T> finite_diff_grads(const Network<T>& net, std::span<const Tensor<T>* const> inputs,
                                std::span<const std::size_t> labels, double step = 1e-5);

template <typename T>
GradReport compare(const Parameters<T>& analytic, const Parameters<T>& numeric, double tol, double floor = 1e-12);

/**
 * Smallest distance of any activation to a point where the network is not
 * differentiable: ReLU inputs near a sector edge (or 0 for real ReLU), and
 * max-pooling windows whose two largest keys nearly tie.
 */
template <typename T>
double boundary_distance(const Network<T>& net, std::span<const Tensor<T>* const> inputs);

/// Small built-in networks exercising one layer type each, plus the full cell networks.
std::vector<std::string> gradcheck_case_names();

struct GradcheckOutcome {
  std::string name;
  GradReport report;
  std::size_t resamples = 0;
};

/**
 * Builds the named case with random weights and a batch of 4 random inputs
 * (resampled while any activation lies within `margin` of a
 * non-differentiable point) and compares backprop against finite differences.
 */
GradcheckOutcome run_gradcheck_case(const std::string& name, std::uint64_t seed, double tol = 1e-5,
                                    double margin = 1e-4);

}  // namespace ccnn
