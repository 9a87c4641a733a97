#pragma once

#include <random>

#include "ccnn/tensor.hpp"

namespace testing {

inline ccnn::ComplexTensor random_complex(const ccnn::Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  ccnn::ComplexTensor t(shape);
  for (auto& v : t.values()) v = ccnn::Complex{n(rng), n(rng)};
  return t;
}

inline ccnn::RealTensor random_real(const ccnn::Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  ccnn::RealTensor t(shape);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

inline double max_abs_diff(const ccnn::ComplexTensor& a, const ccnn::ComplexTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing
