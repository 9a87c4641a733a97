#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "ccnn/tensor.hpp"

namespace ccnn {

/// A class score is NaN or infinite; training treats it as divergence.
struct NonFiniteScore : std::domain_error {
  NonFiniteScore() : std::domain_error("non-finite class score") {}
};

/// Real class scores, shape (classes, batch), with one label per column.
struct ScoredBatch {
  RealTensor scores;
  std::vector<std::size_t> labels;

  std::size_t classes() const { return scores.dim(0); }
  std::size_t batch() const { return scores.dim(1); }
  void validate() const;
};

struct LossResult {
  double loss = 0.0;
  RealTensor delta;  // d loss / d scores, same shape as the scores
};

/// Mean softmax cross-entropy over the batch, max-shifted for stability.
LossResult logistic_loss(const ScoredBatch& batch);

/// Per-item loss terms, in batch order.
std::vector<double> logistic_loss_terms(const ScoredBatch& batch);

/**
 * One column of logistic_loss's delta, computed from that column alone:
 * (softmax(scores) - onehot(label)) / batch. Bit-identical to the batch form.
 */
std::vector<double> logistic_loss_delta(std::span<const double> scores, std::size_t label, std::size_t batch);

/// Fraction of columns whose argmax score (lowest class on ties) is the label.
double accuracy(const ScoredBatch& batch);

}  // namespace ccnn
