#include "ccnn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace ccnn {

void ScoredBatch::validate() const {
  if (scores.rank() != 2) throw std::invalid_argument("scores must be a (classes, batch) matrix");
  if (labels.size() != batch()) {
    throw std::invalid_argument("label count " + std::to_string(labels.size()) + " != batch size " +
                                std::to_string(batch()));
  }
  for (auto y : labels)
    if (y >= classes()) throw std::invalid_argument("label " + std::to_string(y) + " out of range");
  for (double s : scores.values())
    if (!std::isfinite(s)) throw NonFiniteScore();
}

namespace {

// Fills probs with the softmax of one score column; returns its log-sum-exp.
double column_softmax(std::span<const double> scores, std::vector<double>& probs) {
  double m = scores[0];
  for (std::size_t c = 1; c < scores.size(); ++c) m = std::max(m, scores[c]);
  double sum = 0.0;
  probs.resize(scores.size());
  for (std::size_t c = 0; c < scores.size(); ++c) {
    probs[c] = std::exp(scores[c] - m);
    sum += probs[c];
  }
  for (auto& p : probs) p /= sum;
  return m + std::log(sum);
}

std::vector<double> column(const RealTensor& scores, std::size_t j) {
  std::vector<double> col(scores.dim(0));
  for (std::size_t c = 0; c < col.size(); ++c) col[c] = scores.at(c, j);
  return col;
}

}  // namespace

std::vector<double> logistic_loss_terms(const ScoredBatch& batch) {
  batch.validate();
  std::vector<double> terms(batch.batch());
  std::vector<double> probs;
  for (std::size_t j = 0; j < batch.batch(); ++j) {
    const double lse = column_softmax(column(batch.scores, j), probs);
    terms[j] = lse - batch.scores.at(batch.labels[j], j);
  }
  return terms;
}

LossResult logistic_loss(const ScoredBatch& batch) {
  batch.validate();
  const std::size_t n = batch.batch();
  LossResult r;
  r.delta = RealTensor(batch.scores.shape());
  std::vector<double> probs;
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double lse = column_softmax(column(batch.scores, j), probs);
    total += lse - batch.scores.at(batch.labels[j], j);
    for (std::size_t c = 0; c < batch.classes(); ++c) {
      const double onehot = c == batch.labels[j] ? 1.0 : 0.0;
      r.delta.at(c, j) = (probs[c] - onehot) / static_cast<double>(n);
    }
  }
  r.loss = total / static_cast<double>(n);
  return r;
}

std::vector<double> logistic_loss_delta(std::span<const double> scores, std::size_t label, std::size_t batch) {
  if (scores.empty() || label >= scores.size()) throw std::invalid_argument("label out of range");
  if (batch == 0) throw std::invalid_argument("batch size must be positive");
  for (double s : scores)
    if (!std::isfinite(s)) throw NonFiniteScore();
  std::vector<double> probs;
  column_softmax(scores, probs);
  for (std::size_t c = 0; c < probs.size(); ++c) {
    const double onehot = c == label ? 1.0 : 0.0;
    probs[c] = (probs[c] - onehot) / static_cast<double>(batch);
  }
  return probs;
}

double accuracy(const ScoredBatch& batch) {
  batch.validate();
  std::size_t correct = 0;
  for (std::size_t j = 0; j < batch.batch(); ++j) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < batch.classes(); ++c)
      if (batch.scores.at(c, j) > batch.scores.at(best, j)) best = c;
    if (best == batch.labels[j]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.batch());
}

}  // namespace ccnn
