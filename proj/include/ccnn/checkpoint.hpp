#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccnn/network_spec.hpp"
#include "ccnn/optim.hpp"
#include "ccnn/tensor.hpp"

namespace ccnn {

/// One evaluation point of a training run.
struct MetricsRow {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double wall_ms = 0.0;  // not stored in checkpoints (it is the one nondeterministic column)

  bool same_values(const MetricsRow& o) const;
};

enum class RunStatus : std::uint8_t { running = 0, complete = 1, aborted = 2 };

/**
 * Resumable snapshot of a training run. Real networks are held with zero
 * imaginary parts and stored as plain doubles.
 *
 * File layout (little endian): "CCNN", u32 version, then length-prefixed
 * network spec text, config text, rng state text and status message, the
 * iteration counter, weight and momentum tensors, and the metrics so far.
 */
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  NetworkSpec spec;
  std::string config_text;
  std::uint64_t iteration = 0;
  std::string rng_state;
  RunStatus status = RunStatus::running;
  std::string message;
  std::vector<ComplexTensor> params;
  std::vector<ComplexTensor> velocity;
  std::vector<MetricsRow> metrics;

  std::string to_bytes() const;
  /// Throws on bad magic, version, truncation or trailing bytes.
  static Checkpoint from_bytes(const std::string& bytes);

  /// Written to a temporary file and renamed, so readers never see half a file.
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

std::string rng_to_text(const Rng& rng);
Rng rng_from_text(const std::string& text);

template <typename T>
std::vector<ComplexTensor> widen(const Parameters<T>& p);
/// Inverse of widen; a nonzero imaginary part in a real model is an error.
template <typename T>
Parameters<T> narrow(const std::vector<ComplexTensor>& p);

}  // namespace ccnn
