#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccnn/checkpoint.hpp"
#include "ccnn/config.hpp"
#include "ccnn/data.hpp"
#include "ccnn/network.hpp"

namespace ccnn {

/// Inputs and labels of both splits, in the tensor type of one model.
template <typename T>
struct SplitData {
  std::vector<Tensor<T>> train_x, test_x;
  std::vector<std::size_t> train_y, test_y;

  std::vector<const Tensor<T>*> train_ptrs() const;
  std::vector<const Tensor<T>*> test_ptrs() const;
};

SplitData<Complex> complex_split(const Dataset& train, const Dataset& test);
SplitData<double> real_split(const Dataset& train, const Dataset& test);

struct Evaluation {
  double train_loss = 0.0, test_loss = 0.0;
  double train_acc = 0.0, test_acc = 0.0;
};

template <typename T>
Evaluation evaluate(const Network<T>& net, const SplitData<T>& data, unsigned threads = 1);

/// Network, optimizer state, sampling rng and metrics of one run.
template <typename T>
struct TrainingRun {
  Network<T> net;
  MomentumState<T> momentum;
  Rng rng;
  std::size_t iteration = 0;
  std::vector<MetricsRow> metrics;

  /// Fresh run: weights drawn from Rng(seed), which then drives minibatches.
  static TrainingRun start(const NetworkSpec& spec, std::uint64_t seed);
  static TrainingRun restore(const Checkpoint& c);
  Checkpoint checkpoint(const std::string& config_text, RunStatus status, std::string message = {}) const;
};

struct TrainOptions {
  TrainConfig config;
  unsigned threads = 1;
  std::size_t checkpoint_every = 0;       // 0: none during training
  std::filesystem::path checkpoint_dir;   // periodic and diagnostic checkpoints; empty: none written
  std::string config_text;                // embedded in checkpoints
  std::function<void(const MetricsRow&)> on_metrics;
};

/// Raised when the loss stops being finite; names the diagnostic checkpoint.
struct TrainingDiverged : std::runtime_error {
  std::filesystem::path checkpoint;
  TrainingDiverged(const std::string& what, std::filesystem::path ckpt)
      : std::runtime_error(what), checkpoint(std::move(ckpt)) {}
};

/// Iterations per epoch: one pass worth of samples, at least 1.
std::size_t iterations_per_epoch(std::size_t dataset_size, std::size_t batch_size);

/**
 * Continues `run` up to config.iterations. Metrics are recorded at every
 * epoch boundary and at the final iteration; minibatches come from run.rng.
 * The result depends only on the starting state, never on thread count or
 * on where the run was interrupted and resumed.
 */
template <typename T>
void train(TrainingRun<T>& run, const SplitData<T>& data, const TrainOptions& opt);

std::string metrics_csv_header();
/// CSV with header; wall_ms is left empty for rows with a negative wall time.
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
void write_text_file(const std::filesystem::path& path, const std::string& text);

struct TrialResult {
  std::uint64_t seed = 0;
  Evaluation final;
  bool converged = false;
  std::vector<MetricsRow> metrics;
};

struct TrialSummary {
  std::vector<TrialResult> trials;
  std::size_t converged = 0;
  double threshold = 0.0;

  std::string to_csv() const;
};

struct ExperimentData {
  Dataset train, test;
};

/// Both splits generated from the config's data parameters.
ExperimentData make_experiment_data(const ExperimentConfig& cfg);
/// train.ccds and test.ccds from `dir`; their patch size must match the config.
ExperimentData load_experiment_data(const std::filesystem::path& dir, const ExperimentConfig& cfg);
void save_experiment_data(const ExperimentData& d, const std::filesystem::path& dir);

/// The complex cell network, or its real counterpart.
NetworkSpec model_spec(const ExperimentConfig& cfg, Domain domain);

struct TrainOutcome {
  Evaluation final;
  std::vector<MetricsRow> metrics;
  Checkpoint checkpoint;
};

/**
 * One training run of the chosen model with the given seed (or continued
 * from `resume`). With a non-empty out_dir, writes metrics.csv,
 * checkpoint.ccnn and config.txt there, plus periodic checkpoints.
 */
TrainOutcome run_training(const ExperimentConfig& cfg, Domain domain, const ExperimentData& data, std::uint64_t seed,
                          const std::filesystem::path& out_dir, const Checkpoint* resume = nullptr,
                          const std::function<void(const MetricsRow&)>& progress = {});

/// cfg.trials runs with seeds cfg.seed, cfg.seed + 1, ...; out_dir/trial_<t>/ and out_dir/summary.csv.
TrialSummary run_trials(const ExperimentConfig& cfg, Domain domain, const ExperimentData& data,
                        const std::filesystem::path& out_dir,
                        const std::function<void(std::size_t, const TrialResult&)>& on_trial = {});

}  // namespace ccnn
