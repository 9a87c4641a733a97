#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "ccnn/data.hpp"
#include "ccnn/network_spec.hpp"
#include "ccnn/optim.hpp"

namespace ccnn {

/// Bad configuration text or values; the CLI maps it to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/**
 * Everything one experiment needs: data generator, network shape, training
 * hyperparameters for both models, and the trial protocol.
 *
 * Text form is one key=value per line; '#' starts a comment line. Unknown
 * keys, duplicate keys and unparsable values are errors.
 */
struct ExperimentConfig {
  CellImageParams data;
  std::size_t images = 20;  // per split
  CellNetOptions net;

  std::size_t iterations = 5000;
  std::size_t batch_size = 100;
  double momentum = 0.9;
  LrSchedule complex_lr{{{0, 0.002}, {400, 0.0002}}};
  LrSchedule real_lr{{{0, 0.01}}};

  std::uint64_t seed = 1;  // trial t uses seed + t
  std::size_t trials = 5;
  double converge_threshold = 0.15;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  unsigned threads = 1;
  std::string out_dir = "out";

  /// Full-size protocol: 100 images per split, 20,000 iterations, the
  /// published learning rates.
  void apply_paper_scale();

  void validate() const;

  TrainConfig train_config(Domain domain) const;

  std::string to_text() const;
  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// "0:0.01,2000:0.001" <-> schedule.
LrSchedule parse_schedule(const std::string& text);
std::string schedule_to_text(const LrSchedule& s);

}  // namespace ccnn
