#include "ccnn/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ccnn/equivalence.hpp"
#include "ccnn/text_format.hpp"

namespace ccnn {

template <typename T>
std::vector<const Tensor<T>*> SplitData<T>::train_ptrs() const {
  std::vector<const Tensor<T>*> out;
  for (const auto& x : train_x) out.push_back(&x);
  return out;
}

template <typename T>
std::vector<const Tensor<T>*> SplitData<T>::test_ptrs() const {
  std::vector<const Tensor<T>*> out;
  for (const auto& x : test_x) out.push_back(&x);
  return out;
}

SplitData<Complex> complex_split(const Dataset& train, const Dataset& test) {
  SplitData<Complex> d;
  for (const auto& p : train.patches) {
    d.train_x.push_back(p.gradients);
    d.train_y.push_back(static_cast<std::size_t>(p.label));
  }
  for (const auto& p : test.patches) {
    d.test_x.push_back(p.gradients);
    d.test_y.push_back(static_cast<std::size_t>(p.label));
  }
  return d;
}

SplitData<double> real_split(const Dataset& train, const Dataset& test) {
  SplitData<double> d;
  auto tr = to_real_stacked(train);
  auto te = to_real_stacked(test);
  d.train_x = std::move(tr.inputs);
  d.test_x = std::move(te.inputs);
  for (auto l : tr.labels) d.train_y.push_back(static_cast<std::size_t>(l));
  for (auto l : te.labels) d.test_y.push_back(static_cast<std::size_t>(l));
  return d;
}

template <typename T>
Evaluation evaluate(const Network<T>& net, const SplitData<T>& data, unsigned threads) {
  Evaluation e;
  const auto tr = data.train_ptrs();
  const auto te = data.test_ptrs();
  const auto a = score_batch(net, std::span<const Tensor<T>* const>(tr), data.train_y, threads);
  const auto b = score_batch(net, std::span<const Tensor<T>* const>(te), data.test_y, threads);
  e.train_loss = logistic_loss(a).loss;
  e.train_acc = accuracy(a);
  e.test_loss = logistic_loss(b).loss;
  e.test_acc = accuracy(b);
  return e;
}

template <typename T>
TrainingRun<T> TrainingRun<T>::start(const NetworkSpec& spec, std::uint64_t seed) {
  TrainingRun run{Network<T>(spec), {}, Rng(seed), 0, {}};
  run.net.initialize(run.rng);
  run.momentum = MomentumState<T>::zeros_like(run.net.params());
  return run;
}

template <typename T>
TrainingRun<T> TrainingRun<T>::restore(const Checkpoint& c) {
  const Domain want = std::is_same_v<T, Complex> ? Domain::complex : Domain::real;
  if (c.spec.domain != want) {
    throw std::invalid_argument(std::string("checkpoint holds a ") + to_string(c.spec.domain) + " model, not " +
                                to_string(want));
  }
  TrainingRun run{Network<T>(c.spec), {}, rng_from_text(c.rng_state), c.iteration, c.metrics};
  auto params = narrow<T>(c.params);
  if (params.size() != run.net.params().size()) throw std::invalid_argument("checkpoint tensor count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape() != run.net.params()[k].shape()) {
      throw std::invalid_argument("checkpoint tensor " + std::to_string(k) + " has shape " +
                                  shape_to_string(params[k].shape()) + ", spec needs " +
                                  shape_to_string(run.net.params()[k].shape()));
    }
  }
  run.net.params() = std::move(params);
  run.momentum.velocity = narrow<T>(c.velocity);
  return run;
}

template <typename T>
Checkpoint TrainingRun<T>::checkpoint(const std::string& config_text, RunStatus status, std::string message) const {
  Checkpoint c;
  c.spec = net.spec();
  c.config_text = config_text;
  c.iteration = iteration;
  c.rng_state = rng_to_text(rng);
  c.status = status;
  c.message = std::move(message);
  c.params = widen(net.params());
  c.velocity = widen(momentum.velocity);
  c.metrics = metrics;
  return c;
}

std::size_t iterations_per_epoch(std::size_t dataset_size, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  return std::max<std::size_t>(1, dataset_size / batch_size);
}

template <typename T>
void train(TrainingRun<T>& run, const SplitData<T>& data, const TrainOptions& opt) {
  const TrainConfig& cfg = opt.config;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t per_epoch = iterations_per_epoch(data.train_x.size(), cfg.batch_size);
  const auto train_ptrs = data.train_ptrs();

  auto diverged = [&](const std::string& why) {
    const std::string msg = why + " at iteration " + std::to_string(run.iteration);
    std::filesystem::path path;
    if (!opt.checkpoint_dir.empty()) {
      path = opt.checkpoint_dir / "diverged.ccnn";
      run.checkpoint(opt.config_text, RunStatus::aborted, msg).save(path);
    }
    throw TrainingDiverged(msg, path);
  };

  auto record = [&] {
    Evaluation e;
    try {
      e = evaluate(run.net, data, opt.threads);
    } catch (const NonFiniteScore&) {
      diverged("non-finite class score during evaluation");
    }
    MetricsRow row{run.iteration, run.iteration / per_epoch, e.train_loss, e.test_loss, e.train_acc, e.test_acc,
                   std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()};
    run.metrics.push_back(row);
    if (opt.on_metrics) opt.on_metrics(row);
  };

  if (run.iteration == 0 && run.metrics.empty()) record();
  // A run continued past its old end drops that end's off-epoch row, so the
  // metrics match an uninterrupted run.
  if (run.iteration < cfg.iterations && !run.metrics.empty() && run.metrics.back().iteration == run.iteration &&
      run.iteration % per_epoch != 0) {
    run.metrics.pop_back();
  }

  std::vector<const Tensor<T>*> bx;
  std::vector<std::size_t> by;
  while (run.iteration < cfg.iterations) {
    const auto idx = minibatch_indices(data.train_x.size(), cfg.batch_size, run.rng);
    bx.clear();
    by.clear();
    for (auto i : idx) {
      bx.push_back(train_ptrs[i]);
      by.push_back(data.train_y[i]);
    }
    try {
      nesterov_step<T>(
          run.net.params(), run.momentum,
          [&](const Parameters<T>& lookahead) {
            Parameters<T> saved = std::exchange(run.net.params(), lookahead);
            BatchGradient<T> g;
            try {
              g = loss_and_gradients(run.net, std::span<const Tensor<T>* const>(bx), by, opt.threads);
            } catch (...) {
              run.net.params() = std::move(saved);
              throw;
            }
            run.net.params() = std::move(saved);
            if (!std::isfinite(g.loss)) throw NonFiniteScore();
            return g.grads;
          },
          cfg.schedule.at(run.iteration), cfg.momentum);
    } catch (const NonFiniteScore&) {
      diverged("non-finite training loss");
    }
    ++run.iteration;
    if (run.iteration % per_epoch == 0 || run.iteration == cfg.iterations) record();
    if (opt.checkpoint_every && !opt.checkpoint_dir.empty() && run.iteration % opt.checkpoint_every == 0 &&
        run.iteration < cfg.iterations) {
      run.checkpoint(opt.config_text, RunStatus::running)
          .save(opt.checkpoint_dir / ("checkpoint_" + std::to_string(run.iteration) + ".ccnn"));
    }
  }
}

std::string metrics_csv_header() { return "iteration,epoch,train_loss,test_loss,train_acc,test_acc,wall_ms"; }

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
  using text::format_double;
  std::string out = metrics_csv_header() + '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + ',' + std::to_string(r.epoch) + ',' + format_double(r.train_loss) + ',' +
           format_double(r.test_loss) + ',' + format_double(r.train_acc) + ',' + format_double(r.test_acc) + ',';
    if (r.wall_ms >= 0.0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", r.wall_ms);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string TrialSummary::to_csv() const {
  using text::format_double;
  std::string out = "trial,seed,train_loss,test_loss,train_acc,test_acc,gap,converged\n";
  for (std::size_t t = 0; t < trials.size(); ++t) {
    const auto& r = trials[t];
    out += std::to_string(t) + ',' + std::to_string(r.seed) + ',' + format_double(r.final.train_loss) + ',' +
           format_double(r.final.test_loss) + ',' + format_double(r.final.train_acc) + ',' +
           format_double(r.final.test_acc) + ',' + format_double(r.final.test_loss - r.final.train_loss) + ',' +
           (r.converged ? "1" : "0") + '\n';
  }
  return out;
}

ExperimentData make_experiment_data(const ExperimentConfig& cfg) {
  cfg.data.validate();
  return {make_dataset(cfg.images, cfg.data, Split::train), make_dataset(cfg.images, cfg.data, Split::test)};
}

ExperimentData load_experiment_data(const std::filesystem::path& dir, const ExperimentConfig& cfg) {
  ExperimentData d{read_dataset(dir / "train.ccds"), read_dataset(dir / "test.ccds")};
  for (const Dataset* s : {&d.train, &d.test}) {
    if (s->patches.empty()) throw std::runtime_error("dataset in " + dir.string() + " is empty");
    if (s->patches.front().gradients.dim(1) != cfg.data.patch_size) {
      throw std::runtime_error("dataset patch size " + std::to_string(s->patches.front().gradients.dim(1)) +
                               " does not match config patch_size " + std::to_string(cfg.data.patch_size));
    }
  }
  return d;
}

void save_experiment_data(const ExperimentData& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_dataset(d.train, dir / "train.ccds");
  write_dataset(d.test, dir / "test.ccds");
}

NetworkSpec model_spec(const ExperimentConfig& cfg, Domain domain) {
  CellNetOptions o = cfg.net;
  o.patch_size = cfg.data.patch_size;
  const NetworkSpec complex = cell_detection_spec(o);
  return domain == Domain::complex ? complex : build_real_counterpart(complex);
}

namespace {

template <typename T>
TrainOutcome run_typed(const ExperimentConfig& cfg, const SplitData<T>& data, const NetworkSpec& spec,
                       std::uint64_t seed, const std::filesystem::path& out_dir, const Checkpoint* resume,
                       const std::function<void(const MetricsRow&)>& progress) {
  ExperimentConfig used = cfg;
  used.seed = seed;
  TrainOptions opt;
  opt.config = used.train_config(spec.domain);
  opt.threads = cfg.threads;
  opt.checkpoint_every = cfg.checkpoint_every;
  opt.checkpoint_dir = out_dir;
  opt.config_text = used.to_text();
  opt.on_metrics = progress;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  TrainingRun<T> run = resume ? TrainingRun<T>::restore(*resume) : TrainingRun<T>::start(spec, seed);
  // Rows restored from a checkpoint were timed by another process.
  for (auto& m : run.metrics) m.wall_ms = -1.0;
  train(run, data, opt);

  TrainOutcome out;
  out.metrics = run.metrics;
  const MetricsRow& last = run.metrics.back();
  out.final = {last.train_loss, last.test_loss, last.train_acc, last.test_acc};
  out.checkpoint = run.checkpoint(opt.config_text, RunStatus::complete);
  if (!out_dir.empty()) {
    write_text_file(out_dir / "metrics.csv", metrics_to_csv(out.metrics));
    write_text_file(out_dir / "config.txt", opt.config_text);
    out.checkpoint.save(out_dir / "checkpoint.ccnn");
  }
  return out;
}

}  // namespace

TrainOutcome run_training(const ExperimentConfig& cfg, Domain domain, const ExperimentData& data, std::uint64_t seed,
                          const std::filesystem::path& out_dir, const Checkpoint* resume,
                          const std::function<void(const MetricsRow&)>& progress) {
  const NetworkSpec spec = resume ? resume->spec : model_spec(cfg, domain);
  if (spec.domain != domain) throw std::invalid_argument("checkpoint model does not match --model");
  if (domain == Domain::complex) {
    return run_typed(cfg, complex_split(data.train, data.test), spec, seed, out_dir, resume, progress);
  }
  return run_typed(cfg, real_split(data.train, data.test), spec, seed, out_dir, resume, progress);
}

TrialSummary run_trials(const ExperimentConfig& cfg, Domain domain, const ExperimentData& data,
                        const std::filesystem::path& out_dir,
                        const std::function<void(std::size_t, const TrialResult&)>& on_trial) {
  TrialSummary summary;
  summary.threshold = cfg.converge_threshold;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    TrialResult r;
    r.seed = cfg.seed + t;
    const auto dir = out_dir.empty() ? out_dir : out_dir / ("trial_" + std::to_string(t));
    try {
      auto o = run_training(cfg, domain, data, r.seed, dir);
      r.final = o.final;
      r.metrics = std::move(o.metrics);
    } catch (const TrainingDiverged&) {
      // A diverged trial counts as not converged; its diagnostic checkpoint stays on disk.
      const double nan = std::numeric_limits<double>::quiet_NaN();
      r.final = {nan, nan, nan, nan};
    }
    r.converged = r.final.train_loss <= cfg.converge_threshold;
    summary.converged += r.converged;
    summary.trials.push_back(r);
    if (on_trial) on_trial(t, summary.trials.back());
  }
  if (!out_dir.empty()) write_text_file(out_dir / "summary.csv", summary.to_csv());
  return summary;
}

template struct SplitData<double>;
template struct SplitData<Complex>;
template struct TrainingRun<double>;
template struct TrainingRun<Complex>;
template Evaluation evaluate(const Network<double>&, const SplitData<double>&, unsigned);
template Evaluation evaluate(const Network<Complex>&, const SplitData<Complex>&, unsigned);
template void train(TrainingRun<double>&, const SplitData<double>&, const TrainOptions&);
template void train(TrainingRun<Complex>&, const SplitData<Complex>&, const TrainOptions&);

}  // namespace ccnn
