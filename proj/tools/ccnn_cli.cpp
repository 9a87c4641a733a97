// ccnn: dataset generation, training, evaluation, repeated trials, gradient
// checks and kernel export for the complex cell-detection experiment.
//
// Exit codes: 0 success, 1 check failure (or diverged training), 2 usage or
// configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "ccnn/backprop.hpp"
#include "ccnn/config.hpp"
#include "ccnn/experiment.hpp"
#include "ccnn/gradcheck.hpp"
#include "ccnn/kernels.hpp"

namespace fs = std::filesystem;
using namespace ccnn;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config;
  std::string model = "complex";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  bool paper_scale = false;
  std::string out;
  std::string data;
  std::string checkpoint;
  std::string resume;
  std::optional<unsigned> threads;
  std::vector<std::string> cases;
  bool inject_sign_flip = false;
  bool quiet = false;
};

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.config);
  if (o.paper_scale) cfg.apply_paper_scale();
  if (o.iterations) cfg.iterations = *o.iterations;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.out.empty()) cfg.out_dir = o.out;
  cfg.validate();
  return cfg;
}

Domain parse_model(const std::string& m) { return m == "real" ? Domain::real : Domain::complex; }

ExperimentData experiment_data(const Options& o, const ExperimentConfig& cfg) {
  if (!o.data.empty()) return load_experiment_data(o.data, cfg);
  return make_experiment_data(cfg);
}

void print_row(const MetricsRow& r) {
  std::printf("iter %6zu  epoch %4zu  train loss %.4f acc %.4f  test loss %.4f acc %.4f\n", r.iteration, r.epoch,
              r.train_loss, r.train_acc, r.test_loss, r.test_acc);
  std::fflush(stdout);
}

int cmd_gen_data(const Options& o) {
  ExperimentConfig cfg = load_config(o);
  if (o.seed) cfg.data.seed = *o.seed;  // --seed picks the data seed here
  cfg.validate();
  const fs::path dir = cfg.out_dir;
  const auto d = make_experiment_data(cfg);
  save_experiment_data(d, dir);
  std::printf("wrote %zu train patches (%zu cell) and %zu test patches (%zu cell) to %s\n", d.train.patches.size(),
              d.train.cell_count(), d.test.patches.size(), d.test.cell_count(), dir.string().c_str());
  return kOk;
}

int cmd_train(const Options& o) {
  std::optional<Checkpoint> resume;
  ExperimentConfig cfg;
  if (!o.resume.empty()) {
    resume = Checkpoint::load(o.resume);
    cfg = ExperimentConfig::from_text(resume->config_text);
    if (o.iterations) cfg.iterations = *o.iterations;
    if (o.threads) cfg.threads = *o.threads;
    if (!o.out.empty()) cfg.out_dir = o.out;
    cfg.validate();
  } else {
    cfg = load_config(o);
  }
  const Domain domain = resume ? resume->spec.domain : parse_model(o.model);
  const auto data = experiment_data(o, cfg);
  const fs::path dir = cfg.out_dir;
  try {
    const auto out = run_training(cfg, domain, data, cfg.seed, dir, resume ? &*resume : nullptr,
                                  o.quiet ? std::function<void(const MetricsRow&)>{} : print_row);
    std::printf("final %s model: train loss %.4f acc %.4f, test loss %.4f acc %.4f, gap %.4f\n", to_string(domain),
                out.final.train_loss, out.final.train_acc, out.final.test_loss, out.final.test_acc,
                out.final.test_loss - out.final.train_loss);
    std::printf("wrote %s and %s\n", (dir / "metrics.csv").string().c_str(), (dir / "checkpoint.ccnn").string().c_str());
  } catch (const TrainingDiverged& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    if (!e.checkpoint.empty()) std::fprintf(stderr, "diagnostic checkpoint: %s\n", e.checkpoint.string().c_str());
    return kCheckFailed;
  }
  return kOk;
}

int cmd_eval(const Options& o) {
  if (o.checkpoint.empty()) throw CLI::ValidationError("--checkpoint", "eval needs --checkpoint");
  const Checkpoint c = Checkpoint::load(o.checkpoint);
  ExperimentConfig cfg = ExperimentConfig::from_text(c.config_text);
  if (o.threads) cfg.threads = *o.threads;
  const auto data = experiment_data(o, cfg);
  Evaluation e;
  if (c.spec.domain == Domain::complex) {
    const auto run = TrainingRun<Complex>::restore(c);
    e = evaluate(run.net, complex_split(data.train, data.test), cfg.threads);
  } else {
    const auto run = TrainingRun<double>::restore(c);
    e = evaluate(run.net, real_split(data.train, data.test), cfg.threads);
  }
  std::printf("%s model at iteration %llu: train loss %.6f acc %.4f, test loss %.6f acc %.4f, gap %.6f\n",
              to_string(c.spec.domain), static_cast<unsigned long long>(c.iteration), e.train_loss, e.train_acc,
              e.test_loss, e.test_acc, e.test_loss - e.train_loss);
  return kOk;
}

int cmd_trials(const Options& o) {
  const ExperimentConfig cfg = load_config(o);
  const Domain domain = parse_model(o.model);
  const auto data = experiment_data(o, cfg);
  const auto summary = run_trials(cfg, domain, data, cfg.out_dir, [](std::size_t t, const TrialResult& r) {
    std::printf("trial %zu seed %llu: train loss %.4f acc %.4f, test loss %.4f acc %.4f%s\n", t,
                static_cast<unsigned long long>(r.seed), r.final.train_loss, r.final.train_acc, r.final.test_loss,
                r.final.test_acc, r.converged ? "  converged" : "");
    std::fflush(stdout);
  });
  std::printf("%zu of %zu %s trials reached train loss <= %g\n", summary.converged, summary.trials.size(),
              to_string(domain), summary.threshold);
  std::printf("wrote %s\n", (fs::path(cfg.out_dir) / "summary.csv").string().c_str());
  return kOk;
}

int cmd_gradcheck(const Options& o) {
  fault::set_affine_sign_flip(o.inject_sign_flip);
  const auto names = o.cases.empty() ? gradcheck_case_names() : o.cases;
  const std::uint64_t seed = o.seed.value_or(1);
  bool ok = true;
  for (const auto& name : names) {
    const auto r = run_gradcheck_case(name, seed);
    std::printf("%-16s %s\n", name.c_str(), r.report.summary().c_str());
    ok = ok && r.report.passed;
  }
  fault::set_affine_sign_flip(false);
  std::printf("%s\n", ok ? "gradcheck passed" : "gradcheck FAILED");
  return ok ? kOk : kCheckFailed;
}

int cmd_export_kernels(const Options& o) {
  if (o.checkpoint.empty()) throw CLI::ValidationError("--checkpoint", "export-kernels needs --checkpoint");
  const Checkpoint c = Checkpoint::load(o.checkpoint);
  const fs::path dir = o.out.empty() ? fs::path("kernels") : fs::path(o.out);
  const auto files = export_kernels(c, dir);
  std::printf("wrote %zu files for %zu kernels to %s\n", files.size(), files.size() / 5, dir.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex-valued CNN experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "key=value configuration file")->check(CLI::ExistingFile);
    s->add_flag("--paper-scale", o.paper_scale, "100 images per split, 20000 iterations, published learning rates");
    s->add_option("--out", o.out, "output directory");
    s->add_option("--threads", o.threads, "worker threads for batch evaluation")->check(CLI::PositiveNumber);
  };
  auto add_training = [&](CLI::App* s) {
    add_common(s);
    s->add_option("--model", o.model, "complex or real")->check(CLI::IsMember({"complex", "real"}));
    s->add_option("--seed", o.seed, "training seed (first trial seed for trials)");
    s->add_option("--iterations", o.iterations, "training iterations");
    s->add_option("--data", o.data, "directory holding train.ccds and test.ccds (default: generate)");
    s->add_flag("--quiet", o.quiet, "no per-epoch output");
  };

  auto* gen = app.add_subcommand("gen-data", "generate train and test datasets");
  add_common(gen);
  gen->add_option("--seed", o.seed, "data seed");

  auto* train = app.add_subcommand("train", "train one model, writing metrics.csv and checkpoint.ccnn");
  add_training(train);
  train->add_option("--resume", o.resume, "continue from a checkpoint")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "loss and accuracy of a checkpoint on both splits");
  add_common(eval);
  eval->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", o.data, "directory holding train.ccds and test.ccds (default: regenerate)");

  auto* trials = app.add_subcommand("trials", "repeated training with consecutive seeds");
  add_training(trials);

  auto* grad = app.add_subcommand("gradcheck", "compare backprop with finite differences");
  grad->add_option("--seed", o.seed, "random seed");
  grad->add_option("--case", o.cases, "case name (repeatable; default all)");
  grad->add_flag("--inject-sign-flip", o.inject_sign_flip, "negate the affine weight gradient (fault injection)");

  auto* exp = app.add_subcommand("export-kernels", "write first-layer kernels as CSV, PGM, PPM and text");
  exp->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*train) return cmd_train(o);
    if (*eval) return cmd_eval(o);
    if (*trials) return cmd_trials(o);
    if (*grad) return cmd_gradcheck(o);
    if (*exp) return cmd_export_kernels(o);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCheckFailed;
  }
  return kUsage;
}
