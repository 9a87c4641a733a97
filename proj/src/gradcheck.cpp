#include "ccnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ccnn/equivalence.hpp"
#include "ccnn/loss.hpp"
#include "ccnn/pool_windows.hpp"

namespace ccnn {

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

double resolvable_gradient(double loss, double step, double tol) {
  return std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(loss)) / (step * tol);
}

std::string GradReport::summary() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << " max_rel_error=" << max_error << " tol=" << tolerance
     << " coordinates=" << coordinates << " floor=" << floor;
  if (!passed) {
    for (const auto& c : worst) {
      os << "\n  tensor " << c.tensor << " index " << c.index << (c.imaginary ? " (im)" : " (re)")
         << " analytic=" << c.analytic << " numeric=" << c.numeric << " rel_error=" << c.error;
    }
  }
  return os.str();
}

template <typename T>
Parameters<T> finite_diff_grads(const std::function<double(const Parameters<T>&)>& loss, const Parameters<T>& at,
                                double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite difference step must be positive");
  Parameters<T> work = at;
  Parameters<T> grads;
  grads.reserve(at.size());
  for (const auto& p : at) grads.emplace_back(p.shape());
  constexpr bool is_complex = std::is_same_v<T, Complex>;
  for (std::size_t t = 0; t < at.size(); ++t) {
    for (std::size_t i = 0; i < at[t].size(); ++i) {
      const T orig = at[t][i];
      const int parts = is_complex ? 2 : 1;
      double d[2] = {0.0, 0.0};
      for (int part = 0; part < parts; ++part) {
        T h;
        if constexpr (is_complex) h = part == 0 ? Complex{step, 0.0} : Complex{0.0, step};
        else h = step;
        work[t][i] = orig + h;
        const double up = loss(work);
        work[t][i] = orig - h;
        const double down = loss(work);
        work[t][i] = orig;
        d[part] = (up - down) / (2.0 * step);
      }
      if constexpr (is_complex) grads[t][i] = Complex{d[0], d[1]};
      else grads[t][i] = d[0];
    }
  }
  return grads;
}

template <typename T>
Parameters<T> finite_diff_grads(const Network<T>& net, std::span<const Tensor<T>* const> inputs,
                                std::span<const std::size_t> labels, double step) {
  Network<T> probe = net;
  std::function<double(const Parameters<T>&)> loss = [&](const Parameters<T>& w) {
    probe.params() = w;
    return logistic_loss(score_batch(probe, inputs, labels)).loss;
  };
  return finite_diff_grads(loss, net.params(), step);
}

template <typename T>
GradReport compare(const Parameters<T>& analytic, const Parameters<T>& numeric, double tol, double floor) {
  if (analytic.size() != numeric.size()) throw std::invalid_argument("compare: parameter counts differ");
  GradReport r;
  r.tolerance = tol;
  r.floor = floor;
  std::vector<GradCoordinate> all;
  constexpr bool is_complex = std::is_same_v<T, Complex>;
  for (std::size_t t = 0; t < analytic.size(); ++t) {
    if (analytic[t].shape() != numeric[t].shape()) {
      throw std::invalid_argument("compare: tensor " + std::to_string(t) + " shapes differ " +
                                  shape_to_string(analytic[t].shape()) + " vs " + shape_to_string(numeric[t].shape()));
    }
    for (std::size_t i = 0; i < analytic[t].size(); ++i) {
      for (int part = 0; part < (is_complex ? 2 : 1); ++part) {
        GradCoordinate c;
        c.tensor = t;
        c.index = i;
        c.imaginary = part == 1;
        c.analytic = part ? imag_part(analytic[t][i]) : real_part(analytic[t][i]);
        c.numeric = part ? imag_part(numeric[t][i]) : real_part(numeric[t][i]);
        c.error = relative_error(c.analytic, c.numeric, floor);
        r.errors.push_back(c.error);
        all.push_back(c);
      }
    }
  }
  r.coordinates = all.size();
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.error > b.error; });
  if (!all.empty()) r.max_error = all.front().error;
  r.passed = r.max_error < tol;
  for (std::size_t k = 0; k < std::min<std::size_t>(5, all.size()); ++k) r.worst.push_back(all[k]);
  return r;
}

namespace {

double distance_to_ray(const Complex& z, double theta) {
  const double cx = std::cos(theta), cy = std::sin(theta);
  const double along = z.real() * cx + z.imag() * cy;
  if (along < 0.0) return std::abs(z);
  return std::abs(z.real() * cy - z.imag() * cx);
}

template <typename T>
double pool_gap(const Tensor<T>& input, const PoolSpec& p) {
  const PoolGeometry g = PoolGeometry::of(input.shape(), p);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t o = 0; o < g.output_size(); ++o) {
    double first = -std::numeric_limits<double>::infinity(), second = first;
    g.for_each_in_window(o, [&](std::size_t src) {
      double k;
      if constexpr (std::is_same_v<T, Complex>) k = std::abs(input[src]);
      else k = input[src];
      if (k > first) {
        second = first;
        first = k;
      } else if (k > second) {
        second = k;
      }
    });
    // Exact zero ties come from blocked ReLUs and stay tied under perturbation.
    if (first > 0.0 && std::isfinite(second)) gap = std::min(gap, first - second);
  }
  return gap;
}

}  // namespace

template <typename T>
double boundary_distance(const Network<T>& net, std::span<const Tensor<T>* const> inputs) {
  double dist = std::numeric_limits<double>::infinity();
  for (const auto* in : inputs) {
    ForwardCache<T> cache;
    net.forward(*in, &cache);
    for (std::size_t i = 0; i < net.spec().layers.size(); ++i) {
      const LayerSpec& l = net.spec().layers[i];
      const Tensor<T>& x = cache.layers[i].input;
      if (l.kind == LayerKind::relu) {
        for (const auto& v : x.values()) {
          if constexpr (std::is_same_v<T, Complex>) {
            dist = std::min({dist, distance_to_ray(v, l.sector.theta1), distance_to_ray(v, l.sector.theta2)});
          } else {
            dist = std::min(dist, std::abs(v));
          }
        }
      } else if (l.kind == LayerKind::pool &&
                 (l.pool.kind == PoolKind::max_by_magnitude || l.pool.kind == PoolKind::global_max_by_magnitude)) {
        dist = std::min(dist, pool_gap(x, l.pool));
      } else if (l.kind == LayerKind::projection && l.projection == ProjectionKind::magnitude) {
        for (const auto& v : x.values()) dist = std::min(dist, magnitude(v));
      }
    }
  }
  return dist;
}

namespace {

struct CaseDef {
  std::string name;
  NetworkSpec spec;
};

std::vector<CaseDef> case_defs() {
  std::vector<CaseDef> defs;
  auto complex_case = [&](std::string name, Shape input, std::vector<LayerSpec> layers) {
    NetworkSpec s;
    s.domain = Domain::complex;
    s.input = std::move(input);
    s.layers = std::move(layers);
    defs.push_back({std::move(name), std::move(s)});
  };
  const auto proj = LayerSpec::project(ProjectionKind::squared_magnitude);
  complex_case("affine", {2, 2, 2}, {LayerSpec::affine(3), proj});
  complex_case("conv", {2, 6, 6}, {LayerSpec::conv(2, 3), LayerSpec::global_pool(), proj});
  complex_case("conv_stride2", {1, 7, 7}, {LayerSpec::conv(2, 3, 2), LayerSpec::affine(2), proj});
  complex_case("sector_relu", {1, 5, 5}, {LayerSpec::conv(3, 3), LayerSpec::relu(), LayerSpec::affine(2), proj});
  complex_case("sector_relu_wide", {1, 5, 5},
               {LayerSpec::conv(3, 3), LayerSpec::relu(SectorParams(-1.0, 2.0)), LayerSpec::affine(2), proj});
  complex_case("max_pool", {1, 6, 6}, {LayerSpec::conv(2, 3), LayerSpec::max_pool(2, 1), LayerSpec::affine(2), proj});
  complex_case("global_pool", {1, 6, 6}, {LayerSpec::conv(3, 3), LayerSpec::global_pool(), proj});
  complex_case("softmax_pool", {1, 6, 6},
               {LayerSpec::conv(2, 3), LayerSpec::softmax_pool(2, 1, 0.7, false), LayerSpec::affine(2), proj});
  complex_case("dual_softmax_pool", {1, 6, 6},
               {LayerSpec::conv(2, 3), LayerSpec::softmax_pool(2, 1, 0.7, true), LayerSpec::affine(2), proj});
  complex_case("projection_magnitude", {1, 4, 4},
               {LayerSpec::conv(2, 3), LayerSpec::affine(2), LayerSpec::project(ProjectionKind::magnitude)});
  complex_case("projection_squared", {1, 4, 4}, {LayerSpec::conv(2, 3), LayerSpec::affine(2), proj});
  defs.push_back({"cell_network", cell_detection_spec()});
  defs.push_back({"real_cell_network", build_real_counterpart(cell_detection_spec())});
  return defs;
}

template <typename T>
Tensor<T> random_input(const Shape& shape, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<T> t(shape);
  for (auto& v : t.values()) {
    if constexpr (std::is_same_v<T, Complex>) {
      const double re = u(rng);
      const double im = u(rng);
      v = Complex{re, im};
    } else {
      v = u(rng);
    }
  }
  return t;
}

template <typename T>
GradcheckOutcome run_case(const CaseDef& def, std::uint64_t seed, double tol, double margin) {
  constexpr std::size_t batch = 4;
  constexpr std::size_t max_resamples = 1000;
  Rng rng(seed);
  Network<T> net(def.spec);
  std::vector<Tensor<T>> inputs;
  std::vector<const Tensor<T>*> ptrs;
  std::vector<std::size_t> labels;
  GradcheckOutcome out;
  out.name = def.name;
  for (;; ++out.resamples) {
    if (out.resamples > max_resamples) {
      throw std::runtime_error("gradcheck case " + def.name + ": could not sample a configuration away from "
                               "non-differentiable points");
    }
    net.initialize(rng);
    // Random biases so bias gradients and ReLU offsets are exercised too.
    for (std::size_t p = 1; p < net.params().size(); p += 2) {
      auto& b = net.params()[p];
      b = random_input<T>(b.shape(), rng);
      b *= T(0.1);
    }
    inputs.clear();
    labels.clear();
    std::uniform_int_distribution<std::size_t> label(0, net.classes() - 1);
    for (std::size_t i = 0; i < batch; ++i) {
      inputs.push_back(random_input<T>(def.spec.input, rng));
      labels.push_back(label(rng));
    }
    ptrs.clear();
    for (const auto& in : inputs) ptrs.push_back(&in);
    if (boundary_distance<T>(net, ptrs) > margin) break;
  }
  const BatchGradient<T> analytic = loss_and_gradients<T>(net, ptrs, labels);
  constexpr double step = 1e-5;
  const Parameters<T> numeric = finite_diff_grads<T>(net, ptrs, labels, step);
  out.report = compare(analytic.grads, numeric, tol, resolvable_gradient(analytic.loss, step, tol));
  return out;
}

}  // namespace

std::vector<std::string> gradcheck_case_names() {
  std::vector<std::string> names;
  for (const auto& d : case_defs()) names.push_back(d.name);
  return names;
}

GradcheckOutcome run_gradcheck_case(const std::string& name, std::uint64_t seed, double tol, double margin) {
  for (const auto& d : case_defs()) {
    if (d.name != name) continue;
    return d.spec.domain == Domain::complex ? run_case<Complex>(d, seed, tol, margin)
                                            : run_case<double>(d, seed, tol, margin);
  }
  throw std::invalid_argument("unknown gradcheck case '" + name + "'");
}

template Parameters<double> finite_diff_grads(const std::function<double(const Parameters<double>&)>&,
                                              const Parameters<double>&, double);
template Parameters<Complex> finite_diff_grads(const std::function<double(const Parameters<Complex>&)>&,
                                               const Parameters<Complex>&, double);
template Parameters<double> finite_diff_grads(const Network<double>&, std::span<const Tensor<double>* const>,
                                              std::span<const std::size_t>, double);
template Parameters<Complex> finite_diff_grads(const Network<Complex>&, std::span<const Tensor<Complex>* const>,
                                               std::span<const std::size_t>, double);
template GradReport compare(const Parameters<double>&, const Parameters<double>&, double, double);
template GradReport compare(const Parameters<Complex>&, const Parameters<Complex>&, double, double);
template double boundary_distance(const Network<double>&, std::span<const Tensor<double>* const>);
template double boundary_distance(const Network<Complex>&, std::span<const Tensor<Complex>* const>);

}  // namespace ccnn
