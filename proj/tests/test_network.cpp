#include <doctest.h>

#include "ccnn/backprop.hpp"
#include "ccnn/equivalence.hpp"
#include "ccnn/gradcheck.hpp"
#include "ccnn/loss.hpp"
#include "ccnn/network.hpp"
#include <limits>

#include "helpers.hpp"

using namespace ccnn;
using testing::random_complex;

TEST_CASE("cell network shapes") {
  const auto spec = cell_detection_spec();
  const auto s = spec.shapes();
  CHECK(s.front() == Shape{1, 15, 15});
  CHECK(s[1] == Shape{8, 11, 11});
  CHECK(s[3] == Shape{8, 10, 10});
  CHECK(s[4] == Shape{2, 6, 6});
  CHECK(s.back() == Shape{2, 1, 1});
  CHECK(spec.classes() == 2);
  CHECK(NetworkSpec::from_text(spec.to_text()) == spec);

  CellNetOptions tiny;
  tiny.patch_size = 6;
  CHECK_THROWS_AS(cell_detection_spec(tiny).shapes(), std::invalid_argument);
}

TEST_CASE("real counterpart doubles convolutions and ends in an affine map") {
  const auto real = build_real_counterpart(cell_detection_spec());
  CHECK(real.domain == Domain::real);
  const auto s = real.shapes();
  CHECK(s.front() == Shape{2, 15, 15});
  CHECK(s[1] == Shape{16, 11, 11});
  CHECK(real.layers.back().kind == LayerKind::affine);
  CHECK(real.classes() == 2);
  CHECK(NetworkSpec::from_text(real.to_text()) == real);
}

TEST_CASE("realified convolution equals the complex one") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const std::size_t c = 1 + t % 3, k = 1 + t % 4;
    ConvWeights<Complex> w{random_complex({k, c, 3, 3}, rng), random_complex({k}, rng), static_cast<std::size_t>(1 + t % 2)};
    const auto x = random_complex({c, 8, 9}, rng);
    const auto expect = complex_to_stacked(conv_forward(x, w));
    const auto got = conv_forward(complex_to_stacked(x), realify_conv(w));
    REQUIRE(got.shape() == expect.shape());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - expect[i]) < 1e-12);
  }
  const auto z = random_complex({2, 3, 3}, rng);
  CHECK(stacked_to_complex(complex_to_stacked(z)) == z);
}

TEST_CASE("real kernel pair layout") {
  const ComplexTensor k({1, 1, 1}, {Complex{2, 3}});
  const auto [re, im] = realify_kernel(k);
  CHECK(re == RealTensor({2, 1, 1}, {2.0, -3.0}));
  CHECK(im == RealTensor({2, 1, 1}, {3.0, 2.0}));
}

TEST_CASE("real relu and max pooling") {
  CHECK(relu(-1.0) == 0.0);
  CHECK(relu(2.0) == 2.0);
  const RealTensor x({1, 1, 3}, {-5.0, 2.0, 2.0});
  const auto p = max_pool(x, PoolSpec{1, 3, 1, PoolKind::max_by_magnitude, 0.0});
  CHECK(p.output[0] == 2.0);
  CHECK(p.argmax[0] == 1);
}

TEST_CASE("initialization gives zero biases and a loss near ln 2 scale") {
  Network<Complex> net(cell_detection_spec());
  Rng rng(1);
  net.initialize(rng);
  REQUIRE(net.params().size() == 4);
  for (const auto& v : net.params()[1].values()) CHECK(v == Complex{});
  CHECK(net.params()[0].shape() == Shape{8, 1, 5, 5});
  Network<Complex> again(cell_detection_spec());
  Rng rng2(1);
  again.initialize(rng2);
  CHECK(again.params() == net.params());
}

TEST_CASE("batch gradient is independent of thread count") {
  Network<Complex> net(cell_detection_spec());
  Rng rng(4);
  net.initialize(rng);
  std::mt19937_64 g(8);
  std::vector<ComplexTensor> xs;
  std::vector<std::size_t> labels;
  for (int i = 0; i < 13; ++i) {
    xs.push_back(random_complex({1, 15, 15}, g));
    labels.push_back(i % 2);
  }
  std::vector<const ComplexTensor*> ptrs;
  for (const auto& x : xs) ptrs.push_back(&x);
  const auto one = loss_and_gradients<Complex>(net, ptrs, labels, 1);
  const auto four = loss_and_gradients<Complex>(net, ptrs, labels, 4);
  CHECK(one.loss == four.loss);
  CHECK(one.grads == four.grads);
  CHECK(score_batch<Complex>(net, ptrs, labels, 3).scores == score_batch<Complex>(net, ptrs, labels, 1).scores);
  CHECK(one.loss == logistic_loss(score_batch<Complex>(net, ptrs, labels)).loss);
}

TEST_CASE("finite differences of a known function") {
  auto loss = [](const Parameters<Complex>& p) { return std::norm(p[0][0]) + 3 * p[0][1].real(); };
  const Parameters<Complex> at{ComplexTensor({2}, {Complex{1, -2}, Complex{5, 5}})};
  const auto g = finite_diff_grads<Complex>(loss, at);
  CHECK(std::abs(g[0][0] - Complex{2, -4}) < 1e-8);
  CHECK(std::abs(g[0][1] - Complex{3, 0}) < 1e-8);
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("every gradcheck case passes") {
  for (const auto& name : gradcheck_case_names()) {
    CAPTURE(name);
    const auto r = run_gradcheck_case(name, 17);
    CHECK(r.report.passed);
    CHECK(r.report.coordinates > 0);
  }
  CHECK_THROWS_AS(run_gradcheck_case("no_such_case", 1), std::invalid_argument);
}

TEST_CASE("gradcheck catches a flipped gradient sign") {
  fault::set_affine_sign_flip(true);
  const auto r = run_gradcheck_case("affine", 3);
  fault::set_affine_sign_flip(false);
  CHECK_FALSE(r.report.passed);
  CHECK(r.report.max_error > 1.0);
  CHECK(!r.report.worst.empty());
}

TEST_CASE("gradients below the finite-difference resolution are compared at that scale") {
  const double floor = resolvable_gradient(0.7, 1e-5, 1e-5);
  CHECK(floor == doctest::Approx(std::numeric_limits<double>::epsilon() / 1e-10));
  CHECK(resolvable_gradient(10.0, 1e-5, 1e-5) == doctest::Approx(10 * floor));
  // a 3e-12 discrepancy on a 1e-8 gradient is roundoff, not a backprop error
  CHECK(relative_error(1.0e-8, 1.0e-8 + 3e-12, floor) < 1e-5);
  CHECK(relative_error(1.0e-8, -1.0e-8, floor) > 1e-5 * 1e-3);
  CHECK(relative_error(0.1, -0.1, floor) == 2.0);
}

TEST_CASE("real counterpart parameter count") {
  const auto complex = cell_detection_spec();
  // complex: kernels 8x1x5x5 and 2x8x5x5 (600 entries), biases 8 + 2, two reals each
  CHECK(complex.real_parameter_count() == 2 * (600 + 10));
  // real: realified kernels hold twice the weight coordinates (16x2x5x5 and
  // 4x16x5x5), biases keep theirs (16 + 4), and the affine 4->2 map adds 8 + 2
  const auto real = build_real_counterpart(complex);
  CHECK(real.real_parameter_count() == 2 * (2 * 600) + 20 + 10);
}
