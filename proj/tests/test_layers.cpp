#include <doctest.h>

#include <numbers>

#include "ccnn/layers.hpp"
#include "helpers.hpp"

using namespace ccnn;
using testing::random_complex;

namespace {

constexpr Complex I{0, 1};

// Direct nested-loop valid convolution, independent of im2col.
ComplexTensor direct_conv(const ComplexTensor& x, const ConvWeights<Complex>& w) {
  const std::size_t oh = (x.dim(1) - w.kernel_h()) / w.stride + 1;
  const std::size_t ow = (x.dim(2) - w.kernel_w()) / w.stride + 1;
  ComplexTensor out({w.count(), oh, ow});
  for (std::size_t k = 0; k < w.count(); ++k)
    for (std::size_t r = 0; r < oh; ++r)
      for (std::size_t c = 0; c < ow; ++c) {
        Complex s = w.bias[k];
        for (std::size_t ch = 0; ch < x.dim(0); ++ch)
          for (std::size_t i = 0; i < w.kernel_h(); ++i)
            for (std::size_t j = 0; j < w.kernel_w(); ++j)
              s += x.at(ch, r * w.stride + i, c * w.stride + j) *
                   w.kernels[((k * x.dim(0) + ch) * w.kernel_h() + i) * w.kernel_w() + j];
        out.at(k, r, c) = s;
      }
  return out;
}

}  // namespace

TEST_CASE("affine forward") {
  AffineWeights<Complex> w{ComplexTensor({1, 1}, {I}), ComplexTensor({1}, {Complex{1, 0}})};
  CHECK(affine_forward(ComplexTensor({1, 1}, {Complex{1, 1}}), w)[0] == I);

  std::mt19937_64 rng(1);
  const auto z = random_complex({4, 3}, rng);
  AffineWeights<Complex> id{ComplexTensor({4, 4}), ComplexTensor({4})};
  for (std::size_t i = 0; i < 4; ++i) id.weight.at(i, i) = 1.0;
  CHECK(affine_forward(z, id) == z);

  // split form: Re = AX - BY + a, Im = AY + BX + b
  const auto x = random_complex({4, 5}, rng);
  AffineWeights<Complex> r{random_complex({3, 4}, rng), random_complex({3}, rng)};
  const auto out = affine_forward(x, r);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double re = r.bias[i].real(), im = r.bias[i].imag();
      for (std::size_t k = 0; k < 4; ++k) {
        const double A = r.weight.at(i, k).real(), B = r.weight.at(i, k).imag();
        const double X = x.at(k, j).real(), Y = x.at(k, j).imag();
        re += A * X - B * Y;
        im += A * Y + B * X;
      }
      CHECK(std::abs(out.at(i, j) - Complex{re, im}) < 1e-12);
    }
  CHECK_THROWS_AS(affine_forward(random_complex({5, 2}, rng), r), std::invalid_argument);
}

TEST_CASE("conv forward examples") {
  ComplexTensor x({1, 2, 2}, {1.0, I, -I, 2.0});
  ConvWeights<Complex> w{ComplexTensor({1, 1, 1, 1}, {I}), ComplexTensor({1}), 1};
  CHECK(conv_forward(x, w) == ComplexTensor({1, 2, 2}, {I, -1.0, 1.0, 2.0 * I}));

  std::mt19937_64 rng(4);
  const auto patch = random_complex({2, 3, 3}, rng);
  const double norm = frobenius_norm(patch);
  ConvWeights<Complex> m{conjugated(patch).reshaped({1, 2, 3, 3}), ComplexTensor({1}), 1};
  m.kernels *= Complex{1.0 / norm, 0};
  CHECK(std::abs(conv_forward(patch, m)[0]) == doctest::Approx(norm).epsilon(1e-12));

  ConvWeights<Complex> zero{ComplexTensor({2, 2, 3, 3}), ComplexTensor({2}, {Complex{1.5, -2}, Complex{1.5, -2}}), 1};
  const auto biased = conv_forward(random_complex({2, 6, 5}, rng), zero);
  for (const auto& v : biased.values()) CHECK(v == Complex{1.5, -2});

  ConvWeights<Complex> bad{ComplexTensor({1, 3, 2, 2}), ComplexTensor({1}), 1};
  CHECK_THROWS_AS(conv_forward(patch, bad), std::invalid_argument);
}

TEST_CASE("conv forward equals a direct loop") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 1 + trial % 3, h = 4 + trial % 5, wd = 5 + trial % 4, k = 1 + trial % 3;
    const std::size_t kh = 1 + trial % 3, kw = 2 + trial % 2, stride = 1 + trial % 2;
    const auto x = random_complex({c, h, wd}, rng);
    ConvWeights<Complex> w{random_complex({k, c, kh, kw}, rng), random_complex({k}, rng), stride};
    const auto a = conv_forward(x, w);
    const auto b = direct_conv(x, w);
    REQUIRE(a.shape() == b.shape());
    CHECK(testing::max_abs_diff(a, b) < 1e-12);
  }
}

TEST_CASE("sector relu") {
  CHECK(sector_relu(Complex{1, 2}) == Complex{1, 2});
  CHECK(sector_relu(Complex{-1, 2}) == Complex{0, 0});
  CHECK(sector_relu(Complex{2, -0.5}) == Complex{0, 0});
  CHECK(sector_relu(Complex{0, 5}) == Complex{0, 5});
  CHECK(sector_relu(Complex{3, 0}) == Complex{3, 0});
  CHECK(sector_relu(Complex{-3, 0}) == Complex{0, 0});
  CHECK(sector_relu(Complex{0, 0}) == Complex{0, 0});
  // a wider sector passes the lower half-plane edge too
  CHECK(sector_relu(Complex{1, -1}, SectorParams(-std::numbers::pi / 2, std::numbers::pi / 2)) == Complex{1, -1});
  CHECK_THROWS_AS(SectorParams(0.5, 1.0), std::invalid_argument);

  std::mt19937_64 rng(3);
  const auto z = random_complex({3, 4, 4}, rng);
  const auto once = sector_relu(z);
  CHECK(sector_relu(once) == once);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK((once[i] == Complex{} || once[i] == z[i]));
}

TEST_CASE("max-by-magnitude pooling") {
  PoolSpec whole{1, 2, 1, PoolKind::max_by_magnitude, 0.0};
  CHECK(max_by_magnitude_pool(ComplexTensor({1, 1, 2}, {-5.0, 2.0}), whole).output[0] == Complex{-5, 0});
  CHECK(max_by_magnitude_pool(ComplexTensor({1, 1, 2}, {Complex{3, 4}, 4.0}), whole).output[0] == Complex{3, 4});
  const auto tie = max_by_magnitude_pool(ComplexTensor({1, 1, 2}, {1.0, I}), whole);
  CHECK(tie.output[0] == Complex{1, 0});
  CHECK(tie.argmax[0] == 0);

  std::mt19937_64 rng(8);
  const auto x = random_complex({2, 5, 6}, rng);
  const auto r = max_by_magnitude_pool(x, PoolSpec{2, 3, 1, PoolKind::max_by_magnitude, 0.0});
  CHECK(r.output.shape() == Shape{2, 4, 4});
  for (std::size_t ch = 0; ch < 2; ++ch)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        bool member = false;
        double best = 0;
        for (std::size_t a = 0; a < 2; ++a)
          for (std::size_t b = 0; b < 3; ++b) {
            member = member || x.at(ch, i + a, j + b) == r.output.at(ch, i, j);
            best = std::max(best, std::abs(x.at(ch, i + a, j + b)));
          }
        CHECK(member);
        CHECK(std::abs(r.output.at(ch, i, j)) == best);
      }

  const auto g = max_by_magnitude_pool(x, PoolSpec{1, 1, 1, PoolKind::global_max_by_magnitude, 0.0});
  CHECK(g.output.shape() == Shape{2, 1, 1});
  for (std::size_t ch = 0; ch < 2; ++ch) {
    double best = 0;
    for (std::size_t i = 0; i < 30; ++i) best = std::max(best, std::abs(x[ch * 30 + i]));
    CHECK(std::abs(g.output[ch]) == best);
  }
}

TEST_CASE("softmax pooling") {
  const std::vector<Complex> two{Complex{1, 1}, Complex{3, -1}};
  CHECK(std::abs(softmax_pool(two, 0.0) - Complex{2, 0}) < 1e-15);
  const std::vector<Complex> real{1.0, 2.0, 10.0};
  // direct evaluation of the formula without any shift
  Complex num{}, den{};
  for (auto z : real) num += z * std::exp(5.0 * z), den += std::exp(5.0 * z);
  CHECK(std::abs(softmax_pool(real, 5.0) - num / den) < 1e-12);
  CHECK(std::abs(softmax_pool(real, 5.0) - 10.0) < 1e-6);
  CHECK(std::abs(softmax_pool(real, -50.0) - 1.0) < 1e-6);
  const std::vector<Complex> one{Complex{-2, 7}};
  for (double a : {-30.0, 0.0, 4.0}) CHECK(std::abs(softmax_pool(one, a) - one[0]) < 1e-15);
  const std::vector<Complex> copies(5, Complex{0.3, -1.2});
  CHECK(std::abs(softmax_pool(copies, 2.5) - copies[0]) < 1e-12);
  // huge exponents stay finite thanks to the shift
  const std::vector<Complex> big{1000.0, 999.0};
  CHECK(std::isfinite(softmax_pool(big, 10.0).real()));
  CHECK(std::abs(softmax_pool(big, 10.0) - 1000.0) < 1e-3);
}

TEST_CASE("dual softmax pooling selects by imaginary part") {
  const std::vector<Complex> two{Complex{1, 1}, Complex{3, -1}};
  CHECK(std::abs(dual_softmax_pool(two, 0.0) - Complex{2, 0}) < 1e-15);
  const std::vector<Complex> v{Complex{1, 5}, Complex{2, 0}};
  CHECK(std::abs(dual_softmax_pool(v, 50.0) - Complex{1, 5}) < 1e-6);
  CHECK(std::abs(dual_softmax_pool(v, -50.0) - Complex{2, 0}) < 1e-6);
  const std::vector<Complex> one{Complex{4, -3}};
  CHECK(std::abs(dual_softmax_pool(one, 7.0) - one[0]) < 1e-15);
}

TEST_CASE("projection") {
  CHECK(projection(Complex{3, 4}, ProjectionKind::squared_magnitude) == 25.0);
  CHECK(projection(Complex{3, 4}, ProjectionKind::magnitude) == 5.0);
  CHECK(projection(Complex{}, ProjectionKind::magnitude) == 0.0);
  CHECK(projection(Complex{}, ProjectionKind::squared_magnitude) == 0.0);
  std::mt19937_64 rng(6);
  const auto z = random_complex({2, 3, 3}, rng);
  for (double t : {0.3, 1.1, 2.9}) {
    ComplexTensor r = z;
    r *= std::polar(1.0, t);
    const auto a = projection(z, ProjectionKind::squared_magnitude);
    const auto b = projection(r, ProjectionKind::squared_magnitude);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("squared projection of a convolution ignores a global kernel phase") {
  std::mt19937_64 rng(12);
  const auto x = random_complex({2, 6, 6}, rng);
  ConvWeights<Complex> w{random_complex({3, 2, 3, 3}, rng), ComplexTensor({3}), 1};
  const auto base = projection(conv_forward(x, w), ProjectionKind::squared_magnitude);
  for (double c : {0.4, -2.0, 3.1}) {
    ConvWeights<Complex> r = w;
    r.kernels *= std::polar(1.0, c);
    const auto p = projection(conv_forward(x, r), ProjectionKind::squared_magnitude);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - base[i]) <= 1e-12 * (1 + base[i]));
  }
}
