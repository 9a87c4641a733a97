#include <doctest.h>

#include <algorithm>
#include <map>

#include "ccnn/tensor.hpp"
#include "helpers.hpp"

using namespace ccnn;
using testing::random_complex;

TEST_CASE("tensor shapes are validated") {
  CHECK_THROWS_AS(ComplexTensor(Shape{}), std::invalid_argument);
  CHECK_THROWS_AS(ComplexTensor(Shape{2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(ComplexTensor({2, 2}, std::vector<Complex>(3)), std::invalid_argument);
  ComplexTensor t({2, 3, 4});
  CHECK(t.size() == 24);
  t.at(1, 2, 3) = Complex{5, 6};
  CHECK(t[(1 * 3 + 2) * 4 + 3] == Complex{5, 6});
}

TEST_CASE("phase of zero is zero and phase lies in (-pi, pi]") {
  CHECK(phase(Complex{0, 0}) == 0.0);
  CHECK(phase(Complex{-1, 0}) == doctest::Approx(std::numbers::pi));
  CHECK(phase(Complex{-1, -0.0}) == doctest::Approx(std::numbers::pi));
  CHECK(magnitude(Complex{3, 4}) == 5.0);
}

TEST_CASE("dot is bilinear without conjugation") {
  ComplexTensor z({2}, {Complex{1, 1}, Complex{2, 0}});
  ComplexTensor w({2}, {Complex{1, -1}, Complex{3, 0}});
  CHECK(dot(z, w) == Complex{8, 0});
  CHECK(dot(z, ComplexTensor({2})) == Complex{0, 0});
  CHECK_THROWS_WITH_AS(dot(z, ComplexTensor({3})), doctest::Contains("(2)"), std::invalid_argument);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_complex({3, 3}, rng);
    const auto b = random_complex({3, 3}, rng);
    const auto b2 = random_complex({3, 3}, rng);
    const Complex s{0.3 * trial, -0.7};
    // a global phase on one factor leaves the magnitude alone
    CHECK(std::abs(dot(a, std::polar(1.0, 0.7) * b)) == doctest::Approx(std::abs(dot(a, b))).epsilon(1e-12));
    // linearity in the first argument
    const Complex lhs = dot(s * a + b2, b);
    const Complex rhs = s * dot(a, b) + dot(b2, b);
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1 + std::abs(rhs)));
    // Cauchy-Schwarz with ||z|| = sqrt(dot(conj z, z))
    const double na = std::sqrt(dot(conjugated(a), a).real());
    const double nb = std::sqrt(dot(conjugated(b), b).real());
    CHECK(std::abs(dot(a, b)) <= na * nb + 1e-12);
  }
}

TEST_CASE("hermitian conjugate-transposes") {
  ComplexTensor w({2, 2}, {Complex{1, 1}, Complex{2, 0}, Complex{3, 0}, Complex{4, -1}});
  const auto h = hermitian(w);
  CHECK(h == ComplexTensor({2, 2}, {Complex{1, -1}, Complex{3, 0}, Complex{2, 0}, Complex{4, 1}}));
  std::mt19937_64 rng(3);
  const auto r = random_complex({4, 3}, rng);
  CHECK(hermitian(r).shape() == Shape{3, 4});
  CHECK(hermitian(hermitian(r)) == r);
  ComplexTensor sym({2, 2}, {Complex{1, 0}, Complex{2, 0}, Complex{2, 0}, Complex{5, 0}});
  CHECK(hermitian(sym) == sym);
  CHECK_THROWS_AS(hermitian(ComplexTensor({2, 2, 2})), std::invalid_argument);
}

TEST_CASE("matmul variants agree with explicit hermitian products") {
  std::mt19937_64 rng(11);
  const auto a = random_complex({3, 5}, rng);
  const auto b = random_complex({5, 4}, rng);
  const auto c = random_complex({3, 4}, rng);
  const auto p = matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      Complex s{};
      for (std::size_t k = 0; k < 5; ++k) s += a.at(i, k) * b.at(k, j);
      CHECK(std::abs(p.at(i, j) - s) < 1e-12);
    }
  CHECK(testing::max_abs_diff(matmul_hermitian_rhs(c, b), matmul(c, hermitian(b))) < 1e-12);
  CHECK(testing::max_abs_diff(matmul_hermitian_lhs(a, c), matmul(hermitian(a), c)) < 1e-12);
  // sparse operands take a different path
  ComplexTensor sparse({3, 4});
  sparse.at(1, 2) = Complex{2, -1};
  CHECK(testing::max_abs_diff(matmul_hermitian_rhs(sparse, b), matmul(sparse, hermitian(b))) < 1e-12);
  CHECK(testing::max_abs_diff(matmul_hermitian_lhs(a, sparse), matmul(hermitian(a), sparse)) < 1e-12);
  CHECK_THROWS_AS(matmul(a, c), std::invalid_argument);
}

TEST_CASE("im2col unit window and sliding count") {
  ComplexTensor x({1, 2, 2}, {Complex{1, 0}, Complex{2, 0}, Complex{3, 0}, Complex{4, 0}});
  const auto pm = im2col(x, 1, 1, 1);
  CHECK(pm.matrix.shape() == Shape{1, 4});
  for (std::size_t k = 0; k < 4; ++k) CHECK(pm.matrix[k] == x[k]);

  const auto p3 = im2col(ComplexTensor({1, 3, 3}), 2, 2, 1);
  CHECK(p3.matrix.shape() == Shape{4, 4});
  CHECK_THROWS_AS(im2col(ComplexTensor({1, 3, 3}), 4, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(im2col(ComplexTensor({1, 3, 3}), 2, 2, 0), std::invalid_argument);
}

TEST_CASE("im2col cells are exactly the window-covered inputs") {
  std::mt19937_64 rng(5);
  const auto x = random_complex({2, 5, 5}, rng);
  for (std::size_t stride : {1, 2}) {
    const auto pm = im2col(x, 3, 2, stride);
    // brute-force enumeration of every window in the same column order
    std::vector<Complex> expect;
    std::vector<std::vector<Complex>> cols;
    for (std::size_t r = 0; r + 3 <= 5; r += stride)
      for (std::size_t c = 0; c + 2 <= 5; c += stride) {
        std::vector<Complex> col;
        for (std::size_t ch = 0; ch < 2; ++ch)
          for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j) col.push_back(x.at(ch, r + i, c + j));
        cols.push_back(col);
      }
    REQUIRE(pm.matrix.dim(1) == cols.size());
    REQUIRE(pm.matrix.dim(0) == 12);
    for (std::size_t k = 0; k < cols.size(); ++k)
      for (std::size_t row = 0; row < 12; ++row) {
        CHECK(pm.matrix.at(row, k) == cols[k][row]);
        CHECK(x[pm.source_index(row * cols.size() + k)] == cols[k][row]);
      }
  }
}

TEST_CASE("col2im accumulates coverage counts") {
  auto pm = im2col(ComplexTensor::filled({1, 3, 3}, Complex{1, 0}), 2, 2, 1);
  const auto cover = col2im_accumulate(pm);
  CHECK(cover.at(0, 1, 1) == Complex{4, 0});
  CHECK(cover.at(0, 0, 0) == Complex{1, 0});
  CHECK(cover.at(0, 0, 1) == Complex{2, 0});

  // general shapes against brute-force window counting
  for (auto [h, w, kh, kw, s] : std::vector<std::array<std::size_t, 5>>{{5, 6, 3, 2, 1}, {7, 7, 3, 3, 2}, {4, 4, 2, 2, 2}}) {
    auto p = im2col(ComplexTensor::filled({2, h, w}, Complex{1, 0}), kh, kw, s);
    const auto cov = col2im_accumulate(p);
    for (std::size_t ch = 0; ch < 2; ++ch)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
          double n = 0;
          for (std::size_t r0 = 0; r0 + kh <= h; r0 += s)
            for (std::size_t c0 = 0; c0 + kw <= w; c0 += s) n += (r >= r0 && r < r0 + kh && c >= c0 && c < c0 + kw);
          CHECK(cov.at(ch, r, c).real() == n);
        }
  }
  // non-overlapping windows route each delta to exactly one cell
  std::mt19937_64 rng(2);
  auto q = im2col(ComplexTensor({1, 4, 4}), 2, 2, 2);
  q.matrix = random_complex(q.matrix.shape(), rng);
  const auto back = col2im_accumulate(q);
  for (std::size_t k = 0; k < q.matrix.size(); ++k) CHECK(back[q.source_index(k)] == q.matrix[k]);
  q.matrix.fill(Complex{});
  CHECK(col2im_accumulate(q) == ComplexTensor({1, 4, 4}));
}
