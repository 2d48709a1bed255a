#include <array>
#include <cmath>
#include <random>

#include "doctest.h"
#include "ftblas/blas.hpp"
#include "ftblas/faultinj.hpp"
#include "ftblas/level2.hpp"
#include "oracles.hpp"

using namespace ftblas;
using faultinj::DmrInjector;
using faultinj::InjectionMode;

namespace {

VectorView view(std::vector<double>& v) { return VectorView(std::span<double>(v)); }
ConstVectorView cview(const std::vector<double>& v) { return ConstVectorView(std::span<const double>(v)); }

template <class Run>
std::size_t chunks_of(Run&& run) {
  faultinj::CountingHook counter;
  run(&counter);
  return counter.chunks();
}

// Eight-lane accumulation of a[j] * b[j] (lane j % 8), folded left to right.
double lane_sum(std::size_t n, auto&& a, auto&& b) {
  std::array<double, 8> acc{};
  for (std::size_t j = 0; j < n; ++j) acc[j % 8] += a(j) * b(j);
  double s = acc[0];
  for (std::size_t l = 1; l < 8; ++l) s += acc[l];
  return s;
}

// Panel-free forward substitution spelled in the panelled routine's order:
// the off-panel prefix is one eight-lane sum, the in-panel part another.
std::vector<double> forward_substitution(const Matrix& a, std::vector<double> x) {
  const std::size_t n = x.size();
  std::vector<double> solved = x;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p0 = i - i % 4;
    double r = x[i];
    if (p0 > 0) r = -1.0 * lane_sum(p0, [&](std::size_t j) { return a(i, j); },
                                    [&](std::size_t j) { return solved[j]; }) + 1.0 * r;
    const double d = lane_sum(i - p0, [&](std::size_t j) { return a(i, p0 + j); },
                              [&](std::size_t j) { return solved[p0 + j]; });
    solved[i] = (r - d) / a(i, i);
  }
  return solved;
}

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (auto r : rows) {
    std::size_t j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("gemv examples") {
  Matrix id(2, 2);
  id(0, 0) = id(1, 1) = 1.0;
  std::vector<double> y(2, 99.0);
  gemv(1.0, id.view(), cview({1, 2}), 0.0, view(y));
  CHECK(y == std::vector<double>{1, 2});

  const Matrix a = from_rows({{1, 2}, {3, 4}});
  gemv(1.0, a.view(), cview({1, 1}), 0.0, view(y));
  CHECK(y == std::vector<double>{3, 7});

  gemv(0.0, a.view(), cview({5, 5}), 1.0, view(y));
  CHECK(y == std::vector<double>{3, 7});

  std::vector<double> nan_y(2, std::numeric_limits<double>::quiet_NaN());
  gemv(1.0, a.view(), cview({1, 1}), 0.0, view(nan_y));
  CHECK(nan_y == std::vector<double>{3, 7});

  std::vector<double> bad(3);
  CHECK_THROWS_AS(gemv(1.0, a.view(), cview(bad), 0.0, view(y)), DimensionError);
}

TEST_CASE("gemv matches the naive oracle within the componentwise bound") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> dim(1, 512);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = dim(rng) / (trial % 4 == 0 ? 1 : 8) + 1, n = dim(rng);
    const Matrix a = oracle::random_matrix(m, n, rng);
    const auto x = oracle::random_vector(n, rng), y0 = oracle::random_vector(m, rng);
    const double alpha = coef(rng), beta = trial % 3 == 0 ? 0.0 : coef(rng);
    std::vector<double> y = y0;
    gemv(alpha, a.view(), cview(x), beta, view(y));
    const auto ref = oracle::gemv(alpha, a, x, beta, y0);
    for (std::size_t i = 0; i < m; ++i) {
      double mag = 0.0;
      for (std::size_t j = 0; j < n; ++j) mag += std::abs(a(i, j) * x[j]);
      const double bound = static_cast<double>(n) * unit_roundoff *
                           (std::abs(alpha) * mag + std::abs(beta * y0[i]));
      REQUIRE(std::abs(y[i] - ref[i]) <= bound);
    }
    std::vector<double> y_ft = y0;
    REQUIRE(gemv_ft(alpha, a.view(), cview(x), beta, view(y_ft)).clean());
    REQUIRE(oracle::same_bits(y, y_ft));
  }
}

TEST_CASE("gemv through a sub-block with a strided x") {
  std::mt19937_64 rng(22);
  Matrix big = oracle::random_matrix(20, 30, rng);
  const ConstMatrixView a = big.view().block(3, 5, 13, 17);
  const Matrix dense = oracle::copy_of(a);
  std::vector<double> xs = oracle::random_vector(17 * 2, rng);
  std::vector<double> x(17);
  for (std::size_t j = 0; j < 17; ++j) x[j] = xs[2 * j];
  std::vector<double> y1(13, 0.5), y2(13, 0.5), y3(13, 0.5);
  gemv(1.5, a, make_vector_view(std::span<const double>(xs), 17, 2), 0.5, view(y1));
  gemv(1.5, dense.view(), cview(x), 0.5, view(y2));
  CHECK(oracle::same_bits(y1, y2));
  CHECK(gemv_ft(1.5, a, make_vector_view(std::span<const double>(xs), 17, 2), 0.5, view(y3)).clean());
  CHECK(oracle::same_bits(y1, y3));
}

TEST_CASE("trsv examples") {
  std::vector<double> b{2, 9};
  trsv(from_rows({{2, 0}, {1, 4}}).view(), view(b));
  CHECK(b == std::vector<double>{1, 2});

  Matrix id(5, 5);
  for (std::size_t i = 0; i < 5; ++i) id(i, i) = 1.0;
  std::vector<double> v{3, -1, 4, 1, -5};
  const auto v0 = v;
  trsv(id.view(), view(v));
  CHECK(v == v0);

  std::vector<double> s{1, 1};
  try {
    trsv(from_rows({{1, 0}, {1, 0}}).view(), view(s));
    FAIL("expected a singular matrix error");
  } catch (const SingularMatrixError& e) {
    CHECK(e.pivot() == 1);
  }
  CHECK(s == std::vector<double>{1, 1});
  CHECK_THROWS_AS(trsv_ft(from_rows({{0, 0}, {1, 1}}).view(), view(s)), SingularMatrixError);
}

TEST_CASE("panelled trsv preserves the unpanelled arithmetic order") {
  std::mt19937_64 rng(5);
  for (std::size_t n = 1; n <= 16; ++n) {
    for (int rep = 0; rep < 10; ++rep) {
      const Matrix a = oracle::lower_dominant(n, rng);
      const auto b = oracle::random_vector(n, rng);
      auto x = b;
      trsv(a.view(), view(x));
      REQUIRE(oracle::same_bits(x, forward_substitution(a, b)));
    }
  }
}

TEST_CASE("trsv residual bound") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> dim(1, 512);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = trial < 20 ? static_cast<std::size_t>(trial + 1) : dim(rng);
    const Matrix a = oracle::lower_dominant(n, rng);
    const auto b = oracle::random_vector(n, rng);
    auto x = b;
    trsv(a.view(), view(x));
    const double bound = 8.0 * static_cast<double>(n) * unit_roundoff * oracle::inf_norm(a) *
                         oracle::inf_norm(x);
    REQUIRE(oracle::trsv_residual(a, x, b) <= bound);
    auto x_ft = b;
    REQUIRE(trsv_ft(a.view(), view(x_ft)).clean());
    REQUIRE(oracle::same_bits(x, x_ft));
  }
}

TEST_CASE("gemv_ft corrects injected faults bitwise") {
  std::mt19937_64 rng(41);
  const std::size_t m = 37, n = 203;
  const Matrix a = oracle::random_matrix(m, n, rng);
  const auto x = oracle::random_vector(n, rng), y0 = oracle::random_vector(m, rng);
  auto ref = y0;
  gemv(0.5, a.view(), cview(x), 2.0, view(ref));
  const std::size_t total = chunks_of([&](dmr::FaultHook* h) {
    auto t = y0;
    gemv_ft(0.5, a.view(), cview(x), 2.0, view(t), {}, h);
  });
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DmrInjector inj(faultinj::plan_from_count(total, 20, seed, InjectionMode::dmr_compute));
    auto y = y0;
    const FtReport r = gemv_ft(0.5, a.view(), cview(x), 2.0, view(y), {}, &inj);
    REQUIRE(inj.injected() == 20);
    REQUIRE(r.detected == 20);
    REQUIRE(r.corrected == 20);
    REQUIRE(oracle::same_bits(y, ref));
  }

  faultinj::InjectionPlan sticky{InjectionMode::sticky, 1, 30, 1, faultinj::default_magnitude(InjectionMode::sticky)};
  DmrInjector inj(sticky);
  auto y = y0;
  CHECK(gemv_ft(0.5, a.view(), cview(x), 2.0, view(y), {}, &inj).unrecoverable >= 1);
}

TEST_CASE("trsv_ft corrects faults in panel updates and diagonal substitutions") {
  std::mt19937_64 rng(43);
  const std::size_t n = 64;
  const Matrix a = oracle::lower_dominant(n, rng);
  const auto b = oracle::random_vector(n, rng);
  auto ref = b;
  trsv(a.view(), view(ref));
  const std::size_t total = chunks_of([&](dmr::FaultHook* h) { auto t = b; trsv_ft(a.view(), view(t), {}, h); });

  // Every chunk id once, one run each: covers both gemv panels and diagonal rows.
  for (std::size_t c = 0; c < total; ++c) {
    faultinj::InjectionPlan plan{InjectionMode::dmr_compute, 1, c + 1, c,
                                 faultinj::default_magnitude(InjectionMode::dmr_compute)};
    DmrInjector inj(plan);
    auto x = b;
    const FtReport r = trsv_ft(a.view(), view(x), {}, &inj);
    REQUIRE(inj.injected() == 1);
    REQUIRE(r.corrected == 1);
    REQUIRE(oracle::same_bits(x, ref));
  }

  faultinj::InjectionPlan sticky{InjectionMode::sticky, 1, total, 3,
                                 faultinj::default_magnitude(InjectionMode::sticky)};
  DmrInjector inj(sticky);
  auto x = b;
  const FtReport r = trsv_ft(a.view(), view(x), {}, &inj);
  CHECK(r.unrecoverable == 1);
  // The last chunk is the final diagonal substitution: everything before it is solved.
  for (std::size_t i = 0; i + 1 < n; ++i) REQUIRE(oracle::same_bits(x[i], ref[i]));
  // The failed substitution is never stored, so x[n-1] keeps its panel-updated value.
  CHECK_FALSE(oracle::same_bits(x[n - 1], ref[n - 1]));
  CHECK(std::isfinite(x[n - 1]));
}

TEST_CASE("BLAS-style gemv and trsv") {
  const std::vector<double> a{1, 3, 2, 4};  // [[1,2],[3,4]] column-major
  std::vector<double> x{1, 1}, y{0, 0};
  blas::dgemv('N', 2, 2, 1.0, a.data(), 2, x.data(), 1, 0.0, y.data(), 1);
  CHECK(y == std::vector<double>{3, 7});
  CHECK_THROWS_AS(blas::dgemv('T', 2, 2, 1.0, a.data(), 2, x.data(), 1, 0.0, y.data(), 1), UnsupportedVariant);
  CHECK_THROWS_AS(blas::dgemv('N', 2, 2, 1.0, a.data(), 1, x.data(), 1, 0.0, y.data(), 1), DimensionError);
  const std::vector<double> l{2, 1, 0, 4};
  std::vector<double> rhs{2, 9};
  blas::dtrsv('L', 'N', 'N', 2, l.data(), 2, rhs.data(), 1);
  CHECK(rhs == std::vector<double>{1, 2});
  CHECK_THROWS_AS(blas::dtrsv('U', 'N', 'N', 2, l.data(), 2, rhs.data(), 1), UnsupportedVariant);
}
