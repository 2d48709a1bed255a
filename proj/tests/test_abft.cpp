#include <random>

#include "doctest.h"
#include "ftblas/abft.hpp"
#include "oracles.hpp"

using namespace ftblas;
using abft::ChecksumState;
using Kind = abft::VerifyOutcome::Kind;

namespace {

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

std::vector<double> brute_row_sums(const Matrix& c) {
  std::vector<double> s(c.rows(), 0.0);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) s[i] += c(i, j);
  return s;
}

std::vector<double> brute_col_sums(const Matrix& c) {
  std::vector<double> s(c.cols(), 0.0);
  for (std::size_t j = 0; j < c.cols(); ++j)
    for (std::size_t i = 0; i < c.rows(); ++i) s[j] += c(i, j);
  return s;
}

}  // namespace

TEST_CASE("encode") {
  const Matrix m = from_rows({{1, 2}, {3, 4}});
  CHECK(abft::encode_row_checksum(m.view()) == std::vector<double>{3, 7});
  CHECK(abft::encode_col_checksum(m.view()) == std::vector<double>{4, 6});
  const Matrix z(3, 5);
  CHECK(abft::encode_row_checksum(z.view()) == std::vector<double>(3, 0.0));
  CHECK(abft::encode_col_checksum(z.view()) == std::vector<double>(5, 0.0));
  Matrix id(3, 3);
  for (std::size_t i = 0; i < 3; ++i) id(i, i) = 1.0;
  CHECK(abft::encode_row_checksum(id.view()) == std::vector<double>(3, 1.0));
  CHECK(abft::encode_col_checksum(id.view()) == std::vector<double>(3, 1.0));
}

TEST_CASE("rank-k checksum update") {
  SUBCASE("scalar") {
    ChecksumState cs(1, 1);
    const Matrix a = from_rows({{2}}), b = from_rows({{3}});
    abft::update_checksums_rank_k(cs, a.view(), b.view());
    CHECK(cs.row_sums == std::vector<double>{6});
    CHECK(cs.col_sums == std::vector<double>{6});
    CHECK(cs.depth == 1);
  }
  SUBCASE("rank-1 ones") {
    ChecksumState cs(2, 2);
    const Matrix a = from_rows({{1}, {1}}), b = from_rows({{1, 1}});
    abft::update_checksums_rank_k(cs, a.view(), b.view());
    CHECK(cs.row_sums == std::vector<double>{2, 2});
    CHECK(cs.col_sums == std::vector<double>{2, 2});
  }
  SUBCASE("two rank-1 updates equal one rank-2 update") {
    std::mt19937_64 rng(3);
    const Matrix a = oracle::integer_matrix(5, 2, rng, 8), b = oracle::integer_matrix(2, 4, rng, 8);
    ChecksumState once(5, 4), twice(5, 4);
    abft::update_checksums_rank_k(once, a.view(), b.view());
    abft::update_checksums_rank_k(twice, a.view().block(0, 0, 5, 1), b.view().block(0, 0, 1, 4));
    abft::update_checksums_rank_k(twice, a.view().block(0, 1, 5, 1), b.view().block(1, 0, 1, 4));
    CHECK(once.row_sums == twice.row_sums);
    CHECK(once.col_sums == twice.col_sums);
  }
  SUBCASE("shape mismatch") {
    ChecksumState cs(2, 2);
    const Matrix a(2, 3), b(2, 2);
    CHECK_THROWS_AS(abft::update_checksums_rank_k(cs, a.view(), b.view()), DimensionError);
  }
}

TEST_CASE("encode then update over any panel partition is exact on integers") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 64);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = dim(rng), n = dim(rng), k = dim(rng);
    const Matrix a = oracle::integer_matrix(m, k, rng, 8), b = oracle::integer_matrix(k, n, rng, 8);
    Matrix c = oracle::integer_matrix(m, n, rng, 8);
    ChecksumState cs = ChecksumState::encode(c.view());
    std::size_t p = 0;
    while (p < k) {
      const std::size_t kb = std::min(k - p, std::uniform_int_distribution<std::size_t>(1, k)(rng));
      abft::update_checksums_rank_k(cs, a.view().block(0, p, m, kb), b.view().block(p, 0, kb, n));
      p += kb;
    }
    oracle::gemm(1.0, a, b, 1.0, c);
    REQUIRE(cs.row_sums == brute_row_sums(c));
    REQUIRE(cs.col_sums == brute_col_sums(c));
    REQUIRE(cs.depth == k);
  }
}

TEST_CASE("verify and correct a hand-multiplied product") {
  Matrix c = from_rows({{19, 22}, {43, 50}});
  const ChecksumState cs = ChecksumState::encode(c.view());
  CHECK(cs.row_sums == std::vector<double>{41, 93});
  CHECK(cs.col_sums == std::vector<double>{62, 72});
  CHECK(abft::verify_checksums(c.view(), cs, {}).clean());

  c(0, 1) = 25;
  const auto out = abft::verify_checksums(c.view(), cs, {});
  REQUIRE(out.kind == Kind::single_error);
  CHECK(out.i == 0);
  CHECK(out.j == 1);
  CHECK(out.magnitude == 3.0);

  abft::correct_single_error(c.view(), out.i, out.j, out.magnitude);
  CHECK(c(0, 1) == 22.0);
  CHECK(abft::verify_checksums(c.view(), cs, {}).clean());

  abft::correct_single_error(c.view(), 1, 1, 0.0);
  CHECK(c(1, 1) == 50.0);
  CHECK_THROWS_AS(abft::correct_single_error(c.view(), 2, 0, 1.0), DimensionError);

  c(0, 0) += 1;
  c(1, 1) += 2;
  const auto two = abft::verify_checksums(c.view(), cs, {});
  CHECK(two.kind == Kind::ambiguous);
  CHECK(two.bad_rows.size() == 2);
}

TEST_CASE("row and column magnitudes must agree") {
  // Two errors in one row that cancel in different columns: one bad row,
  // two bad columns.
  Matrix c = from_rows({{1, 2, 3}, {4, 5, 6}});
  const ChecksumState cs = ChecksumState::encode(c.view());
  c(0, 0) += 4;
  c(0, 2) += 1;
  const auto out = abft::verify_checksums(c.view(), cs, {});
  CHECK(out.kind == Kind::ambiguous);
  CHECK(out.bad_rows == std::vector<std::size_t>{0});
  CHECK(out.bad_cols.size() == 2);
}

TEST_CASE("single-error location over random trials") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 48);
  std::uniform_int_distribution<int> mag(1, 8);
  std::bernoulli_distribution neg(0.5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = dim(rng), n = dim(rng), k = dim(rng);
    const Matrix a = oracle::integer_matrix(m, k, rng, 8), b = oracle::integer_matrix(k, n, rng, 8);
    Matrix c(m, n);
    ChecksumState cs(m, n);
    abft::update_checksums_rank_k(cs, a.view(), b.view());
    oracle::gemm(1.0, a, b, 0.0, c);
    REQUIRE(abft::verify_checksums(c.view(), cs, {}).clean());

    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    const double delta = neg(rng) ? -mag(rng) : mag(rng);
    c(i, j) += delta;
    const auto out = abft::verify_checksums(c.view(), cs, {});
    REQUIRE(out.kind == Kind::single_error);
    REQUIRE(out.i == i);
    REQUIRE(out.j == j);
    REQUIRE(out.magnitude == delta);
  }
}

TEST_CASE("column references are skipped when the row pass is clean") {
  std::mt19937_64 rng(5);
  Matrix c = oracle::integer_matrix(6, 7, rng, 8);
  const ChecksumState cs = ChecksumState::encode(c.view());
  abft::VerifyStats stats;
  for (int r = 0; r < 3; ++r) CHECK(abft::verify_checksums(c.view(), cs, {}, &stats).clean());
  CHECK(stats.row_reference_passes == 3);
  CHECK(stats.col_reference_passes == 0);
  c(2, 3) += 1;
  CHECK(abft::verify_checksums(c.view(), cs, {}, &stats).kind == Kind::single_error);
  CHECK(stats.row_reference_passes == 4);
  CHECK(stats.col_reference_passes == 1);

  int calls = 0;
  const auto row_ref = abft::encode_row_checksum(oracle::integer_matrix(6, 7, rng, 0).view());
  ChecksumState zero(6, 7);
  const auto clean = abft::compare_checksums(
      zero, row_ref, [&] { ++calls; return std::span<const double>(); }, {});
  CHECK(clean.clean());
  CHECK(calls == 0);
}

TEST_CASE("threshold scales with accumulated depth") {
  ChecksumState cs(1, 1);
  cs.row_sums = {1.0e6};
  cs.col_sums = {1.0e6};
  cs.depth = 0;
  const double tiny = 1.0e6 * 64 * unit_roundoff * 0.5;
  CHECK(abft::disagreeing_rows(cs, std::vector<double>{1.0e6 + tiny}, {}).empty());
  CHECK(abft::disagreeing_rows(cs, std::vector<double>{1.0e6 + 8 * tiny}, {}).size() == 1);
  cs.depth = 99;
  CHECK(abft::disagreeing_rows(cs, std::vector<double>{1.0e6 + 8 * tiny}, {}).empty());
}
