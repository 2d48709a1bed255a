#include <vector>

#include "doctest.h"
#include "ftblas/core.hpp"

using namespace ftblas;

TEST_CASE("matrix view construction") {
  std::vector<double> six(6), eight(8);
  SUBCASE("exact fit") {
    auto v = make_matrix_view(std::span<double>(six), 2, 3, 2);
    CHECK(v.rows() == 2);
    CHECK(v.cols() == 3);
  }
  SUBCASE("ld below rows") { CHECK_THROWS_AS(make_matrix_view(std::span<double>(six), 3, 2, 2), DimensionError); }
  SUBCASE("slack storage") {
    auto v = make_matrix_view(std::span<double>(eight), 2, 3, 2);
    CHECK(&v(1, 2) == eight.data() + 5);
  }
  SUBCASE("storage too short") {
    CHECK_THROWS_AS(make_matrix_view(std::span<double>(six), 2, 4, 2), DimensionError);
  }
  SUBCASE("empty shapes are valid") {
    CHECK_NOTHROW(make_matrix_view(std::span<double>(), 0, 5, 1));
    CHECK_NOTHROW(make_matrix_view(std::span<double>(), 4, 0, 4));
  }
}

TEST_CASE("view offsets round-trip") {
  // Sentinel write/read-back of i + j * ld for every element of small views.
  for (std::size_t m = 1; m <= 5; ++m)
    for (std::size_t n = 1; n <= 5; ++n)
      for (std::size_t ld = m; ld <= m + 2; ++ld) {
        std::vector<double> buf((n - 1) * ld + m, -1.0);
        auto v = make_matrix_view(std::span<double>(buf), m, n, ld);
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < m; ++i) v(i, j) = static_cast<double>(i + j * ld);
        for (std::size_t off = 0; off < buf.size(); ++off)
          if (off % ld < m) CHECK(buf[off] == static_cast<double>(off));
          else CHECK(buf[off] == -1.0);
      }
}

TEST_CASE("view construction does not touch the data") {
  std::vector<double> buf(12, 7.0);
  auto v = make_matrix_view(std::span<double>(buf), 3, 4, 3);
  auto b = v.block(1, 1, 2, 2);
  auto r = v.row(2);
  auto c = v.col(3);
  (void)b; (void)r; (void)c;
  for (double x : buf) CHECK(x == 7.0);
}

TEST_CASE("sub-views") {
  Matrix a(4, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 4; ++i) a(i, j) = 10.0 * i + j;
  auto v = a.view();
  CHECK(v.block(1, 1, 2, 2)(1, 1) == 22.0);
  CHECK(v.row(3)[2] == 32.0);
  CHECK(v.row(3).stride() == 4);
  CHECK(v.col(1)[2] == 21.0);
  CHECK(v.col(1).contiguous());
}

TEST_CASE("vector views") {
  std::vector<double> buf(7);
  CHECK_NOTHROW(make_vector_view(std::span<double>(buf), 4, 2));
  CHECK_THROWS_AS(make_vector_view(std::span<double>(buf), 4, 3), DimensionError);
  CHECK_THROWS_AS(make_vector_view(std::span<double>(buf), 2, 0), DimensionError);
  auto v = make_vector_view(std::span<double>(buf), 3, 3);
  v[2] = 5.0;
  CHECK(buf[6] == 5.0);
  CHECK(v.subview(1, 2)[1] == 5.0);
}

TEST_CASE("blocking parameters") {
  CHECK_NOTHROW(BlockingParams{}.validate());
  CHECK_THROWS_AS((BlockingParams{256, 4096, 0, 8, 4}.validate()), ConfigError);
  CHECK_THROWS_AS((BlockingParams{250, 4096, 256, 8, 4}.validate()), ConfigError);
  CHECK_THROWS_AS((BlockingParams{256, 4098, 256, 8, 4}.validate()), ConfigError);
  CHECK_THROWS_AS((BlockingParams{256, 4096, 256, 16, 8}.validate()), ConfigError);
}

TEST_CASE("round-off threshold") {
  ToleranceConfig tol;
  CHECK(tol.threshold(0.0, 10.0) == 64.0 * unit_roundoff * 10.0);
  CHECK(tol.threshold(-4.0, 10.0) == 64.0 * unit_roundoff * 40.0);
  ToleranceConfig floor{64.0, 0.5};
  CHECK(floor.threshold(1.0, 1.0) == 0.5);
  CHECK_FALSE(floor.exceeds(0.5, 1.0, 1.0));
  CHECK(floor.exceeds(0.50001, 1.0, 1.0));
  CHECK(tol.exceeds(std::numeric_limits<double>::quiet_NaN(), 1.0, 1.0));
  CHECK_THROWS_AS((ToleranceConfig{0.0, 0.0}.validate()), ConfigError);
  CHECK_THROWS_AS((ToleranceConfig{1.0, -1.0}.validate()), ConfigError);
}

TEST_CASE("report merge") {
  FtReport a{1, 1, 0, {{0, 1, 2, 3.0, FtResolution::corrected}}};
  FtReport b{2, 1, 1, {{4, 0, 0, 1.0, FtResolution::corrected}, {5, 0, 0, 1.0, FtResolution::unrecoverable}}};
  a.merge(b);
  CHECK(a.detected == 3);
  CHECK(a.corrected == 2);
  CHECK(a.unrecoverable == 1);
  CHECK(a.events.size() == 3);
  CHECK_FALSE(a.ok());
  CHECK(FtReport{}.clean());
}
