#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ftblas/core.hpp"

namespace ftblas::abft {

/// Maintained checksums of a result matrix C (m x n).
///
/// row_sums = C * e and col_sums = e^T * C. `depth` counts the inner-product
/// length accumulated through rank-k updates since the state was encoded and
/// drives the round-off threshold: a row sum integrates (depth + 1) * n
/// products, a column sum (depth + 1) * m.
struct ChecksumState {
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  std::size_t depth = 0;

  ChecksumState() = default;
  ChecksumState(std::size_t m, std::size_t n) : row_sums(m, 0.0), col_sums(n, 0.0) {}

  static ChecksumState encode(ConstMatrixView c);

  [[nodiscard]] std::size_t rows() const noexcept { return row_sums.size(); }
  [[nodiscard]] std::size_t cols() const noexcept { return col_sums.size(); }
  [[nodiscard]] double row_k_eff() const noexcept {
    return static_cast<double>(depth + 1) * static_cast<double>(cols());
  }
  [[nodiscard]] double col_k_eff() const noexcept {
    return static_cast<double>(depth + 1) * static_cast<double>(rows());
  }
};

struct VerifyOutcome {
  enum class Kind { clean, single_error, ambiguous };

  Kind kind = Kind::clean;
  std::size_t i = 0;
  std::size_t j = 0;
  double magnitude = 0.0;  ///< row_ref[i] - row_sums[i] for single_error
  std::vector<std::size_t> bad_rows;
  std::vector<std::size_t> bad_cols;

  [[nodiscard]] bool clean() const noexcept { return kind == Kind::clean; }
};

/// Instrumentation for the row-first short circuit.
struct VerifyStats {
  std::size_t row_reference_passes = 0;
  std::size_t col_reference_passes = 0;
};

/// out[i] = sum_j M(i, j), summed in increasing j from 0.0.
std::vector<double> encode_row_checksum(ConstMatrixView m);
/// out[j] = sum_i M(i, j), summed in increasing i from 0.0.
std::vector<double> encode_col_checksum(ConstMatrixView m);

void encode_row_checksum_into(ConstMatrixView m, std::span<double> out);
void encode_col_checksum_into(ConstMatrixView m, std::span<double> out);

/// Applies a rank-k update C += scale * A * B to the checksums only:
///   row_sums += scale * A (B e),   col_sums += scale * (e^T A) B.
/// Inner sums run in increasing index order from 0.0; the fused level-3
/// kernels reproduce exactly this order.
void update_checksums_rank_k(ChecksumState& cs, ConstMatrixView a_panel, ConstMatrixView b_panel,
                             double scale = 1.0);

/// Indices i with |row_ref[i] - row_sums[i]| over threshold.
std::vector<std::size_t> disagreeing_rows(const ChecksumState& cs, std::span<const double> row_ref,
                                          const ToleranceConfig& tol);
std::vector<std::size_t> disagreeing_cols(const ChecksumState& cs, std::span<const double> col_ref,
                                          const ToleranceConfig& tol);

/// Classifies a verification given already-known row disagreements and the
/// column reference sums.
VerifyOutcome classify(const ChecksumState& cs, std::span<const double> row_ref,
                       std::span<const double> col_ref, std::vector<std::size_t> bad_rows,
                       const ToleranceConfig& tol);

/// Row pass first; `col_ref()` is only invoked when some row disagrees.
template <class ColRefFn>
VerifyOutcome compare_checksums(const ChecksumState& cs, std::span<const double> row_ref,
                                ColRefFn&& col_ref, const ToleranceConfig& tol) {
  auto bad_rows = disagreeing_rows(cs, row_ref, tol);
  if (bad_rows.empty()) return {};
  std::span<const double> cols = col_ref();
  return classify(cs, row_ref, cols, std::move(bad_rows), tol);
}

/// Recomputes reference sums from C and compares them against `cs`.
/// Column references are computed only when the row pass finds a disagreement.
VerifyOutcome verify_checksums(ConstMatrixView c, const ChecksumState& cs, const ToleranceConfig& tol,
                               VerifyStats* stats = nullptr);

/// C(i, j) -= magnitude. Throws DimensionError when (i, j) is out of range.
void correct_single_error(MatrixView c, std::size_t i, std::size_t j, double magnitude);

}  // namespace ftblas::abft
