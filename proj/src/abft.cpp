#include "ftblas/abft.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ftblas::abft {

void encode_row_checksum_into(ConstMatrixView m, std::span<double> out) {
  if (out.size() != m.rows()) throw DimensionError("row checksum length must equal rows");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double* col = &m(0, j);
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] += col[i];
  }
}

void encode_col_checksum_into(ConstMatrixView m, std::span<double> out) {
  if (out.size() != m.cols()) throw DimensionError("column checksum length must equal cols");
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double* col = &m(0, j);
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += col[i];
    out[j] = s;
  }
}

std::vector<double> encode_row_checksum(ConstMatrixView m) {
  std::vector<double> out(m.rows());
  encode_row_checksum_into(m, out);
  return out;
}

std::vector<double> encode_col_checksum(ConstMatrixView m) {
  std::vector<double> out(m.cols());
  encode_col_checksum_into(m, out);
  return out;
}

ChecksumState ChecksumState::encode(ConstMatrixView c) {
  ChecksumState cs;
  cs.row_sums = encode_row_checksum(c);
  cs.col_sums = encode_col_checksum(c);
  return cs;
}

void update_checksums_rank_k(ChecksumState& cs, ConstMatrixView a_panel, ConstMatrixView b_panel,
                             double scale) {
  const std::size_t m = a_panel.rows();
  const std::size_t k = a_panel.cols();
  const std::size_t n = b_panel.cols();
  if (k == 0) throw DimensionError("rank-k update needs k >= 1");
  if (b_panel.rows() != k) throw DimensionError("panel inner dimensions differ");
  if (cs.rows() != m || cs.cols() != n) throw DimensionError("checksum state does not match panels");

  // B e and e^T A.
  std::vector<double> be(k, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t p = 0; p < k; ++p) be[p] += b_panel(p, j);
  std::vector<double> w(k, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += a_panel(i, p);
    w[p] = s;
  }

  std::vector<double> t(m, 0.0);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t i = 0; i < m; ++i) t[i] += a_panel(i, p) * be[p];
  for (std::size_t i = 0; i < m; ++i) cs.row_sums[i] += scale * t[i];

  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += w[p] * b_panel(p, j);
    cs.col_sums[j] += scale * s;
  }
  cs.depth += k;
}

std::vector<std::size_t> disagreeing_rows(const ChecksumState& cs, std::span<const double> row_ref,
                                          const ToleranceConfig& tol) {
  if (row_ref.size() != cs.rows()) throw DimensionError("row reference length mismatch");
  std::vector<std::size_t> bad;
  const double k_eff = cs.row_k_eff();
  for (std::size_t i = 0; i < row_ref.size(); ++i)
    if (tol.exceeds(row_ref[i] - cs.row_sums[i], cs.row_sums[i], k_eff)) bad.push_back(i);
  return bad;
}

std::vector<std::size_t> disagreeing_cols(const ChecksumState& cs, std::span<const double> col_ref,
                                          const ToleranceConfig& tol) {
  if (col_ref.size() != cs.cols()) throw DimensionError("column reference length mismatch");
  std::vector<std::size_t> bad;
  const double k_eff = cs.col_k_eff();
  for (std::size_t j = 0; j < col_ref.size(); ++j)
    if (tol.exceeds(col_ref[j] - cs.col_sums[j], cs.col_sums[j], k_eff)) bad.push_back(j);
  return bad;
}

VerifyOutcome classify(const ChecksumState& cs, std::span<const double> row_ref,
                       std::span<const double> col_ref, std::vector<std::size_t> bad_rows,
                       const ToleranceConfig& tol) {
  VerifyOutcome out;
  if (bad_rows.empty()) return out;
  out.bad_rows = std::move(bad_rows);
  out.bad_cols = disagreeing_cols(cs, col_ref, tol);
  out.kind = VerifyOutcome::Kind::ambiguous;
  if (out.bad_rows.size() != 1 || out.bad_cols.size() != 1) return out;

  const std::size_t i = out.bad_rows.front();
  const std::size_t j = out.bad_cols.front();
  const double d_row = row_ref[i] - cs.row_sums[i];
  const double d_col = col_ref[j] - cs.col_sums[j];
  const double scale = std::max(std::abs(cs.row_sums[i]), std::abs(cs.col_sums[j]));
  const double k_eff = std::max(cs.row_k_eff(), cs.col_k_eff());
  if (tol.exceeds(d_row - d_col, scale, k_eff)) return out;

  out.kind = VerifyOutcome::Kind::single_error;
  out.i = i;
  out.j = j;
  out.magnitude = d_row;
  return out;
}

VerifyOutcome verify_checksums(ConstMatrixView c, const ChecksumState& cs, const ToleranceConfig& tol,
                               VerifyStats* stats) {
  if (cs.rows() != c.rows() || cs.cols() != c.cols())
    throw DimensionError("checksum state does not match matrix");
  const auto row_ref = encode_row_checksum(c);
  if (stats) ++stats->row_reference_passes;
  std::vector<double> col_ref;
  return compare_checksums(
      cs, row_ref,
      [&]() -> std::span<const double> {
        col_ref = encode_col_checksum(c);
        if (stats) ++stats->col_reference_passes;
        return col_ref;
      },
      tol);
}

void correct_single_error(MatrixView c, std::size_t i, std::size_t j, double magnitude) {
  if (i >= c.rows() || j >= c.cols())
    throw DimensionError("correction index (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") outside " + std::to_string(c.rows()) + "x" + std::to_string(c.cols()));
  c(i, j) -= magnitude;
}

}  // namespace ftblas::abft
