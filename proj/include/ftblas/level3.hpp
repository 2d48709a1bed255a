#pragma once

// Level-3 routines: blocked, packed GEMM and TRSM (lower, non-transposed,
// non-unit, left side) plus their checksum-protected variants.
//
// Loop nest (BLIS order): jc over NC columns of C, pc over KC-deep slices of
// the inner dimension, ic over MC rows. Each (jc, pc) pair is one rank-KC
// step. The micro-kernel accumulates an MR x NR tile from +0.0 with fmadd in
// increasing p and then writes c := c + alpha * acc, so the value of every
// element depends on KC but not on MC, NC, MR or NR.
//
// gemm_ft keeps row and column checksums of the current NC panel of C. The
// encoding is fused into the beta scaling pass, the checksum update terms
// are produced while packing (B^p e during B packing, A (B^p e) and e^T A
// during A packing), and the reference sums are accumulated from the C values
// as the macro-kernel writes them back. Every rank-KC step ends with one
// verification.

#include <cstddef>
#include <span>
#include <vector>

#include "ftblas/abft.hpp"
#include "ftblas/core.hpp"
#include "ftblas/dmr.hpp"

namespace ftblas {

/// MC x KC block of A in MR-row slivers: element (i, p) sits at
/// (i / mr) * (mr * depth) + p * mr + i % mr. Rows past `rows` are zero.
struct PackedPanelA {
  std::vector<double> buffer;
  std::size_t rows = 0;
  std::size_t depth = 0;
  std::size_t mr = 0;

  [[nodiscard]] std::size_t slivers() const noexcept { return mr == 0 ? 0 : (rows + mr - 1) / mr; }
  [[nodiscard]] const double* sliver(std::size_t s) const noexcept {
    return buffer.data() + s * mr * depth;
  }
  [[nodiscard]] double at(std::size_t i, std::size_t p) const noexcept {
    return buffer[(i / mr) * (mr * depth) + p * mr + i % mr];
  }
};

/// KC x NC block of B in NR-column slivers: element (p, j) sits at
/// (j / nr) * (nr * depth) + p * nr + j % nr. Columns past `cols` are zero.
struct PackedPanelB {
  std::vector<double> buffer;
  std::size_t depth = 0;
  std::size_t cols = 0;
  std::size_t nr = 0;

  [[nodiscard]] std::size_t slivers() const noexcept { return nr == 0 ? 0 : (cols + nr - 1) / nr; }
  [[nodiscard]] double* sliver(std::size_t s) noexcept { return buffer.data() + s * nr * depth; }
  [[nodiscard]] const double* sliver(std::size_t s) const noexcept {
    return buffer.data() + s * nr * depth;
  }
  [[nodiscard]] double at(std::size_t p, std::size_t j) const noexcept {
    return buffer[(j / nr) * (nr * depth) + p * nr + j % nr];
  }
};

/// Per-step checksum terms produced by the fused packing and macro-kernel.
/// All sums run in increasing index order from 0.0, matching
/// abft::update_checksums_rank_k and abft::encode_*_checksum bit for bit.
struct FusedChecksumAccumulators {
  std::vector<double> be;       ///< B^p e, by panel row p
  std::vector<double> w;        ///< e^T A over the rows packed so far, by p
  std::vector<double> row_upd;  ///< A (B^p e), by C row
  std::vector<double> col_upd;  ///< (e^T A) B^p, by C column
  std::vector<double> row_ref;  ///< C e of the written values
  std::vector<double> col_ref;  ///< e^T C of the written values

  /// Sizes everything for an m x n panel and a depth-k step; zeroes all but be.
  void reset(std::size_t m, std::size_t n, std::size_t k);
};

/// Throws DimensionError when the block exceeds MC x KC.
void pack_a(ConstMatrixView a_block, const BlockingParams& params, PackedPanelA& out);
PackedPanelA pack_a(ConstMatrixView a_block, const BlockingParams& params);
/// Throws DimensionError when the block exceeds KC x NC.
void pack_b(ConstMatrixView b_block, const BlockingParams& params, PackedPanelB& out);
PackedPanelB pack_b(ConstMatrixView b_block, const BlockingParams& params);

/// pack_b that also sets acc.be = B^p e (resized to the block depth).
void pack_b_fused(ConstMatrixView b_block, const BlockingParams& params, PackedPanelB& out,
                  FusedChecksumAccumulators& acc);
/// pack_a that also adds A(i, p) into acc.w[p] and sets
/// acc.row_upd[row_offset + i] = sum_p A(i, p) * acc.be[p]. acc must have
/// been reset for the step and acc.be filled.
void pack_a_fused(ConstMatrixView a_block, const BlockingParams& params, PackedPanelA& out,
                  FusedChecksumAccumulators& acc, std::size_t row_offset);

/// Lower-triangular diagonal block with reciprocal diagonal; entries above
/// the diagonal are stored as zero. Throws SingularMatrixError on a zero pivot.
void pack_a_triangular(ConstMatrixView a_diag, const BlockingParams& params, PackedPanelA& out);

/// C := C + alpha * unpack(Ap) * unpack(Bp), one MR x NR register tile at a time.
void gemm_macro_kernel(MatrixView c, const PackedPanelA& ap, const PackedPanelB& bp,
                       const BlockingParams& params, double alpha = 1.0);

/// Solves unpack(Ap) X = B in place for a diagonal block packed by
/// pack_a_triangular. Solved values go to both B and Bp.
void trsm_macro_kernel(MatrixView b_block, const PackedPanelA& ap, PackedPanelB& bp,
                       const BlockingParams& params);

/// C := alpha * A B + beta * C. beta == 0 ignores the contents of C.
void gemm(double alpha, ConstMatrixView a, ConstMatrixView b, double beta, MatrixView c,
          const BlockingParams& params = {});

/// B := alpha * A^{-1} B, A lower triangular n x n. Throws SingularMatrixError
/// (B untouched) on a zero pivot.
void trsm(double alpha, ConstMatrixView a, MatrixView b, const BlockingParams& params = {});

// ---------------------------------------------------------------------------
// Fault tolerance
// ---------------------------------------------------------------------------

/// Corruption of one C element inside a protected step, in coordinates local
/// to the protected panel. bit >= 0 flips that bit, otherwise delta is added.
struct ElementFault {
  std::size_t i = 0;
  std::size_t j = 0;
  double delta = 0.0;
  int bit = -1;

  [[nodiscard]] double apply(double v) const noexcept;
};

/// Source of element corruptions, consulted once per ABFT step.
class ElementFaultSource {
 public:
  virtual ~ElementFaultSource() = default;
  virtual void faults_for(std::size_t iteration, std::size_t rows, std::size_t cols,
                          std::vector<ElementFault>& out) = 0;
};

/// State of one verification, captured before any correction.
struct AbftStepRecord {
  std::size_t col0 = 0;
  std::size_t depth0 = 0;
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  std::vector<double> row_ref;
  std::vector<double> col_ref;
};

struct GemmFtOptions {
  BlockingParams blocking;
  ToleranceConfig tol;
  ElementFaultSource* faults = nullptr;
  std::vector<AbftStepRecord>* trace = nullptr;
};

struct TrsmFtOptions {
  BlockingParams blocking;
  ToleranceConfig tol;
  ElementFaultSource* faults = nullptr;  ///< trailing-update (ABFT) steps
  dmr::FaultHook* hook = nullptr;        ///< diagonal tiles, one chunk each
};

/// Fused online ABFT GEMM. On a single disagreeing row/column pair the element
/// is corrected in place. Otherwise the disagreeing rows are recomputed from
/// the inputs (a beta * C copy is kept when beta != 0) and re-verified; a
/// second disagreement is reported unrecoverable and ends the call.
FtReport gemm_ft(double alpha, ConstMatrixView a, ConstMatrixView b, double beta, MatrixView c,
                 const GemmFtOptions& opts = {});

/// Same protocol with checksums encoded, updated and referenced in separate
/// passes over C (abft::update_checksums_rank_k, abft::verify_checksums). Faults
/// are added to C after each step's macro-kernel.
FtReport gemm_abft_unfused(double alpha, ConstMatrixView a, ConstMatrixView b, double beta,
                           MatrixView c, const GemmFtOptions& opts = {});

/// TRSM with the trailing gemm updates under ABFT (the trailing panel is
/// encoded at the start of every step) and each diagonal MR x NR tile solved
/// under DMR.
FtReport trsm_ft(double alpha, ConstMatrixView a, MatrixView b, const TrsmFtOptions& opts = {});

/// ABFT steps gemm_ft verifies for C m x n with inner dimension k.
std::size_t gemm_ft_steps(std::size_t m, std::size_t n, std::size_t k, const BlockingParams& params);
/// ABFT steps (trailing updates) of trsm_ft for A n x n and B n x m.
std::size_t trsm_ft_steps(std::size_t n, std::size_t m, const BlockingParams& params);
/// DMR chunks (diagonal tiles) of trsm_ft for A n x n and B n x m.
std::size_t trsm_ft_tiles(std::size_t n, std::size_t m, const BlockingParams& params);

}  // namespace ftblas
