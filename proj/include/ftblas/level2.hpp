#pragma once

// Level-2 routines (column-major, op(A) = A only).
//
// gemv walks A in quads of four rows. For every column j the four entries
// A(i..i+3, j) are multiplied by one load of x[j]; row r accumulates into
// lane j % 8 of its private eight-lane bank, and the lanes are folded left
// to right once the row quad is done:
//   y[i] = alpha * fold(acc_i) + beta * y[i]      (beta == 0: y ignored)
// A trailing group of fewer than four rows uses the same per-row order.
//
// trsv solves lower-triangular, non-unit systems in panels of four rows,
// left-looking: each panel first subtracts the already solved prefix through
// one gemv quad (alpha = -1, beta = 1), then forward-substitutes its 4x4
// diagonal block row by row with dot and a division by the pivot.

#include "ftblas/core.hpp"
#include "ftblas/dmr.hpp"

namespace ftblas {

inline constexpr std::size_t kGemvRowQuad = 4;
inline constexpr std::size_t kTrsvPanel = 4;

/// y := alpha * A x + beta * y
void gemv(double alpha, ConstMatrixView a, ConstVectorView x, double beta, VectorView y);

/// x := A^{-1} x, A lower triangular with a non-zero diagonal. Throws
/// SingularMatrixError (x untouched) on a zero pivot.
void trsv(ConstMatrixView a, VectorView x);

FtReport gemv_ft(double alpha, ConstMatrixView a, ConstVectorView x, double beta, VectorView y,
                 const dmr::VerificationBlockConfig& cfg = {}, dmr::FaultHook* hook = nullptr);

FtReport trsv_ft(ConstMatrixView a, VectorView x, const dmr::VerificationBlockConfig& cfg = {},
                 dmr::FaultHook* hook = nullptr);

}  // namespace ftblas
