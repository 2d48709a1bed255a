#pragma once

// Level-1 routines. Reductions (dot, nrm2) accumulate element i into lane
// i % 8 of an eight-wide accumulator bank, in increasing i, and fold the
// lanes left to right at the end. The FT variants use the same order, so a
// fault-free FT call is bitwise identical to its plain counterpart.

#include "ftblas/core.hpp"
#include "ftblas/dmr.hpp"

namespace ftblas {

/// x := alpha * x
void scal(double alpha, VectorView x);

/// y := alpha * x + y
void axpy(double alpha, ConstVectorView x, VectorView y);

double dot(ConstVectorView x, ConstVectorView y);

/// sqrt(sum x_i^2), no overflow rescaling: |x_i| around 1e154 and beyond is
/// out of contract.
double nrm2(ConstVectorView x);

FtReport scal_ft(double alpha, VectorView x, const dmr::VerificationBlockConfig& cfg = {},
                 dmr::FaultHook* hook = nullptr);
FtReport axpy_ft(double alpha, ConstVectorView x, VectorView y,
                 const dmr::VerificationBlockConfig& cfg = {}, dmr::FaultHook* hook = nullptr);
FtResult<double> dot_ft(ConstVectorView x, ConstVectorView y,
                        const dmr::VerificationBlockConfig& cfg = {}, dmr::FaultHook* hook = nullptr);
FtResult<double> nrm2_ft(ConstVectorView x, const dmr::VerificationBlockConfig& cfg = {},
                         dmr::FaultHook* hook = nullptr);

}  // namespace ftblas
