#include "ftblas/level3.hpp"

#include <algorithm>
#include <string>

#if defined(__AVX2__)
#include <immintrin.h>
#endif

#include "ftblas/detail/arith.hpp"
#include "ftblas/level1.hpp"

namespace ftblas {
namespace {

using detail::fmadd;

constexpr std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// ---------------------------------------------------------------------------
// Micro-kernel. acc[j * MR + i] = sum_{p < kc} a[p * MR + i] * b[p * NR + j]
// ---------------------------------------------------------------------------

#if defined(__AVX2__) && defined(__FMA__)
// 8 x 4 tile in eight ymm accumulators; _mm256_fmadd_pd rounds exactly like
// fmadd, so this matches the portable loop bit for bit.
[[gnu::always_inline]] inline void micro_tile_8x4(std::size_t kc, const double* __restrict a,
                                                  const double* __restrict b, double* __restrict acc) {
  __m256d c00 = _mm256_setzero_pd(), c10 = _mm256_setzero_pd();
  __m256d c01 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
  __m256d c02 = _mm256_setzero_pd(), c12 = _mm256_setzero_pd();
  __m256d c03 = _mm256_setzero_pd(), c13 = _mm256_setzero_pd();
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256d a0 = _mm256_loadu_pd(a + p * 8);
    const __m256d a1 = _mm256_loadu_pd(a + p * 8 + 4);
    __m256d bj = _mm256_broadcast_sd(b + p * 4);
    c00 = _mm256_fmadd_pd(a0, bj, c00);
    c10 = _mm256_fmadd_pd(a1, bj, c10);
    bj = _mm256_broadcast_sd(b + p * 4 + 1);
    c01 = _mm256_fmadd_pd(a0, bj, c01);
    c11 = _mm256_fmadd_pd(a1, bj, c11);
    bj = _mm256_broadcast_sd(b + p * 4 + 2);
    c02 = _mm256_fmadd_pd(a0, bj, c02);
    c12 = _mm256_fmadd_pd(a1, bj, c12);
    bj = _mm256_broadcast_sd(b + p * 4 + 3);
    c03 = _mm256_fmadd_pd(a0, bj, c03);
    c13 = _mm256_fmadd_pd(a1, bj, c13);
  }
  _mm256_storeu_pd(acc + 0, c00);
  _mm256_storeu_pd(acc + 4, c10);
  _mm256_storeu_pd(acc + 8, c01);
  _mm256_storeu_pd(acc + 12, c11);
  _mm256_storeu_pd(acc + 16, c02);
  _mm256_storeu_pd(acc + 20, c12);
  _mm256_storeu_pd(acc + 24, c03);
  _mm256_storeu_pd(acc + 28, c13);
}
#endif

template <std::size_t MR, std::size_t NR>
[[gnu::always_inline]] inline void micro_tile(std::size_t kc, const double* __restrict a,
                                              const double* __restrict b, double* __restrict acc) {
#if defined(__AVX2__) && defined(__FMA__)
  if constexpr (MR == 8 && NR == 4) {
    micro_tile_8x4(kc, a, b, acc);
    return;
  }
#endif
  double c[MR * NR];
  for (std::size_t x = 0; x < MR * NR; ++x) c[x] = 0.0;
  for (std::size_t p = 0; p < kc; ++p) {
    const double* ap = a + p * MR;
    const double* bp = b + p * NR;
    for (std::size_t j = 0; j < NR; ++j) {
      const double bj = bp[j];
      for (std::size_t i = 0; i < MR; ++i) c[j * MR + i] = fmadd(ap[i], bj, c[j * MR + i]);
    }
  }
  for (std::size_t x = 0; x < MR * NR; ++x) acc[x] = c[x];
}

void micro_tile_generic(std::size_t mr, std::size_t nr, std::size_t kc, const double* a,
                        const double* b, double* acc) {
  std::fill_n(acc, mr * nr, 0.0);
  for (std::size_t p = 0; p < kc; ++p)
    for (std::size_t j = 0; j < nr; ++j) {
      const double bj = b[p * nr + j];
      for (std::size_t i = 0; i < mr; ++i) acc[j * mr + i] = fmadd(a[p * mr + i], bj, acc[j * mr + i]);
    }
}

inline void micro_tile_any(std::size_t mr, std::size_t nr, std::size_t kc, const double* a,
                           const double* b, double* acc) {
  if (mr == 8 && nr == 4)
    micro_tile<8, 4>(kc, a, b, acc);
  else
    micro_tile_generic(mr, nr, kc, a, b, acc);
}

// Calls tile(i0, j0, mv, nv, acc, mr) for every register tile, column slivers
// outermost so that each row sees its columns in increasing order and each
// column its rows.
template <std::size_t MR, std::size_t NR, class Tile>
void macro_loop_fixed(const PackedPanelA& ap, const PackedPanelB& bp, std::size_t m, std::size_t n,
                      Tile& tile) {
  alignas(64) double acc[MR * NR];
  for (std::size_t jr = 0; jr < n; jr += NR) {
    const std::size_t nv = std::min(NR, n - jr);
    const double* bs = bp.sliver(jr / NR);
    for (std::size_t ir = 0; ir < m; ir += MR) {
      micro_tile<MR, NR>(ap.depth, ap.sliver(ir / MR), bs, acc);
      tile(ir, jr, std::min(MR, m - ir), nv, static_cast<const double*>(acc), MR);
    }
  }
}

template <class Tile>
void macro_loop(const PackedPanelA& ap, const PackedPanelB& bp, std::size_t m, std::size_t n,
                Tile&& tile) {
  if (ap.mr == 8 && bp.nr == 4) {
    macro_loop_fixed<8, 4>(ap, bp, m, n, tile);
    return;
  }
  const std::size_t mr = ap.mr;
  const std::size_t nr = bp.nr;
  alignas(64) double acc[dmr::kMaxLanes];
  for (std::size_t jr = 0; jr < n; jr += nr) {
    const std::size_t nv = std::min(nr, n - jr);
    for (std::size_t ir = 0; ir < m; ir += mr) {
      micro_tile_generic(mr, nr, ap.depth, ap.sliver(ir / mr), bp.sliver(jr / nr), acc);
      tile(ir, jr, std::min(mr, m - ir), nv, static_cast<const double*>(acc), mr);
    }
  }
}

// ---------------------------------------------------------------------------
// Packing
// ---------------------------------------------------------------------------

template <class OnElement>
void pack_a_impl(ConstMatrixView a, std::size_t mr, PackedPanelA& out, OnElement&& on) {
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  out.rows = m;
  out.depth = k;
  out.mr = mr;
  out.buffer.resize(ceil_div(m, mr) * mr * k);
  for (std::size_t s = 0, i0 = 0; i0 < m; ++s, i0 += mr) {
    const std::size_t mv = std::min(mr, m - i0);
    double* dst = out.buffer.data() + s * mr * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* src = a.data() + i0 + p * a.ld();
      double* d = dst + p * mr;
      for (std::size_t ii = 0; ii < mv; ++ii) {
        d[ii] = src[ii];
        on(i0 + ii, p, src[ii]);
      }
      for (std::size_t ii = mv; ii < mr; ++ii) d[ii] = 0.0;
    }
  }
}

template <class OnElement>
void pack_b_impl(ConstMatrixView b, std::size_t nr, PackedPanelB& out, OnElement&& on) {
  const std::size_t k = b.rows();
  const std::size_t n = b.cols();
  out.depth = k;
  out.cols = n;
  out.nr = nr;
  out.buffer.resize(ceil_div(n, nr) * nr * k);
  for (std::size_t s = 0, j0 = 0; j0 < n; ++s, j0 += nr) {
    const std::size_t nv = std::min(nr, n - j0);
    double* dst = out.buffer.data() + s * nr * k;
    for (std::size_t jj = 0; jj < nv; ++jj) {
      const double* src = b.data() + (j0 + jj) * b.ld();
      for (std::size_t p = 0; p < k; ++p) {
        dst[p * nr + jj] = src[p];
        on(p, j0 + jj, src[p]);
      }
    }
    for (std::size_t jj = nv; jj < nr; ++jj)
      for (std::size_t p = 0; p < k; ++p) dst[p * nr + jj] = 0.0;
  }
}

struct Ignore {
  void operator()(std::size_t, std::size_t, double) const noexcept {}
};

void check_pack_a(ConstMatrixView a, const BlockingParams& params) {
  params.validate();
  if (a.rows() > params.mc || a.cols() > params.kc)
    throw DimensionError("A block " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " exceeds MC x KC");
}

void check_pack_b(ConstMatrixView b, const BlockingParams& params) {
  params.validate();
  if (b.rows() > params.kc || b.cols() > params.nc)
    throw DimensionError("B block " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                         " exceeds KC x NC");
}

// be[p] = sum_j Bp(p, j), increasing j.
void panel_row_sums(const PackedPanelB& bp, std::vector<double>& be) {
  be.assign(bp.depth, 0.0);
  for (std::size_t s = 0, j0 = 0; j0 < bp.cols; ++s, j0 += bp.nr) {
    const std::size_t nv = std::min(bp.nr, bp.cols - j0);
    const double* src = bp.sliver(s);
    for (std::size_t jj = 0; jj < nv; ++jj)
      for (std::size_t p = 0; p < bp.depth; ++p) be[p] += src[p * bp.nr + jj];
  }
}

// ---------------------------------------------------------------------------
// Triangular tiles
// ---------------------------------------------------------------------------

// Solves rows [i0, i0 + mv) x columns [j0, j0 + nv) of a diagonal block whose
// earlier row slivers are already solved in bp. out[jj * mv + ii].
void solve_tile(const PackedPanelA& ap, const PackedPanelB& bp, ConstMatrixView b, std::size_t i0,
                std::size_t mv, std::size_t j0, std::size_t nv, double* out) {
  const std::size_t mr = ap.mr;
  const double* as = ap.sliver(i0 / mr);
  alignas(64) double acc[dmr::kMaxLanes];
  micro_tile_any(mr, bp.nr, i0, as, bp.sliver(j0 / bp.nr), acc);
  for (std::size_t jj = 0; jj < nv; ++jj) {
    double* x = out + jj * mv;
    for (std::size_t ii = 0; ii < mv; ++ii) {
      double t = b(i0 + ii, j0 + jj) - acc[jj * mr + ii];
      for (std::size_t q = 0; q < ii; ++q) t -= as[(i0 + q) * mr + ii] * x[q];
      x[ii] = t * as[(i0 + ii) * mr + ii];
    }
  }
}

void commit_tile(MatrixView b, PackedPanelB& bp, std::size_t i0, std::size_t mv, std::size_t j0,
                 std::size_t nv, const double* values) {
  double* bs = bp.sliver(j0 / bp.nr);
  for (std::size_t jj = 0; jj < nv; ++jj)
    for (std::size_t ii = 0; ii < mv; ++ii) {
      const double v = values[jj * mv + ii];
      b(i0 + ii, j0 + jj) = v;
      bs[(i0 + ii) * bp.nr + jj] = v;
    }
}

// ---------------------------------------------------------------------------
// Argument checks and scaling
// ---------------------------------------------------------------------------

void check_gemm(ConstMatrixView a, ConstMatrixView b, ConstMatrixView c) {
  if (a.cols() != b.rows())
    throw DimensionError("gemm: A is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         ", B is " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  if (c.rows() != a.rows() || c.cols() != b.cols())
    throw DimensionError("gemm: C must be " + std::to_string(a.rows()) + "x" +
                         std::to_string(b.cols()));
}

void check_trsm(ConstMatrixView a, ConstMatrixView b) {
  if (a.rows() != a.cols()) throw DimensionError("trsm: A must be square");
  if (b.rows() != a.rows()) throw DimensionError("trsm: B must have as many rows as A");
  for (std::size_t i = 0; i < a.rows(); ++i)
    if (a(i, i) == 0.0) throw SingularMatrixError(i);
}

inline double beta_scaled(double beta, double v) { return beta == 0.0 ? 0.0 : beta * v; }

void scale_matrix(double beta, MatrixView c) {
  if (beta == 1.0) return;
  for (std::size_t j = 0; j < c.cols(); ++j) {
    double* col = &c(0, j);
    for (std::size_t i = 0; i < c.rows(); ++i) col[i] = beta_scaled(beta, col[i]);
  }
}

// ---------------------------------------------------------------------------
// ABFT step machinery shared by gemm_ft, gemm_abft_unfused and trsm_ft
// ---------------------------------------------------------------------------

struct FtContext {
  const BlockingParams& params;
  const ToleranceConfig& tol;
  ElementFaultSource* source;
  std::vector<AbftStepRecord>* trace;
  FtReport& report;
  std::size_t iteration = 0;
  std::vector<ElementFault> faults;
  FusedChecksumAccumulators acc;
  PackedPanelA ap;

  FtContext(const BlockingParams& p, const ToleranceConfig& t, ElementFaultSource* src,
            std::vector<AbftStepRecord>* tr, FtReport& rep)
      : params(p), tol(t), source(src), trace(tr), report(rep) {}

  void draw_faults(std::size_t rows, std::size_t cols) {
    faults.clear();
    if (source == nullptr) return;
    source->faults_for(iteration, rows, cols, faults);
    for (const auto& f : faults)
      if (f.i >= rows || f.j >= cols) throw DimensionError("element fault outside the protected panel");
  }

  void record(std::size_t col0, std::size_t depth0, const abft::ChecksumState& cs) {
    if (trace == nullptr) return;
    trace->push_back({col0, depth0, cs.row_sums, cs.col_sums, acc.row_ref, acc.col_ref});
  }
};

inline double apply_faults(std::span<const ElementFault> faults, std::size_t i, std::size_t j,
                           double v) {
  for (const auto& f : faults)
    if (f.i == i && f.j == j) v = f.apply(v);
  return v;
}

bool tile_has_fault(std::span<const ElementFault> faults, std::size_t i0, std::size_t mv,
                    std::size_t j0, std::size_t nv) {
  for (const auto& f : faults)
    if (f.i >= i0 && f.i < i0 + mv && f.j >= j0 && f.j < j0 + nv) return true;
  return false;
}

// Acts on a verification outcome; `recompute(rows)` rewrites the listed panel
// rows from the inputs. Returns false once the step is unrecoverable.
template <class Recompute>
bool resolve(FtContext& ctx, MatrixView c, const abft::ChecksumState& cs,
             const abft::VerifyOutcome& outcome, std::size_t row0, std::size_t col0,
             Recompute&& recompute) {
  const std::size_t iteration = ctx.iteration++;
  if (outcome.clean()) return true;
  FtReport& report = ctx.report;
  ++report.detected;
  if (outcome.kind == abft::VerifyOutcome::Kind::single_error) {
    abft::correct_single_error(c, outcome.i, outcome.j, outcome.magnitude);
    ++report.corrected;
    report.events.push_back({iteration, static_cast<std::ptrdiff_t>(row0 + outcome.i),
                             static_cast<std::ptrdiff_t>(col0 + outcome.j), outcome.magnitude,
                             FtResolution::corrected});
    return true;
  }

  const std::size_t i = outcome.bad_rows.front();
  const double magnitude = ctx.acc.row_ref[i] - cs.row_sums[i];
  const std::ptrdiff_t col =
      outcome.bad_cols.size() == 1 ? static_cast<std::ptrdiff_t>(col0 + outcome.bad_cols.front()) : -1;
  recompute(std::span<const std::size_t>(outcome.bad_rows));
  abft::encode_row_checksum_into(c, ctx.acc.row_ref);
  abft::encode_col_checksum_into(c, ctx.acc.col_ref);
  const auto again = abft::compare_checksums(
      cs, ctx.acc.row_ref, [&]() -> std::span<const double> { return ctx.acc.col_ref; }, ctx.tol);
  const bool ok = again.clean();
  report.events.push_back({iteration, static_cast<std::ptrdiff_t>(row0 + i), col, magnitude,
                           ok ? FtResolution::corrected : FtResolution::unrecoverable});
  if (ok)
    ++report.corrected;
  else
    ++report.unrecoverable;
  return ok;
}

// One fused rank-kb step C += alpha * A * Bp over every MC row block of the
// panel, followed by its verification. ctx.acc.be must hold Bp e and cs the
// checksums of C before the step.
template <class Recompute>
bool fused_step(FtContext& ctx, MatrixView c, ConstMatrixView a, const PackedPanelB& bp,
                double alpha, abft::ChecksumState& cs, std::size_t row0, std::size_t col0,
                std::size_t depth0, Recompute&& recompute) {
  const std::size_t m = c.rows();
  const std::size_t n = c.cols();
  const std::size_t kb = a.cols();
  FusedChecksumAccumulators& acc = ctx.acc;
  acc.reset(m, n, kb);
  ctx.draw_faults(m, n);
  const std::span<const ElementFault> faults(ctx.faults);

  for (std::size_t ic = 0; ic < m; ic += ctx.params.mc) {
    const std::size_t mb = std::min(ctx.params.mc, m - ic);
    pack_a_fused(a.block(ic, 0, mb, kb), ctx.params, ctx.ap, acc, ic);
    MatrixView cb = c.block(ic, 0, mb, n);
    double* row_ref = acc.row_ref.data() + ic;
    double* col_ref = acc.col_ref.data();
    macro_loop(ctx.ap, bp, mb, n,
               [&](std::size_t i0, std::size_t j0, std::size_t mv, std::size_t nv, const double* t,
                   std::size_t ldt) {
                 const bool hit = !faults.empty() && tile_has_fault(faults, ic + i0, mv, j0, nv);
                 for (std::size_t jj = 0; jj < nv; ++jj) {
                   double* col = &cb(i0, j0 + jj);
                   const double* tc = t + jj * ldt;
                   double* rr = row_ref + i0;
                   double cs_j = col_ref[j0 + jj];
                   for (std::size_t ii = 0; ii < mv; ++ii) {
                     double v = col[ii] + alpha * tc[ii];
                     if (hit) v = apply_faults(faults, ic + i0 + ii, j0 + jj, v);
                     col[ii] = v;
                     rr[ii] += v;
                     cs_j += v;
                   }
                   col_ref[j0 + jj] = cs_j;
                 }
               });
  }

  // (e^T A) Bp
  for (std::size_t s = 0, j0 = 0; j0 < n; ++s, j0 += bp.nr) {
    const std::size_t nv = std::min(bp.nr, n - j0);
    const double* src = bp.sliver(s);
    for (std::size_t jj = 0; jj < nv; ++jj) {
      double sum = 0.0;
      for (std::size_t p = 0; p < kb; ++p) sum += acc.w[p] * src[p * bp.nr + jj];
      acc.col_upd[j0 + jj] = sum;
    }
  }
  for (std::size_t i = 0; i < m; ++i) cs.row_sums[i] += alpha * acc.row_upd[i];
  for (std::size_t j = 0; j < n; ++j) cs.col_sums[j] += alpha * acc.col_upd[j];
  cs.depth += kb;

  ctx.record(col0, depth0, cs);
  const auto outcome = abft::compare_checksums(
      cs, acc.row_ref, [&]() -> std::span<const double> { return acc.col_ref; }, ctx.tol);
  return resolve(ctx, c, cs, outcome, row0, col0, recompute);
}

// Rewrites rows of a panel as base(i, j) followed by the rank-kc steps
// [0, k_end) in the blocked kernel's order.
template <class Base>
void recompute_rows(MatrixView c, std::span<const std::size_t> rows, Base&& base, ConstMatrixView a,
                    ConstMatrixView b, std::size_t k_end, std::size_t kc, double alpha) {
  for (const std::size_t i : rows)
    for (std::size_t j = 0; j < c.cols(); ++j) {
      double v = base(i, j);
      for (std::size_t s = 0; s < k_end; s += kc) {
        const std::size_t e = std::min(s + kc, k_end);
        double t = 0.0;
        for (std::size_t p = s; p < e; ++p) t = fmadd(a(i, p), b(p, j), t);
        v = v + alpha * t;
      }
      c(i, j) = v;
    }
}

// Scales C by beta column by column while encoding the panel checksums and
// keeping the scaled values for recovery when beta != 0.
void scale_and_encode(double beta, MatrixView cp, abft::ChecksumState& cs, Matrix* keep,
                      std::size_t col0) {
  for (std::size_t j = 0; j < cp.cols(); ++j) {
    double* col = &cp(0, j);
    double s = 0.0;
    for (std::size_t i = 0; i < cp.rows(); ++i) {
      const double v = beta_scaled(beta, col[i]);
      col[i] = v;
      cs.row_sums[i] += v;
      s += v;
    }
    cs.col_sums[j] = s;
    if (keep != nullptr) std::copy(col, col + cp.rows(), &(*keep)(0, col0 + j));
  }
}

template <class Hook>
FtReport trsm_ft_impl(double alpha, ConstMatrixView a, MatrixView b, const TrsmFtOptions& opts,
                      Hook& hook) {
  const BlockingParams& params = opts.blocking;
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  FtReport report;
  if (n == 0 || m == 0) return report;

  if (alpha == 0.0) {
    scale_matrix(alpha, b);
    return report;
  }
  for (std::size_t j = 0; j < m; ++j) report.merge(scal_ft(alpha, b.col(j)));
  if (!report.ok()) return report;

  Matrix b0(n, m);
  for (std::size_t j = 0; j < m; ++j) std::copy_n(&b(0, j), n, &b0(0, j));

  FtContext ctx{params, opts.tol, opts.faults, nullptr, report};
  PackedPanelA apd;
  PackedPanelB bp;
  std::size_t tile = 0;

  for (std::size_t jc = 0; jc < m; jc += params.nc) {
    const std::size_t nb = std::min(params.nc, m - jc);
    for (std::size_t pc = 0; pc < n; pc += params.kc) {
      const std::size_t kb = std::min(params.kc, n - pc);
      pack_a_triangular(a.block(pc, pc, kb, kb), params, apd);
      pack_b(b.block(pc, jc, kb, nb), params, bp);

      MatrixView bd = b.block(pc, jc, kb, nb);
      for (std::size_t jr = 0; jr < nb; jr += params.nr) {
        const std::size_t nv = std::min(params.nr, nb - jr);
        for (std::size_t ir = 0; ir < kb; ir += params.mr, ++tile) {
          const std::size_t mv = std::min(params.mr, kb - ir);
          const std::size_t id = tile;
          const auto out = dmr::protected_block_map_with(
              mv * nv,
              [&](std::size_t, std::span<double> o) { solve_tile(apd, bp, bd, ir, mv, jr, nv, o.data()); },
              [&](std::size_t, std::span<const double> v) { commit_tile(bd, bp, ir, mv, jr, nv, v.data()); },
              dmr::VerificationBlockConfig{mv * nv, 1},
              dmr::shift_hook(hook, id));
          report.detected += out.detected;
          report.corrected += out.recovered;
          for (const auto& e : out.events)
            report.events.push_back({id, static_cast<std::ptrdiff_t>(pc + ir),
                                     static_cast<std::ptrdiff_t>(jc + jr), e.magnitude,
                                     e.recovered ? FtResolution::corrected : FtResolution::unrecoverable});
          if (out.fatal()) {
            ++report.unrecoverable;
            return report;
          }
        }
      }

      const std::size_t r0 = pc + kb;
      if (r0 >= n) continue;
      MatrixView trail = b.block(r0, jc, n - r0, nb);
      auto cs = abft::ChecksumState::encode(trail);
      panel_row_sums(bp, ctx.acc.be);
      const ConstMatrixView a_rows = a.block(r0, 0, n - r0, r0);
      const ConstMatrixView x = b.block(0, jc, r0, nb);
      auto recompute = [&](std::span<const std::size_t> rows) {
        recompute_rows(
            trail, rows, [&](std::size_t i, std::size_t j) { return b0(r0 + i, jc + j); }, a_rows, x,
            r0, params.kc, -1.0);
      };
      if (!fused_step(ctx, trail, a.block(r0, pc, n - r0, kb), bp, -1.0, cs, r0, jc, pc, recompute))
        return report;
    }
  }
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API
// ---------------------------------------------------------------------------

void FusedChecksumAccumulators::reset(std::size_t m, std::size_t n, std::size_t k) {
  be.resize(k, 0.0);
  w.assign(k, 0.0);
  row_upd.assign(m, 0.0);
  col_upd.assign(n, 0.0);
  row_ref.assign(m, 0.0);
  col_ref.assign(n, 0.0);
}

double ElementFault::apply(double v) const noexcept {
  if (bit >= 0) return detail::from_bits(detail::bits_of(v) ^ (std::uint64_t{1} << bit));
  const double r = v + delta;
  // An increment absorbed by rounding would be no fault at all.
  if (detail::bits_of(r) == detail::bits_of(v)) return detail::from_bits(detail::bits_of(v) ^ 1U);
  return r;
}

void pack_a(ConstMatrixView a_block, const BlockingParams& params, PackedPanelA& out) {
  check_pack_a(a_block, params);
  pack_a_impl(a_block, params.mr, out, Ignore{});
}

PackedPanelA pack_a(ConstMatrixView a_block, const BlockingParams& params) {
  PackedPanelA out;
  pack_a(a_block, params, out);
  return out;
}

void pack_b(ConstMatrixView b_block, const BlockingParams& params, PackedPanelB& out) {
  check_pack_b(b_block, params);
  pack_b_impl(b_block, params.nr, out, Ignore{});
}

PackedPanelB pack_b(ConstMatrixView b_block, const BlockingParams& params) {
  PackedPanelB out;
  pack_b(b_block, params, out);
  return out;
}

void pack_b_fused(ConstMatrixView b_block, const BlockingParams& params, PackedPanelB& out,
                  FusedChecksumAccumulators& acc) {
  check_pack_b(b_block, params);
  acc.be.assign(b_block.rows(), 0.0);
  double* be = acc.be.data();
  pack_b_impl(b_block, params.nr, out, [be](std::size_t p, std::size_t, double v) { be[p] += v; });
}

void pack_a_fused(ConstMatrixView a_block, const BlockingParams& params, PackedPanelA& out,
                  FusedChecksumAccumulators& acc, std::size_t row_offset) {
  check_pack_a(a_block, params);
  const std::size_t k = a_block.cols();
  if (acc.be.size() != k || acc.w.size() != k || acc.row_upd.size() < row_offset + a_block.rows())
    throw DimensionError("fused accumulators not sized for this A block");
  const double* be = acc.be.data();
  double* w = acc.w.data();
  double* t = acc.row_upd.data() + row_offset;
  pack_a_impl(a_block, params.mr, out, [=](std::size_t i, std::size_t p, double v) {
    w[p] += v;
    t[i] += v * be[p];
  });
}

void pack_a_triangular(ConstMatrixView a_diag, const BlockingParams& params, PackedPanelA& out) {
  params.validate();
  const std::size_t n = a_diag.rows();
  if (a_diag.cols() != n) throw DimensionError("diagonal block must be square");
  if (n > params.kc) throw DimensionError("diagonal block exceeds KC");
  const std::size_t mr = params.mr;
  out.rows = n;
  out.depth = n;
  out.mr = mr;
  out.buffer.assign(ceil_div(n, mr) * mr * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (a_diag(i, i) == 0.0) throw SingularMatrixError(i);
    double* dst = out.buffer.data() + (i / mr) * mr * n + i % mr;
    for (std::size_t p = 0; p < i; ++p) dst[p * mr] = a_diag(i, p);
    dst[i * mr] = 1.0 / a_diag(i, i);
  }
}

void gemm_macro_kernel(MatrixView c, const PackedPanelA& ap, const PackedPanelB& bp,
                       const BlockingParams& params, double alpha) {
  if (ap.mr != params.mr || bp.nr != params.nr)
    throw DimensionError("packed panels do not match the register blocking");
  if (ap.depth != bp.depth || c.rows() != ap.rows || c.cols() != bp.cols)
    throw DimensionError("macro-kernel operands do not conform");
  macro_loop(ap, bp, c.rows(), c.cols(),
             [&](std::size_t i0, std::size_t j0, std::size_t mv, std::size_t nv, const double* t,
                 std::size_t ldt) {
               for (std::size_t jj = 0; jj < nv; ++jj) {
                 double* col = &c(i0, j0 + jj);
                 const double* tc = t + jj * ldt;
                 for (std::size_t ii = 0; ii < mv; ++ii) col[ii] = col[ii] + alpha * tc[ii];
               }
             });
}

void trsm_macro_kernel(MatrixView b_block, const PackedPanelA& ap, PackedPanelB& bp,
                       const BlockingParams& params) {
  if (ap.mr != params.mr || bp.nr != params.nr)
    throw DimensionError("packed panels do not match the register blocking");
  if (ap.rows != ap.depth || bp.depth != ap.rows || b_block.rows() != ap.rows ||
      b_block.cols() != bp.cols)
    throw DimensionError("trsm macro-kernel operands do not conform");
  alignas(64) double tile[dmr::kMaxLanes];
  const std::size_t kb = ap.rows;
  for (std::size_t jr = 0; jr < bp.cols; jr += bp.nr) {
    const std::size_t nv = std::min(bp.nr, bp.cols - jr);
    for (std::size_t ir = 0; ir < kb; ir += ap.mr) {
      const std::size_t mv = std::min(ap.mr, kb - ir);
      solve_tile(ap, bp, b_block, ir, mv, jr, nv, tile);
      commit_tile(b_block, bp, ir, mv, jr, nv, tile);
    }
  }
}

void gemm(double alpha, ConstMatrixView a, ConstMatrixView b, double beta, MatrixView c,
          const BlockingParams& params) {
  check_gemm(a, b, c);
  params.validate();
  const std::size_t m = c.rows();
  const std::size_t n = c.cols();
  const std::size_t k = a.cols();
  if (m == 0 || n == 0) return;
  scale_matrix(beta, c);
  if (alpha == 0.0 || k == 0) return;

  PackedPanelA ap;
  PackedPanelB bp;
  for (std::size_t jc = 0; jc < n; jc += params.nc) {
    const std::size_t nb = std::min(params.nc, n - jc);
    for (std::size_t pc = 0; pc < k; pc += params.kc) {
      const std::size_t kb = std::min(params.kc, k - pc);
      pack_b_impl(b.block(pc, jc, kb, nb), params.nr, bp, Ignore{});
      for (std::size_t ic = 0; ic < m; ic += params.mc) {
        const std::size_t mb = std::min(params.mc, m - ic);
        pack_a_impl(a.block(ic, pc, mb, kb), params.mr, ap, Ignore{});
        gemm_macro_kernel(c.block(ic, jc, mb, nb), ap, bp, params, alpha);
      }
    }
  }
}

void trsm(double alpha, ConstMatrixView a, MatrixView b, const BlockingParams& params) {
  check_trsm(a, b);
  params.validate();
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  if (n == 0 || m == 0) return;
  scale_matrix(alpha, b);
  if (alpha == 0.0) return;

  PackedPanelA apd;
  PackedPanelA ap;
  PackedPanelB bp;
  for (std::size_t jc = 0; jc < m; jc += params.nc) {
    const std::size_t nb = std::min(params.nc, m - jc);
    for (std::size_t pc = 0; pc < n; pc += params.kc) {
      const std::size_t kb = std::min(params.kc, n - pc);
      pack_a_triangular(a.block(pc, pc, kb, kb), params, apd);
      pack_b_impl(b.block(pc, jc, kb, nb), params.nr, bp, Ignore{});
      trsm_macro_kernel(b.block(pc, jc, kb, nb), apd, bp, params);
      for (std::size_t ic = pc + kb; ic < n; ic += params.mc) {
        const std::size_t mb = std::min(params.mc, n - ic);
        pack_a_impl(a.block(ic, pc, mb, kb), params.mr, ap, Ignore{});
        gemm_macro_kernel(b.block(ic, jc, mb, nb), ap, bp, params, -1.0);
      }
    }
  }
}

FtReport gemm_ft(double alpha, ConstMatrixView a, ConstMatrixView b, double beta, MatrixView c,
                 const GemmFtOptions& opts) {
  check_gemm(a, b, c);
  const BlockingParams& params = opts.blocking;
  params.validate();
  opts.tol.validate();
  const std::size_t m = c.rows();
  const std::size_t n = c.cols();
  const std::size_t k = a.cols();
  FtReport report;
  if (m == 0 || n == 0) return report;
  if (alpha == 0.0 || k == 0) {
    scale_matrix(beta, c);
    return report;
  }

  Matrix c0;
  if (beta != 0.0) c0 = Matrix(m, n);
  FtContext ctx{params, opts.tol, opts.faults, opts.trace, report};
  PackedPanelB bp;
  for (std::size_t jc = 0; jc < n; jc += params.nc) {
    const std::size_t nb = std::min(params.nc, n - jc);
    MatrixView cp = c.block(0, jc, m, nb);
    abft::ChecksumState cs(m, nb);
    scale_and_encode(beta, cp, cs, beta != 0.0 ? &c0 : nullptr, jc);
    const ConstMatrixView bpanel = b.block(0, jc, k, nb);
    for (std::size_t pc = 0; pc < k; pc += params.kc) {
      const std::size_t kb = std::min(params.kc, k - pc);
      pack_b_fused(b.block(pc, jc, kb, nb), params, bp, ctx.acc);
      auto recompute = [&](std::span<const std::size_t> rows) {
        recompute_rows(
            cp, rows, [&](std::size_t i, std::size_t j) { return beta == 0.0 ? 0.0 : c0(i, jc + j); },
            a, bpanel, pc + kb, params.kc, alpha);
      };
      if (!fused_step(ctx, cp, a.block(0, pc, m, kb), bp, alpha, cs, 0, jc, pc, recompute))
        return report;
    }
  }
  return report;
}

FtReport gemm_abft_unfused(double alpha, ConstMatrixView a, ConstMatrixView b, double beta,
                           MatrixView c, const GemmFtOptions& opts) {
  check_gemm(a, b, c);
  const BlockingParams& params = opts.blocking;
  params.validate();
  opts.tol.validate();
  const std::size_t m = c.rows();
  const std::size_t n = c.cols();
  const std::size_t k = a.cols();
  FtReport report;
  if (m == 0 || n == 0) return report;
  scale_matrix(beta, c);
  if (alpha == 0.0 || k == 0) return report;

  Matrix c0;
  if (beta != 0.0) {
    c0 = Matrix(m, n);
    for (std::size_t j = 0; j < n; ++j) std::copy_n(&c(0, j), m, &c0(0, j));
  }
  FtContext ctx{params, opts.tol, opts.faults, opts.trace, report};
  PackedPanelA ap;
  PackedPanelB bp;
  for (std::size_t jc = 0; jc < n; jc += params.nc) {
    const std::size_t nb = std::min(params.nc, n - jc);
    MatrixView cp = c.block(0, jc, m, nb);
    auto cs = abft::ChecksumState::encode(cp);
    const ConstMatrixView bpanel = b.block(0, jc, k, nb);
    for (std::size_t pc = 0; pc < k; pc += params.kc) {
      const std::size_t kb = std::min(params.kc, k - pc);
      pack_b(b.block(pc, jc, kb, nb), params, bp);
      for (std::size_t ic = 0; ic < m; ic += params.mc) {
        const std::size_t mb = std::min(params.mc, m - ic);
        pack_a(a.block(ic, pc, mb, kb), params, ap);
        gemm_macro_kernel(cp.block(ic, 0, mb, nb), ap, bp, params, alpha);
      }
      ctx.draw_faults(m, nb);
      for (const auto& f : ctx.faults) cp(f.i, f.j) = f.apply(cp(f.i, f.j));

      abft::update_checksums_rank_k(cs, a.block(0, pc, m, kb), b.block(pc, jc, kb, nb), alpha);
      ctx.acc.row_ref.resize(m);
      abft::encode_row_checksum_into(cp, ctx.acc.row_ref);
      ctx.acc.col_ref.assign(nb, 0.0);
      bool have_cols = false;
      auto col_ref = [&]() -> std::span<const double> {
        if (!have_cols) abft::encode_col_checksum_into(cp, ctx.acc.col_ref);
        have_cols = true;
        return ctx.acc.col_ref;
      };
      if (ctx.trace != nullptr) col_ref();
      ctx.record(jc, pc, cs);
      const auto outcome = abft::compare_checksums(cs, ctx.acc.row_ref, col_ref, opts.tol);
      auto recompute = [&](std::span<const std::size_t> rows) {
        recompute_rows(
            cp, rows, [&](std::size_t i, std::size_t j) { return beta == 0.0 ? 0.0 : c0(i, jc + j); },
            a, bpanel, pc + kb, params.kc, alpha);
      };
      if (!resolve(ctx, cp, cs, outcome, 0, jc, recompute)) return report;
    }
  }
  return report;
}

FtReport trsm_ft(double alpha, ConstMatrixView a, MatrixView b, const TrsmFtOptions& opts) {
  check_trsm(a, b);
  opts.blocking.validate();
  opts.tol.validate();
  if (opts.hook == nullptr) {
    dmr::NoFault none;
    return trsm_ft_impl(alpha, a, b, opts, none);
  }
  dmr::HookRef ref{opts.hook, 0};
  return trsm_ft_impl(alpha, a, b, opts, ref);
}

std::size_t gemm_ft_steps(std::size_t m, std::size_t n, std::size_t k, const BlockingParams& params) {
  if (m == 0 || n == 0 || k == 0) return 0;
  return ceil_div(n, params.nc) * ceil_div(k, params.kc);
}

std::size_t trsm_ft_steps(std::size_t n, std::size_t m, const BlockingParams& params) {
  if (n == 0 || m == 0) return 0;
  return ceil_div(m, params.nc) * (ceil_div(n, params.kc) - 1);
}

std::size_t trsm_ft_tiles(std::size_t n, std::size_t m, const BlockingParams& params) {
  std::size_t row_tiles = 0;
  for (std::size_t pc = 0; pc < n; pc += params.kc)
    row_tiles += ceil_div(std::min(params.kc, n - pc), params.mr);
  std::size_t col_tiles = 0;
  for (std::size_t jc = 0; jc < m; jc += params.nc)
    col_tiles += ceil_div(std::min(params.nc, m - jc), params.nr);
  return row_tiles * col_tiles;
}

}  // namespace ftblas
