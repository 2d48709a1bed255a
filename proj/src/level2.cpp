#include "ftblas/level2.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "ftblas/detail/arith.hpp"
#include "ftblas/level1.hpp"

namespace ftblas {
namespace {

constexpr std::size_t W = detail::kReduceLanes;

void check_gemv(ConstMatrixView a, ConstVectorView x, ConstVectorView y) {
  if (x.size() != a.cols())
    throw DimensionError("gemv: x has " + std::to_string(x.size()) + " elements, A has " +
                         std::to_string(a.cols()) + " columns");
  if (y.size() != a.rows())
    throw DimensionError("gemv: y has " + std::to_string(y.size()) + " elements, A has " +
                         std::to_string(a.rows()) + " rows");
}

// acc layout: lane-major, acc[l * R + r] for row r and lane l.
template <std::size_t R>
[[gnu::always_inline]] inline void quad_columns(const double* base, std::size_t ld, ConstVectorView x,
                                                std::size_t begin, std::size_t end, double* acc) {
  auto one = [&](std::size_t j) {
    const double* c = base + j * ld;
    const double xj = x[j];
    double* lane = acc + (j % W) * R;
    for (std::size_t r = 0; r < R; ++r) lane[r] += c[r] * xj;
  };
  std::size_t j = begin;
  for (; j < end && j % W != 0; ++j) one(j);
  for (; j + W <= end; j += W) {
    for (std::size_t l = 0; l < W; ++l) {
      const double* c = base + (j + l) * ld;
      const double xj = x[j + l];
      double* lane = acc + l * R;
      for (std::size_t r = 0; r < R; ++r) lane[r] += c[r] * xj;
    }
  }
  for (; j < end; ++j) one(j);
}

void quad_columns(std::size_t rows, const double* base, std::size_t ld, ConstVectorView x,
                  std::size_t begin, std::size_t end, double* acc) {
  switch (rows) {
    case 4: quad_columns<4>(base, ld, x, begin, end, acc); break;
    case 3: quad_columns<3>(base, ld, x, begin, end, acc); break;
    case 2: quad_columns<2>(base, ld, x, begin, end, acc); break;
    case 1: quad_columns<1>(base, ld, x, begin, end, acc); break;
    default: break;
  }
}

[[gnu::always_inline]] inline double quad_finish(const double* acc, std::size_t rows, std::size_t r,
                                                 double alpha, double beta, double y_old) {
  const double s = detail::fold_lanes(acc + r, W, rows);
  return beta == 0.0 ? alpha * s : alpha * s + beta * y_old;
}

[[gnu::always_inline]] inline double scaled(double beta, double y_old) {
  return beta == 0.0 ? 0.0 : beta * y_old;
}

void gemv_unchecked(double alpha, ConstMatrixView a, ConstVectorView x, double beta, VectorView y) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m == 0) return;
  if (alpha == 0.0 || n == 0) {
    for (std::size_t i = 0; i < m; ++i) y[i] = scaled(beta, y[i]);
    return;
  }
  std::array<double, W * kGemvRowQuad> acc;
  for (std::size_t i0 = 0; i0 < m; i0 += kGemvRowQuad) {
    const std::size_t rows = std::min(kGemvRowQuad, m - i0);
    std::fill_n(acc.data(), W * rows, 0.0);
    quad_columns(rows, &a(i0, 0), a.ld(), x, 0, n, acc.data());
    for (std::size_t r = 0; r < rows; ++r)
      y[i0 + r] = quad_finish(acc.data(), rows, r, alpha, beta, y[i0 + r]);
  }
}

// Running chunk and block numbering across the engine calls of one routine.
struct Progress {
  std::size_t chunks = 0;
  std::size_t blocks = 0;
};

// Returns false after a fatal outcome.
bool account(const dmr::DmrOutcome& out, FtReport& report, Progress& prog, std::ptrdiff_t row,
             bool by_element) {
  dmr::append_to_report(out, report, prog.blocks, row, by_element);
  prog.chunks += out.chunks;
  prog.blocks += out.blocks;
  return !out.fatal();
}

template <class Hook>
bool gemv_ft_impl(double alpha, ConstMatrixView a, ConstVectorView x, double beta, VectorView y,
                  const dmr::VerificationBlockConfig& cfg, Hook& hook, FtReport& report,
                  Progress& prog) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m == 0) return true;
  if (alpha == 0.0 || n == 0) {
    auto out = dmr::protected_block_map(
        m, [&](std::size_t begin, std::span<double> o) {
          for (std::size_t l = 0; l < o.size(); ++l) o[l] = scaled(beta, y[begin + l]);
        },
        y, cfg, dmr::shift_hook(hook, prog.chunks));
    return account(out, report, prog, 0, true);
  }
  const std::size_t col_lanes = x.contiguous() ? cfg.lanes : 1;
  const dmr::VerificationBlockConfig col_cfg{col_lanes, cfg.chunks_per_block};
  // One verification block per finished quad.
  const dmr::VerificationBlockConfig row_cfg{kGemvRowQuad, 1};

  std::array<double, W * kGemvRowQuad> acc;
  for (std::size_t i0 = 0; i0 < m; i0 += kGemvRowQuad) {
    const std::size_t rows = std::min(kGemvRowQuad, m - i0);
    std::span<double> state(acc.data(), W * rows);
    std::fill(state.begin(), state.end(), 0.0);
    const double* base = &a(i0, 0);
    auto acc_out = dmr::protected_accumulate(
        n, state,
        [&](std::size_t begin, std::size_t len, std::span<double> st) {
          quad_columns(rows, base, a.ld(), x, begin, begin + len, st.data());
        },
        col_cfg, dmr::shift_hook(hook, prog.chunks));
    if (!account(acc_out, report, prog, static_cast<std::ptrdiff_t>(i0), false)) return false;

    VectorView yq = y.subview(i0, rows);
    auto fin_out = dmr::protected_block_map(
        rows,
        [&](std::size_t begin, std::span<double> o) {
          for (std::size_t l = 0; l < o.size(); ++l)
            o[l] = quad_finish(acc.data(), rows, begin + l, alpha, beta, yq[begin + l]);
        },
        yq, row_cfg, dmr::shift_hook(hook, prog.chunks));
    if (!account(fin_out, report, prog, static_cast<std::ptrdiff_t>(i0), true)) return false;
  }
  return true;
}

void check_trsv(ConstMatrixView a, ConstVectorView x) {
  if (a.rows() != a.cols()) throw DimensionError("trsv: A must be square");
  if (x.size() != a.rows()) throw DimensionError("trsv: x length must equal the order of A");
  for (std::size_t i = 0; i < a.rows(); ++i)
    if (a(i, i) == 0.0) throw SingularMatrixError(i);
}

[[gnu::always_inline]] inline double substitute(ConstMatrixView a, VectorView x, std::size_t p0,
                                                std::size_t i) {
  const double d = dot(a.block(i, p0, 1, i - p0).row(0), x.subview(p0, i - p0));
  return (x[i] - d) / a(i, i);
}

}  // namespace

void gemv(double alpha, ConstMatrixView a, ConstVectorView x, double beta, VectorView y) {
  check_gemv(a, x, y);
  gemv_unchecked(alpha, a, x, beta, y);
}

FtReport gemv_ft(double alpha, ConstMatrixView a, ConstVectorView x, double beta, VectorView y,
                 const dmr::VerificationBlockConfig& cfg, dmr::FaultHook* hook) {
  check_gemv(a, x, y);
  cfg.validate();
  FtReport report;
  Progress prog;
  dmr::dispatch_hook(hook, 0, [&](auto h) {
    return gemv_ft_impl(alpha, a, x, beta, y, cfg, h, report, prog);
  });
  return report;
}

void trsv(ConstMatrixView a, VectorView x) {
  check_trsv(a, x);
  const std::size_t n = a.rows();
  for (std::size_t p0 = 0; p0 < n; p0 += kTrsvPanel) {
    const std::size_t nb = std::min(kTrsvPanel, n - p0);
    if (p0 > 0) gemv_unchecked(-1.0, a.block(p0, 0, nb, p0), x.subview(0, p0), 1.0, x.subview(p0, nb));
    for (std::size_t i = p0; i < p0 + nb; ++i) x[i] = substitute(a, x, p0, i);
  }
}

FtReport trsv_ft(ConstMatrixView a, VectorView x, const dmr::VerificationBlockConfig& cfg,
                 dmr::FaultHook* hook) {
  check_trsv(a, x);
  cfg.validate();
  FtReport report;
  Progress prog;
  const std::size_t n = a.rows();
  const dmr::VerificationBlockConfig single{1, 1};
  dmr::dispatch_hook(hook, 0, [&](auto h) {
    for (std::size_t p0 = 0; p0 < n; p0 += kTrsvPanel) {
      const std::size_t nb = std::min(kTrsvPanel, n - p0);
      if (p0 > 0 && !gemv_ft_impl(-1.0, a.block(p0, 0, nb, p0), x.subview(0, p0), 1.0,
                                  x.subview(p0, nb), cfg, h, report, prog))
        return false;
      for (std::size_t i = p0; i < p0 + nb; ++i) {
        auto out = dmr::protected_block_map(
            1, [&](std::size_t, std::span<double> o) { o[0] = substitute(a, x, p0, i); },
            x.subview(i, 1), single, dmr::shift_hook(h, prog.chunks));
        if (!account(out, report, prog, static_cast<std::ptrdiff_t>(i), true)) return false;
      }
    }
    return true;
  });
  return report;
}

}  // namespace ftblas
