#include "ftblas/level1.hpp"

#include <cmath>
#include <functional>

namespace ftblas {
namespace {

void require_same_length(std::size_t a, std::size_t b, const char* routine) {
  if (a != b)
    throw DimensionError(std::string(routine) + ": vector lengths differ (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
}

// Strided operands are verified element by element.
dmr::VerificationBlockConfig effective(const dmr::VerificationBlockConfig& cfg, bool unit_stride) {
  cfg.validate();
  if (unit_stride) return cfg;
  return {1, cfg.chunks_per_block};
}

struct Square {
  ConstVectorView x;
  double operator()(std::size_t i) const noexcept { return x[i] * x[i]; }
};
struct Product {
  ConstVectorView x, y;
  double operator()(std::size_t i) const noexcept { return x[i] * y[i]; }
};
struct UnitSquare {
  const double* x;
  double operator()(std::size_t i) const noexcept { return x[i] * x[i]; }
};
struct UnitProduct {
  const double* x;
  const double* y;
  double operator()(std::size_t i) const noexcept { return x[i] * y[i]; }
};

constexpr std::plus<double> kSum{};
double root(double s) { return std::sqrt(s); }

}  // namespace

void scal(double alpha, VectorView x) {
  const std::size_t n = x.size();
  if (x.contiguous()) {
    double* p = x.data();
    for (std::size_t i = 0; i < n; ++i) p[i] = alpha * p[i];
    return;
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = alpha * x[i];
}

void axpy(double alpha, ConstVectorView x, VectorView y) {
  require_same_length(x.size(), y.size(), "axpy");
  const std::size_t n = x.size();
  if (x.contiguous() && y.contiguous()) {
    const double* px = x.data();
    double* py = y.data();
    for (std::size_t i = 0; i < n; ++i) py[i] = alpha * px[i] + py[i];
    return;
  }
  for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + y[i];
}

double dot(ConstVectorView x, ConstVectorView y) {
  require_same_length(x.size(), y.size(), "dot");
  if (x.contiguous() && y.contiguous())
    return dmr::plain_reduce(x.size(), UnitProduct{x.data(), y.data()}, kSum);
  return dmr::plain_reduce(x.size(), Product{x, y}, kSum);
}

double nrm2(ConstVectorView x) {
  if (x.contiguous()) return dmr::plain_reduce(x.size(), UnitSquare{x.data()}, kSum, 0.0, root);
  return dmr::plain_reduce(x.size(), Square{x}, kSum, 0.0, root);
}

FtReport scal_ft(double alpha, VectorView x, const dmr::VerificationBlockConfig& cfg,
                 dmr::FaultHook* hook) {
  const auto vcfg = effective(cfg, x.contiguous());
  FtReport report;
  const dmr::DmrOutcome out = dmr::dispatch_hook(hook, 0, [&](auto h) {
    if (x.contiguous()) {
      const double* src = x.data();
      return dmr::protected_block_map(
          x.size(),
          [=](std::size_t begin, std::span<double> o) {
            for (std::size_t l = 0; l < o.size(); ++l) o[l] = alpha * src[begin + l];
          },
          x, vcfg, h);
    }
    return dmr::protected_block_map(
        x.size(),
        [=](std::size_t begin, std::span<double> o) {
          for (std::size_t l = 0; l < o.size(); ++l) o[l] = alpha * x[begin + l];
        },
        x, vcfg, h);
  });
  dmr::append_to_report(out, report);
  return report;
}

FtReport axpy_ft(double alpha, ConstVectorView x, VectorView y,
                 const dmr::VerificationBlockConfig& cfg, dmr::FaultHook* hook) {
  require_same_length(x.size(), y.size(), "axpy_ft");
  const auto vcfg = effective(cfg, x.contiguous() && y.contiguous());
  FtReport report;
  const dmr::DmrOutcome out = dmr::dispatch_hook(hook, 0, [&](auto h) {
    return dmr::protected_block_map(
        x.size(),
        [=](std::size_t begin, std::span<double> o) {
          for (std::size_t l = 0; l < o.size(); ++l) o[l] = alpha * x[begin + l] + y[begin + l];
        },
        y, vcfg, h);
  });
  dmr::append_to_report(out, report);
  return report;
}

FtResult<double> dot_ft(ConstVectorView x, ConstVectorView y, const dmr::VerificationBlockConfig& cfg,
                        dmr::FaultHook* hook) {
  require_same_length(x.size(), y.size(), "dot_ft");
  const bool unit = x.contiguous() && y.contiguous();
  const auto vcfg = effective(cfg, unit);
  FtResult<double> res;
  auto [value, out] = dmr::dispatch_hook(hook, 0, [&](auto h) {
    if (unit) return dmr::protected_reduce(x.size(), UnitProduct{x.data(), y.data()}, kSum, vcfg, h);
    return dmr::protected_reduce(x.size(), Product{x, y}, kSum, vcfg, h);
  });
  res.value = value;
  dmr::append_to_report(out, res.report);
  return res;
}

FtResult<double> nrm2_ft(ConstVectorView x, const dmr::VerificationBlockConfig& cfg,
                         dmr::FaultHook* hook) {
  const auto vcfg = effective(cfg, x.contiguous());
  FtResult<double> res;
  auto [value, out] = dmr::dispatch_hook(hook, 0, [&](auto h) {
    if (x.contiguous())
      return dmr::protected_reduce(x.size(), UnitSquare{x.data()}, kSum, vcfg, h, 0.0, root);
    return dmr::protected_reduce(x.size(), Square{x}, kSum, vcfg, h, 0.0, root);
  });
  res.value = value;
  dmr::append_to_report(out, res.report);
  return res;
}

}  // namespace ftblas
