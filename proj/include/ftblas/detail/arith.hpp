#pragma once

// Arithmetic primitives shared by every kernel. The library is built with
// -ffp-contract=off, so the only fused multiply-adds are the ones spelled
// out here; this keeps duplicated executions and recomputations bit-exact.

#include <cmath>
#include <cstddef>
#include <cstring>
#include <cstdint>
#include <span>

namespace ftblas::detail {

/// Width of the accumulator bank used by every reduction (dot, nrm2, gemv).
/// Element j always accumulates into lane j % kReduceLanes.
inline constexpr std::size_t kReduceLanes = 8;

[[gnu::always_inline]] inline double fmadd(double a, double b, double c) noexcept {
#if defined(__FMA__)
  return std::fma(a, b, c);
#else
  return a * b + c;
#endif
}

/// Left-to-right horizontal sum: ((lane0 + lane1) + lane2) + ...
[[gnu::always_inline]] inline double fold_lanes(const double* acc, std::size_t lanes,
                                                std::size_t stride = 1) noexcept {
  double s = acc[0];
  for (std::size_t l = 1; l < lanes; ++l) s += acc[l * stride];
  return s;
}

[[gnu::always_inline]] inline std::uint64_t bits_of(double v) noexcept {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

[[gnu::always_inline]] inline double from_bits(std::uint64_t b) noexcept {
  double v;
  std::memcpy(&v, &b, sizeof v);
  return v;
}

inline bool bitwise_equal(std::span<const double> a, std::span<const double> b) noexcept {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

}  // namespace ftblas::detail
