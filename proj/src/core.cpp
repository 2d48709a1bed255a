#include "ftblas/core.hpp"

#include <algorithm>
#include <cmath>

namespace ftblas {

MatrixView make_matrix_view(std::span<double> storage, std::size_t m, std::size_t n, std::size_t ld) {
  return {storage, m, n, ld};
}

ConstMatrixView make_matrix_view(std::span<const double> storage, std::size_t m, std::size_t n,
                                 std::size_t ld) {
  return {storage, m, n, ld};
}

VectorView make_vector_view(std::span<double> storage, std::size_t n, std::size_t stride) {
  return {storage, n, stride};
}

ConstVectorView make_vector_view(std::span<const double> storage, std::size_t n, std::size_t stride) {
  return {storage, n, stride};
}

void BlockingParams::validate() const {
  if (mc == 0 || nc == 0 || kc == 0 || mr == 0 || nr == 0)
    throw ConfigError("blocking parameters must all be >= 1");
  if (mc % mr != 0) throw ConfigError("MC must be a multiple of MR");
  if (nc % nr != 0) throw ConfigError("NC must be a multiple of NR");
  if (mr * nr > 64) throw ConfigError("register tile MR*NR must not exceed 64 elements");
}

void ToleranceConfig::validate() const {
  if (!(rel_factor > 0.0)) throw ConfigError("rel_factor must be > 0");
  if (!(abs_floor >= 0.0)) throw ConfigError("abs_floor must be >= 0");
}

double ToleranceConfig::threshold(double s, double k_eff) const noexcept {
  return std::max(abs_floor, rel_factor * unit_roundoff * k_eff * std::max(std::abs(s), 1.0));
}

bool ToleranceConfig::exceeds(double d, double s, double k_eff) const noexcept {
  // NaN disagreements count as errors.
  return !(std::abs(d) <= threshold(s, k_eff));
}

void FtReport::merge(const FtReport& other) {
  detected += other.detected;
  corrected += other.corrected;
  unrecoverable += other.unrecoverable;
  events.insert(events.end(), other.events.begin(), other.events.end());
}

}  // namespace ftblas
