#pragma once

// Seeded, source-level fault injection. A plan fires on a fixed cadence of
// iterations (ABFT steps or DMR chunks); every perturbation is logged so a
// test can compare what the FT layer reported against what was injected.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ftblas/core.hpp"
#include "ftblas/dmr.hpp"
#include "ftblas/level3.hpp"

namespace ftblas::faultinj {

enum class InjectionMode : std::uint8_t {
  abft_element,  ///< corrupt one element of C inside an ABFT step
  dmr_compute,   ///< perturb the first execution of a DMR chunk
  sticky,        ///< perturb every execution of a DMR chunk, recovery included
};

enum class MagnitudeKind : std::uint8_t {
  flip_one_bit,  ///< uniformly chosen mantissa bit (0..51)
  add_uniform,   ///< add an integer drawn uniformly from [lo, hi]
};

struct MagnitudeDist {
  MagnitudeKind kind = MagnitudeKind::add_uniform;
  int lo = 1;
  int hi = 8;
};

/// Default magnitude per mode: add_uniform[1, 8] for ABFT, bit flips for DMR.
MagnitudeDist default_magnitude(InjectionMode mode) noexcept;

struct InjectionPlan {
  InjectionMode mode = InjectionMode::abft_element;
  std::size_t count = 0;
  std::size_t interval = 1;  ///< k
  std::uint64_t seed = 0;
  MagnitudeDist magnitude;

  /// True at iterations k-1, 2k-1, ... for the first `count` multiples.
  [[nodiscard]] bool fires(std::size_t iteration) const noexcept {
    return count > 0 && (iteration + 1) % interval == 0 && (iteration + 1) / interval <= count;
  }
};

/// k = floor(total / count); k = total + 1 when count == 0. Throws ConfigError
/// when count > total.
InjectionPlan plan_from_count(std::size_t total_iterations, std::size_t count, std::uint64_t seed,
                              InjectionMode mode);
InjectionPlan plan_from_count(std::size_t total_iterations, std::size_t count, std::uint64_t seed,
                              InjectionMode mode, MagnitudeDist magnitude);

struct InjectionRecord {
  std::size_t iteration = 0;
  std::size_t i = 0;        ///< ABFT: panel row; DMR: lane within the chunk
  std::size_t j = 0;        ///< ABFT: panel column; DMR: unused
  double delta = 0.0;       ///< add_uniform increment
  int bit = -1;             ///< flipped bit for flip_one_bit
  unsigned attempt = 0;     ///< DMR execution attempt

  friend bool operator==(const InjectionRecord&, const InjectionRecord&) = default;
};

/// Draws a perturbation of the given value per the plan's magnitude.
ElementFault draw_fault(const MagnitudeDist& dist, std::size_t i, std::size_t j, std::mt19937_64& rng);

/// At a firing iteration perturbs one uniformly chosen element of C and
/// returns what was done.
std::optional<InjectionRecord> maybe_inject_abft(const InjectionPlan& plan, std::size_t iteration,
                                                 MatrixView c, std::mt19937_64& rng);

/// At a firing chunk perturbs one uniformly chosen lane of `primary`
/// (dmr_compute: attempt 0 only; sticky: every attempt).
std::optional<InjectionRecord> dmr_fault_hook(const InjectionPlan& plan, std::size_t chunk,
                                              unsigned attempt, std::span<double> primary,
                                              std::mt19937_64& rng);

/// ElementFaultSource driven by a plan, for gemm_ft and trsm_ft.
class AbftInjector final : public ElementFaultSource {
 public:
  explicit AbftInjector(InjectionPlan plan) : plan_(plan), rng_(plan.seed) {}
  void faults_for(std::size_t iteration, std::size_t rows, std::size_t cols,
                  std::vector<ElementFault>& out) override;

  [[nodiscard]] const InjectionPlan& plan() const noexcept { return plan_; }
  [[nodiscard]] const std::vector<InjectionRecord>& trace() const noexcept { return trace_; }
  [[nodiscard]] std::size_t injected() const noexcept { return trace_.size(); }

 private:
  InjectionPlan plan_;
  std::mt19937_64 rng_;
  std::vector<InjectionRecord> trace_;
};

/// dmr::FaultHook driven by a plan.
class DmrInjector final : public dmr::FaultHook {
 public:
  explicit DmrInjector(InjectionPlan plan) : plan_(plan), rng_(plan.seed) {}
  void on_primary(std::size_t chunk, unsigned attempt, std::span<double> primary) override;

  [[nodiscard]] const InjectionPlan& plan() const noexcept { return plan_; }
  [[nodiscard]] const std::vector<InjectionRecord>& trace() const noexcept { return trace_; }
  /// Distinct chunks perturbed on their first execution.
  [[nodiscard]] std::size_t injected() const noexcept;

 private:
  InjectionPlan plan_;
  std::mt19937_64 rng_;
  std::vector<InjectionRecord> trace_;
};

/// Records how many chunk ids a routine consumes, for plan_from_count.
class CountingHook final : public dmr::FaultHook {
 public:
  void on_primary(std::size_t chunk, unsigned, std::span<double>) override {
    chunks_ = std::max(chunks_, chunk + 1);
  }
  [[nodiscard]] std::size_t chunks() const noexcept { return chunks_; }

 private:
  std::size_t chunks_ = 0;
};

}  // namespace ftblas::faultinj
