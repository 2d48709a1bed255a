#pragma once

// Throughput, overhead and injection-campaign harness behind ftblas-bench.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ftblas::bench {

enum class Routine : std::uint8_t { scal, nrm2, dot, axpy, gemv, trsv, gemm, trsm };

std::string_view to_string(Routine r) noexcept;
/// Throws ConfigError on an unknown name.
Routine parse_routine(std::string_view name);

enum class InjectMode : std::uint8_t {
  element,  ///< add an integer in [1, 8] (ABFT element or DMR lane)
  bitflip,  ///< flip one mantissa bit
  sticky,   ///< DMR only: the fault survives recomputation
};

std::string_view to_string(InjectMode m) noexcept;
InjectMode parse_inject_mode(std::string_view name);

struct BenchConfig {
  Routine routine = Routine::gemm;
  std::vector<std::size_t> sizes{256, 512, 1024};
  std::size_t reps = 20;
  std::size_t warmup = 3;
  bool ft = false;
  std::size_t inject = 0;
  std::uint64_t seed = 42;
  InjectMode inject_mode = InjectMode::element;

  /// Throws ConfigError unless reps >= 1, sizes is non-empty and every size
  /// >= 1, and sticky mode targets a routine with DMR protection.
  void validate() const;
};

struct BenchRow {
  Routine routine = Routine::gemm;
  std::size_t n = 0;
  bool ft = false;
  double gflops_mean = 0.0;
  double gflops_stddev = 0.0;
  std::optional<double> overhead_pct;  ///< (t_ft - t_ori) / t_ori * 100
  std::size_t injected = 0;
  std::size_t detected = 0;
  std::size_t corrected = 0;
  std::size_t unrecoverable = 0;
  bool oracle_pass = false;

  friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

/// Floating-point operations credited to one call at size n (m = n = k).
double flop_count(Routine r, std::size_t n) noexcept;

std::vector<BenchRow> run_bench(const BenchConfig& cfg);

/// True when a process running `cfg` should exit nonzero for `rows`.
bool failed(const BenchConfig& cfg, const std::vector<BenchRow>& rows) noexcept;

// CSV schema v1: comment lines start with '#', then one header line, then
// one line per row. Reals are written in shortest round-trip form.
inline constexpr std::string_view kCsvVersion = "v1";
std::string csv_preamble();
std::string csv_header();
std::string to_csv_line(const BenchRow& row);
/// Throws ConfigError on a malformed line.
BenchRow parse_csv_line(std::string_view line);
void write_csv(std::ostream& os, const std::vector<BenchRow>& rows);
std::vector<BenchRow> read_csv(std::istream& is);

struct PerfModelInputs {
  double n = 0.0;
  double k = 0.0;
  double kc = 0.0;
  double pmm = 0.0;  ///< matrix-multiply throughput, GFLOPS
  double pmv = 0.0;  ///< matrix-vector throughput, GFLOPS

  /// Throws ConfigError unless every field is positive and kc <= k.
  void validate() const;
};

/// (6 + 2 K / Kc) * Pmm / (n * Pmv)
double predict_abft_overhead(const PerfModelInputs& in);

struct RatioMeasurement {
  double pmm = 0.0;
  double pmv = 0.0;
  [[nodiscard]] double ratio() const noexcept { return pmm / pmv; }
};

/// Best-of-`reps` gemm and gemv throughput at size n.
RatioMeasurement measure_gemv_gemm_ratio(std::size_t n = 1024, std::size_t reps = 5);

/// Measured overhead of the unfused checksum scheme over plain gemm at size n,
/// as a ratio (0.05 = 5 %), from the median of `reps` paired timings.
double measure_unfused_abft_overhead(std::size_t n, std::size_t reps = 5);

}  // namespace ftblas::bench
