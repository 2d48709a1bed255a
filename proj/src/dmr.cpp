#include "ftblas/dmr.hpp"

#include <cstring>

namespace ftblas::dmr {

void VerificationBlockConfig::validate() const {
  if (lanes == 0 || lanes > kMaxLanes) throw ConfigError("DMR lanes must be in [1, 64]");
  if (chunks_per_block == 0) throw ConfigError("DMR chunks_per_block must be >= 1");
}

LaneMask compare_lanes(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t lanes = std::min<std::size_t>(a.size(), 64);
  std::uint64_t bits = 0;
  for (std::size_t l = 0; l < lanes; ++l) {
    const bool eq = ftblas::detail::bits_of(a[l]) == ftblas::detail::bits_of(b[l]);
    bits |= static_cast<std::uint64_t>(eq) << l;
  }
  return {bits, lanes};
}

bool verdict_reduce(std::span<const LaneMask> verdicts) {
  if (verdicts.empty()) throw DimensionError("verdict_reduce needs at least one mask");
  LaneMask acc = verdicts.front();
  for (std::size_t i = 1; i < verdicts.size(); ++i) acc &= verdicts[i];
  return acc.all();
}

void merge_outcome(DmrOutcome& a, const DmrOutcome& b) {
  const std::size_t shift = a.blocks;
  if (a.kind != DmrStatus::fatal) {
    if (b.kind == DmrStatus::fatal) {
      a.kind = DmrStatus::fatal;
      a.block = shift + b.block;
    } else if (b.kind == DmrStatus::recovered && a.kind == DmrStatus::verified) {
      a.kind = DmrStatus::recovered;
      a.block = shift + b.block;
    }
  }
  a.detected += b.detected;
  a.recovered += b.recovered;
  a.chunks += b.chunks;
  a.blocks += b.blocks;
  for (BlockEvent e : b.events) {
    e.block += shift;
    a.events.push_back(e);
  }
}

}  // namespace ftblas::dmr

namespace ftblas::dmr {

void append_to_report(const DmrOutcome& outcome, FtReport& report, std::size_t iteration_base,
                      std::ptrdiff_t row_base, bool offset_by_element) {
  report.detected += outcome.detected;
  report.corrected += outcome.recovered;
  if (outcome.fatal()) ++report.unrecoverable;
  for (const BlockEvent& e : outcome.events) {
    const std::ptrdiff_t offset = offset_by_element ? static_cast<std::ptrdiff_t>(e.first_element) : 0;
    report.events.push_back({iteration_base + e.block, row_base + offset, -1, e.magnitude,
                             e.recovered ? FtResolution::corrected : FtResolution::unrecoverable});
  }
}

}  // namespace ftblas::dmr
