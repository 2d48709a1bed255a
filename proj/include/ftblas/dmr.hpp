#pragma once

// Duplicated execution for memory-bound kernels.
//
// Only arithmetic is replicated: each chunk of a verification block is
// computed twice from the same (immutable) inputs, the two results are
// compared bit for bit, the per-chunk lane masks are AND-reduced into one
// verdict per block, and results reach the caller's memory only after the
// verdict passed. A failed block is recomputed once, again in duplicate; a
// second disagreement is fatal and the block is never committed.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <type_traits>
#include <vector>

#include "ftblas/core.hpp"
#include "ftblas/detail/arith.hpp"

namespace ftblas::dmr {

/// lanes: elements per comparison chunk; chunks_per_block: comparisons folded
/// into one verdict.
struct VerificationBlockConfig {
  std::size_t lanes = 8;
  std::size_t chunks_per_block = 4;

  /// Throws ConfigError unless 1 <= lanes <= 64 and chunks_per_block >= 1.
  void validate() const;
  [[nodiscard]] std::size_t block_size() const noexcept { return lanes * chunks_per_block; }
};

inline constexpr std::size_t kMaxLanes = 64;

enum class DmrStatus : std::uint8_t { verified, recovered, fatal };

struct BlockEvent {
  std::size_t block = 0;          ///< call-local block index
  std::size_t first_element = 0;  ///< first element (or state lane) covered by the block
  double magnitude = 0.0;         ///< primary - duplicate at the first mismatching lane
  bool recovered = false;
};

struct DmrOutcome {
  DmrStatus kind = DmrStatus::verified;
  std::size_t block = 0;      ///< first recovered block, or the fatal block
  std::size_t detected = 0;   ///< blocks whose first execution disagreed
  std::size_t recovered = 0;
  std::size_t chunks = 0;     ///< chunk ids consumed (hook numbering)
  std::size_t blocks = 0;     ///< verification blocks executed
  std::vector<BlockEvent> events;

  [[nodiscard]] bool fatal() const noexcept { return kind == DmrStatus::fatal; }
};

/// Per-lane comparison verdict: bit l set iff lane l agreed bitwise.
class LaneMask {
 public:
  constexpr LaneMask() noexcept = default;
  constexpr LaneMask(std::uint64_t bits, std::size_t lanes) noexcept : bits_(bits), lanes_(lanes) {}

  static constexpr LaneMask all_true(std::size_t lanes) noexcept {
    return {lanes >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << lanes) - 1), lanes};
  }

  [[nodiscard]] constexpr std::uint64_t bits() const noexcept { return bits_; }
  [[nodiscard]] constexpr std::size_t lanes() const noexcept { return lanes_; }
  [[nodiscard]] constexpr bool all() const noexcept { return bits_ == all_true(lanes_).bits_; }
  [[nodiscard]] constexpr bool lane(std::size_t l) const noexcept { return (bits_ >> l) & 1U; }

  /// Verdict reduction: AND of the bits over the common lane count; a
  /// narrower mask (ragged chunk) contributes all-true for its missing lanes.
  constexpr LaneMask& operator&=(const LaneMask& o) noexcept {
    const std::size_t lanes = std::max(lanes_, o.lanes_);
    const std::uint64_t full = all_true(lanes).bits_;
    const std::uint64_t a = bits_ | (full & ~all_true(lanes_).bits_);
    const std::uint64_t b = o.bits_ | (full & ~all_true(o.lanes_).bits_);
    bits_ = a & b;
    lanes_ = lanes;
    return *this;
  }

 private:
  std::uint64_t bits_ = 0;
  std::size_t lanes_ = 0;
};

/// Bitwise lane comparison of two equally sized chunks (size <= 64).
LaneMask compare_lanes(std::span<const double> a, std::span<const double> b) noexcept;

/// True iff every lane of every mask is set.
bool verdict_reduce(std::span<const LaneMask> verdicts);

/// Fault callback invoked between the primary and the duplicate execution of
/// each chunk. `attempt` is 0 for the first execution of a block and 1 for
/// its recovery recomputation. Perturbing `primary` simulates a compute fault.
class FaultHook {
 public:
  virtual ~FaultHook() = default;
  virtual void on_primary(std::size_t chunk, unsigned attempt, std::span<double> primary) = 0;
};

/// Hook policy that compiles away.
struct NoFault {
  static constexpr bool active = false;
  void operator()(std::size_t, unsigned, std::span<double>) const noexcept {}
};

/// Forwards to a FaultHook with a routine-wide chunk numbering offset.
struct HookRef {
  static constexpr bool active = true;
  FaultHook* hook;
  std::size_t base;
  void operator()(std::size_t chunk, unsigned attempt, std::span<double> primary) const {
    hook->on_primary(base + chunk, attempt, primary);
  }
};

/// Calls f(NoFault{}) or f(HookRef{hook, base}) so each routine is
/// instantiated once without and once with the callback.
template <class F>
decltype(auto) dispatch_hook(FaultHook* hook, std::size_t base, F&& f) {
  if (hook == nullptr) return std::forward<F>(f)(NoFault{});
  return std::forward<F>(f)(HookRef{hook, base});
}

/// Hooks without an `active` member are treated as active.
template <class H>
inline constexpr bool hook_active_v = [] {
  if constexpr (requires { H::active; })
    return static_cast<bool>(H::active);
  else
    return true;
}();

/// Views a hook through a chunk-numbering offset, so consecutive engine calls
/// of one routine share a single numbering.
template <class Hook>
struct ShiftedHook {
  static constexpr bool active = hook_active_v<std::remove_cvref_t<Hook>>;
  Hook& hook;
  std::size_t offset;
  void operator()(std::size_t chunk, unsigned attempt, std::span<double> primary) const {
    hook(offset + chunk, attempt, primary);
  }
};

template <class Hook>
ShiftedHook<Hook> shift_hook(Hook& hook, std::size_t offset) {
  return {hook, offset};
}

namespace detail {

/// Keeps the compiler from merging the primary and duplicate executions.
[[gnu::always_inline]] inline void compiler_barrier() noexcept { asm volatile("" ::: "memory"); }

[[gnu::always_inline]] inline bool same_bits(const double* a, const double* b, std::size_t n) noexcept {
  std::uint64_t diff = 0;
  for (std::size_t i = 0; i < n; ++i) diff |= ftblas::detail::bits_of(a[i]) ^ ftblas::detail::bits_of(b[i]);
  return diff == 0;
}

/// Elements a block map evaluates per kernel call when no hook is attached.
inline constexpr std::size_t kBatchElements = 512;

/// Stack storage for the common small cases, heap beyond.
class Scratch {
 public:
  explicit Scratch(std::size_t n) : size_(n) {
    if (n > inline_.size()) heap_.resize(n);
  }
  [[nodiscard]] std::span<double> span() noexcept {
    return {heap_.empty() ? inline_.data() : heap_.data(), size_};
  }

 private:
  std::array<double, kBatchElements> inline_;
  std::vector<double> heap_;
  std::size_t size_;
};

inline double first_mismatch(std::span<const double> a, std::span<const double> b,
                             const LaneMask& verdict) noexcept {
  for (std::size_t l = 0; l < a.size() && l < 64; ++l)
    if (!verdict.lane(l)) return a[l] - b[l];
  return 0.0;
}

}  // namespace detail

/// Duplicated element-wise map.
///
/// `kernel(begin, out)` must fill out[l] with the result for element
/// begin + l from immutable inputs, deterministically. `commit(begin, values)`
/// receives verified results, always a whole number of blocks. Elements are
/// grouped in chunks of cfg.lanes and blocks of cfg.chunks_per_block chunks.
/// With an inactive hook the kernel is asked for several blocks per call,
/// each block is still verified on its own before it is committed.
template <class Kernel, class Commit, class Hook = NoFault>
DmrOutcome protected_block_map_with(std::size_t n, Kernel&& kernel, Commit&& commit,
                                    const VerificationBlockConfig& cfg, Hook&& hook = {}) {
  constexpr bool active = hook_active_v<std::remove_cvref_t<Hook>>;
  DmrOutcome out;
  const std::size_t lanes = cfg.lanes;
  const std::size_t chunks = (n + lanes - 1) / lanes;
  out.chunks = chunks;
  if (n == 0) return out;

  const std::size_t cpb = cfg.chunks_per_block;
  const std::size_t bsize = cfg.block_size();
  const std::size_t nblocks = (chunks + cpb - 1) / cpb;
  const std::size_t batch =
      active ? 1 : std::clamp<std::size_t>(detail::kBatchElements / bsize, 1, nblocks);
  detail::Scratch pbuf(bsize * batch), dbuf(bsize * batch);
  std::span<double> primary = pbuf.span();
  std::span<double> duplicate = dbuf.span();

  auto block_range = [&](std::size_t b) {
    const std::size_t first = b * bsize;
    return std::pair{first, std::min(n, first + bsize) - first};
  };

  // Lane-mask verdict over one block held at `off` in the buffers.
  auto verdict_at = [&](std::size_t off, std::size_t len, double& mismatch) {
    if (detail::same_bits(primary.data() + off, duplicate.data() + off, len)) return true;
    LaneMask verdict = LaneMask::all_true(1);
    for (std::size_t c = 0; c < len; c += lanes) {
      const std::size_t clen = std::min(lanes, len - c);
      auto p = primary.subspan(off + c, clen);
      auto d = duplicate.subspan(off + c, clen);
      const LaneMask mask = compare_lanes(p, d);
      if (!mask.all() && mismatch == 0.0) mismatch = detail::first_mismatch(p, d, mask);
      verdict &= mask;
    }
    return verdict.all();
  };

  // Executes block b twice into the buffers at offset 0.
  auto run_block = [&](std::size_t b, unsigned attempt) {
    const auto [first, len] = block_range(b);
    if constexpr (!active) {
      kernel(first, primary.first(len));
      detail::compiler_barrier();
      kernel(first, duplicate.first(len));
    } else {
      for (std::size_t c = 0; c < len; c += lanes) {
        const std::size_t clen = std::min(lanes, len - c);
        auto p = primary.subspan(c, clen);
        kernel(first + c, p);
        hook(b * cpb + c / lanes, attempt, p);
        detail::compiler_barrier();
        kernel(first + c, duplicate.subspan(c, clen));
      }
    }
  };

  // Recomputes a failed block once; false when it is fatal.
  auto recover = [&](std::size_t b, double mismatch) {
    ++out.detected;
    run_block(b, 1);
    const auto [first, len] = block_range(b);
    double ignored = 0.0;
    const bool ok = verdict_at(0, len, ignored);
    out.events.push_back({b, first, mismatch, ok});
    if (!ok) {
      out.kind = DmrStatus::fatal;
      out.block = b;
      return false;
    }
    commit(first, std::span<const double>(primary.data(), len));
    if (out.recovered++ == 0) {
      out.kind = DmrStatus::recovered;
      out.block = b;
    }
    return true;
  };

  for (std::size_t b0 = 0; b0 < nblocks;) {
    const std::size_t b1 = std::min(nblocks, b0 + batch);
    const std::size_t first = b0 * bsize;
    const std::size_t len = std::min(n, b1 * bsize) - first;
    if constexpr (active) {
      run_block(b0, 0);
    } else {
      kernel(first, primary.first(len));
      detail::compiler_barrier();
      kernel(first, duplicate.first(len));
    }
    // Commit the verified prefix of the batch in one piece.
    std::size_t b = b0;
    double mismatch = 0.0;
    while (b < b1 && verdict_at((b - b0) * bsize, block_range(b).second, mismatch)) ++b;
    out.blocks = b1;
    if (b > b0) commit(first, std::span<const double>(primary.data(), std::min(n, b * bsize) - first));
    if (b < b1 && !recover(b, mismatch)) {
      out.blocks = b + 1;
      return out;
    }
    // The rest of a batch after a recovered block is evaluated again.
    b0 = b < b1 ? b + 1 : b1;
  }
  return out;
}

/// protected_block_map with a strided output vector as sink.
template <class Kernel, class Hook = NoFault>
DmrOutcome protected_block_map(std::size_t n, Kernel&& kernel, VectorView sink,
                               const VerificationBlockConfig& cfg, Hook&& hook = {}) {
  if (sink.size() < n) throw DimensionError("DMR sink shorter than input");
  auto commit = [&](std::size_t begin, std::span<const double> values) {
    if (sink.contiguous()) {
      std::copy(values.begin(), values.end(), sink.data() + begin);
    } else {
      for (std::size_t l = 0; l < values.size(); ++l) sink[begin + l] = values[l];
    }
  };
  return protected_block_map_with(n, std::forward<Kernel>(kernel), commit, cfg,
                                  std::forward<Hook>(hook));
}

/// Duplicated running accumulation.
///
/// `step(begin, len, state)` advances `state` over elements [begin, begin+len)
/// of the reduction dimension. The primary and the duplicate each evolve a
/// private copy of the state from the last committed checkpoint; on a verified
/// block the primary copy becomes the new checkpoint. On return `state` holds
/// the last committed checkpoint (the full result unless fatal). `step` must
/// give the same state whether a range is advanced in one call or in pieces.
template <class Step, class Hook = NoFault>
DmrOutcome protected_accumulate(std::size_t n, std::span<double> state, Step&& step,
                                const VerificationBlockConfig& cfg, Hook&& hook = {}) {
  constexpr bool active = hook_active_v<std::remove_cvref_t<Hook>>;
  DmrOutcome out;
  const std::size_t width = state.size();
  if (width == 0 || width > kMaxLanes) throw DimensionError("DMR state width must be in [1, 64]");
  const std::size_t lanes = cfg.lanes;
  const std::size_t chunks = (n + lanes - 1) / lanes;
  out.chunks = chunks;
  if (n == 0) return out;

  std::array<double, kMaxLanes> pbuf, dbuf;
  std::span<double> primary(pbuf.data(), width);
  std::span<double> duplicate(dbuf.data(), width);

  auto run_block = [&](std::size_t c0, std::size_t c1, unsigned attempt, double& mismatch) {
    std::copy(state.begin(), state.end(), primary.begin());
    std::copy(state.begin(), state.end(), duplicate.begin());
    if constexpr (!active) {
      const std::size_t first = c0 * lanes;
      const std::size_t len = std::min(n, c1 * lanes) - first;
      step(first, len, primary);
      detail::compiler_barrier();
      step(first, len, duplicate);
      if (detail::same_bits(primary.data(), duplicate.data(), width)) return true;
      const LaneMask mask = compare_lanes(primary, duplicate);
      mismatch = detail::first_mismatch(primary, duplicate, mask);
      return false;
    } else {
      LaneMask verdict = LaneMask::all_true(width);
      for (std::size_t c = c0; c < c1; ++c) {
        const std::size_t begin = c * lanes;
        const std::size_t len = std::min(lanes, n - begin);
        step(begin, len, primary);
        hook(c, attempt, primary);
        detail::compiler_barrier();
        step(begin, len, duplicate);
        const LaneMask mask = compare_lanes(primary, duplicate);
        if (!mask.all() && mismatch == 0.0) mismatch = detail::first_mismatch(primary, duplicate, mask);
        verdict &= mask;
      }
      return verdict.all();
    }
  };

  const std::size_t cpb = cfg.chunks_per_block;
  for (std::size_t b = 0, c0 = 0; c0 < chunks; ++b, c0 += cpb) {
    out.blocks = b + 1;
    const std::size_t c1 = std::min(chunks, c0 + cpb);
    double mismatch = 0.0;
    if (run_block(c0, c1, 0, mismatch)) {
      std::copy(primary.begin(), primary.end(), state.begin());
      continue;
    }
    ++out.detected;
    double ignored = 0.0;
    const bool ok = run_block(c0, c1, 1, ignored);
    out.events.push_back({b, c0 * lanes, mismatch, ok});
    if (!ok) {
      out.kind = DmrStatus::fatal;
      out.block = b;
      return out;
    }
    std::copy(primary.begin(), primary.end(), state.begin());
    if (out.recovered++ == 0) {
      out.kind = DmrStatus::recovered;
      out.block = b;
    }
  }
  return out;
}

/// Appends outcome `b` of a later engine call to `a`: counts add up, b's block
/// indices are shifted past a's, and a fatal or first recovery carries over.
void merge_outcome(DmrOutcome& a, const DmrOutcome& b);

/// Adds an engine outcome to a routine report. Events are numbered by global
/// block (iteration_base + block) and located at row_base + first_element,
/// or at row_base alone when the engine ran over a reduction dimension.
void append_to_report(const DmrOutcome& outcome, FtReport& report, std::size_t iteration_base = 0,
                      std::ptrdiff_t row_base = 0, bool offset_by_element = true);

/// Fixed-order reduction shared by the plain and the protected paths: element
/// i is combined into acc[i % kReduceLanes] in increasing i.
template <class Map, class Combine>
[[gnu::always_inline]] inline void reduce_range(std::size_t begin, std::size_t end, Map& map,
                                                Combine& combine, double* acc) {
  constexpr std::size_t W = ftblas::detail::kReduceLanes;
  std::size_t i = begin;
  for (; i < end && i % W != 0; ++i) acc[i % W] = combine(acc[i % W], map(i));
  for (; i + W <= end; i += W)
    for (std::size_t l = 0; l < W; ++l) acc[l] = combine(acc[l], map(i + l));
  for (; i < end; ++i) acc[i % W] = combine(acc[i % W], map(i));
}

/// Unprotected counterpart of protected_reduce with the identical arithmetic.
template <class Map, class Combine, class Finish = std::identity>
double plain_reduce(std::size_t n, Map&& map, Combine&& combine, double init = 0.0,
                    Finish&& finish = {}) {
  std::array<double, ftblas::detail::kReduceLanes> acc;
  acc.fill(init);
  reduce_range(0, n, map, combine, acc.data());
  double s = acc[0];
  for (std::size_t l = 1; l < acc.size(); ++l) s = combine(s, acc[l]);
  return finish(s);
}

/// Duplicated scalar reduction: both the per-element map and the running
/// combine are executed twice per chunk; the final lane fold and `finish` run
/// as one more protected unit (the last chunk id).
template <class Map, class Combine, class Hook = NoFault, class Finish = std::identity>
std::pair<double, DmrOutcome> protected_reduce(std::size_t n, Map&& map, Combine&& combine,
                                               const VerificationBlockConfig& cfg, Hook&& hook = {},
                                               double init = 0.0, Finish&& finish = {}) {
  std::array<double, ftblas::detail::kReduceLanes> acc;
  acc.fill(init);
  DmrOutcome out = protected_accumulate(
      n, std::span<double>(acc),
      [&](std::size_t begin, std::size_t len, std::span<double> st) {
        reduce_range(begin, begin + len, map, combine, st.data());
      },
      cfg, hook);
  if (out.fatal()) return {0.0, std::move(out)};

  double result = 0.0;
  const std::size_t fold_chunk = out.chunks;
  auto fold = [&](std::size_t, std::span<double> v) {
    double s = acc[0];
    for (std::size_t l = 1; l < acc.size(); ++l) s = combine(s, acc[l]);
    v[0] = finish(s);
  };
  DmrOutcome tail = protected_block_map_with(
      1, fold, [&](std::size_t, std::span<const double> v) { result = v[0]; },
      VerificationBlockConfig{1, 1}, shift_hook(hook, fold_chunk));
  merge_outcome(out, tail);
  return {out.fatal() ? 0.0 : result, std::move(out)};
}

}  // namespace ftblas::dmr
