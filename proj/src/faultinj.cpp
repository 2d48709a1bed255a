#include "ftblas/faultinj.hpp"

#include <algorithm>
#include <string>

namespace ftblas::faultinj {

MagnitudeDist default_magnitude(InjectionMode mode) noexcept {
  if (mode == InjectionMode::abft_element) return {MagnitudeKind::add_uniform, 1, 8};
  return {MagnitudeKind::flip_one_bit, 0, 0};
}

InjectionPlan plan_from_count(std::size_t total_iterations, std::size_t count, std::uint64_t seed,
                              InjectionMode mode) {
  return plan_from_count(total_iterations, count, seed, mode, default_magnitude(mode));
}

InjectionPlan plan_from_count(std::size_t total_iterations, std::size_t count, std::uint64_t seed,
                              InjectionMode mode, MagnitudeDist magnitude) {
  if (count > total_iterations)
    throw ConfigError("cannot inject " + std::to_string(count) + " faults into " +
                      std::to_string(total_iterations) + " iterations");
  if (magnitude.kind == MagnitudeKind::add_uniform && magnitude.lo > magnitude.hi)
    throw ConfigError("add_uniform range is empty");
  InjectionPlan plan;
  plan.mode = mode;
  plan.count = count;
  plan.interval = count == 0 ? total_iterations + 1 : total_iterations / count;
  plan.seed = seed;
  plan.magnitude = magnitude;
  return plan;
}

ElementFault draw_fault(const MagnitudeDist& dist, std::size_t i, std::size_t j, std::mt19937_64& rng) {
  ElementFault f{i, j, 0.0, -1};
  if (dist.kind == MagnitudeKind::flip_one_bit) {
    f.bit = std::uniform_int_distribution<int>(0, 51)(rng);
  } else {
    f.delta = static_cast<double>(std::uniform_int_distribution<int>(dist.lo, dist.hi)(rng));
  }
  return f;
}

namespace {

InjectionRecord to_record(const ElementFault& f, std::size_t iteration, unsigned attempt) {
  return {iteration, f.i, f.j, f.delta, f.bit, attempt};
}

ElementFault draw_element(const InjectionPlan& plan, std::size_t rows, std::size_t cols,
                          std::mt19937_64& rng) {
  const std::size_t i = std::uniform_int_distribution<std::size_t>(0, rows - 1)(rng);
  const std::size_t j = std::uniform_int_distribution<std::size_t>(0, cols - 1)(rng);
  return draw_fault(plan.magnitude, i, j, rng);
}

}  // namespace

std::optional<InjectionRecord> maybe_inject_abft(const InjectionPlan& plan, std::size_t iteration,
                                                 MatrixView c, std::mt19937_64& rng) {
  if (!plan.fires(iteration) || c.empty()) return std::nullopt;
  const ElementFault f = draw_element(plan, c.rows(), c.cols(), rng);
  c(f.i, f.j) = f.apply(c(f.i, f.j));
  return to_record(f, iteration, 0);
}

std::optional<InjectionRecord> dmr_fault_hook(const InjectionPlan& plan, std::size_t chunk,
                                              unsigned attempt, std::span<double> primary,
                                              std::mt19937_64& rng) {
  if (primary.empty() || !plan.fires(chunk)) return std::nullopt;
  if (plan.mode == InjectionMode::dmr_compute && attempt != 0) return std::nullopt;
  const std::size_t lane = std::uniform_int_distribution<std::size_t>(0, primary.size() - 1)(rng);
  const ElementFault f = draw_fault(plan.magnitude, lane, 0, rng);
  primary[lane] = f.apply(primary[lane]);
  return to_record(f, chunk, attempt);
}

void AbftInjector::faults_for(std::size_t iteration, std::size_t rows, std::size_t cols,
                              std::vector<ElementFault>& out) {
  if (!plan_.fires(iteration) || rows == 0 || cols == 0) return;
  const ElementFault f = draw_element(plan_, rows, cols, rng_);
  out.push_back(f);
  trace_.push_back(to_record(f, iteration, 0));
}

void DmrInjector::on_primary(std::size_t chunk, unsigned attempt, std::span<double> primary) {
  if (auto rec = dmr_fault_hook(plan_, chunk, attempt, primary, rng_)) trace_.push_back(*rec);
}

std::size_t DmrInjector::injected() const noexcept {
  return static_cast<std::size_t>(std::count_if(trace_.begin(), trace_.end(),
                                                [](const InjectionRecord& r) { return r.attempt == 0; }));
}

}  // namespace ftblas::faultinj
