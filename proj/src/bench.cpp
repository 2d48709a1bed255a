#include "ftblas/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>

#include "ftblas/faultinj.hpp"
#include "ftblas/level1.hpp"
#include "ftblas/level2.hpp"
#include "ftblas/level3.hpp"

namespace ftblas::bench {
namespace {

constexpr std::string_view kRoutineNames[] = {"scal", "nrm2", "dot", "axpy",
                                              "gemv", "trsv", "gemm", "trsm"};
constexpr std::string_view kModeNames[] = {"element", "bitflip", "sticky"};
constexpr double u = unit_roundoff;

using Clock = std::chrono::steady_clock;

template <class F>
double seconds(F&& f) {
  const auto t0 = Clock::now();
  f();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Matrix uniform_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  Matrix a(m, n);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& x : a.storage()) x = d(rng);
  return a;
}

Matrix integer_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  Matrix a(m, n);
  std::uniform_int_distribution<int> d(-4, 4);
  for (auto& x : a.storage()) x = d(rng);
  return a;
}

// Unit-dominant diagonal and small off-diagonal entries keep the solve well
// conditioned at every size.
Matrix lower_triangular(std::size_t n, std::mt19937_64& rng) {
  Matrix a(n, n);
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  std::uniform_real_distribution<double> diag(1.0, 2.0);
  for (std::size_t j = 0; j < n; ++j) {
    a(j, j) = diag(rng);
    for (std::size_t i = j + 1; i < n; ++i) a(i, j) = off(rng) / static_cast<double>(n);
  }
  return a;
}

double inf_norm(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

std::vector<std::size_t> sample(std::size_t n, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (n <= count) return all;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Faults {
  dmr::FaultHook* hook = nullptr;
  ElementFaultSource* elements = nullptr;
  BlockingParams blocking{};
};

class Case {
 public:
  virtual ~Case() = default;
  virtual void reset() = 0;
  virtual void run_plain() = 0;
  virtual FtReport run_ft(const Faults& f) = 0;
  virtual bool oracle() = 0;
  [[nodiscard]] virtual std::vector<double> output() const = 0;
  [[nodiscard]] virtual bool uses_abft() const { return false; }
  [[nodiscard]] virtual std::size_t abft_steps(const BlockingParams&) const { return 0; }
  /// Largest KC giving at least `count` ABFT steps.
  [[nodiscard]] virtual std::size_t kc_for(std::size_t) const { return 0; }
  /// Whether a corrected run reproduces the fault-free output bit for bit.
  [[nodiscard]] virtual bool exact() const { return true; }
};

// ---------------------------------------------------------------------------
// Level 1

class ScalCase final : public Case {
 public:
  ScalCase(std::size_t n, std::mt19937_64& rng) : x0_(uniform(n, rng)), x_(x0_) {}
  void reset() override { x_ = x0_; }
  void run_plain() override { scal(kAlpha, VectorView(std::span<double>(x_))); }
  FtReport run_ft(const Faults& f) override {
    return scal_ft(kAlpha, VectorView(std::span<double>(x_)), {}, f.hook);
  }
  bool oracle() override {
    for (std::size_t i = 0; i < x0_.size(); ++i)
      if (x_[i] != kAlpha * x0_[i]) return false;
    return true;
  }
  [[nodiscard]] std::vector<double> output() const override { return x_; }

 private:
  static constexpr double kAlpha = 1.5;
  std::vector<double> x0_, x_;
};

class AxpyCase final : public Case {
 public:
  AxpyCase(std::size_t n, std::mt19937_64& rng) : x_(uniform(n, rng)), y0_(uniform(n, rng)), y_(y0_) {}
  void reset() override { y_ = y0_; }
  void run_plain() override { axpy(kAlpha, cx(), y()); }
  FtReport run_ft(const Faults& f) override { return axpy_ft(kAlpha, cx(), y(), {}, f.hook); }
  bool oracle() override {
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double ref = kAlpha * x_[i] + y0_[i];
      if (std::abs(y_[i] - ref) > 2 * u * (std::abs(kAlpha * x_[i]) + std::abs(y0_[i]))) return false;
    }
    return true;
  }
  [[nodiscard]] std::vector<double> output() const override { return y_; }

 private:
  static constexpr double kAlpha = 0.75;
  ConstVectorView cx() const { return ConstVectorView(std::span<const double>(x_)); }
  VectorView y() { return VectorView(std::span<double>(y_)); }
  std::vector<double> x_, y0_, y_;
};

class DotCase final : public Case {
 public:
  DotCase(std::size_t n, std::mt19937_64& rng) : x_(uniform(n, rng)), y_(uniform(n, rng)) {}
  void reset() override { r_ = 0.0; }
  void run_plain() override { r_ = dot(view(x_), view(y_)); }
  FtReport run_ft(const Faults& f) override {
    auto res = dot_ft(view(x_), view(y_), {}, f.hook);
    r_ = res.value;
    return res.report;
  }
  bool oracle() override {
    double ref = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      ref += x_[i] * y_[i];
      mag += std::abs(x_[i] * y_[i]);
    }
    return std::abs(r_ - ref) <= 2.0 * static_cast<double>(x_.size()) * u * mag;
  }
  [[nodiscard]] std::vector<double> output() const override { return {r_}; }

 private:
  static ConstVectorView view(const std::vector<double>& v) {
    return ConstVectorView(std::span<const double>(v));
  }
  std::vector<double> x_, y_;
  double r_ = 0.0;
};

class Nrm2Case final : public Case {
 public:
  Nrm2Case(std::size_t n, std::mt19937_64& rng) : x_(uniform(n, rng)) {}
  void reset() override { r_ = 0.0; }
  void run_plain() override { r_ = nrm2(view()); }
  FtReport run_ft(const Faults& f) override {
    auto res = nrm2_ft(view(), {}, f.hook);
    r_ = res.value;
    return res.report;
  }
  bool oracle() override {
    double s = 0.0;
    for (const double v : x_) s += v * v;
    const double ref = std::sqrt(s);
    return std::abs(r_ - ref) <= 2.0 * static_cast<double>(x_.size() + 2) * u * ref;
  }
  [[nodiscard]] std::vector<double> output() const override { return {r_}; }

 private:
  ConstVectorView view() const { return ConstVectorView(std::span<const double>(x_)); }
  std::vector<double> x_;
  double r_ = 0.0;
};

// ---------------------------------------------------------------------------
// Level 2

class GemvCase final : public Case {
 public:
  GemvCase(std::size_t n, std::mt19937_64& rng)
      : a_(uniform_matrix(n, n, rng)), x_(uniform(n, rng)), y0_(uniform(n, rng)), y_(y0_) {}
  void reset() override { y_ = y0_; }
  void run_plain() override { gemv(kAlpha, a_.view(), cx(), kBeta, y()); }
  FtReport run_ft(const Faults& f) override {
    return gemv_ft(kAlpha, a_.view(), cx(), kBeta, y(), {}, f.hook);
  }
  bool oracle() override {
    const std::size_t n = x_.size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0, mag = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += a_(i, j) * x_[j];
        mag += std::abs(a_(i, j) * x_[j]);
      }
      const double ref = kAlpha * s + kBeta * y0_[i];
      const double bound =
          2.0 * static_cast<double>(n + 2) * u * (std::abs(kAlpha) * mag + std::abs(kBeta * y0_[i]));
      if (std::abs(y_[i] - ref) > bound) return false;
    }
    return true;
  }
  [[nodiscard]] std::vector<double> output() const override { return y_; }

 private:
  static constexpr double kAlpha = 1.0;
  static constexpr double kBeta = 0.5;
  ConstVectorView cx() const { return ConstVectorView(std::span<const double>(x_)); }
  VectorView y() { return VectorView(std::span<double>(y_)); }
  Matrix a_;
  std::vector<double> x_, y0_, y_;
};

class TrsvCase final : public Case {
 public:
  TrsvCase(std::size_t n, std::mt19937_64& rng) : a_(lower_triangular(n, rng)), b_(uniform(n, rng)), x_(b_) {}
  void reset() override { x_ = b_; }
  void run_plain() override { trsv(a_.view(), x()); }
  FtReport run_ft(const Faults& f) override { return trsv_ft(a_.view(), x(), {}, f.hook); }
  bool oracle() override {
    const std::size_t n = b_.size();
    double res = 0.0, xn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j <= i; ++j) s += a_(i, j) * x_[j];
      res = std::max(res, std::abs(s - b_[i]));
      xn = std::max(xn, std::abs(x_[i]));
    }
    return res <= 8.0 * static_cast<double>(n) * u * inf_norm(a_) * xn;
  }
  [[nodiscard]] std::vector<double> output() const override { return x_; }

 private:
  VectorView x() { return VectorView(std::span<double>(x_)); }
  Matrix a_;
  std::vector<double> b_, x_;
};

// ---------------------------------------------------------------------------
// Level 3

class GemmCase final : public Case {
 public:
  // Integer-valued operands keep every campaign inside the exactness window.
  GemmCase(std::size_t n, std::mt19937_64& rng)
      : a_(integer_matrix(n, n, rng)), b_(integer_matrix(n, n, rng)), c0_(integer_matrix(n, n, rng)),
        c_(c0_), rows_(sample(n, 16, rng)) {}
  void reset() override { c_ = c0_; }
  void run_plain() override { gemm(1.0, a_.view(), b_.view(), kBeta, c_.view()); }
  FtReport run_ft(const Faults& f) override {
    GemmFtOptions opts;
    opts.blocking = f.blocking;
    opts.faults = f.elements;
    return gemm_ft(1.0, a_.view(), b_.view(), kBeta, c_.view(), opts);
  }
  bool oracle() override {
    const std::size_t n = a_.rows();
    for (const std::size_t i : rows_)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0, mag = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
          s += a_(i, p) * b_(p, j);
          mag += std::abs(a_(i, p) * b_(p, j));
        }
        const double ref = s + kBeta * c0_(i, j);
        if (std::abs(c_(i, j) - ref) > 2.0 * static_cast<double>(n + 2) * u * (mag + std::abs(c0_(i, j))))
          return false;
      }
    return true;
  }
  [[nodiscard]] std::vector<double> output() const override {
    return {c_.storage().begin(), c_.storage().end()};
  }
  [[nodiscard]] bool uses_abft() const override { return true; }
  [[nodiscard]] std::size_t abft_steps(const BlockingParams& p) const override {
    return gemm_ft_steps(a_.rows(), a_.rows(), a_.rows(), p);
  }
  [[nodiscard]] std::size_t kc_for(std::size_t count) const override {
    return std::max<std::size_t>(1, a_.rows() / std::max<std::size_t>(count, 1));
  }

 private:
  static constexpr double kBeta = 1.0;
  Matrix a_, b_, c0_, c_;
  std::vector<std::size_t> rows_;
};

class TrsmCase final : public Case {
 public:
  TrsmCase(std::size_t n, std::mt19937_64& rng)
      : a_(lower_triangular(n, rng)), b0_(uniform_matrix(n, n, rng)), b_(b0_), cols_(sample(n, 16, rng)),
        a_norm_(inf_norm(a_)) {}
  void reset() override { b_ = b0_; }
  void run_plain() override { trsm(1.0, a_.view(), b_.view()); }
  FtReport run_ft(const Faults& f) override {
    TrsmFtOptions opts;
    opts.blocking = f.blocking;
    opts.faults = f.elements;
    opts.hook = f.hook;
    return trsm_ft(1.0, a_.view(), b_.view(), opts);
  }
  bool oracle() override {
    const std::size_t n = a_.rows();
    for (const std::size_t j : cols_) {
      double res = 0.0, xn = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t p = 0; p <= i; ++p) s += a_(i, p) * b_(p, j);
        res = std::max(res, std::abs(s - b0_(i, j)));
        xn = std::max(xn, std::abs(b_(i, j)));
      }
      if (!(res <= 8.0 * static_cast<double>(n) * u * a_norm_ * xn)) return false;
    }
    return true;
  }
  [[nodiscard]] std::vector<double> output() const override {
    return {b_.storage().begin(), b_.storage().end()};
  }
  [[nodiscard]] bool uses_abft() const override { return true; }
  [[nodiscard]] std::size_t abft_steps(const BlockingParams& p) const override {
    return trsm_ft_steps(a_.rows(), a_.rows(), p);
  }
  [[nodiscard]] std::size_t kc_for(std::size_t count) const override {
    return std::max<std::size_t>(1, a_.rows() / (count + 1));
  }
  [[nodiscard]] bool exact() const override { return false; }

 private:
  Matrix a_, b0_, b_;
  std::vector<std::size_t> cols_;
  double a_norm_;
};

std::unique_ptr<Case> make_case(Routine r, std::size_t n, std::mt19937_64& rng) {
  switch (r) {
    case Routine::scal: return std::make_unique<ScalCase>(n, rng);
    case Routine::nrm2: return std::make_unique<Nrm2Case>(n, rng);
    case Routine::dot: return std::make_unique<DotCase>(n, rng);
    case Routine::axpy: return std::make_unique<AxpyCase>(n, rng);
    case Routine::gemv: return std::make_unique<GemvCase>(n, rng);
    case Routine::trsv: return std::make_unique<TrsvCase>(n, rng);
    case Routine::gemm: return std::make_unique<GemmCase>(n, rng);
    case Routine::trsm: return std::make_unique<TrsmCase>(n, rng);
  }
  throw ConfigError("unknown routine");
}

struct CampaignResult {
  std::size_t injected = 0;
  FtReport report;
  bool pass = true;
};

faultinj::MagnitudeDist magnitude_for(InjectMode m) {
  if (m == InjectMode::element) return {faultinj::MagnitudeKind::add_uniform, 1, 8};
  return {faultinj::MagnitudeKind::flip_one_bit, 0, 0};
}

CampaignResult run_campaign(Case& c, const BenchConfig& cfg) {
  CampaignResult out;
  if (cfg.inject == 0) return out;
  const auto dist = magnitude_for(cfg.inject_mode);

  if (c.uses_abft() && cfg.inject_mode != InjectMode::sticky) {
    Faults f;
    if (c.abft_steps(f.blocking) < cfg.inject) f.blocking.kc = c.kc_for(cfg.inject);
    const auto plan = faultinj::plan_from_count(c.abft_steps(f.blocking), cfg.inject, cfg.seed,
                                                faultinj::InjectionMode::abft_element, dist);
    c.reset();
    c.run_ft(f);
    const auto reference = c.output();
    c.reset();
    faultinj::AbftInjector injector(plan);
    f.elements = &injector;
    out.report = c.run_ft(f);
    out.injected = injector.injected();
    const bool exact = c.exact() && cfg.inject_mode == InjectMode::element;
    out.pass = out.report.ok() && c.oracle() && (!exact || same_bits(c.output(), reference));
    return out;
  }

  faultinj::CountingHook counter;
  c.reset();
  c.run_ft({&counter, nullptr, {}});
  const bool sticky = cfg.inject_mode == InjectMode::sticky;
  const auto plan = faultinj::plan_from_count(
      counter.chunks(), cfg.inject, cfg.seed,
      sticky ? faultinj::InjectionMode::sticky : faultinj::InjectionMode::dmr_compute, dist);
  c.reset();
  c.run_ft({});
  const auto reference = c.output();
  c.reset();
  faultinj::DmrInjector injector(plan);
  out.report = c.run_ft({&injector, nullptr, {}});
  out.injected = injector.injected();
  if (sticky)
    out.pass = out.report.unrecoverable >= 1;
  else
    out.pass = out.report.ok() && same_bits(c.output(), reference) && c.oracle();
  return out;
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

BenchRow bench_one(const BenchConfig& cfg, std::size_t n) {
  std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (n + 1)));
  auto c = make_case(cfg.routine, n, rng);

  for (std::size_t w = 0; w < cfg.warmup; ++w) {
    c->reset();
    c->run_plain();
    if (cfg.ft) {
      c->reset();
      c->run_ft({});
    }
  }
  std::vector<double> t_ori, t_ft;
  bool pass = true;
  for (std::size_t r = 0; r < cfg.reps; ++r) {
    c->reset();
    t_ori.push_back(seconds([&] { c->run_plain(); }));
    if (cfg.ft) {
      c->reset();
      FtReport rep;
      t_ft.push_back(seconds([&] { rep = c->run_ft({}); }));
      pass = pass && rep.clean();
    }
  }
  pass = pass && c->oracle();
  if (cfg.ft) {
    c->reset();
    c->run_plain();
    pass = pass && c->oracle();
  }

  const double flops = flop_count(cfg.routine, n);
  const auto& times = cfg.ft ? t_ft : t_ori;
  std::vector<double> gflops;
  for (const double t : times) gflops.push_back(flops / std::max(t, 1e-12) * 1e-9);

  BenchRow row;
  row.routine = cfg.routine;
  row.n = n;
  row.ft = cfg.ft;
  row.gflops_mean = mean(gflops);
  row.gflops_stddev = stddev(gflops);
  if (cfg.ft) row.overhead_pct = (mean(t_ft) - mean(t_ori)) / mean(t_ori) * 100.0;

  const auto campaign = run_campaign(*c, cfg);
  row.injected = campaign.injected;
  row.detected = campaign.report.detected;
  row.corrected = campaign.report.corrected;
  row.unrecoverable = campaign.report.unrecoverable;
  row.oracle_pass = pass && campaign.pass;
  return row;
}

template <class T>
T parse_number(std::string_view s) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("malformed number '" + std::string(s) + "' in bench CSV");
  return v;
}

std::string real(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string_view to_string(Routine r) noexcept { return kRoutineNames[static_cast<std::size_t>(r)]; }

Routine parse_routine(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kRoutineNames); ++i)
    if (kRoutineNames[i] == name) return static_cast<Routine>(i);
  throw ConfigError("unknown routine '" + std::string(name) + "'");
}

std::string_view to_string(InjectMode m) noexcept { return kModeNames[static_cast<std::size_t>(m)]; }

InjectMode parse_inject_mode(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kModeNames); ++i)
    if (kModeNames[i] == name) return static_cast<InjectMode>(i);
  throw ConfigError("unknown injection mode '" + std::string(name) + "'");
}

void BenchConfig::validate() const {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (sizes.empty()) throw ConfigError("at least one size is required");
  for (const auto n : sizes)
    if (n < 1) throw ConfigError("sizes must be >= 1");
  if (inject > 0 && inject_mode == InjectMode::sticky && routine == Routine::gemm)
    throw ConfigError("sticky injection needs a DMR-protected routine; gemm has none");
}

double flop_count(Routine r, std::size_t n) noexcept {
  const double d = static_cast<double>(n);
  switch (r) {
    case Routine::scal: return d;
    case Routine::nrm2:
    case Routine::dot:
    case Routine::axpy: return 2.0 * d;
    case Routine::gemv: return 2.0 * d * d;
    case Routine::trsv: return d * d;
    case Routine::gemm: return 2.0 * d * d * d;
    case Routine::trsm: return d * d * d;
  }
  return 0.0;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<BenchRow> rows;
  for (const auto n : cfg.sizes) rows.push_back(bench_one(cfg, n));
  return rows;
}

bool failed(const BenchConfig& cfg, const std::vector<BenchRow>& rows) noexcept {
  const bool sticky = cfg.inject > 0 && cfg.inject_mode == InjectMode::sticky;
  for (const auto& r : rows)
    if (!r.oracle_pass || (!sticky && r.unrecoverable > 0)) return true;
  return false;
}

std::string csv_preamble() {
  return "# ftblas-bench csv " + std::string(kCsvVersion) +
         "\n"
         "# gflops = flops / t * 1e-9 with m = n = k = size and t the wall time of one call:\n"
         "#   gemm 2mnk; gemv 2mn; trsm n^2 m; trsv n^2; scal n; axpy 2n; dot 2n; nrm2 2n\n"
         "# overhead_pct = (t_ft - t_ori) / t_ori * 100, empty without --ft\n"
         "# injected..unrecoverable come from the separate injection campaign\n";
}

std::string csv_header() {
  return "routine,n,ft,gflops_mean,gflops_stddev,overhead_pct,injected,detected,corrected,"
         "unrecoverable,oracle_pass";
}

std::string to_csv_line(const BenchRow& r) {
  std::string s;
  s += to_string(r.routine);
  s += ',' + std::to_string(r.n);
  s += r.ft ? ",1" : ",0";
  s += ',' + real(r.gflops_mean);
  s += ',' + real(r.gflops_stddev);
  s += ',';
  if (r.overhead_pct) s += real(*r.overhead_pct);
  s += ',' + std::to_string(r.injected);
  s += ',' + std::to_string(r.detected);
  s += ',' + std::to_string(r.corrected);
  s += ',' + std::to_string(r.unrecoverable);
  s += r.oracle_pass ? ",pass" : ",fail";
  return s;
}

BenchRow parse_csv_line(std::string_view line) {
  std::vector<std::string_view> f;
  for (std::size_t pos = 0;;) {
    const std::size_t comma = line.find(',', pos);
    f.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (f.size() != 11) throw ConfigError("bench CSV row needs 11 fields, got " + std::to_string(f.size()));
  BenchRow r;
  r.routine = parse_routine(f[0]);
  r.n = parse_number<std::size_t>(f[1]);
  if (f[2] != "0" && f[2] != "1") throw ConfigError("ft field must be 0 or 1");
  r.ft = f[2] == "1";
  r.gflops_mean = parse_number<double>(f[3]);
  r.gflops_stddev = parse_number<double>(f[4]);
  if (!f[5].empty()) r.overhead_pct = parse_number<double>(f[5]);
  r.injected = parse_number<std::size_t>(f[6]);
  r.detected = parse_number<std::size_t>(f[7]);
  r.corrected = parse_number<std::size_t>(f[8]);
  r.unrecoverable = parse_number<std::size_t>(f[9]);
  if (f[10] != "pass" && f[10] != "fail") throw ConfigError("oracle_pass must be pass or fail");
  r.oracle_pass = f[10] == "pass";
  return r;
}

void write_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << csv_preamble() << csv_header() << '\n';
  for (const auto& r : rows) os << to_csv_line(r) << '\n';
}

std::vector<BenchRow> read_csv(std::istream& is) {
  std::vector<BenchRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != csv_header()) throw ConfigError("unexpected bench CSV header");
      header = true;
      continue;
    }
    rows.push_back(parse_csv_line(line));
  }
  if (!header) throw ConfigError("bench CSV has no header");
  return rows;
}

void PerfModelInputs::validate() const {
  if (!(n > 0 && k > 0 && kc > 0 && pmm > 0 && pmv > 0))
    throw ConfigError("performance model inputs must be positive");
  if (kc > k) throw ConfigError("Kc must not exceed K");
}

double predict_abft_overhead(const PerfModelInputs& in) {
  in.validate();
  return (6.0 + 2.0 * in.k / in.kc) * in.pmm / (in.n * in.pmv);
}

RatioMeasurement measure_gemv_gemm_ratio(std::size_t n, std::size_t reps) {
  std::mt19937_64 rng(7);
  const Matrix a = uniform_matrix(n, n, rng);
  const Matrix b = uniform_matrix(n, n, rng);
  Matrix c(n, n);
  const auto x = uniform(n, rng);
  std::vector<double> y(n);
  double t_mm = INFINITY, t_mv = INFINITY;
  const std::size_t mv_calls = 16;
  for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
    t_mm = std::min(t_mm, seconds([&] { gemm(1.0, a.view(), b.view(), 0.0, c.view()); }));
    t_mv = std::min(t_mv, seconds([&] {
                      for (std::size_t i = 0; i < mv_calls; ++i)
                        gemv(1.0, a.view(), ConstVectorView(std::span<const double>(x)), 0.0,
                             VectorView(std::span<double>(y)));
                    }) / mv_calls);
  }
  return {flop_count(Routine::gemm, n) / t_mm * 1e-9, flop_count(Routine::gemv, n) / t_mv * 1e-9};
}

double measure_unfused_abft_overhead(std::size_t n, std::size_t reps) {
  std::mt19937_64 rng(11);
  const Matrix a = uniform_matrix(n, n, rng);
  const Matrix b = uniform_matrix(n, n, rng);
  Matrix c(n, n);
  std::vector<double> ratios;
  for (std::size_t r = 0; r < std::max<std::size_t>(reps, 1); ++r) {
    const double t0 = seconds([&] { gemm(1.0, a.view(), b.view(), 0.0, c.view()); });
    const double t1 = seconds([&] { gemm_abft_unfused(1.0, a.view(), b.view(), 0.0, c.view()); });
    ratios.push_back((t1 - t0) / t0);
  }
  std::sort(ratios.begin(), ratios.end());
  return ratios[ratios.size() / 2];
}

}  // namespace ftblas::bench
