#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hbbm/analysis.hpp"
#include "hbbm/stats.hpp"
#include "replicate.hpp"
#include "segment.hpp"

namespace hbbm {

namespace {

// Tags separating the single-particle samples from the BBM replicates.
constexpr std::uint64_t kSingleTag = 0x73696e676c65;
constexpr std::uint64_t kPairTag = 0x70616972;

bool in_interval(double x, LineInterval I) noexcept { return x >= I.lo && x <= I.hi; }

bool is_whole_line(LineInterval I) noexcept { return std::isinf(I.lo) && I.lo < 0 && std::isinf(I.hi) && I.hi > 0; }

SimConfig at_horizon(SimConfig c, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("t", "must be > 0");
  c.horizon = t;
  c.validate();
  return c;
}

RunningStats collect(const std::vector<double>& values) {
  RunningStats s;
  for (const double v : values) s.add(v);
  return s;
}

struct ReplicateValue {
  double value = 0.0;
  bool capped = false;
};

// e^{-beta t} * sum over living particles of `f`, one value per replicate.
template <class F>
std::vector<ReplicateValue> bbm_sums(const SimConfig& config, std::size_t runs, int threads, F&& f) {
  return detail::map_replicates<ReplicateValue>(runs, threads, [&](std::size_t r) {
    SimConfig c = config;
    c.seed = replicate_seed(config.seed, r);
    const auto snap = run(c, 1);
    double sum = 0.0;
    for (const auto& p : snap.particles) sum += f(p);
    return ReplicateValue{std::exp(-c.beta * c.horizon) * sum, snap.capped};
  });
}

RunningStats summarize(const std::vector<ReplicateValue>& values, std::size_t& capped) {
  RunningStats s;
  capped = 0;
  for (const auto& v : values) {
    s.add(v.value);
    if (v.capped) ++capped;
  }
  return s;
}

void note_cap(ValidationReport& report, std::size_t capped) {
  if (capped > 0) {
    report.notes.push_back(std::to_string(capped) + " replicates hit the population cap");
  }
}

void finish(ValidationReport& r) { r.z = z_score(r.lhs, r.lhs_se, r.rhs, r.rhs_se); }

}  // namespace

ValidationReport validate_many_to_one(const ManyToOneRun& run) {
  SimConfig config = at_horizon(run.config, run.t);
  if (run.f == TestFunction::envelope) {
    if (!(run.K >= 0.0 && run.K <= run.t)) throw ConfigError("K", "must lie in [0, t]");
    config.K = run.K;
  }
  if (run.runs < 2) throw std::invalid_argument("validate_many_to_one: need >= 2 runs");

  auto f = [&](const Particle& p) -> double {
    switch (run.f) {
      case TestFunction::one:
        return 1.0;
      case TestFunction::interval:
        return in_interval(p.x, run.interval) ? 1.0 : 0.0;
      case TestFunction::envelope:
        return p.typical_under(run.K) ? 1.0 : 0.0;
    }
    return 0.0;
  };
  std::size_t capped = 0;
  const auto lhs = summarize(bbm_sums(config, run.runs, run.threads, f), capped);

  ValidationReport report;
  report.name = std::string("many-to-one-") + std::string(to_string(run.f));
  report.lhs = lhs.mean();
  report.lhs_se = lhs.stderr_mean();
  report.lhs_samples = lhs.count();
  report.extras["lhs_unscaled"] = lhs.mean() * std::exp(config.beta * run.t);
  note_cap(report, capped);

  if (run.f == TestFunction::one) {
    report.rhs = 1.0;
    report.notes.push_back("rhs exact: f = 1");
  } else {
    if (run.single_runs < 2) throw std::invalid_argument("validate_many_to_one: need >= 2 single runs");
    const auto ctx = detail::make_context(config, run.t);
    const Stream base = Stream::from_seed(config.seed).derive(kSingleTag);
    const auto hits = detail::map_replicates<double>(run.single_runs, run.threads, [&](std::size_t i) {
      const auto seg = detail::simulate_segment(base.derive(i), State{}, 0.0, run.t, true, ctx);
      if (run.f == TestFunction::interval) return in_interval(seg.end.x, run.interval) ? 1.0 : 0.0;
      const bool typical = std::isnan(seg.last_violation) || !at_or_after(seg.last_violation, run.K);
      return typical ? 1.0 : 0.0;
    });
    const auto rhs = collect(hits);
    report.rhs = rhs.mean();
    report.rhs_se = rhs.stderr_mean();
    report.rhs_samples = rhs.count();
  }
  report.extras["beta"] = config.beta;
  report.extras["t"] = run.t;
  finish(report);
  return report;
}

ValidationReport validate_many_to_two(const ManyToTwoRun& run) {
  const SimConfig config = at_horizon(run.config, run.t);
  if (run.runs < 2) throw std::invalid_argument("validate_many_to_two: need >= 2 runs");
  const double beta = config.beta;
  const double t = run.t;
  const bool empty = !run.interval.has_value();
  const LineInterval I = run.interval.value_or(LineInterval{});

  ValidationReport report;
  report.name = "many-to-two";
  const auto values = bbm_sums(config, run.runs, run.threads, [&](const Particle& p) {
    return !empty && in_interval(p.x, I) ? 1.0 : 0.0;
  });
  std::size_t capped = 0;
  const auto lhs = summarize(values, capped);
  RunningStats squares;
  for (const auto& v : values) squares.add(v.value * v.value);
  report.lhs = squares.mean();
  report.lhs_se = squares.stderr_mean();
  report.lhs_samples = squares.count();
  report.extras["first_moment"] = lhs.mean();
  note_cap(report, capped);

  if (empty) {
    report.rhs = 0.0;
    report.notes.push_back("rhs exact: empty interval");
    finish(report);
    return report;
  }
  const double diagonal_weight = std::exp(-beta * t);
  if (is_whole_line(I)) {
    report.rhs = 2.0 - diagonal_weight;
    report.notes.push_back("rhs exact: I is the whole line, 2 - exp(-beta t)");
    finish(report);
    return report;
  }
  if (run.pair_samples < 2 * kSplitStrata || run.single_runs < 2) {
    throw std::invalid_argument("validate_many_to_two: too few pair or single samples");
  }

  // Split time r with density proportional to e^{-beta r} on [0, t]: in
  // u = 1 - e^{-beta r} the integral term is 2 * int_0^{U} g(r(u)) du.
  const auto ctx = detail::make_context(config, t);
  const double U = 1.0 - std::exp(-beta * t);
  std::vector<double> edges(kSplitStrata + 1, 0.0);
  for (std::size_t k = 1; k <= kSplitStrata; ++k) {
    const double r = t * std::pow(10.0, -3.0 * static_cast<double>(kSplitStrata - k) /
                                            static_cast<double>(kSplitStrata - 1));
    edges[k] = 1.0 - std::exp(-beta * r);
  }
  edges.back() = U;

  struct Job {
    std::size_t stratum;
    std::size_t index;
  };
  std::vector<Job> jobs;
  std::vector<std::size_t> allocation(kSplitStrata);
  for (std::size_t k = 0; k < kSplitStrata; ++k) {
    const double share = (edges[k + 1] - edges[k]) / U;
    allocation[k] = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(share * static_cast<double>(run.pair_samples))));
    for (std::size_t i = 0; i < allocation[k]; ++i) jobs.push_back({k, i});
  }
  const Stream pair_base = Stream::from_seed(config.seed).derive(kPairTag);
  const auto both = detail::map_replicates<double>(jobs.size(), run.threads, [&](std::size_t j) {
    const Job job = jobs[j];
    const Stream s = pair_base.derive(job.stratum).derive(job.index);
    const double u = edges[job.stratum] +
                     (edges[job.stratum + 1] - edges[job.stratum]) * s.uniform(Purpose::kSample, 0);
    const double r = std::min(t, -std::log1p(-u) / beta);
    State split{};
    if (r > 0.0) split = detail::simulate_segment(s.derive(0), State{}, 0.0, r, false, ctx).end;
    if (r >= t) return in_interval(split.x, I) ? 1.0 : 0.0;
    const auto a = detail::simulate_segment(s.derive(1), split, r, t, false, ctx).end;
    const auto b = detail::simulate_segment(s.derive(2), split, r, t, false, ctx).end;
    return in_interval(a.x, I) && in_interval(b.x, I) ? 1.0 : 0.0;
  });
  double integral = 0.0;
  double integral_var = 0.0;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < kSplitStrata; ++k) {
    RunningStats s;
    for (std::size_t i = 0; i < allocation[k]; ++i) s.add(both[offset + i]);
    offset += allocation[k];
    const double w = 2.0 * (edges[k + 1] - edges[k]);
    integral += w * s.mean();
    integral_var += w * w * s.variance() / static_cast<double>(s.count());
  }

  const Stream single_base = Stream::from_seed(config.seed).derive(kSingleTag);
  const auto inside = detail::map_replicates<double>(run.single_runs, run.threads, [&](std::size_t i) {
    const auto end = detail::simulate_segment(single_base.derive(i), State{}, 0.0, t, false, ctx).end;
    return in_interval(end.x, I) ? 1.0 : 0.0;
  });
  const auto diag = collect(inside);

  report.rhs = integral + diagonal_weight * diag.mean();
  report.rhs_se = std::sqrt(integral_var + diagonal_weight * diagonal_weight * diag.variance() /
                                               static_cast<double>(diag.count()));
  report.rhs_samples = jobs.size() + diag.count();
  report.extras["integral_term"] = integral;
  report.extras["diagonal_term"] = diagonal_weight * diag.mean();
  report.notes.push_back("split time stratified into 64 log-spaced strata, weighted by e^{-beta r}");
  finish(report);
  return report;
}

ValidationReport validate_exit_bound(const ExitBoundRun& run) {
  if (run.ys.empty() || run.widths.empty()) {
    throw std::invalid_argument("validate_exit_bound: empty grid");
  }
  for (const double v : run.ys) {
    if (!(v > 0.0)) throw ConfigError("ys", "must be > 0");
  }
  for (const double v : run.widths) {
    if (!(v > 0.0)) throw ConfigError("widths", "must be > 0");
  }
  if (!(run.scaling_y > 0.0 && run.scaling_half_width > 0.0)) {
    throw ConfigError("scaling", "y and L must be > 0");
  }
  if (run.samples < 2) throw std::invalid_argument("validate_exit_bound: need >= 2 samples");

  const Stream base = Stream::from_seed(run.seed);
  auto fraction_inside = [&](std::uint64_t tag, double y, double lo, double hi) {
    const Stream s = base.derive(tag);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < run.samples; ++i) {
      const double exit = y * s.cauchy(Purpose::kExit, i);
      if (exit >= lo && exit <= hi) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(run.samples);
  };

  ValidationReport report;
  report.name = "exit-bound";
  double sup_exact = 0.0;
  double sup_empirical = 0.0;
  std::uint64_t tag = 16;
  for (const double y : run.ys) {
    for (const double w : run.widths) {
      const double exact = exit_probability(0.0, y, -0.5 * w, 0.5 * w) * y / w;
      sup_exact = std::max(sup_exact, exact);
      const double empirical = fraction_inside(tag++, y, -0.5 * w, 0.5 * w) * y / w;
      sup_empirical = std::max(sup_empirical, empirical);
    }
  }
  report.extras["sup_ratio_exact"] = sup_exact;
  report.extras["sup_ratio_empirical"] = sup_empirical;
  report.extras["density_at_centre"] = 1.0 / std::numbers::pi;

  // |I| / y = 1e4: the probability approaches 1 and (c |I| / y) ^ 1 saturates.
  const double y0 = *std::min_element(run.ys.begin(), run.ys.end());
  report.extras["saturation_probability"] = fraction_inside(1, y0, -5e3 * y0, 5e3 * y0);
  report.extras["saturation_probability_exact"] = exit_probability(0.0, y0, -5e3 * y0, 5e3 * y0);

  const double y = run.scaling_y;
  const double L = run.scaling_half_width;
  const double left = fraction_inside(2, y, -L, L);
  const double right = fraction_inside(3, 1.0, -L / y, L / y);
  const auto n = static_cast<double>(run.samples);
  report.lhs = left;
  report.lhs_se = std::sqrt(left * (1.0 - left) / n);
  report.rhs = right;
  report.rhs_se = std::sqrt(right * (1.0 - right) / n);
  report.lhs_samples = run.samples;
  report.rhs_samples = run.samples;
  report.extras["scaling_exact"] = exit_probability(0.0, 1.0, -L / y, L / y);
  report.notes.push_back("lhs, rhs: P_(0,y)(exit in [-L, L]) and P_(0,1)(exit in [-L/y, L/y])");
  finish(report);
  return report;
}

ValidationReport validate_harmonic_martingale(const HarmonicRun& run) {
  const SimConfig config = at_horizon(run.config, run.t);
  if (run.runs < 2) throw std::invalid_argument("validate_harmonic_martingale: need >= 2 runs");
  const LineInterval I = run.interval;
  std::size_t capped = 0;
  const auto lhs = summarize(bbm_sums(config, run.runs, run.threads,
                                      [&](const Particle& p) {
                                        return exit_probability(p.x, std::exp(p.log_y), I.lo, I.hi);
                                      }),
                             capped);
  ValidationReport report;
  report.name = "harmonic-martingale";
  report.lhs = lhs.mean();
  report.lhs_se = lhs.stderr_mean();
  report.lhs_samples = lhs.count();
  report.rhs = exit_probability(0.0, 1.0, I.lo, I.hi);
  report.notes.push_back("rhs exact: h_I(0, 1) from the Cauchy exit law");
  note_cap(report, capped);
  finish(report);
  return report;
}

namespace {

struct GrowthAttempt {
  bool accepted = false;
  double statistic = 0.0;
  double mean_log_n = 0.0;
};

GrowthAttempt growth_attempt(const GrowthRun& run, const SimConfig& config, std::uint64_t seed) {
  const Stream root = Stream::from_seed(seed);
  Founder founder;
  founder.stream = root;
  founder.check_start = true;
  double sum_log = 0.0;
  for (std::size_t j = 1; j <= run.generations; ++j) {
    const double until = static_cast<double>(j) * run.K;
    const auto stage = run_from(founder, until, config, 1);
    std::vector<const Particle*> typical;
    for (const auto& p : stage.particles) {
      if (p.typical_under(config.K)) typical.push_back(&p);
    }
    if (typical.empty()) return {};
    sum_log += std::log(static_cast<double>(typical.size()));
    const double u = root.uniform(Purpose::kSelect, j);
    const auto pick = std::min(typical.size() - 1,
                               static_cast<std::size_t>(u * static_cast<double>(typical.size())));
    const Particle& next = *typical[pick];
    founder.stream = Stream(next.stream_key).derive(j);
    founder.state = next.state();
    founder.birth_time = until;
    founder.first_violation = next.first_violation;
    founder.last_violation = next.last_violation;
    founder.check_start = false;
  }
  const double mean_log = sum_log / static_cast<double>(run.generations);
  return {true, std::exp(-mean_log), mean_log};
}

}  // namespace

ValidationReport validate_growth_rate(const GrowthRun& run) {
  if (!(run.K > 0.0)) throw ConfigError("K", "must be > 0");
  if (run.generations < 1) throw ConfigError("generations", "must be >= 1");
  if (run.runs < 2) throw ConfigError("runs", "must be >= 2");
  SimConfig config = run.config;
  config.K = run.K;
  config.validate();
  if (static_cast<double>(run.generations) * run.K > config.horizon * (1.0 + 1e-12)) {
    throw ConfigError("horizon", "must be at least generations * K");
  }

  std::vector<GrowthAttempt> accepted;
  std::size_t attempts = 0;
  const std::size_t batch = std::max<std::size_t>(64, run.runs);
  while (accepted.size() < run.runs && attempts < run.max_attempts) {
    const std::size_t size = std::min(batch, run.max_attempts - attempts);
    const auto results = detail::map_replicates<GrowthAttempt>(size, run.threads, [&](std::size_t i) {
      return growth_attempt(run, config, replicate_seed(config.seed, attempts + i));
    });
    for (std::size_t i = 0; i < size && accepted.size() < run.runs; ++i) {
      ++attempts;
      if (results[i].accepted) accepted.push_back(results[i]);
    }
  }
  if (accepted.empty()) {
    throw ConditioningError("validate_growth_rate: every run had an empty typical set");
  }
  RunningStats stat;
  RunningStats mean_log;
  for (const auto& a : accepted) {
    stat.add(a.statistic);
    mean_log.add(a.mean_log_n);
  }
  ValidationReport report;
  report.name = "growth-rate";
  report.lhs = stat.mean();
  report.lhs_se = stat.stderr_mean();
  report.lhs_samples = stat.count();
  report.rhs = std::exp(-config.beta * run.K);
  report.extras["attempts"] = static_cast<double>(attempts);
  report.extras["acceptance_rate"] = static_cast<double>(stat.count()) / static_cast<double>(attempts);
  report.extras["mean_log_n"] = mean_log.mean();
  report.extras["exp_minus_mean_log_n"] = std::exp(-mean_log.mean());
  report.extras["abs_difference"] = std::abs(report.lhs - report.rhs);
  if (stat.count() < run.runs) {
    report.notes.push_back("only " + std::to_string(stat.count()) + " of " +
                           std::to_string(run.runs) + " runs accepted");
  }
  report.notes.push_back("statistic (prod_j 1/N_j)^(1/n) along a uniformly re-marked typical lineage");
  finish(report);
  return report;
}

std::vector<double> simulate_exits(const ExitLawRun& run) {
  if (!(run.t >= 0.0) || !std::isfinite(run.t)) throw ConfigError("t", "must be >= 0");
  SimConfig config = run.config;
  config.horizon = std::max(run.t, config.dt);
  config.validate();
  const auto ctx = detail::make_context(config, std::max(run.t, config.dt));
  const Stream base = Stream::from_seed(config.seed).derive(kSingleTag);
  return detail::map_replicates<double>(run.samples, run.threads, [&](std::size_t i) {
    const Stream s = base.derive(i);
    State end{};
    if (run.t > 0.0) end = detail::simulate_segment(s, State{}, 0.0, run.t, false, ctx).end;
    return exit_from_state(end, s.cauchy(Purpose::kExit, 0));
  });
}

ValidationReport validate_exit_law(const ExitLawRun& run) {
  if (run.samples < 10000) throw ConfigError("samples", "must be >= 10000");
  return exit_law_report(simulate_exits(run), run.t);
}

ValidationReport exit_law_report(std::vector<double> exits, double t) {
  if (exits.empty()) throw std::invalid_argument("exit_law_report: no exits");
  const auto n = exits.size();
  std::vector<double> sorted = exits;
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const double d = ks_statistic(std::move(exits), [](double x) { return exit_cdf(0.0, 1.0, x); });

  ValidationReport report;
  report.name = "exit-law";
  report.lhs = d;
  report.lhs_se = 1.0 / std::sqrt(static_cast<double>(n));
  report.rhs = 0.0;
  report.lhs_samples = n;
  report.extras["ks"] = d;
  report.extras["ks_pvalue"] = ks_pvalue(d, n);
  report.extras["median"] = median;
  report.extras["t"] = t;
  report.notes.push_back("lhs: KS distance to Cauchy(0, 1); z = sqrt(n) * KS");
  finish(report);
  return report;
}

}  // namespace hbbm
