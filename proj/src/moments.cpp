#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hbbm/analysis.hpp"
#include "hbbm/stats.hpp"
#include "replicate.hpp"

namespace hbbm {

namespace {

void check_epsilons(std::span<const double> eps) {
  if (eps.size() < 4) throw std::invalid_argument("moment_exponent: need at least 4 epsilons");
  const auto [lo, hi] = std::minmax_element(eps.begin(), eps.end());
  if (!(*lo > 0.0) || !std::isfinite(*hi)) {
    throw std::invalid_argument("moment_exponent: epsilons must be positive and finite");
  }
  if (std::log10(*hi / *lo) < 1.0 - 1e-9) {
    throw std::invalid_argument("moment_exponent: epsilons must span at least one decade");
  }
}

std::vector<double> centred_masses(const BoundaryMeasure& m, std::span<const double> eps) {
  std::vector<double> out;
  out.reserve(eps.size());
  for (const double e : eps) out.push_back(interval_mass(m, LineInterval{-0.5 * e, 0.5 * e}));
  return out;
}

// masses[r][i]: mass of I_eps[i] in replicate r.
EstimateReport fit_moments(const std::vector<std::vector<double>>& masses, int k,
                           std::span<const double> eps) {
  const std::size_t reps = masses.size();
  const std::size_t n = eps.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::log(eps[i]);

  // Sums of m^k per epsilon; a delete-one mean is (sum - own) / (reps - 1).
  std::vector<std::vector<double>> powers(reps, std::vector<double>(n));
  std::vector<double> sums(n, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      powers[r][i] = std::pow(masses[r][i], k);
      sums[i] += powers[r][i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sums[i] > 0.0)) {
      throw InsufficientDataError("moment_exponent: every replicate has zero mass at eps = " +
                                  std::to_string(eps[i]));
    }
  }
  auto slope_without = [&](std::size_t skip) {
    std::vector<double> y(n);
    const double count = static_cast<double>(skip < reps ? reps - 1 : reps);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = skip < reps ? sums[i] - powers[skip][i] : sums[i];
      y[i] = std::log(std::max(s, 0.0) / count);
    }
    return fit_line(x, y).slope;
  };

  EstimateReport r;
  r.name = "moment-exponent-k" + std::to_string(k);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean = sums[i] / static_cast<double>(reps);
    y[i] = std::log(mean);
    r.points.push_back({eps[i], mean});
  }
  const auto fit = fit_line(x, y);
  r.estimate = fit.slope;
  r.r_squared = fit.r_squared;
  r.std_error = fit.slope_stderr;
  if (reps >= 3) {
    bool finite = true;
    for (std::size_t i = 0; i < n && finite; ++i) {
      for (std::size_t s = 0; s < reps && finite; ++s) finite = sums[i] - powers[s][i] > 0.0;
    }
    if (finite) r.std_error = jackknife(reps, slope_without).std_error;
  }
  const auto [lo, hi] = std::minmax_element(eps.begin(), eps.end());
  r.scale_min = *lo;
  r.scale_max = *hi;
  r.points_per_scale = reps;
  r.replicates = reps;
  r.notes.push_back(
      "decay exponent of E[m(I_eps)^k] over I_eps = [-eps/2, eps/2]; a fixed centred interval is a "
      "lower-bound proxy for the supremum over intervals");
  return r;
}

}  // namespace

EstimateReport moment_exponent(std::span<const BoundaryMeasure> measures, int k,
                               std::span<const double> epsilons) {
  if (k < 1) throw std::invalid_argument("moment_exponent: k must be >= 1");
  if (measures.empty()) throw std::invalid_argument("moment_exponent: no measures");
  check_epsilons(epsilons);
  std::vector<std::vector<double>> masses;
  masses.reserve(measures.size());
  for (const auto& m : measures) masses.push_back(centred_masses(m, epsilons));
  return fit_moments(masses, k, epsilons);
}

MomentRun default_moment_run(double beta) {
  MomentRun run;
  run.config.beta = beta;
  run.config.dt = 0.05;
  run.config.horizon = adaptive_horizon(beta, kMomentAtoms);
  run.K = 1.0;
  run.k = 2;
  run.replicates = 500;
  run.epsilons = log_spaced(kMomentEpsMin, kMomentEpsMax, kMomentEpsCount);
  return run;
}

EstimateReport moment_exponent(const MomentRun& run) {
  run.config.validate();
  if (run.k < 2) throw std::invalid_argument("moment_exponent: k must be >= 2");
  if (run.replicates < 200) throw std::invalid_argument("moment_exponent: need >= 200 replicates");
  check_epsilons(run.epsilons);
  if (run.K && !(*run.K >= 0.0 && *run.K <= run.config.horizon)) {
    throw ConfigError("K", "must lie in [0, horizon]");
  }
  std::vector<std::size_t> capped(run.replicates, 0);
  const auto masses = detail::map_replicates<std::vector<double>>(
      run.replicates, run.threads, [&](std::size_t r) {
        SimConfig c = run.config;
        c.seed = replicate_seed(run.config.seed, r);
        const auto snap = hbbm::run(c, 1);
        capped[r] = snap.capped ? 1 : 0;
        const Stream exits = exit_stream_for(c.seed);
        const auto m = run.K ? typical_measure(snap, *run.K, exits) : project_to_boundary(snap, exits);
        return centred_masses(m, run.epsilons);
      });
  auto report = fit_moments(masses, run.k, run.epsilons);
  report.name = run.K ? "moment-exponent-typical-k" + std::to_string(run.k)
                      : "moment-exponent-k" + std::to_string(run.k);
  const double beta = run.config.beta;
  if (run.K) {
    report.target = std::min(2.0, 1.0 + 2.0 * beta);
    report.provenance = "lower bound 2 ^ (1 + 2 beta - delta) on the decay exponent, any delta > 0";
  } else {
    report.target = std::min(2.0, 1.0 + beta / 3.0);
    report.provenance = "lower bound 2 ^ (1 + beta / 3) on the decay exponent";
  }
  report.notes.push_back("normalization: " + std::string(to_string(run.config.normalization)));
  std::size_t hits = 0;
  for (const auto c : capped) hits += c;
  if (hits > 0) report.notes.push_back(std::to_string(hits) + " replicates hit the population cap");
  return report;
}

}  // namespace hbbm
