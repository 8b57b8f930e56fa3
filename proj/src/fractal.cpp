#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hbbm/analysis.hpp"
#include "hbbm/stats.hpp"
#include "replicate.hpp"

namespace hbbm {

namespace {

constexpr double kMinDecades = 1.5;

void check_scales(std::span<const double> scales, double min_scale, double decades,
                  const char* what) {
  if (scales.size() < 4) throw std::invalid_argument(std::string(what) + ": need at least 4 scales");
  const auto [lo, hi] = std::minmax_element(scales.begin(), scales.end());
  if (!(*lo > 0.0) || !std::isfinite(*hi)) {
    throw std::invalid_argument(std::string(what) + ": scales must be positive and finite");
  }
  if (std::log10(*hi / *lo) < decades - 1e-9) {
    throw std::invalid_argument(std::string(what) + ": scales must span at least " +
                                std::to_string(decades) + " decades");
  }
  if (*lo < min_scale) {
    throw std::invalid_argument(std::string(what) + ": scale " + std::to_string(*lo) +
                                " is below the resolution " + std::to_string(min_scale));
  }
}

// Start of the box partition: the middle of the widest gap between
// consecutive atoms (going round the circle).
double partition_anchor(std::span<const Atom> atoms) {
  double best = -1.0;
  double anchor = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double a = atoms[i].angle;
    const double b = i + 1 < atoms.size() ? atoms[i + 1].angle : atoms[0].angle + kTwoPi;
    if (b - a > best) {
      best = b - a;
      anchor = a + 0.5 * (b - a);
    }
  }
  return reduce_angle(anchor);
}

std::size_t boxes_for(double delta) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kTwoPi / delta)));
}

struct BoxTally {
  std::vector<double> mass;
  std::vector<std::size_t> count;
};

BoxTally tally(const BoundaryMeasure& measure, std::size_t boxes) {
  BoxTally t{std::vector<double>(boxes, 0.0), std::vector<std::size_t>(boxes, 0)};
  const auto atoms = measure.atoms();
  const double anchor = partition_anchor(atoms);
  const double width = kTwoPi / static_cast<double>(boxes);
  for (const auto& a : atoms) {
    const double offset = reduce_angle(a.angle - anchor);
    const auto k = std::min(boxes - 1, static_cast<std::size_t>(offset / width));
    t.mass[k] += a.weight;
    ++t.count[k];
  }
  return t;
}

bool equal_weights(const BoundaryMeasure& measure) {
  const auto atoms = measure.atoms();
  return std::all_of(atoms.begin(), atoms.end(),
                     [&](const Atom& a) { return a.weight == atoms.front().weight; });
}

EstimateReport fitted(std::string name, std::span<const double> x, std::span<const double> y,
                      std::vector<ScalePoint> points) {
  EstimateReport r;
  r.name = std::move(name);
  const auto fit = fit_line(x, y);
  r.estimate = fit.slope;
  r.std_error = fit.slope_stderr;
  r.r_squared = fit.r_squared;
  r.scale_min = points.front().delta;
  r.scale_max = points.front().delta;
  for (const auto& p : points) {
    r.scale_min = std::min(r.scale_min, p.delta);
    r.scale_max = std::max(r.scale_max, p.delta);
  }
  r.points = std::move(points);
  return r;
}

}  // namespace

std::size_t box_count(const BoundaryMeasure& measure, double delta, BoxMode mode,
                      double mass_floor) {
  if (measure.empty()) return 0;
  const BoxTally t = tally(measure, boxes_for(delta));
  if (mode == BoxMode::all_points) {
    return static_cast<std::size_t>(
        std::count_if(t.count.begin(), t.count.end(), [](std::size_t c) { return c > 0; }));
  }
  if (!(mass_floor >= 0.0 && mass_floor < 1.0)) {
    throw std::invalid_argument("box_count: mass_floor must lie in [0, 1)");
  }
  // Fewest boxes holding (1 - mass_floor) of the mass. Equal-weight measures
  // are handled with integer counts so the answer does not depend on rounding.
  if (equal_weights(measure)) {
    auto counts = t.count;
    std::sort(counts.begin(), counts.end(), std::greater<>());
    const double need = std::ceil((1.0 - mass_floor) * static_cast<double>(measure.size()) - 1e-9);
    std::size_t held = 0;
    std::size_t k = 0;
    while (k < counts.size() && static_cast<double>(held) < need) held += counts[k++];
    return std::max<std::size_t>(k, 1);
  }
  auto masses = t.mass;
  std::sort(masses.begin(), masses.end(), std::greater<>());
  const double need = (1.0 - mass_floor) * measure.total() * (1.0 - 1e-12);
  double held = 0.0;
  std::size_t k = 0;
  while (k < masses.size() && held < need) held += masses[k++];
  return std::max<std::size_t>(k, 1);
}

EstimateReport box_dimension(const BoundaryMeasure& measure, std::span<const double> scales,
                             BoxMode mode, double mass_floor) {
  if (measure.empty() || !(measure.total() > 0.0)) {
    throw DegenerateInputError("box_dimension: the measure has no mass");
  }
  check_scales(scales, 1.0 / static_cast<double>(measure.size()), kMinDecades, "box_dimension");
  std::vector<double> x;
  std::vector<double> y;
  std::vector<ScalePoint> points;
  for (const double delta : scales) {
    const std::size_t boxes = boxes_for(delta);
    const auto n = box_count(measure, delta, mode, mass_floor);
    x.push_back(std::log(static_cast<double>(boxes) / kTwoPi));  // log(1 / box width)
    y.push_back(std::log(static_cast<double>(n)));
    points.push_back({delta, static_cast<double>(n)});
  }
  auto r = fitted(mode == BoxMode::support ? "box-dimension-support" : "box-dimension-all-points",
                  x, y, std::move(points));
  r.points_per_scale = measure.size();
  if (mode == BoxMode::support) {
    r.notes.push_back("support: fewest arcs holding " + std::to_string(1.0 - mass_floor) +
                      " of the mass");
  } else {
    r.notes.push_back("all-points: heuristic estimator of the limit-set dimension");
  }
  return r;
}

double correlation_sum(const BoundaryMeasure& measure, double delta) {
  if (!(delta >= 0.0 && delta < std::numbers::pi)) {
    throw std::invalid_argument("correlation_sum: delta must lie in [0, pi)");
  }
  const auto atoms = measure.atoms();
  const std::size_t n = atoms.size();
  if (n < 2) return 0.0;
  const double total = measure.total();
  // Each unordered pair counted once from the earlier atom in cyclic order.
  auto window = [&](std::size_t from, std::size_t to) {  // mass of cyclic positions [from, to)
    if (to <= n) return measure.range_mass(from, to);
    return measure.range_mass(from, n) + measure.range_mass(0, to - n);
  };
  auto offset = [&](std::size_t i, std::size_t j) {
    return j < n ? atoms[j].angle - atoms[i].angle : atoms[j - n].angle + kTwoPi - atoms[i].angle;
  };
  double pairs = 0.0;
  std::size_t end = 1;
  for (std::size_t i = 0; i < n; ++i) {
    end = std::max(end, i + 1);
    while (end < i + n && offset(i, end) <= delta) ++end;
    pairs += atoms[i].weight * window(i + 1, end);
  }
  double squares = 0.0;
  for (const auto& a : atoms) squares += a.weight * a.weight;
  const double all_pairs = 0.5 * (total * total - squares);
  return all_pairs > 0.0 ? pairs / all_pairs : 0.0;
}

EstimateReport correlation_dimension(const BoundaryMeasure& measure,
                                     std::span<const double> scales) {
  if (measure.size() < 1000) {
    throw std::invalid_argument("correlation_dimension: need at least 1000 atoms");
  }
  check_scales(scales, 0.0, kMinDecades, "correlation_dimension");
  std::vector<double> x;
  std::vector<double> y;
  std::vector<ScalePoint> points;
  for (const double delta : scales) {
    const double c = correlation_sum(measure, delta);
    if (!(c > 0.0)) {
      throw DegenerateInputError("correlation_dimension: no atom pairs within " +
                                 std::to_string(delta));
    }
    x.push_back(std::log(delta));
    y.push_back(std::log(c));
    points.push_back({delta, c});
  }
  auto r = fitted("correlation-dimension", x, y, std::move(points));
  r.points_per_scale = measure.size();
  return r;
}

EstimateReport holder_exponent(const CdfView& cdf, std::span<const double> epsilons) {
  check_scales(epsilons, 0.0, 0.0, "holder_exponent");
  const auto cumulative = cdf.cumulative();
  if (!(cdf.total() > 0.0) || cumulative.size() < 2) {
    throw DegenerateInputError("holder_exponent: the distribution function is constant");
  }
  std::vector<double> x;
  std::vector<double> y;
  std::vector<ScalePoint> points;
  for (const double eps : epsilons) {
    const double m = cdf.max_arc_mass(eps);
    x.push_back(std::log(eps));
    y.push_back(std::log(m));
    points.push_back({eps, m});
  }
  auto r = fitted("holder-exponent", x, y, std::move(points));
  r.points_per_scale = cdf.angles().size();
  r.notes.push_back("modulus of continuity taken over all arc positions");
  return r;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 2) {
    throw std::invalid_argument("log_spaced: need 0 < lo <= hi and count >= 2");
  }
  std::vector<double> out(count);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.back() = hi;
  return out;
}

std::vector<double> default_box_scales(std::size_t atoms, std::size_t count) {
  return log_spaced(30.0 / static_cast<double>(std::max<std::size_t>(atoms, 1)), kTwoPi / 8.0,
                    count);
}

double adaptive_horizon(double beta, double target_atoms) noexcept {
  return std::log(std::max(target_atoms, 2.0)) / beta;
}

SimConfig dimension_config(double beta, std::size_t target_atoms, double dt) {
  SimConfig c;
  c.beta = beta;
  c.dt = dt;
  c.max_particles = target_atoms;
  c.horizon = 3.0 * adaptive_horizon(beta, static_cast<double>(target_atoms));
  return c;
}

namespace {

double exit_point(const Stream& exit_stream, std::uint64_t key, State s) {
  return exit_from_state(s, exit_stream.derive(key).cauchy(Purpose::kExit, 0));
}

}  // namespace

Chart exit_chart(const ParticleSnapshot& snapshot, const Stream& exit_stream) {
  std::vector<double> exits;
  exits.reserve(snapshot.population());
  for (const auto& p : snapshot.particles) exits.push_back(exit_point(exit_stream, p.stream_key, p.state()));
  if (exits.empty()) return {};
  auto quantile = [&](double q) {
    const auto k = static_cast<std::size_t>(q * static_cast<double>(exits.size() - 1));
    std::nth_element(exits.begin(), exits.begin() + static_cast<std::ptrdiff_t>(k), exits.end());
    return exits[k];
  };
  const double median = quantile(0.5);
  const double spread = 0.5 * (quantile(0.75) - quantile(0.25));
  return {median, spread > 0.0 ? spread : 1.0};
}

BoundaryMeasure charted_exits(const ParticleSnapshot& snapshot, const Stream& exit_stream,
                              Chart chart, bool ever_lived) {
  std::vector<Atom> atoms;
  auto add = [&](std::uint64_t key, State s, bool typical) {
    const double x = (exit_point(exit_stream, key, s) - chart.centre) / chart.scale;
    atoms.push_back({boundary_angle(x), 0.0, typical});
  };
  if (ever_lived) {
    atoms.reserve(snapshot.genealogy.size());
    for (const auto& node : snapshot.genealogy) add(node.stream_key, node.end_state, true);
  } else {
    atoms.reserve(snapshot.population());
    for (const auto& p : snapshot.particles) add(p.stream_key, p.state(), p.typical_ok);
  }
  const std::size_t n = atoms.size();
  return BoundaryMeasure::by_count(std::move(atoms), n);
}

namespace {

struct ReplicateBoxes {
  std::vector<double> log_counts;
  double slope = 0.0;
  std::size_t atoms = 0;
  bool capped = false;
  bool ok = false;
};

// One simulation scored in every requested mode.
std::vector<ReplicateBoxes> dimension_replicate(const DimensionRun& run,
                                                std::span<const BoxMode> modes,
                                                std::span<const double> scales, std::size_t r) {
  SimConfig c = run.config;
  c.seed = replicate_seed(run.config.seed, r);
  const auto snap = hbbm::run(c, 1);
  const Stream exits = exit_stream_for(c.seed);
  const Chart chart = run.recentre ? exit_chart(snap, exits) : Chart{};
  std::vector<ReplicateBoxes> out;
  for (const BoxMode mode : modes) {
    const auto measure = charted_exits(snap, exits, chart, mode == BoxMode::all_points);
    ReplicateBoxes b;
    b.atoms = measure.size();
    b.capped = snap.capped;
    if (measure.size() * scales.front() >= 1.0) {  // else below resolution
      const auto report = box_dimension(measure, scales, mode, run.mass_floor);
      b.slope = report.estimate;
      for (const auto& p : report.points) b.log_counts.push_back(std::log(p.value));
      b.ok = true;
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<double> run_scales(const DimensionRun& run) {
  auto scales = run.scales.empty() ? default_box_scales(run.config.max_particles) : run.scales;
  std::sort(scales.begin(), scales.end());
  return scales;
}

DimensionResult summarise(const DimensionRun& run, BoxMode mode, std::span<const double> scales,
                          const std::vector<const ReplicateBoxes*>& reps) {
  RunningStats slopes;
  std::vector<RunningStats> per_scale(scales.size());
  std::size_t skipped = 0;
  std::size_t capped = 0;
  std::size_t min_atoms = 0;
  DimensionResult result;
  for (const auto* r : reps) {
    if (r->capped) ++capped;
    if (!r->ok) {
      ++skipped;
      continue;
    }
    min_atoms = slopes.count() == 0 ? r->atoms : std::min(min_atoms, r->atoms);
    slopes.add(r->slope);
    result.slopes.push_back(r->slope);
    for (std::size_t k = 0; k < scales.size(); ++k) per_scale[k].add(r->log_counts[k]);
  }
  if (slopes.count() < 2) {
    throw InsufficientDataError("dimension_estimate: fewer than 2 replicates resolve the scales");
  }
  result.capped = capped;
  EstimateReport& report = result.report;
  report.name = mode == BoxMode::support ? "dimension-support" : "dimension-all-points";
  report.estimate = slopes.mean();
  report.std_error = slopes.stderr_mean();
  report.scale_min = scales.front();
  report.scale_max = scales.back();
  for (std::size_t k = 0; k < scales.size(); ++k) {
    report.points.push_back({scales[k], std::exp(per_scale[k].mean())});
  }
  report.points_per_scale = min_atoms;
  report.replicates = slopes.count();
  const double beta = run.config.beta;
  const double lambda = run.config.lambda;
  if (mode == BoxMode::support) {
    report.target = support_dimension(beta, lambda);
    report.provenance = "closed form (2 beta / (1 + 2 lambda)) ^ 1";
  } else {
    report.target = limit_set_dimension(beta, lambda);
    report.provenance =
        "closed form (1 + 2 lambda - sqrt((1 + 2 lambda)^2 - 8 beta)) / 2, capped at 1; "
        "heuristic estimator: box counts of the exits of every particle that ever lived";
  }
  report.notes.push_back("estimate: mean of per-replicate slopes; stderr across replicates");
  report.notes.push_back(run.recentre ? "chart: exits recentred at their median, scaled by half the IQR"
                                      : "chart: identity");
  if (skipped > 0) {
    report.notes.push_back(std::to_string(skipped) + " replicates too small for the finest scale");
  }
  report.notes.push_back(std::to_string(capped) + " replicates stopped at the target population");
  return result;
}

}  // namespace

std::vector<DimensionResult> dimension_runs(const DimensionRun& run, std::span<const BoxMode> modes) {
  run.config.validate();
  if (run.replicates < 2) throw std::invalid_argument("dimension_estimate: need >= 2 replicates");
  if (modes.empty()) throw std::invalid_argument("dimension_estimate: no modes");
  const auto scales = run_scales(run);
  check_scales(scales, 0.0, kMinDecades, "dimension_estimate");
  const auto reps = detail::map_replicates<std::vector<ReplicateBoxes>>(
      run.replicates, run.threads,
      [&](std::size_t r) { return dimension_replicate(run, modes, scales, r); });
  std::vector<DimensionResult> out;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    std::vector<const ReplicateBoxes*> column;
    for (const auto& r : reps) column.push_back(&r[m]);
    out.push_back(summarise(run, modes[m], scales, column));
  }
  return out;
}

DimensionResult dimension_run(const DimensionRun& run) {
  const BoxMode modes[] = {run.mode};
  return std::move(dimension_runs(run, modes).front());
}

EstimateReport dimension_estimate(const DimensionRun& run) { return dimension_run(run).report; }

EstimateReport holder_estimate(const HolderRun& run, bool* capped) {
  run.config.validate();
  auto eps = run.epsilons.empty() ? default_box_scales(run.config.max_particles) : run.epsilons;
  const auto snap = hbbm::run(run.config, run.threads);
  if (capped) *capped = snap.capped;
  const Stream exits = exit_stream_for(run.config.seed);
  const Chart chart = run.recentre ? exit_chart(snap, exits) : Chart{};
  const auto measure = charted_exits(snap, exits, chart, false);
  auto report = holder_exponent(cdf(measure), eps);
  report.target = std::min(0.5, run.config.beta / 3.0);
  report.provenance = "lower bound: the CDF is gamma-Holder for every gamma < min(1/2, beta/3)";
  report.notes.push_back(run.recentre ? "chart: exits recentred at their median, scaled by half the IQR"
                                      : "chart: identity");
  report.notes.push_back("atoms: " + std::to_string(measure.size()) +
                         (snap.capped ? " (population cap reached)" : ""));
  return report;
}

double support_dimension(double beta, double lambda) noexcept {
  return std::min(1.0, 2.0 * beta / (1.0 + 2.0 * lambda));
}

double limit_set_dimension(double beta, double lambda) noexcept {
  const double a = 1.0 + 2.0 * lambda;
  if (beta > a * a / 8.0) return 1.0;
  return 0.5 * (a - std::sqrt(a * a - 8.0 * beta));
}

}  // namespace hbbm
