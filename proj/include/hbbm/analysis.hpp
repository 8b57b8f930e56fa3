#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hbbm/engine.hpp"
#include "hbbm/measures.hpp"

namespace hbbm {

// Input on which an estimator has nothing to fit (empty measure, constant
// CDF, zero pair counts).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every replicate produced zero mass at some scale.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejection sampling never produced an accepted run.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScalePoint {
  double delta = 0.0;
  double value = 0.0;
};

struct EstimateReport {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double scale_min = 0.0;
  double scale_max = 0.0;
  std::vector<ScalePoint> points;  // (scale, statistic) pairs entering the fit
  std::size_t points_per_scale = 0;  // atoms (or replicates) behind each point
  std::size_t replicates = 1;
  std::optional<double> target;
  std::string provenance;
  double r_squared = 0.0;
  std::vector<std::string> notes;
};

struct ValidationReport {
  std::string name;
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double rhs_se = 0.0;  // 0 for exact right-hand sides
  double z = 0.0;
  std::size_t lhs_samples = 0;
  std::size_t rhs_samples = 0;
  std::map<std::string, double> extras;
  std::vector<std::string> notes;
};

void write_report_json(std::ostream& out, const EstimateReport& report);
void write_report_json(std::ostream& out, const ValidationReport& report);
// `delta,value` rows of the per-scale points.
void write_points_csv(std::ostream& out, const EstimateReport& report);

// Reproducible per-replicate seed.
std::uint64_t replicate_seed(std::uint64_t base, std::uint64_t replicate) noexcept;

// ---------------------------------------------------------------------------
// Fractal estimators

enum class BoxMode { support, all_points };
std::string_view to_string(BoxMode mode) noexcept;
BoxMode parse_box_mode(std::string_view text);

inline constexpr double kDefaultMassFloor = 0.05;

// Number of occupied arcs in a partition of the circle into arcs of length
// close to `delta`. The partition starts at the middle of the widest empty
// gap between atoms, so counts do not depend on where the circle is cut.
// Support mode keeps the fewest arcs that together hold at least
// (1 - mass_floor) of the total mass; all-points mode counts arcs with at
// least one atom.
std::size_t box_count(const BoundaryMeasure& measure, double delta, BoxMode mode,
                      double mass_floor = kDefaultMassFloor);

// Slope of log N(delta) against log(1/delta). Needs >= 4 scales spanning at
// least 1.5 decades, none finer than 1 / (atom count).
EstimateReport box_dimension(const BoundaryMeasure& measure, std::span<const double> scales,
                             BoxMode mode, double mass_floor = kDefaultMassFloor);

// Weighted fraction of atom pairs within circular distance delta.
double correlation_sum(const BoundaryMeasure& measure, double delta);

// Slope of log C(delta) against log(delta). Needs >= 1000 atoms.
EstimateReport correlation_dimension(const BoundaryMeasure& measure,
                                     std::span<const double> scales);

// Modulus of continuity M(eps) = sup_x F(x + eps) - F(x) over the circle,
// evaluated exactly; reports the slope of log M against log eps.
EstimateReport holder_exponent(const CdfView& cdf, std::span<const double> epsilons);

// `count` scales spaced evenly in log between lo and hi.
std::vector<double> log_spaced(double lo, double hi, std::size_t count);

// Fit scales for `atoms` atoms: 12 points log-spaced on [30 / atoms, 2 pi / 8].
std::vector<double> default_box_scales(std::size_t atoms, std::size_t count = 12);

// Horizon at which the mean population reaches `target_atoms`.
double adaptive_horizon(double beta, double target_atoms) noexcept;

// Configuration for dimension runs: each replicate stops when its population
// reaches `target_atoms` (the cap), with 3x the adaptive horizon as a bound.
SimConfig dimension_config(double beta, std::size_t target_atoms = 1'000'000, double dt = 0.05);

// Affine chart x -> (x - centre) / scale of the half-plane boundary. Affine
// maps are hyperbolic isometries, so they preserve every dimension.
struct Chart {
  double centre = 0.0;
  double scale = 1.0;
};

// Median and half inter-quartile range of the particles' exit points.
Chart exit_chart(const ParticleSnapshot& snapshot, const Stream& exit_stream);

// Exit atoms in a chart: one per living particle, or one per particle that
// ever lived (exits sampled from where it branched) when `ever_lived`.
BoundaryMeasure charted_exits(const ParticleSnapshot& snapshot, const Stream& exit_stream,
                              Chart chart, bool ever_lived);

struct DimensionRun {
  SimConfig config;  // see dimension_config(); seeds derive from config.seed
  BoxMode mode = BoxMode::support;
  double mass_floor = kDefaultMassFloor;
  std::size_t replicates = 20;
  std::vector<double> scales;  // empty: default_box_scales(config.max_particles)
  bool recentre = true;        // use exit_chart() instead of the identity chart
  int threads = 0;
};

// Box dimension over independent replicates. Support mode counts the exits of
// the living particles; all-points mode counts the exits of every particle
// that ever lived. The estimate is the mean per-replicate slope, and
// `points` holds exp(mean log N(delta)).
EstimateReport dimension_estimate(const DimensionRun& run);

struct DimensionResult {
  EstimateReport report;
  std::vector<double> slopes;  // per usable replicate, in replicate order
  std::size_t capped = 0;      // replicates that reached the population cap
};
DimensionResult dimension_run(const DimensionRun& run);
// Same replicates scored in several modes (run.mode is ignored).
std::vector<DimensionResult> dimension_runs(const DimensionRun& run, std::span<const BoxMode> modes);

struct HolderRun {
  SimConfig config;               // see dimension_config(); one capped run
  std::vector<double> epsilons;   // empty: default_box_scales(config.max_particles)
  bool recentre = true;
  int threads = 0;
};

// holder_exponent of the CDF of the living particles' exits, with the
// lower bound min(1/2, beta/3) as target.
EstimateReport holder_estimate(const HolderRun& run, bool* capped = nullptr);

// Closed forms with vertical drift lambda: support (2 beta / (1 + 2 lambda)) ^ 1;
// limit set (1 + 2 lambda - sqrt((1 + 2 lambda)^2 - 8 beta)) / 2 below
// beta = (1 + 2 lambda)^2 / 8 and 1 above.
double support_dimension(double beta, double lambda = 0.0) noexcept;
double limit_set_dimension(double beta, double lambda = 0.0) noexcept;

// ---------------------------------------------------------------------------
// Moment scaling over the centred half-plane intervals [-eps/2, eps/2]

// Synthetic path: one measure per replicate.
EstimateReport moment_exponent(std::span<const BoundaryMeasure> measures, int k,
                               std::span<const double> epsilons);

struct MomentRun {
  SimConfig config;
  std::optional<double> K;  // typical measure under this onset, else the full measure
  int k = 2;
  std::vector<double> epsilons;
  std::size_t replicates = 200;
  int threads = 0;
};

EstimateReport moment_exponent(const MomentRun& run);

// Default fit window: widths from 10 / (expected atoms) up to the interval
// 2 (sqrt 2 - 1) whose arc is 1/8 of the circle, at the horizon where the
// mean population reaches kMomentAtoms.
inline constexpr double kMomentAtoms = 1e4;
inline constexpr double kMomentEpsMin = 1e-3;
inline constexpr double kMomentEpsMax = 0.8284271247461903;
inline constexpr std::size_t kMomentEpsCount = 10;
// Typical measure under K = 1, k = 2, 500 replicates, dt = 0.05.
MomentRun default_moment_run(double beta);

// ---------------------------------------------------------------------------
// Identity validators

enum class TestFunction { one, interval, envelope };
std::string_view to_string(TestFunction f) noexcept;
TestFunction parse_test_function(std::string_view text);

struct ManyToOneRun {
  SimConfig config;  // beta, lambda, dt, seed
  double t = 1.0;
  TestFunction f = TestFunction::one;
  LineInterval interval{-1.0, 1.0};  // for TestFunction::interval
  double K = 1.0;                    // for TestFunction::envelope
  std::size_t runs = 10000;          // BBM replicates
  std::size_t single_runs = 100000;  // single-particle paths
  int threads = 0;
};

// e^{-beta t} E[sum_u f(path_u)] against E[f(path)].
ValidationReport validate_many_to_one(const ManyToOneRun& run);

struct ManyToTwoRun {
  SimConfig config;
  double t = 1.0;
  std::optional<LineInterval> interval = LineInterval{};  // nullopt: the empty set
  std::size_t runs = 10000;         // BBM replicates
  std::size_t pair_samples = 10000;  // two-particle samples for the integral term
  std::size_t single_runs = 10000;   // single-particle samples for the diagonal term
  int threads = 0;
};

inline constexpr std::size_t kSplitStrata = 64;

// E[nu_t(I)^2] with nu_t = e^{-beta t} sum_u delta_{X_u(t)} against
// 2 beta int_0^t P(both marked particles in I | split at r) e^{-beta r} dr
//   + e^{-beta t} P(X_t in I).
ValidationReport validate_many_to_two(const ManyToTwoRun& run);

struct ExitBoundRun {
  std::vector<double> ys;
  std::vector<double> widths;
  std::size_t samples = 100000;
  std::uint64_t seed = kDefaultSeed;
  double scaling_y = 2.0;
  double scaling_half_width = 1.0;
};

// Exit probability of a centred interval, times y / |I|, over the (y, |I|)
// grid; lhs/rhs are the two sides of the scaling identity
// P_(0,y)(exit in [-L, L]) = P_(0,1)(exit in [-L/y, L/y]).
ValidationReport validate_exit_bound(const ExitBoundRun& run);

struct HarmonicRun {
  SimConfig config;
  double t = 1.0;
  LineInterval interval{-1.0, 1.0};
  std::size_t runs = 10000;
  int threads = 0;
};

// h_I(x, y) = P_(x,y)(exit in I) is harmonic, so
// E[e^{-beta t} sum_u h_I(X_u(t), Y_u(t))] = h_I(0, 1).
ValidationReport validate_harmonic_martingale(const HarmonicRun& run);

struct GrowthRun {
  SimConfig config;  // beta, lambda, dt, seed; horizon must cover n * K
  double K = 1.0;
  std::size_t generations = 10;
  std::size_t runs = 200;           // accepted runs wanted
  std::size_t max_attempts = 100000;
  int threads = 0;
};

// Follows a lineage re-marked uniformly among the typical descendants at
// times K, 2K, ..., nK and reports the mean of (prod_j 1 / N_j)^(1/n)
// against e^{-beta K}. Runs where some N_j = 0 are rejected.
ValidationReport validate_growth_rate(const GrowthRun& run);

struct ExitLawRun {
  SimConfig config;  // lambda, dt, seed
  double t = 5.0;
  std::size_t samples = 100000;
  int threads = 0;
};

// Exits of single paths run to t on the grid and finished with the exact
// residual, against Cauchy(0, 1). lhs is the KS distance, z = sqrt(n) * KS.
ValidationReport validate_exit_law(const ExitLawRun& run);
// The simulated exits behind validate_exit_law.
std::vector<double> simulate_exits(const ExitLawRun& run);
// KS report for exits already simulated to time t.
ValidationReport exit_law_report(std::vector<double> exits, double t);

}  // namespace hbbm
