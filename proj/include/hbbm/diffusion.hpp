#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hbbm/geometry.hpp"
#include "hbbm/rng.hpp"

namespace hbbm {

// Hyperbolic Brownian motion in the half-plane, optionally with a vertical
// drift `lambda` away from the boundary point at infinity.
struct DiffusionParams {
  double lambda = 0.0;
  double dt = 0.01;

  void validate() const;
  [[nodiscard]] double log_drift() const noexcept { return -(0.5 + lambda); }
};

// Planar state; the vertical coordinate is carried as log y.
struct State {
  double x = 0.0;
  double log_y = 0.0;

  friend bool operator==(const State&, const State&) = default;
};

// One step of length h driven by a pair of independent standard normals.
// log y is advanced exactly; the horizontal variance integral of y^2 is
// approximated by h * exp(log y + log y').
[[nodiscard]] inline State advance(State s, double h, double log_drift, double g_vertical,
                                   double g_horizontal) noexcept {
  const double root_h = std::sqrt(h);
  const double log_y = s.log_y + log_drift * h + root_h * g_vertical;
  const double variance = h * std::exp(s.log_y + log_y);
  return {s.x + std::sqrt(variance) * g_horizontal, log_y};
}

State step(State s, double dt, const DiffusionParams& params, CounterRng& rng);

// Exit point on the real line of a motion started at (x, y): x + y * Cauchy.
double sample_exit(double x, double y, CounterRng& rng);
double exit_from_state(State s, double standard_cauchy) noexcept;

// Exact boundary exit law: P_(x,y)(X_inf in [a, b]).
double exit_probability(double x, double y, double a, double b) noexcept;
// Exact CDF of the exit law from (x, y).
double exit_cdf(double x, double y, double point) noexcept;

struct PathSegment {
  std::vector<double> times;
  std::vector<double> log_y;
  std::vector<double> x;

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

// Iterates step() on the grid 0, dt, 2dt, ..., horizon (last step shortened).
PathSegment simulate_path(State start, double horizon, const DiffusionParams& params,
                          CounterRng& rng);

// Number of grid intervals covering [0, horizon].
std::size_t grid_intervals(double horizon, double dt) noexcept;

}  // namespace hbbm
