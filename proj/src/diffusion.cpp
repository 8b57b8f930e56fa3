#include "hbbm/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hbbm {

void DiffusionParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("dt must be positive and finite (dt = " + std::to_string(dt) + ")");
  }
  if (!std::isfinite(lambda)) throw std::invalid_argument("lambda must be finite");
}

State step(State s, double dt, const DiffusionParams& params, CounterRng& rng) {
  const auto [g1, g2] = rng.normals();
  return advance(s, dt, params.log_drift(), g1, g2);
}

double exit_from_state(State s, double standard_cauchy) noexcept {
  return s.x + std::exp(s.log_y) * standard_cauchy;
}

double sample_exit(double x, double y, CounterRng& rng) {
  if (!(y > 0.0)) {
    throw DomainError("sample_exit: y must be positive (y = " + std::to_string(y) + ")");
  }
  return x + y * rng.cauchy();
}

double exit_cdf(double x, double y, double point) noexcept {
  return 0.5 + std::atan((point - x) / y) / std::numbers::pi;
}

double exit_probability(double x, double y, double a, double b) noexcept {
  if (!(b > a)) return 0.0;
  return (std::atan((b - x) / y) - std::atan((a - x) / y)) / std::numbers::pi;
}

std::size_t grid_intervals(double horizon, double dt) noexcept {
  if (!(horizon > 0.0)) return 0;
  const double ratio = horizon / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(ratio));
}

PathSegment simulate_path(State start, double horizon, const DiffusionParams& params,
                          CounterRng& rng) {
  params.validate();
  if (horizon < 0.0) throw std::invalid_argument("simulate_path: horizon must be >= 0");
  const std::size_t n = grid_intervals(horizon, params.dt);
  PathSegment path;
  path.times.reserve(n + 1);
  path.log_y.reserve(n + 1);
  path.x.reserve(n + 1);
  path.times.push_back(0.0);
  path.log_y.push_back(start.log_y);
  path.x.push_back(start.x);
  State s = start;
  double t = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double next = k < n ? static_cast<double>(k) * params.dt : horizon;
    s = step(s, next - t, params, rng);
    t = next;
    path.times.push_back(t);
    path.log_y.push_back(s.log_y);
    path.x.push_back(s.x);
  }
  return path;
}

}  // namespace hbbm
