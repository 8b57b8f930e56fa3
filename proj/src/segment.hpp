#pragma once

// Per-particle path kernel shared by the parallel engine, the serial
// reference, and lineage replay. All three must produce identical bits.

#include <cmath>
#include <cstddef>
#include <limits>

#include "hbbm/diffusion.hpp"
#include "hbbm/engine.hpp"
#include "hbbm/rng.hpp"

namespace hbbm::detail {

inline constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

struct Grid {
  double dt = 0.01;
  double horizon = 1.0;
  std::size_t intervals = 0;

  Grid(double dt_, double horizon_) noexcept
      : dt(dt_), horizon(horizon_), intervals(grid_intervals(horizon_, dt_)) {}

  [[nodiscard]] double time(std::size_t k) const noexcept {
    return k < intervals ? static_cast<double>(k) * dt : horizon;
  }

  // Smallest grid index whose time is strictly greater than t.
  [[nodiscard]] std::size_t first_after(double t) const noexcept {
    if (t < 0.0) return 0;
    auto k = static_cast<std::size_t>(std::floor(t / dt));
    while (k > 0 && time(k - 1) > t) --k;
    while (k <= intervals && time(k) <= t) ++k;
    return k;
  }
};

struct SegmentContext {
  Grid grid;
  double log_drift = -0.5;
  double K = 0.0;
};

struct SegmentOutcome {
  State end{};
  double first_violation = kNone;  // first grid time >= K outside the envelope
  double last_violation = kNone;   // last grid time outside the envelope
};

struct NoVisit {
  void operator()(double, const State&) const noexcept {}
};

// Advances one particle over [t0, t1]. Steps end at every grid time in
// (t0, t1] and at t1 itself; the envelope is checked only at grid times.
template <class Visit = NoVisit>
SegmentOutcome simulate_segment(Stream stream, State start, double t0, double t1, bool check_start,
                                const SegmentContext& ctx, Visit&& visit = {}) {
  SegmentOutcome out;
  const Envelope envelope{ctx.log_drift};
  auto check = [&](double s, double log_y) {
    if (!envelope.violated(s, log_y)) return;
    if (std::isnan(out.first_violation) && at_or_after(s, ctx.K)) out.first_violation = s;
    out.last_violation = s;
  };
  if (check_start) check(t0, start.log_y);

  const Grid& grid = ctx.grid;
  std::size_t k = grid.first_after(t0);
  State s = start;
  double t = t0;
  std::uint64_t draw = 0;
  while (t < t1) {
    double next = t1;
    bool on_grid = false;
    if (k <= grid.intervals && grid.time(k) <= t1) {
      next = grid.time(k);
      on_grid = true;
    }
    const auto [g_vertical, g_horizontal] = stream.normals(Purpose::kStep, draw++);
    s = advance(s, next - t, ctx.log_drift, g_vertical, g_horizontal);
    t = next;
    if (on_grid) {
      check(t, s.log_y);
      ++k;
    }
    visit(t, s);
  }
  out.end = s;
  return out;
}

inline double inherit_first(double parent, double own) noexcept {
  return std::isnan(parent) ? own : parent;
}
inline double inherit_last(double parent, double own) noexcept {
  return std::isnan(own) ? parent : own;
}
inline std::optional<double> as_optional(double v) noexcept {
  return std::isnan(v) ? std::nullopt : std::optional<double>(v);
}
inline double from_optional(const std::optional<double>& v) noexcept { return v.value_or(kNone); }

inline SegmentContext make_context(const SimConfig& config, double horizon) {
  return SegmentContext{Grid(config.dt, horizon), config.diffusion().log_drift(), config.K};
}

}  // namespace hbbm::detail
