#pragma once

// Measures with known dimensions, shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <vector>

#include "hbbm/measures.hpp"

namespace hbbm::oracle {

inline const double kCantorDim = std::log(2.0) / std::log(3.0);

inline BoundaryMeasure uniform_random(std::size_t n, std::uint64_t seed) {
  CounterRng rng = CounterRng::from_seed(seed);
  std::vector<Atom> atoms;
  atoms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) atoms.push_back({kTwoPi * rng.uniform(), 0.0, true});
  return BoundaryMeasure::by_count(std::move(atoms), n);
}

inline BoundaryMeasure evenly_spaced(std::size_t n) {
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < n; ++i) {
    atoms.push_back({kTwoPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n), 0.0, true});
  }
  return BoundaryMeasure::by_count(std::move(atoms), n);
}

inline BoundaryMeasure point_mass(std::size_t n, double angle) {
  std::vector<Atom> atoms(n, Atom{angle, 0.0, true});
  return BoundaryMeasure::by_count(std::move(atoms), n);
}

// Both endpoints of the 2^level intervals of the middle-thirds construction,
// with [0, 1] laid on an arc of length `span` starting at `start`.
inline BoundaryMeasure cantor(int level, double start, double span) {
  std::vector<double> lefts{0.0};
  double len = 1.0;
  for (int l = 0; l < level; ++l) {
    len /= 3.0;
    std::vector<double> next;
    for (const double a : lefts) {
      next.push_back(a);
      next.push_back(a + 2.0 * len);
    }
    lefts = std::move(next);
  }
  std::vector<Atom> atoms;
  for (const double a : lefts) {
    atoms.push_back({start + span * a, 0.0, true});
    atoms.push_back({start + span * (a + len), 0.0, true});
  }
  const std::size_t n = atoms.size();
  return BoundaryMeasure::by_count(std::move(atoms), n);
}

// Equal-weight atoms at the given half-plane boundary points.
inline BoundaryMeasure on_line(const std::vector<double>& xs) {
  std::vector<Atom> atoms;
  for (const double x : xs) atoms.push_back({boundary_angle(x), 0.0, true});
  return BoundaryMeasure::by_count(std::move(atoms), xs.size());
}

}  // namespace hbbm::oracle
