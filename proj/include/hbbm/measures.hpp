#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "hbbm/engine.hpp"
#include "hbbm/geometry.hpp"
#include "hbbm/rng.hpp"

namespace hbbm {

struct Atom {
  double angle = 0.0;  // [0, 2*pi)
  double weight = 0.0;
  bool typical = true;
};

// Half-open arc [start, start + length) of the circle, wrapping through 0.
struct ArcInterval {
  double start = 0.0;
  double length = kTwoPi;
};

// Closed interval [lo, hi] of the half-plane boundary; endpoints may be
// infinite. The point at infinity itself is never included.
struct LineInterval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

// Weighted atomic measure on the boundary circle, atoms sorted by angle.
class BoundaryMeasure {
 public:
  BoundaryMeasure() = default;

  // General weights; total is their sum.
  explicit BoundaryMeasure(std::vector<Atom> atoms,
                           Normalization normalization = Normalization::by_count);

  // Every atom carries `1 / denominator` (by-count) or `weight` (by-mean); the
  // cumulative masses are computed from atom counts, so a by-count measure over
  // the whole population has total exactly 1.
  static BoundaryMeasure by_count(std::vector<Atom> atoms, std::size_t denominator);
  static BoundaryMeasure by_mean(std::vector<Atom> atoms, double weight);

  [[nodiscard]] std::span<const Atom> atoms() const noexcept { return atoms_; }
  [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }
  [[nodiscard]] bool empty() const noexcept { return atoms_.empty(); }
  [[nodiscard]] Normalization normalization() const noexcept { return normalization_; }
  [[nodiscard]] double total() const noexcept { return total_; }
  [[nodiscard]] double max_weight() const noexcept;

  // Mass of the first k atoms in angular order.
  [[nodiscard]] double prefix_mass(std::size_t k) const noexcept { return prefix_[k]; }
  // Mass of atoms i..j-1; computed from the atom count when all weights are
  // equal, so nested ranges compare exactly.
  [[nodiscard]] double range_mass(std::size_t i, std::size_t j) const noexcept {
    if (j <= i) return 0.0;
    if (unit_denominator_ > 0.0) return static_cast<double>(j - i) / unit_denominator_;
    if (unit_weight_ > 0.0) return static_cast<double>(j - i) * unit_weight_;
    return prefix_[j] - prefix_[i];
  }
  [[nodiscard]] std::span<const double> prefix() const noexcept { return prefix_; }

  // Same atoms rotated by `angle` (used for symmetry checks).
  [[nodiscard]] BoundaryMeasure rotated(double angle) const;

 private:
  void sort_atoms();

  std::vector<Atom> atoms_;
  std::vector<double> prefix_{0.0};
  Normalization normalization_ = Normalization::by_count;
  double total_ = 0.0;
  double unit_denominator_ = 0.0;  // > 0 for by_count(): every weight is 1/denominator
  double unit_weight_ = 0.0;       // > 0 for by_mean(): every weight is unit_weight_
};

// Right-continuous cumulative distribution over angles.
class CdfView {
 public:
  explicit CdfView(const BoundaryMeasure& measure);

  // F(angle) = mass of atoms with angle' <= angle; 0 below 0, total at 2*pi.
  [[nodiscard]] double operator()(double angle) const noexcept;
  // mu((-inf, x]) on the half-plane boundary.
  [[nodiscard]] double at_half_plane(double x) const noexcept;
  [[nodiscard]] double total() const noexcept { return total_; }
  [[nodiscard]] std::span<const double> angles() const noexcept { return angles_; }
  [[nodiscard]] std::span<const double> cumulative() const noexcept { return cumulative_; }
  // Largest mass of a half-open arc of the given length, over all positions.
  [[nodiscard]] double max_arc_mass(double length) const;

 private:
  std::vector<double> angles_;
  std::vector<double> cumulative_;  // cumulative_[k] = mass of atoms 0..k-1
  double total_ = 0.0;
  BoundaryMeasure source_;
};

CdfView cdf(const BoundaryMeasure& measure);

double interval_mass(const BoundaryMeasure& measure, ArcInterval arc) noexcept;
double interval_mass(const BoundaryMeasure& measure, LineInterval interval) noexcept;

// Exit stream paired with a simulation seed; every tool uses this one so that
// a seed fixes both the particles and their exits.
inline Stream exit_stream_for(std::uint64_t seed) noexcept {
  return Stream::from_seed(seed).derive(0x65786974);
}

// Standard Cauchy sample for the exit of particle `p`; depends only on the
// particle's stream and the exit stream.
double exit_cauchy(const Stream& exit_stream, const Particle& p) noexcept;

// One atom per particle at the angle of its sampled boundary exit.
BoundaryMeasure project_to_boundary(const ParticleSnapshot& snapshot, const Stream& exit_stream);

// Atoms for particles typical under onset K only, with the same denominators
// (and the same exit samples) as project_to_boundary.
BoundaryMeasure typical_measure(const ParticleSnapshot& snapshot, double K,
                                const Stream& exit_stream);

void write_measure_csv(std::ostream& out, const BoundaryMeasure& measure);
void write_cdf_csv(std::ostream& out, const CdfView& cdf);

}  // namespace hbbm
