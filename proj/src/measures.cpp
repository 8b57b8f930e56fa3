#include "hbbm/measures.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "hbbm/io.hpp"

namespace hbbm {

BoundaryMeasure::BoundaryMeasure(std::vector<Atom> atoms, Normalization normalization)
    : atoms_(std::move(atoms)), normalization_(normalization) {
  sort_atoms();
  prefix_.assign(atoms_.size() + 1, 0.0);
  for (std::size_t k = 0; k < atoms_.size(); ++k) prefix_[k + 1] = prefix_[k] + atoms_[k].weight;
  total_ = prefix_.back();
}

BoundaryMeasure BoundaryMeasure::by_count(std::vector<Atom> atoms, std::size_t denominator) {
  BoundaryMeasure m;
  m.normalization_ = Normalization::by_count;
  m.atoms_ = std::move(atoms);
  const double den = static_cast<double>(std::max<std::size_t>(denominator, 1));
  for (auto& a : m.atoms_) a.weight = 1.0 / den;
  m.unit_denominator_ = den;
  m.sort_atoms();
  m.prefix_.assign(m.atoms_.size() + 1, 0.0);
  for (std::size_t k = 1; k <= m.atoms_.size(); ++k) m.prefix_[k] = static_cast<double>(k) / den;
  m.total_ = m.prefix_.back();
  return m;
}

BoundaryMeasure BoundaryMeasure::by_mean(std::vector<Atom> atoms, double weight) {
  BoundaryMeasure m;
  m.normalization_ = Normalization::by_mean;
  m.atoms_ = std::move(atoms);
  for (auto& a : m.atoms_) a.weight = weight;
  m.unit_weight_ = weight;
  m.sort_atoms();
  m.prefix_.assign(m.atoms_.size() + 1, 0.0);
  for (std::size_t k = 1; k <= m.atoms_.size(); ++k) m.prefix_[k] = static_cast<double>(k) * weight;
  m.total_ = m.prefix_.back();
  return m;
}

void BoundaryMeasure::sort_atoms() {
  for (auto& a : atoms_) a.angle = reduce_angle(a.angle);
  std::stable_sort(atoms_.begin(), atoms_.end(),
                   [](const Atom& a, const Atom& b) { return a.angle < b.angle; });
}

double BoundaryMeasure::max_weight() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms_) m = std::max(m, a.weight);
  return m;
}

BoundaryMeasure BoundaryMeasure::rotated(double angle) const {
  std::vector<Atom> atoms(atoms_.begin(), atoms_.end());
  for (auto& a : atoms) a.angle = reduce_angle(a.angle + angle);
  if (unit_denominator_ > 0.0) {
    auto m = by_count(std::move(atoms), static_cast<std::size_t>(unit_denominator_));
    m.normalization_ = normalization_;
    return m;
  }
  if (unit_weight_ > 0.0) {
    auto m = by_mean(std::move(atoms), unit_weight_);
    m.normalization_ = normalization_;
    return m;
  }
  return BoundaryMeasure(std::move(atoms), normalization_);
}

CdfView::CdfView(const BoundaryMeasure& measure)
    : cumulative_(measure.prefix().begin(), measure.prefix().end()),
      total_(measure.total()),
      source_(measure) {
  angles_.reserve(measure.size());
  for (const auto& a : measure.atoms()) angles_.push_back(a.angle);
}

double CdfView::operator()(double angle) const noexcept {
  if (angle < 0.0) return 0.0;
  if (angle >= kTwoPi) return total_;
  const auto it = std::upper_bound(angles_.begin(), angles_.end(), angle);
  return cumulative_[static_cast<std::size_t>(it - angles_.begin())];
}

double CdfView::at_half_plane(double x) const noexcept {
  if (std::isnan(x)) return 0.0;
  // Atoms at angle exactly 0 sit at infinity and belong to no half-line.
  const auto zero_end = std::upper_bound(angles_.begin(), angles_.end(), 0.0);
  const double at_infinity = cumulative_[static_cast<std::size_t>(zero_end - angles_.begin())];
  if (x == std::numeric_limits<double>::infinity()) return total_ - at_infinity;
  return (*this)(boundary_angle(x)) - at_infinity;
}

double CdfView::max_arc_mass(double length) const {
  const std::size_t n = angles_.size();
  if (n == 0 || length <= 0.0) return 0.0;
  if (length >= kTwoPi) return total_;
  // Some maximising arc starts at an atom; slide its end over the doubled circle.
  double best = 0.0;
  std::size_t j = 0;  // atoms [i, j) (indices mod n, j up to i + n) lie in the arc
  auto angle_at = [&](std::size_t k) {
    return k < n ? angles_[k] : angles_[k - n] + kTwoPi;
  };
  for (std::size_t i = 0; i < n; ++i) {
    j = std::max(j, i);
    while (j < i + n && angle_at(j) < angles_[i] + length) ++j;
    const double mass = j <= n ? source_.range_mass(i, j)
                               : source_.range_mass(i, n) + source_.range_mass(0, j - n);
    best = std::max(best, mass);
  }
  return best;
}

CdfView cdf(const BoundaryMeasure& measure) { return CdfView(measure); }

namespace {

std::size_t lower_index(std::span<const Atom> atoms, double angle) {
  const auto it = std::lower_bound(atoms.begin(), atoms.end(), angle,
                                   [](const Atom& a, double v) { return a.angle < v; });
  return static_cast<std::size_t>(it - atoms.begin());
}

std::size_t upper_index(std::span<const Atom> atoms, double angle) {
  const auto it = std::upper_bound(atoms.begin(), atoms.end(), angle,
                                   [](double v, const Atom& a) { return v < a.angle; });
  return static_cast<std::size_t>(it - atoms.begin());
}

}  // namespace

double interval_mass(const BoundaryMeasure& measure, ArcInterval arc) noexcept {
  if (!(arc.length > 0.0)) return 0.0;
  if (arc.length >= kTwoPi) return measure.total();
  const auto atoms = measure.atoms();
  const double a = reduce_angle(arc.start);
  const double b = a + arc.length;
  const std::size_t i = lower_index(atoms, a);
  if (b <= kTwoPi) return measure.range_mass(i, lower_index(atoms, b));
  const std::size_t j = lower_index(atoms, b - kTwoPi);
  if (j >= i) return measure.total();
  return measure.range_mass(0, atoms.size() - (i - j));
}

double interval_mass(const BoundaryMeasure& measure, LineInterval interval) noexcept {
  if (std::isnan(interval.lo) || std::isnan(interval.hi) || interval.hi < interval.lo) return 0.0;
  const auto atoms = measure.atoms();
  // The half-plane line maps monotonically onto the open arc (0, 2*pi).
  const double lo = interval.lo == -std::numeric_limits<double>::infinity()
                        ? std::nextafter(0.0, 1.0)
                        : std::max(boundary_angle(interval.lo), std::nextafter(0.0, 1.0));
  const double hi = interval.hi == std::numeric_limits<double>::infinity()
                        ? kTwoPi
                        : boundary_angle(interval.hi);
  const std::size_t i = lower_index(atoms, lo);
  const std::size_t j = interval.hi == std::numeric_limits<double>::infinity() ? atoms.size()
                                                                             : upper_index(atoms, hi);
  return measure.range_mass(i, j);
}

double exit_cauchy(const Stream& exit_stream, const Particle& p) noexcept {
  return exit_stream.derive(p.stream_key).cauchy(Purpose::kExit, 0);
}

namespace {

Atom exit_atom(const Stream& exit_stream, const Particle& p, bool typical) {
  const double y = std::exp(p.log_y);
  const double exit_x = p.x + y * exit_cauchy(exit_stream, p);
  return Atom{boundary_angle(exit_x), 0.0, typical};
}

BoundaryMeasure normalise(const ParticleSnapshot& snapshot, std::vector<Atom> atoms) {
  if (snapshot.config.normalization == Normalization::by_mean) {
    const double elapsed = snapshot.time - snapshot.start_time;
    return BoundaryMeasure::by_mean(std::move(atoms), std::exp(-snapshot.config.beta * elapsed));
  }
  return BoundaryMeasure::by_count(std::move(atoms), snapshot.population());
}

}  // namespace

BoundaryMeasure project_to_boundary(const ParticleSnapshot& snapshot, const Stream& exit_stream) {
  std::vector<Atom> atoms;
  atoms.reserve(snapshot.population());
  for (const auto& p : snapshot.particles) atoms.push_back(exit_atom(exit_stream, p, p.typical_ok));
  return normalise(snapshot, std::move(atoms));
}

BoundaryMeasure typical_measure(const ParticleSnapshot& snapshot, double K,
                                const Stream& exit_stream) {
  if (!(K >= 0.0) || K > snapshot.time) {
    throw DomainError("typical_measure: onset K = " + std::to_string(K) +
                      " lies outside [0, snapshot time]");
  }
  std::vector<Atom> atoms;
  for (const auto& p : snapshot.particles) {
    if (p.typical_under(K)) atoms.push_back(exit_atom(exit_stream, p, true));
  }
  return normalise(snapshot, std::move(atoms));
}

void write_measure_csv(std::ostream& out, const BoundaryMeasure& measure) {
  out << "angle,weight,typical\n";
  for (const auto& a : measure.atoms()) {
    write_double(out, a.angle);
    out << ',';
    write_double(out, a.weight);
    out << ',' << (a.typical ? 1 : 0) << '\n';
  }
}

void write_cdf_csv(std::ostream& out, const CdfView& view) {
  out << "angle,F\n";
  const auto angles = view.angles();
  const auto cum = view.cumulative();
  for (std::size_t k = 0; k < angles.size(); ++k) {
    if (k + 1 < angles.size() && angles[k + 1] == angles[k]) continue;
    write_double(out, angles[k]);
    out << ',';
    write_double(out, cum[k + 1]);
    out << '\n';
  }
}

}  // namespace hbbm
