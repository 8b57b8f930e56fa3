#include "hbbm/geometry.hpp"

#include <cmath>
#include <complex>

namespace hbbm {

double reduce_angle(double angle) noexcept {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative number can round up to exactly 2*pi
  if (a >= kTwoPi) a = 0.0;
  return a;
}

BoundaryPoint::BoundaryPoint(double angle) noexcept : angle_(reduce_angle(angle)) {}

BoundaryCoord BoundaryPoint::to_half_plane() const noexcept {
  if (angle_ == 0.0) return BoundaryCoord::infinity();
  return BoundaryCoord(std::tan(0.5 * (angle_ - std::numbers::pi)));
}

HalfPlanePoint disk_to_half(DiskPoint p) {
  const std::complex<double> z(p.x, p.y);
  if (!(1.0 - std::abs(z) > kDiskBoundaryMargin)) {
    throw DomainError("disk_to_half: point on or outside the unit circle (|z| = " +
                      std::to_string(std::abs(z)) + ")");
  }
  const std::complex<double> w = std::complex<double>(0.0, 1.0) * (1.0 + z) / (1.0 - z);
  return {w.real(), w.imag()};
}

DiskPoint half_to_disk(HalfPlanePoint p) {
  if (!(p.y > 0.0)) {
    throw DomainError("half_to_disk: y must be positive (y = " + std::to_string(p.y) + ")");
  }
  const std::complex<double> z(p.x, p.y);
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> w = (z - i) / (z + i);
  return {w.real(), w.imag()};
}

double boundary_angle(double x) noexcept { return std::numbers::pi + 2.0 * std::atan(x); }

BoundaryPoint boundary_to_angle(BoundaryCoord x) noexcept {
  if (x.is_infinite()) return BoundaryPoint(0.0);
  return BoundaryPoint(boundary_angle(x.value()));
}

}  // namespace hbbm
