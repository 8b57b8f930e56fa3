#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

namespace hbbm {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Point of the Poincare disk, x^2 + y^2 < 1.
struct DiskPoint {
  double x = 0.0;
  double y = 0.0;
};

// Point of the upper half-plane, y > 0.
struct HalfPlanePoint {
  double x = 0.0;
  double y = 1.0;
};

// A point of the half-plane boundary: a real number or the point at infinity.
class BoundaryCoord {
 public:
  constexpr BoundaryCoord(double x) noexcept : x_(x), infinite_(false) {}  // NOLINT
  static constexpr BoundaryCoord infinity() noexcept { return BoundaryCoord(); }

  [[nodiscard]] constexpr bool is_infinite() const noexcept { return infinite_; }
  [[nodiscard]] constexpr double value() const noexcept { return x_; }

 private:
  constexpr BoundaryCoord() noexcept : x_(0.0), infinite_(true) {}
  double x_;
  bool infinite_;
};

// Angle on the disk boundary, always reduced to [0, 2*pi).
class BoundaryPoint {
 public:
  constexpr BoundaryPoint() noexcept = default;
  explicit BoundaryPoint(double angle) noexcept;

  [[nodiscard]] constexpr double angle() const noexcept { return angle_; }
  // Half-plane coordinate; angle 0 is the point at infinity.
  [[nodiscard]] BoundaryCoord to_half_plane() const noexcept;

  friend constexpr bool operator==(BoundaryPoint, BoundaryPoint) noexcept = default;

 private:
  double angle_ = 0.0;
};

double reduce_angle(double angle) noexcept;

// Distance of a disk point from the unit circle below which it is rejected.
inline constexpr double kDiskBoundaryMargin = 1e-12;

// Cayley map f(z) = i(1+z)/(1-z).
HalfPlanePoint disk_to_half(DiskPoint p);
// Inverse Cayley map z -> (z-i)/(z+i).
DiskPoint half_to_disk(HalfPlanePoint p);

// Continuous extension of half_to_disk to the boundary: x -> pi + 2 atan(x),
// infinity -> 0.
BoundaryPoint boundary_to_angle(BoundaryCoord x) noexcept;
double boundary_angle(double x) noexcept;

}  // namespace hbbm
