#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace pws {

/// A point in camera coordinates (meters). z points away from the camera.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

/// Pinhole intrinsics plus the pixel grid the image is rasterized onto.
struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies on the grid.
  void validate() const;
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

enum class Axis : std::uint8_t { Tx, Ty, Tz, Rx, Ry, Rz };

inline constexpr std::array<Axis, 6> kAllAxes = {Axis::Tx, Axis::Ty, Axis::Tz,
                                                 Axis::Rx, Axis::Ry, Axis::Rz};

constexpr bool is_rotation(Axis axis) {
  return axis == Axis::Rx || axis == Axis::Ry || axis == Axis::Rz;
}

/// Lower-case short name ("tx" .. "rz").
std::string_view axis_name(Axis axis);
/// Parses "tx".."rz" case-insensitively. Throws InvalidArgument otherwise.
Axis parse_axis(std::string_view text);

/// The one-axis perturbation set S = [-radius, radius]. Radius is in meters
/// for translations and radians for rotations.
struct MotionSpec {
  Axis axis = Axis::Tz;
  double radius = 0.0;

  void validate() const;
  double lo() const { return -radius; }
  double hi() const { return radius; }
  double width() const { return 2.0 * radius; }
  bool contains(double value) const { return std::abs(value) <= radius; }

  friend bool operator==(const MotionSpec&, const MotionSpec&) = default;
};

/// A single pose alpha in S: exactly one motion coordinate is nonzero.
struct MotionValue {
  Axis axis = Axis::Tz;
  double value = 0.0;

  /// Checked construction: throws InvalidArgument when |value| > spec.radius.
  static MotionValue within(const MotionSpec& spec, double value);
  static MotionValue identity(Axis axis) { return {axis, 0.0}; }
};

struct PixelPosition {
  double u = 0.0;
  double v = 0.0;
};

struct Projection {
  PixelPosition pos;
  double depth = 0.0;
};

/// d(u, v)/d(alpha) in pixels per meter or pixels per radian.
struct ProjectionRate {
  double du = 0.0;
  double dv = 0.0;
};

/// Applies the inverse camera motion R^{-1}(P - t) for one pose. The sine and
/// cosine are evaluated once, so hot loops should keep one instance per pose.
class MotionTransform {
 public:
  explicit MotionTransform(MotionValue motion);

  Point3 apply(const Point3& p) const {
    switch (axis_) {
      case Axis::Tx: return {p.x - value_, p.y, p.z};
      case Axis::Ty: return {p.x, p.y - value_, p.z};
      case Axis::Tz: return {p.x, p.y, p.z - value_};
      case Axis::Rx: return {p.x, cos_ * p.y + sin_ * p.z, -sin_ * p.y + cos_ * p.z};
      case Axis::Ry: return {cos_ * p.x - sin_ * p.z, p.y, sin_ * p.x + cos_ * p.z};
      case Axis::Rz: return {cos_ * p.x + sin_ * p.y, -sin_ * p.x + cos_ * p.y, p.z};
    }
    return p;
  }

  /// Derivative of apply(p) with respect to the motion coordinate.
  Point3 rate(const Point3& p) const;

  Axis axis() const { return axis_; }
  double value() const { return value_; }

 private:
  Axis axis_;
  double value_;
  double sin_ = 0.0;
  double cos_ = 1.0;
};

/// Projection of an already-transformed point; nullopt when it is not in
/// front of the camera. Used by the rasterizer inner loop.
inline std::optional<Projection> project_camera_point(const Point3& q, const CameraModel& cam) {
  if (!(q.z > 0.0)) return std::nullopt;
  return Projection{{cam.fx * q.x / q.z + cam.cx, cam.fy * q.y / q.z + cam.cy}, q.z};
}

/// rho(P, alpha) and D(P, alpha). Throws NonPositiveDepth when D <= 0.
Projection project(const Point3& p, MotionValue motion, const CameraModel& cam);

/// Analytic d rho / d alpha. Throws NonPositiveDepth when D <= 0.
ProjectionRate projection_derivative(const Point3& p, MotionValue motion, const CameraModel& cam);

/// True when D(P, alpha) > 0 for every alpha in S.
bool visible_over(const Point3& p, const MotionSpec& spec);

/// L_P = max over S of max(|du/dalpha|, |dv/dalpha|).
///
/// The maximum is taken over a finite candidate set that provably contains
/// the maximizer: the two ends of S plus the interior extrema of the
/// a*cos(theta) + b*sin(theta) numerators (z-rotation). For x/y rotations both
/// rate magnitudes grow monotonically with |theta + phi| on the visible
/// branch, and for translations they are constant or monotone in alpha, so
/// the ends of S suffice. Throws NonPositiveDepth if P leaves the visible
/// half-space anywhere in S.
double lipschitz_constant(const Point3& p, const MotionSpec& spec, const CameraModel& cam);

/// Per-axis relaxation constant C_delta bounding L_P of hidden points by
/// max L_{P'} + C_delta over a one-frame cloud. `delta` is in pixels.
double delta_constant(const MotionSpec& spec, const CameraModel& cam,
                      std::span<const Point3> one_frame, double delta);

/// General-form projection K R^{-1}(P - t) / D with R = exp(omega^), used to
/// cross-check the closed forms.
Projection project_rodrigues(const Point3& p, const std::array<double, 3>& omega,
                             const std::array<double, 3>& translation, const CameraModel& cam);

}  // namespace pws
