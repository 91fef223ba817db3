#include "pws/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>
#include <string>
#include <vector>

#include "pws/error.hpp"

namespace pws {

namespace {

[[noreturn]] void throw_behind(const Point3& p, double depth) {
  throw Error(ErrorKind::NonPositiveDepth,
              "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " +
                  std::to_string(p.z) + ") has depth " + std::to_string(depth));
}

// Depths this small relative to |P| are rounding noise around the image
// plane (2 cos(pi/2) evaluates to 1.2e-16), so they count as non-positive.
bool in_front(const Point3& q, const Point3& p) {
  const double scale = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
  return q.z > 1e-12 * scale;
}

ProjectionRate rate_of(const Point3& q, const Point3& dq, const CameraModel& cam) {
  const double inv = 1.0 / (q.z * q.z);
  return {cam.fx * (dq.x * q.z - q.x * dq.z) * inv, cam.fy * (dq.y * q.z - q.y * dq.z) * inv};
}

double rate_norm(const Point3& p, double alpha, Axis axis, const CameraModel& cam) {
  const MotionTransform tf({axis, alpha});
  const Point3 q = tf.apply(p);
  if (!in_front(q, p)) throw_behind(p, q.z);
  const ProjectionRate r = rate_of(q, tf.rate(p), cam);
  return std::max(std::abs(r.du), std::abs(r.dv));
}

// Angles in [lo, hi] where a*cos(t) + b*sin(t) reaches |.| = sqrt(a^2 + b^2).
void push_trig_extrema(double a, double b, double lo, double hi, std::vector<double>& out) {
  if (a == 0.0 && b == 0.0) return;
  const double base = std::atan2(b, a);
  const double pi = std::numbers::pi;
  const double k_lo = std::ceil((lo - base) / pi);
  const double k_hi = std::floor((hi - base) / pi);
  for (double k = k_lo; k <= k_hi; k += 1.0) out.push_back(base + k * pi);
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DegenerateInterval: return "DegenerateInterval";
    case ErrorKind::NegativeMargin: return "NegativeMargin";
    case ErrorKind::InvalidDelta: return "InvalidDelta";
    case ErrorKind::DegenerateDataset: return "DegenerateDataset";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::EmptyFrame: return "EmptyFrame";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::FormatError: return "FormatError";
  }
  return "Unknown";
}

void CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::InvalidArgument, "image grid must be non-empty");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw Error(ErrorKind::InvalidArgument, "principal point must lie on the image grid");
  }
}

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::Tx: return "tx";
    case Axis::Ty: return "ty";
    case Axis::Tz: return "tz";
    case Axis::Rx: return "rx";
    case Axis::Ry: return "ry";
    case Axis::Rz: return "rz";
  }
  return "?";
}

Axis parse_axis(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Axis a : kAllAxes) {
    if (axis_name(a) == lower) return a;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown axis '" + std::string(text) + "'");
}

void MotionSpec::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorKind::InvalidArgument, "motion radius must be positive and finite");
  }
  if (is_rotation(axis) && !(radius < std::numbers::pi / 2)) {
    throw Error(ErrorKind::InvalidArgument, "rotation radius must be below pi/2");
  }
}

MotionValue MotionValue::within(const MotionSpec& spec, double value) {
  if (!spec.contains(value)) {
    throw Error(ErrorKind::InvalidArgument,
                "motion value " + std::to_string(value) + " outside [-b, b]");
  }
  return {spec.axis, value};
}

MotionTransform::MotionTransform(MotionValue motion) : axis_(motion.axis), value_(motion.value) {
  if (is_rotation(axis_)) {
    sin_ = std::sin(value_);
    cos_ = std::cos(value_);
  }
}

Point3 MotionTransform::rate(const Point3& p) const {
  switch (axis_) {
    case Axis::Tx: return {-1.0, 0.0, 0.0};
    case Axis::Ty: return {0.0, -1.0, 0.0};
    case Axis::Tz: return {0.0, 0.0, -1.0};
    case Axis::Rx: return {0.0, -sin_ * p.y + cos_ * p.z, -cos_ * p.y - sin_ * p.z};
    case Axis::Ry: return {-sin_ * p.x - cos_ * p.z, 0.0, cos_ * p.x - sin_ * p.z};
    case Axis::Rz: return {-sin_ * p.x + cos_ * p.y, -cos_ * p.x - sin_ * p.y, 0.0};
  }
  return {};
}

Projection project(const Point3& p, MotionValue motion, const CameraModel& cam) {
  const Point3 q = MotionTransform(motion).apply(p);
  if (!in_front(q, p)) throw_behind(p, q.z);
  return *project_camera_point(q, cam);
}

ProjectionRate projection_derivative(const Point3& p, MotionValue motion, const CameraModel& cam) {
  const MotionTransform tf(motion);
  const Point3 q = tf.apply(p);
  if (!in_front(q, p)) throw_behind(p, q.z);
  return rate_of(q, tf.rate(p), cam);
}

bool visible_over(const Point3& p, const MotionSpec& spec) {
  // Depth is affine in t for translations and R*cos(theta + phi) for
  // rotations; with 2b < pi, positivity at both ends implies positivity
  // everywhere in between.
  if (is_rotation(spec.axis) && !(spec.radius < std::numbers::pi / 2)) return false;
  for (double a : {spec.lo(), 0.0, spec.hi()}) {
    if (!in_front(MotionTransform({spec.axis, a}).apply(p), p)) return false;
  }
  return true;
}

double lipschitz_constant(const Point3& p, const MotionSpec& spec, const CameraModel& cam) {
  for (double a : {spec.lo(), 0.0, spec.hi()}) {
    const Point3 q = MotionTransform({spec.axis, a}).apply(p);
    if (!in_front(q, p)) throw_behind(p, q.z);
  }
  if (is_rotation(spec.axis) && !(spec.radius < std::numbers::pi / 2)) {
    throw Error(ErrorKind::NonPositiveDepth, "rotation radius reaches the image plane");
  }
  std::vector<double> candidates = {spec.lo(), spec.hi()};
  if (spec.axis == Axis::Rz) {
    // du ~ Y cos - X sin, dv ~ X cos + Y sin
    push_trig_extrema(p.y, -p.x, spec.lo(), spec.hi(), candidates);
    push_trig_extrema(p.x, p.y, spec.lo(), spec.hi(), candidates);
  }
  double best = 0.0;
  for (double a : candidates) best = std::max(best, rate_norm(p, a, spec.axis, cam));
  return best;
}

double delta_constant(const MotionSpec& spec, const CameraModel& cam,
                      std::span<const Point3> one_frame, double delta) {
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
  const double b = spec.radius;
  switch (spec.axis) {
    case Axis::Tx:
    case Axis::Ty:
      return 0.0;
    case Axis::Rz:
      return std::max(cam.fx / cam.fy, cam.fy / cam.fx) * delta;
    case Axis::Tz: {
      double worst = 0.0;
      for (const Point3& p : one_frame) {
        const double d = p.z - b;
        if (!(d > 0.0)) throw_behind(p, d);
        worst = std::max(worst, delta / d);
      }
      return worst;
    }
    case Axis::Rx:
    case Axis::Ry: {
      double worst = 0.0;
      for (const Point3& p : one_frame) {
        for (double theta : {-b, b}) {
          const double c = std::cos(theta);
          const double s = std::sin(theta);
          if (spec.axis == Axis::Rx) {
            const double depth = -p.y * s + p.z * c;
            if (!(depth > 0.0)) throw_behind(p, depth);
            const double num = std::abs(p.y * c + p.z * s);
            worst = std::max(worst, (delta / cam.fy) * (cam.fx * std::abs(p.x) + cam.fy * num) / depth);
            worst = std::max(worst, 2.0 * delta * num / depth);
          } else {
            const double depth = p.x * s + p.z * c;
            if (!(depth > 0.0)) throw_behind(p, depth);
            const double num = std::abs(p.x * c - p.z * s);
            worst = std::max(worst, 2.0 * delta * num / depth);
            worst = std::max(worst, (delta / cam.fx) * (cam.fy * std::abs(p.y) + cam.fx * num) / depth);
          }
        }
      }
      const double lead = spec.axis == Axis::Rx
                              ? delta * delta / cam.fy
                              : std::max(delta * delta / cam.fx, delta * delta / cam.fy);
      return lead + worst;
    }
  }
  return 0.0;
}

Projection project_rodrigues(const Point3& p, const std::array<double, 3>& omega,
                             const std::array<double, 3>& translation, const CameraModel& cam) {
  const double theta = std::sqrt(omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]);
  // R = I + sin(theta) K + (1 - cos(theta)) K^2 with K the unit-axis cross matrix.
  double r[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  if (theta > 0.0) {
    const double kx = omega[0] / theta, ky = omega[1] / theta, kz = omega[2] / theta;
    const double k[3][3] = {{0, -kz, ky}, {kz, 0, -kx}, {-ky, kx, 0}};
    double k2[3][3] = {};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int m = 0; m < 3; ++m) k2[i][j] += k[i][m] * k[m][j];
    const double s = std::sin(theta), c1 = 1.0 - std::cos(theta);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r[i][j] += s * k[i][j] + c1 * k2[i][j];
  }
  const double d[3] = {p.x - translation[0], p.y - translation[1], p.z - translation[2]};
  // R^{-1} = R^T
  Point3 q;
  q.x = r[0][0] * d[0] + r[1][0] * d[1] + r[2][0] * d[2];
  q.y = r[0][1] * d[0] + r[1][1] * d[1] + r[2][1] * d[2];
  q.z = r[0][2] * d[0] + r[1][2] * d[1] + r[2][2] * d[2];
  if (!in_front(q, p)) throw_behind(p, q.z);
  return *project_camera_point(q, cam);
}

}  // namespace pws
