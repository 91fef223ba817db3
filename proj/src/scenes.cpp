#include "pws/scenes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include <json.hpp>

#include "pws/error.hpp"
#include "pws/formats.hpp"
#include "pws/rasterizer.hpp"
#include "pws/rng.hpp"

namespace pws {

namespace {

using Rgb = std::array<float, 3>;

class SceneBuilder {
 public:
  SceneBuilder(std::uint64_t seed, double color_noise) : rng_(seed, 0), color_noise_(color_noise) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  void add(const Point3& p, Rgb color) {
    std::normal_distribution<double> jitter(0.0, color_noise_);
    std::array<float, 3> c{};
    for (int k = 0; k < 3; ++k) {
      c[k] = static_cast<float>(std::clamp(color[k] + (color_noise_ > 0.0 ? jitter(rng_) : 0.0), 0.0, 1.0));
    }
    cloud_.push_back(p, c);
  }

  // Exactly n parameter pairs over [s0, s1] x [t0, t1]: a jittered lattice
  // with at most n cells, the remainder placed uniformly.
  template <typename Emit>
  void rect(std::size_t n, double s0, double s1, double t0, double t1, Emit&& emit) {
    if (n == 0) return;
    const double aspect = (s1 - s0) / (t1 - t0);
    auto nx = static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(static_cast<double>(n) * aspect))));
    auto ny = std::max<std::size_t>(1, n / nx);
    while (nx * ny > n) --ny;
    const double ds = (s1 - s0) / static_cast<double>(nx);
    const double dt = (t1 - t0) / static_cast<double>(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        emit(s0 + ds * (static_cast<double>(i) + uniform(0.0, 1.0)), t0 + dt * (static_cast<double>(j) + uniform(0.0, 1.0)));
      }
    }
    for (std::size_t r = nx * ny; r < n; ++r) emit(uniform(s0, s1), uniform(t0, t1));
  }

  ColoredPointCloud take() { return std::move(cloud_); }

 private:
  CounterRng rng_;
  double color_noise_;
  ColoredPointCloud cloud_{3, {}, {}};
};

Rgb scaled(Rgb c, double f) {
  return {static_cast<float>(c[0] * f), static_cast<float>(c[1] * f), static_cast<float>(c[2] * f)};
}

constexpr Rgb kBackdrop = {0.45f, 0.45f, 0.45f};
constexpr Rgb kBillboard = {0.8f, 0.25f, 0.2f};
constexpr Rgb kSphere = {0.2f, 0.75f, 0.3f};
constexpr Rgb kBox = {0.2f, 0.3f, 0.85f};
constexpr Rgb kStripeA = {0.9f, 0.85f, 0.2f};
constexpr Rgb kStripeB = {0.5f, 0.2f, 0.6f};

struct Hit {
  double depth;
  Rgb color;
};

// First intersection of the ray t * d (d.z == 1) with the object surface.
std::optional<Hit> object_hit(ShapeClass shape, const Point3& d, double near, double h, double ox, double oy) {
  const double x = d.x * near - ox, y = d.y * near - oy;
  switch (shape) {
    case ShapeClass::PlaneBillboard:
      if (std::abs(x) <= h && std::abs(y) <= h) return Hit{near, kBillboard};
      return std::nullopt;
    case ShapeClass::StripedWall: {
      if (std::abs(x) > 2 * h || std::abs(y) > 1.6 * h) return std::nullopt;
      const auto band = static_cast<long>(std::floor(x / (2.0 * h / 3.0)));
      return Hit{near, band % 2 == 0 ? kStripeA : kStripeB};
    }
    case ShapeClass::BoxFace: {
      if (std::abs(x) <= h && std::abs(y) <= h) return Hit{near, kBox};
      std::optional<Hit> best;
      auto side = [&](double plane, double dir, double other_dir, double other_center, Rgb color) {
        if (dir == 0.0) return;
        const double t = plane / dir;
        if (t < near || t > near + 2.0 * h || std::abs(t * other_dir - other_center) > h) return;
        if (!best || t < best->depth) best = Hit{t, color};
      };
      side(ox - h, d.x, d.y, oy, scaled(kBox, 0.6));
      side(ox + h, d.x, d.y, oy, scaled(kBox, 0.6));
      side(oy - h, d.y, d.x, ox, scaled(kBox, 0.75));
      side(oy + h, d.y, d.x, ox, scaled(kBox, 0.75));
      return best;
    }
    case ShapeClass::SphereCap: {
      const double r_sphere = 1.6 * h;
      const Point3 c{ox, oy, near + r_sphere};
      const double a = d.x * d.x + d.y * d.y + 1.0;
      const double b = -2.0 * (d.x * c.x + d.y * c.y + c.z);
      const double q = c.x * c.x + c.y * c.y + c.z * c.z - r_sphere * r_sphere;
      const double disc = b * b - 4.0 * a * q;
      if (disc < 0.0) return std::nullopt;
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const double rho = std::hypot(t * d.x - ox, t * d.y - oy);
      if (rho > h || t > c.z) return std::nullopt;
      return Hit{t, scaled(kSphere, 1.0 - 0.35 * rho / h)};
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view shape_name(ShapeClass shape) {
  switch (shape) {
    case ShapeClass::PlaneBillboard: return "plane_billboard";
    case ShapeClass::SphereCap: return "sphere_cap";
    case ShapeClass::BoxFace: return "box_face";
    case ShapeClass::StripedWall: return "striped_wall";
  }
  return "?";
}

ShapeClass parse_shape(std::string_view text) {
  for (ShapeClass s : kAllShapes) {
    if (shape_name(s) == text) return s;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown shape class '" + std::string(text) + "'");
}

std::string_view pattern_name(ScenePattern pattern) {
  return pattern == ScenePattern::PixelRays ? "rays" : "jittered";
}

ScenePattern parse_pattern(std::string_view text) {
  if (text == "jittered") return ScenePattern::Jittered;
  if (text == "rays") return ScenePattern::PixelRays;
  throw Error(ErrorKind::InvalidArgument, "unknown scene pattern '" + std::string(text) + "'");
}

CameraModel default_camera() { return {32.0, 32.0, 16.0, 16.0, 32, 32}; }

Scene generate_scene(const SceneParams& params) {
  if (params.point_count < 100) throw Error(ErrorKind::InvalidArgument, "a scene needs at least 100 points");
  if (!(params.near > 0.0) || !(params.far > params.near) || !(params.far <= 10.0)) {
    throw Error(ErrorKind::InvalidRange, "depth range must satisfy 0 < near < far <= 10, got (" +
                                             format_double(params.near) + ", " + format_double(params.far) + ")");
  }
  params.camera.validate();
  const CameraModel& cam = params.camera;
  const double near = params.near, far = params.far;
  const double ox = params.offset_x, oy = params.offset_y;
  const double h = 0.22 * near * (0.5 * cam.width / cam.fx);

  // Backdrop half extents leave a 30% margin around the field of view.
  const double bx = 1.3 * far * std::max(cam.cx, cam.width - cam.cx) / cam.fx;
  const double by = 1.3 * far * std::max(cam.cy, cam.height - cam.cy) / cam.fy;

  // Projected areas (pixels) decide how the point budget is split.
  const double px_per_m2_near = cam.fx * cam.fy / (near * near);
  double object_area = 0.0;
  switch (params.shape) {
    case ShapeClass::PlaneBillboard: object_area = 4 * h * h; break;
    case ShapeClass::SphereCap: object_area = std::numbers::pi * h * h * 1.2; break;
    case ShapeClass::BoxFace: object_area = 4 * h * h * 1.5; break;
    case ShapeClass::StripedWall: object_area = 4 * h * 1.6 * 2 * h; break;
  }
  object_area *= px_per_m2_near;
  const double backdrop_area = 4 * bx * by * cam.fx * cam.fy / (far * far);
  const auto object_points = static_cast<std::size_t>(
      std::round(static_cast<double>(params.point_count) * object_area / (object_area + backdrop_area)));
  const std::size_t backdrop_points = params.point_count - object_points;

  SceneBuilder sb(params.color_seed, params.color_noise);
  Scene scene;
  scene.label = static_cast<int>(params.shape);
  scene.name = std::string(shape_name(params.shape));
  if (params.pattern == ScenePattern::PixelRays) {
    for (int r = 0; r < cam.height; ++r) {
      for (int c = 0; c < cam.width; ++c) {
        const double du = sb.uniform(0.05, 0.95), dv = sb.uniform(0.05, 0.95);
        const Point3 d{(c + du - cam.cx) / cam.fx, (r + dv - cam.cy) / cam.fy, 1.0};
        if (const auto hit = object_hit(params.shape, d, near, h, ox, oy)) {
          sb.add({d.x * hit->depth, d.y * hit->depth, hit->depth}, hit->color);
        } else {
          sb.add({d.x * far, d.y * far, far}, kBackdrop);
        }
      }
    }
    scene.cloud = sb.take();
    return scene;
  }
  sb.rect(backdrop_points, -bx, bx, -by, by, [&](double x, double y) { sb.add({x, y, far}, kBackdrop); });

  switch (params.shape) {
    case ShapeClass::PlaneBillboard:
      sb.rect(object_points, ox - h, ox + h, oy - h, oy + h, [&](double x, double y) { sb.add({x, y, near}, kBillboard); });
      break;
    case ShapeClass::SphereCap: {
      // Cap of a sphere of radius 1.6h whose front touches z = near; the
      // disc is sampled through its polar square root map to stay uniform.
      const double r_sphere = 1.6 * h;
      sb.rect(object_points, 0.0, 1.0, 0.0, 1.0, [&](double s, double t) {
        const double rho = h * std::sqrt(s);
        const double phi = 2.0 * std::numbers::pi * t;
        const double x = rho * std::cos(phi), y = rho * std::sin(phi);
        const double z = near + r_sphere - std::sqrt(r_sphere * r_sphere - rho * rho);
        sb.add({ox + x, oy + y, z}, scaled(kSphere, 1.0 - 0.35 * rho / h));
      });
      break;
    }
    case ShapeClass::BoxFace: {
      // Front face plus four side faces reaching back by 2h; the side faces
      // hold a third of the budget.
      const std::size_t front = object_points * 2 / 3;
      const std::size_t side = (object_points - front) / 4;
      const std::size_t extra = object_points - front - 4 * side;
      const double depth = 2.0 * h;
      sb.rect(front + extra, ox - h, ox + h, oy - h, oy + h, [&](double x, double y) { sb.add({x, y, near}, kBox); });
      sb.rect(side, oy - h, oy + h, near, near + depth, [&](double y, double z) { sb.add({ox - h, y, z}, scaled(kBox, 0.6)); });
      sb.rect(side, oy - h, oy + h, near, near + depth, [&](double y, double z) { sb.add({ox + h, y, z}, scaled(kBox, 0.6)); });
      sb.rect(side, ox - h, ox + h, near, near + depth, [&](double x, double z) { sb.add({x, oy - h, z}, scaled(kBox, 0.75)); });
      sb.rect(side, ox - h, ox + h, near, near + depth, [&](double x, double z) { sb.add({x, oy + h, z}, scaled(kBox, 0.75)); });
      break;
    }
    case ShapeClass::StripedWall: {
      const double period = 2.0 * h / 3.0;
      sb.rect(object_points, ox - 2 * h, ox + 2 * h, oy - 1.6 * h, oy + 1.6 * h, [&](double x, double y) {
        const auto band = static_cast<long>(std::floor((x - ox) / period));
        sb.add({x, y, near}, (band % 2 == 0) ? kStripeA : kStripeB);
      });
      break;
    }
  }

  scene.cloud = sb.take();
  return scene;
}

double coverage_fraction(const ColoredPointCloud& cloud, const CameraModel& cam) {
  const auto owners = zbuffer_owners(cloud.points, MotionValue::identity(Axis::Tz), cam);
  const auto hit = std::count_if(owners.begin(), owners.end(), [](std::int32_t o) { return o != kNoPoint; });
  return static_cast<double>(hit) / static_cast<double>(owners.size());
}

ColoredPointCloud extract_one_frame(const ColoredPointCloud& cloud, const CameraModel& cam) {
  const auto owners = zbuffer_owners(cloud.points, MotionValue::identity(Axis::Tz), cam);
  ColoredPointCloud out{cloud.channels, {}, {}};
  for (std::int32_t o : owners) {
    if (o == kNoPoint) continue;
    out.push_back(cloud.points[o], cloud.color(o));
  }
  if (out.empty()) throw Error(ErrorKind::EmptyFrame, "no point lands on the grid at the identity pose");
  return out;
}

Corpus generate_corpus(const CorpusParams& params) {
  if (params.classes.empty() || params.per_class < 1) {
    throw Error(ErrorKind::InvalidArgument, "corpus needs at least one class and one scene per class");
  }
  Corpus corpus;
  corpus.camera = params.camera;
  std::uint64_t counter = 0;
  for (std::size_t label = 0; label < params.classes.size(); ++label) {
    for (int i = 0; i < params.per_class; ++i) {
      CounterRng rng(params.seed, counter++);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      SceneParams sp;
      sp.shape = params.classes[label];
      sp.pattern = params.pattern;
      sp.point_count = params.point_count;
      sp.camera = params.camera;
      sp.color_noise = params.color_noise;
      sp.near = 1.2 + 0.6 * u(rng);
      sp.far = sp.near + 1.0 + 0.5 * u(rng);
      const double reach = 0.08 * sp.near * (0.5 * params.camera.width / params.camera.fx);
      sp.offset_x = reach * (2.0 * u(rng) - 1.0);
      sp.offset_y = reach * (2.0 * u(rng) - 1.0);
      sp.color_seed = rng();
      Scene scene = generate_scene(sp);
      scene.label = static_cast<int>(label);
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_%03d", i);
      scene.name += suffix;
      corpus.scenes.push_back(std::move(scene));
    }
  }
  return corpus;
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "scenes", ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + (dir / "scenes").string());
  nlohmann::json labels = nlohmann::json::object();
  for (const Scene& s : corpus.scenes) {
    write_cloud(dir / "scenes" / (s.name + ".pwspc"), s.cloud);
    labels[s.name] = s.label;
  }
  write_file_atomic(dir / "labels.json", labels.dump(2) + "\n");
  write_file_atomic(dir / "camera.json", camera_to_json(corpus.camera).dump(2) + "\n");
}

Corpus read_corpus(const std::filesystem::path& dir) {
  Corpus corpus;
  nlohmann::json labels;
  try {
    corpus.camera = camera_from_json(nlohmann::json::parse(read_file(dir / "camera.json")));
    labels = nlohmann::json::parse(read_file(dir / "labels.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("corpus metadata: ") + e.what());
  }
  if (!labels.is_object()) throw Error(ErrorKind::FormatError, "labels.json must map names to labels");
  for (const auto& [name, label] : labels.items()) {
    if (!label.is_number_integer()) throw Error(ErrorKind::FormatError, "label of " + name + " is not an integer");
    Scene s;
    s.name = name;
    s.label = label.get<int>();
    s.cloud = read_cloud(dir / "scenes" / (name + ".pwspc"));
    corpus.scenes.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace pws
