#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pws/geometry.hpp"
#include "pws/point_cloud.hpp"

namespace pws {

enum class ShapeClass : std::uint8_t { PlaneBillboard, SphereCap, BoxFace, StripedWall };

inline constexpr std::array<ShapeClass, 4> kAllShapes = {ShapeClass::PlaneBillboard, ShapeClass::SphereCap,
                                                         ShapeClass::BoxFace, ShapeClass::StripedWall};

std::string_view shape_name(ShapeClass shape);
ShapeClass parse_shape(std::string_view text);

/// 32 x 32 grid, fx = fy = 32, principal point at the grid center.
CameraModel default_camera();

/// Jittered: `point_count` points on jittered lattices over every surface.
/// PixelRays: one point per reference pixel, where a ray through a random spot
/// inside that pixel first meets the scene, as a single RGB-D capture would
/// record it. The cloud is its own one-frame cloud. `point_count` is not used.
enum class ScenePattern : std::uint8_t { Jittered, PixelRays };

std::string_view pattern_name(ScenePattern pattern);
/// Accepts "jittered" and "rays".
ScenePattern parse_pattern(std::string_view text);

struct SceneParams {
  ShapeClass shape = ShapeClass::PlaneBillboard;
  ScenePattern pattern = ScenePattern::Jittered;
  std::size_t point_count = 5000;
  /// Depth of the object's front and of the backdrop wall, in meters.
  double near = 1.5;
  double far = 3.0;
  std::uint64_t color_seed = 0;
  CameraModel camera = default_camera();
  /// Standard deviation of per-point color jitter.
  double color_noise = 0.03;
  /// Lateral offset of the object center, in meters.
  double offset_x = 0.0;
  double offset_y = 0.0;
};

struct Scene {
  std::string name;
  int label = 0;
  ColoredPointCloud cloud;
};

/// A 3-channel cloud: the shape in front of a gray backdrop wall wide enough
/// to fill the view. Surfaces are sampled on jittered lattices with points
/// split in proportion to projected area. The label is the shape's index.
/// Throws InvalidRange unless 0 < near < far <= 10, and InvalidArgument for
/// fewer than 100 points.
Scene generate_scene(const SceneParams& params);

/// Fraction of grid pixels hit by at least one point at the identity pose.
double coverage_fraction(const ColoredPointCloud& cloud, const CameraModel& cam);

/// Z-buffer winners at the identity pose, in row-major pixel order.
/// Throws EmptyFrame if no pixel is covered.
ColoredPointCloud extract_one_frame(const ColoredPointCloud& cloud, const CameraModel& cam);

struct Corpus {
  CameraModel camera = default_camera();
  std::vector<Scene> scenes;
};

struct CorpusParams {
  std::vector<ShapeClass> classes = {kAllShapes.begin(), kAllShapes.end()};
  ScenePattern pattern = ScenePattern::Jittered;
  int per_class = 10;
  std::size_t point_count = 5000;
  std::uint64_t seed = 0;
  CameraModel camera = default_camera();
  double color_noise = 0.03;
};

/// Scenes with per-scene depth and offset jitter drawn from the seed.
Corpus generate_corpus(const CorpusParams& params);

/// Layout: scenes/<name>.pwspc, labels.json (name -> label), camera.json.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);
/// Scenes come back sorted by name.
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace pws
