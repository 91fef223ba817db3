#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pws/error.hpp"
#include "pws/geometry.hpp"
#include "pws/point_cloud.hpp"
#include "pws/classifier.hpp"
#include "pws/rasterizer.hpp"
#include "pws/rng.hpp"
#include "pws/scenes.hpp"

namespace pws::test {

inline CameraModel small_camera(int size = 100, double f = 100.0) {
  return {f, f, size / 2.0, size / 2.0, size, size};
}

/// Points spread over the view at depths in [z_lo, z_hi], random RGB colors.
inline ColoredPointCloud random_cloud(std::size_t n, const CameraModel& cam, std::uint64_t seed,
                                      double z_lo = 2.0, double z_hi = 4.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ColoredPointCloud cloud;
  cloud.channels = 3;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = z_lo + (z_hi - z_lo) * unit(rng);
    const double u = cam.width * unit(rng);
    const double v = cam.height * unit(rng);
    const Point3 p{(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z};
    const float c[3] = {static_cast<float>(unit(rng)), static_cast<float>(unit(rng)),
                        static_cast<float>(unit(rng))};
    cloud.push_back(p, c);
  }
  return cloud;
}

/// Reference renders of every scene, labeled.
inline std::vector<LabeledImage> reference_images(const Corpus& corpus) {
  std::vector<LabeledImage> out;
  for (const Scene& s : corpus.scenes) {
    out.push_back({render(s.cloud, MotionValue::identity(Axis::Tz), corpus.camera), s.label});
  }
  return out;
}

/// Billboard vs striped wall, `per_class` dense scenes each.
inline Corpus two_class_corpus(int per_class = 10, std::uint64_t seed = 1) {
  CorpusParams params;
  params.classes = {ShapeClass::PlaneBillboard, ShapeClass::StripedWall};
  params.per_class = per_class;
  params.seed = seed;
  return generate_corpus(params);
}

/// Kind of the pws::Error thrown by fn, or nullopt when it returns normally.
template <class Fn>
std::optional<ErrorKind> kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("pws_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pws::test
