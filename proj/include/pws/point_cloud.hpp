#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pws/geometry.hpp"

namespace pws {

/// Points with a K-channel color each. Colors are stored flat, point-major.
struct ColoredPointCloud {
  int channels = 1;
  std::vector<Point3> points;
  std::vector<float> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  std::span<const float> color(std::size_t i) const {
    return {colors.data() + i * static_cast<std::size_t>(channels), static_cast<std::size_t>(channels)};
  }

  void push_back(const Point3& p, std::span<const float> c);

  /// Throws InvalidArgument on a channel/size mismatch or a color outside [0, 1].
  void validate() const;
};

}  // namespace pws
