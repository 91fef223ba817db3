#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pws/geometry.hpp"
#include "pws/image.hpp"
#include "pws/point_cloud.hpp"

namespace pws {

inline constexpr std::int32_t kNoPoint = -1;

/// Mid-gray in every channel.
std::vector<float> default_background(int channels);

/// Z-buffer winner per pixel (row-major, kNoPoint where nothing lands).
///
/// A point lands in pixel (row = floor(v), col = floor(u)) when its depth is
/// positive and the pixel is on the grid; exact integer coordinates belong to
/// the pixel they name. The winner is the smallest depth, ties going to the
/// smallest point index, so the result matches a sequential z-buffer that
/// replaces only on strictly smaller depth.
std::vector<std::int32_t> zbuffer_owners(std::span<const Point3> points, MotionValue motion,
                                         const CameraModel& cam);

/// O(V, alpha): colors of the z-buffer winners, background elsewhere. An
/// empty `background` means default_background.
Image render(const ColoredPointCloud& cloud, MotionValue motion, const CameraModel& cam,
             std::span<const float> background = {});

/// One image per value, identical to calling render for each.
std::vector<Image> render_sweep(const ColoredPointCloud& cloud, const MotionSpec& spec,
                                const CameraModel& cam, std::span<const double> values,
                                std::span<const float> background = {});

/// sqrt(0.5 * sum of squared differences). Throws ShapeMismatch.
double adjacent_frame_error(const Image& a, const Image& b);

/// Paints an owner map with cloud colors.
Image paint(const ColoredPointCloud& cloud, std::span<const std::int32_t> owners,
            const CameraModel& cam, std::span<const float> background = {});

}  // namespace pws
