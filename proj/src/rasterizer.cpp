#include "pws/rasterizer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pws/error.hpp"
#include "pws/parallel.hpp"

namespace pws {

namespace {

// Below this many points the thread start-up costs more than it saves.
constexpr std::size_t kParallelPointThreshold = 1 << 15;

struct DepthBuffer {
  std::vector<double> depth;
  std::vector<std::int32_t> owner;

  explicit DepthBuffer(std::size_t pixels)
      : depth(pixels, std::numeric_limits<double>::infinity()), owner(pixels, kNoPoint) {}
};

void splat(std::span<const Point3> points, std::size_t begin, std::size_t end,
           const MotionTransform& tf, const CameraModel& cam, DepthBuffer& buf) {
  for (std::size_t i = begin; i < end; ++i) {
    const auto proj = project_camera_point(tf.apply(points[i]), cam);
    if (!proj) continue;
    const double col = std::floor(proj->pos.u);
    const double row = std::floor(proj->pos.v);
    if (!(col >= 0.0 && col < cam.width && row >= 0.0 && row < cam.height)) continue;
    const std::size_t pix = static_cast<std::size_t>(row) * cam.width + static_cast<std::size_t>(col);
    if (proj->depth < buf.depth[pix]) {
      buf.depth[pix] = proj->depth;
      buf.owner[pix] = static_cast<std::int32_t>(i);
    }
  }
}

std::vector<float> resolve_background(std::span<const float> background, int channels) {
  if (background.empty()) return default_background(channels);
  if (static_cast<int>(background.size()) != channels) {
    throw Error(ErrorKind::ShapeMismatch, "background has " + std::to_string(background.size()) +
                                              " channels, cloud has " + std::to_string(channels));
  }
  return {background.begin(), background.end()};
}

}  // namespace

std::vector<float> default_background(int channels) {
  return std::vector<float>(static_cast<std::size_t>(channels), 0.5f);
}

std::vector<std::int32_t> zbuffer_owners(std::span<const Point3> points, MotionValue motion,
                                         const CameraModel& cam) {
  const MotionTransform tf(motion);
  const std::size_t pixels = cam.pixel_count();
  const std::size_t chunks = points.size() < kParallelPointThreshold ? 1 : worker_count();
  if (chunks <= 1) {
    DepthBuffer buf(pixels);
    splat(points, 0, points.size(), tf, cam, buf);
    return std::move(buf.owner);
  }
  // Each chunk owns a private buffer over a contiguous index range; merging
  // by (depth, index) reproduces the sequential result exactly.
  std::vector<DepthBuffer> partial(chunks, DepthBuffer(pixels));
  parallel_for(
      points.size(),
      [&](std::size_t begin, std::size_t end, std::size_t c) { splat(points, begin, end, tf, cam, partial[c]); },
      chunks);
  DepthBuffer& out = partial[0];
  for (std::size_t c = 1; c < partial.size(); ++c) {
    for (std::size_t pix = 0; pix < pixels; ++pix) {
      const DepthBuffer& other = partial[c];
      if (other.owner[pix] == kNoPoint) continue;
      if (other.depth[pix] < out.depth[pix] ||
          (other.depth[pix] == out.depth[pix] && other.owner[pix] < out.owner[pix])) {
        out.depth[pix] = other.depth[pix];
        out.owner[pix] = other.owner[pix];
      }
    }
  }
  return std::move(out.owner);
}

Image paint(const ColoredPointCloud& cloud, std::span<const std::int32_t> owners,
            const CameraModel& cam, std::span<const float> background) {
  const std::vector<float> bg = resolve_background(background, cloud.channels);
  Image img(cloud.channels, cam.height, cam.width);
  const std::size_t plane = img.plane_size();
  for (std::size_t pix = 0; pix < plane; ++pix) {
    const std::int32_t o = owners[pix];
    for (int k = 0; k < cloud.channels; ++k) {
      img.data[static_cast<std::size_t>(k) * plane + pix] =
          o == kNoPoint ? bg[k] : cloud.colors[static_cast<std::size_t>(o) * cloud.channels + k];
    }
  }
  return img;
}

Image render(const ColoredPointCloud& cloud, MotionValue motion, const CameraModel& cam,
             std::span<const float> background) {
  return paint(cloud, zbuffer_owners(cloud.points, motion, cam), cam, background);
}

std::vector<Image> render_sweep(const ColoredPointCloud& cloud, const MotionSpec& spec,
                                const CameraModel& cam, std::span<const double> values,
                                std::span<const float> background) {
  for (double v : values) MotionValue::within(spec, v);
  std::vector<Image> out(values.size());
  parallel_for(values.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = render(cloud, {spec.axis, values[i]}, cam, background);
    }
  });
  return out;
}

double adjacent_frame_error(const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::ShapeMismatch, "images differ in shape");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sum += d * d;
  }
  return std::sqrt(0.5 * sum);
}

void ColoredPointCloud::push_back(const Point3& p, std::span<const float> c) {
  if (static_cast<int>(c.size()) != channels) {
    throw Error(ErrorKind::ShapeMismatch, "color has wrong channel count");
  }
  points.push_back(p);
  colors.insert(colors.end(), c.begin(), c.end());
}

void ColoredPointCloud::validate() const {
  if (channels < 1) throw Error(ErrorKind::InvalidArgument, "cloud needs at least one channel");
  if (colors.size() != points.size() * static_cast<std::size_t>(channels)) {
    throw Error(ErrorKind::InvalidArgument, "point and color counts disagree");
  }
  for (float c : colors) {
    if (!(c >= 0.0f && c <= 1.0f)) throw Error(ErrorKind::InvalidArgument, "color outside [0, 1]");
  }
  for (const Point3& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorKind::InvalidArgument, "non-finite point coordinate");
    }
  }
}

}  // namespace pws
