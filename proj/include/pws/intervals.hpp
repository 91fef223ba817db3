#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pws/geometry.hpp"
#include "pws/point_cloud.hpp"

namespace pws {

/// A maximal run of sampled poses over which one point (or the background,
/// point_index == kNoPoint) wins the z-buffer at one pixel.
struct ConsistentInterval {
  std::int32_t point_index = -1;
  int row = 0;
  int col = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::uint32_t first_sample = 0;
  std::uint32_t last_sample = 0;
};

/// Uniform analysis grid over S: `resolution` poses including both ends.
struct SweepGrid {
  MotionSpec spec;
  int resolution = 2;

  double step() const { return spec.width() / (resolution - 1); }
  double value(std::uint32_t j) const {
    return j + 1 == static_cast<std::uint32_t>(resolution) ? spec.hi() : spec.lo() + j * step();
  }
};

/// Every run at every pixel, background runs included, grouped by pixel in
/// row-major order and ordered by pose within a pixel.
std::vector<ConsistentInterval> sweep_runs(std::span<const Point3> points, const MotionSpec& spec,
                                           const CameraModel& cam, int resolution);

/// Discretized consistent camera-motion intervals: the point-owned runs of
/// sweep_runs. Endpoints are the first and last sampled poses of each run.
std::vector<ConsistentInterval> consistent_intervals(std::span<const Point3> points,
                                                     const MotionSpec& spec, const CameraModel& cam,
                                                     int resolution);

enum class PartitionMethod { Exact, Lipschitz, OneFrame };

std::string_view method_name(PartitionMethod method);
/// Accepts "exact", "lipschitz", "one-frame". Throws InvalidArgument otherwise.
PartitionMethod parse_method(std::string_view text);

struct IntervalConfig {
  int resolution = 2000;
  double quantile = 0.995;
  /// One-frame mode only: delta-convexity prior in pixels.
  double delta = 0.0;
  /// Poses checked per governing run when testing l-inf monotonicity.
  int monotonicity_samples = 16;

  void validate() const;
};

struct DeltaEstimate {
  double delta_alpha = 0.0;
  double grid_step = 0.0;
  double quantile = 1.0;
  /// Pixels with at least one run strictly inside S; the others impose no bound.
  std::size_t pixels_considered = 0;
  /// Quantile of the per-pixel bounds before the one-step shrink.
  double raw_quantile_value = 0.0;
  /// No pixel constrained the spacing, so delta_alpha spans all of S.
  bool unconstrained = false;
  std::size_t monotonicity_warnings = 0;
};

/// Fully-covered spacing: per pixel the narrowest run strictly inside S,
/// aggregated by the lower quantile across pixels and shrunk by one grid step.
/// Throws DegenerateInterval when the result is no larger than one step.
DeltaEstimate exact_delta(std::span<const Point3> points, const MotionSpec& spec,
                          const CameraModel& cam, const IntervalConfig& cfg);

/// Lipschitz spacing: per point-owned run |rho(hi) - rho(lo)|_inf / L_P.
/// Throws NonPositiveDepth if any point leaves the visible half-space over S.
DeltaEstimate lipschitz_delta(std::span<const Point3> points, const MotionSpec& spec,
                              const CameraModel& cam, const IntervalConfig& cfg);

/// One-frame spacing from a cloud with at most one point per reference pixel:
/// per run (|rho(hi) - rho(lo)|_inf - 2 delta) / (max L + C_delta). Background
/// runs of the one-frame render count with their observed width.
/// Throws NegativeMargin when the aggregated margin is not positive.
DeltaEstimate one_frame_delta(std::span<const Point3> one_frame, const MotionSpec& spec,
                              const CameraModel& cam, const IntervalConfig& cfg);

DeltaEstimate estimate_delta(PartitionMethod method, std::span<const Point3> points,
                             const MotionSpec& spec, const CameraModel& cam, const IntervalConfig& cfg);

/// Samples `samples` poses across S (ends included) and checks that every
/// point of `full` that is not in `one_frame` has a one-frame point within
/// delta pixels (l-inf) that is no deeper. Points off the grid by more than
/// delta or behind the camera at a pose impose nothing there.
bool check_delta_convexity(std::span<const Point3> full, std::span<const Point3> one_frame, double delta,
                           const MotionSpec& spec, const CameraModel& cam, int samples);

struct PartitionPlan {
  MotionSpec spec;
  double delta_alpha = 0.0;
  PartitionMethod method = PartitionMethod::Exact;
  double quantile = 1.0;
  std::vector<double> values;

  std::size_t count() const { return values.size(); }
  /// FNV-1a over the little-endian bit patterns of the values.
  std::uint64_t digest() const;
  nlohmann::json to_json() const;
};

/// N = ceil(2b / delta_alpha) + 1 evenly spaced poses from -b to b.
/// Throws InvalidDelta unless 0 < delta_alpha <= 2b.
PartitionPlan build_partition(double delta_alpha, const MotionSpec& spec, PartitionMethod method,
                              double quantile = 1.0);

}  // namespace pws
