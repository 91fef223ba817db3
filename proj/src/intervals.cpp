#include "pws/intervals.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>

#include "pws/error.hpp"
#include "pws/formats.hpp"
#include "pws/parallel.hpp"
#include "pws/rasterizer.hpp"

namespace pws {

namespace {

struct RawRun {
  std::uint32_t pixel;
  std::int32_t owner;
  std::uint32_t first;
  std::uint32_t last;
};

void require_resolution(int resolution) {
  if (resolution < 2) throw Error(ErrorKind::InvalidArgument, "analysis resolution must be at least 2");
}

double linf(const PixelPosition& a, const PixelPosition& b) {
  return std::max(std::abs(a.u - b.u), std::abs(a.v - b.v));
}

bool is_interior(const ConsistentInterval& run, int resolution) {
  return run.first_sample > 0 && run.last_sample + 1 < static_cast<std::uint32_t>(resolution);
}

// Calls fn(begin, end) for each pixel's block of runs.
template <typename Fn>
void for_each_pixel(const std::vector<ConsistentInterval>& runs, Fn&& fn) {
  std::size_t i = 0;
  while (i < runs.size()) {
    std::size_t j = i + 1;
    while (j < runs.size() && runs[j].row == runs[i].row && runs[j].col == runs[i].col) ++j;
    fn(i, j);
    i = j;
  }
}

DeltaEstimate aggregate(std::vector<double> per_pixel, const SweepGrid& grid, double quantile,
                        bool margin_mode) {
  DeltaEstimate est;
  est.grid_step = grid.step();
  est.quantile = quantile;
  est.pixels_considered = per_pixel.size();
  const double span = grid.spec.width();
  if (per_pixel.empty()) {
    est.unconstrained = true;
    est.raw_quantile_value = span;
    est.delta_alpha = span;
    return est;
  }
  std::sort(per_pixel.begin(), per_pixel.end());
  const std::size_t n = per_pixel.size();
  const auto idx = std::min(n - 1, static_cast<std::size_t>(std::floor((1.0 - quantile) * static_cast<double>(n))));
  est.raw_quantile_value = per_pixel[idx];
  if (margin_mode && !(est.raw_quantile_value > 0.0)) {
    throw Error(ErrorKind::NegativeMargin,
                "projected span does not exceed 2*delta on governing pixels (bound " +
                    format_double(est.raw_quantile_value) + ")");
  }
  est.delta_alpha = std::min(est.raw_quantile_value - est.grid_step, span);
  // Run widths are differences of grid values, so a spacing of exactly one
  // step can come out an ulp above it.
  if (!(est.delta_alpha > est.grid_step * (1.0 + 1e-9))) {
    throw Error(ErrorKind::DegenerateInterval,
                "partition spacing " + format_double(est.delta_alpha) + " is not above the analysis step " +
                    format_double(est.grid_step) + "; raise the resolution or shrink the radius");
  }
  return est;
}

// True when |rho(P, a) - rho(P, lo)|_inf never decreases across [lo, hi].
bool monotone_over(const Point3& p, Axis axis, double lo, double hi, const CameraModel& cam, int samples) {
  if (samples < 2 || hi <= lo) return true;
  const PixelPosition origin = project(p, {axis, lo}, cam).pos;
  double prev = 0.0;
  for (int k = 1; k < samples; ++k) {
    const double a = lo + (hi - lo) * k / (samples - 1);
    const double d = linf(project(p, {axis, a}, cam).pos, origin);
    if (d < prev - 1e-9 * std::max(1.0, prev)) return false;
    prev = d;
  }
  return true;
}

void require_visible(std::span<const Point3> points, const MotionSpec& spec) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!visible_over(points[i], spec)) {
      throw Error(ErrorKind::NonPositiveDepth,
                  "point " + std::to_string(i) + " leaves the visible half-space within S");
    }
  }
}

// Per pixel: the smallest per-run bound over runs strictly inside S, plus the
// run achieving it. Pixels without such runs are skipped.
struct Governing {
  double bound;
  std::size_t run;
};

template <typename BoundFn>
std::vector<Governing> per_pixel_bounds(const std::vector<ConsistentInterval>& runs, int resolution,
                                        BoundFn&& bound) {
  std::vector<Governing> out;
  for_each_pixel(runs, [&](std::size_t begin, std::size_t end) {
    Governing best{std::numeric_limits<double>::infinity(), 0};
    bool any = false;
    for (std::size_t i = begin; i < end; ++i) {
      if (!is_interior(runs[i], resolution)) continue;
      const auto b = bound(runs[i]);
      if (!b) continue;
      any = true;
      if (*b < best.bound) best = {*b, i};
    }
    if (any) out.push_back(best);
  });
  return out;
}

std::vector<double> bounds_only(const std::vector<Governing>& g) {
  std::vector<double> out;
  out.reserve(g.size());
  for (const auto& x : g) out.push_back(x.bound);
  return out;
}

std::size_t count_non_monotone(const std::vector<Governing>& governing,
                               const std::vector<ConsistentInterval>& runs, std::span<const Point3> points,
                               const MotionSpec& spec, const CameraModel& cam, int samples) {
  std::size_t warnings = 0;
  for (const auto& g : governing) {
    const ConsistentInterval& run = runs[g.run];
    if (run.point_index < 0) continue;
    if (!monotone_over(points[run.point_index], spec.axis, run.lo, run.hi, cam, samples)) ++warnings;
  }
  return warnings;
}

}  // namespace

std::vector<ConsistentInterval> sweep_runs(std::span<const Point3> points, const MotionSpec& spec,
                                           const CameraModel& cam, int resolution) {
  require_resolution(resolution);
  spec.validate();
  const SweepGrid grid{spec, resolution};
  const std::size_t pixels = cam.pixel_count();
  const std::size_t poses = static_cast<std::size_t>(resolution);
  const std::size_t chunks = std::min(worker_count(), poses);
  std::vector<std::vector<RawRun>> partial(chunks);

  parallel_for(
      poses,
      [&](std::size_t j0, std::size_t j1, std::size_t c) {
        auto& out = partial[c];
        std::vector<std::int32_t> owner = zbuffer_owners(points, {spec.axis, grid.value(static_cast<std::uint32_t>(j0))}, cam);
        std::vector<std::uint32_t> start(pixels, static_cast<std::uint32_t>(j0));
        for (std::size_t j = j0 + 1; j < j1; ++j) {
          const auto next = zbuffer_owners(points, {spec.axis, grid.value(static_cast<std::uint32_t>(j))}, cam);
          for (std::size_t pix = 0; pix < pixels; ++pix) {
            if (next[pix] == owner[pix]) continue;
            out.push_back({static_cast<std::uint32_t>(pix), owner[pix], start[pix], static_cast<std::uint32_t>(j - 1)});
            owner[pix] = next[pix];
            start[pix] = static_cast<std::uint32_t>(j);
          }
        }
        for (std::size_t pix = 0; pix < pixels; ++pix) {
          out.push_back({static_cast<std::uint32_t>(pix), owner[pix], start[pix], static_cast<std::uint32_t>(j1 - 1)});
        }
      },
      chunks);

  std::vector<RawRun> all;
  for (auto& p : partial) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end(), [](const RawRun& a, const RawRun& b) {
    return a.pixel != b.pixel ? a.pixel < b.pixel : a.first < b.first;
  });

  std::vector<ConsistentInterval> runs;
  runs.reserve(all.size());
  for (const RawRun& r : all) {
    if (!runs.empty()) {
      ConsistentInterval& prev = runs.back();
      const auto prev_pixel = static_cast<std::uint32_t>(prev.row) * static_cast<std::uint32_t>(cam.width) +
                              static_cast<std::uint32_t>(prev.col);
      // Runs split only by a chunk boundary are rejoined.
      if (prev_pixel == r.pixel && prev.point_index == r.owner && prev.last_sample + 1 == r.first) {
        prev.last_sample = r.last;
        prev.hi = grid.value(r.last);
        continue;
      }
    }
    ConsistentInterval ci;
    ci.point_index = r.owner;
    ci.row = static_cast<int>(r.pixel / static_cast<std::uint32_t>(cam.width));
    ci.col = static_cast<int>(r.pixel % static_cast<std::uint32_t>(cam.width));
    ci.first_sample = r.first;
    ci.last_sample = r.last;
    ci.lo = grid.value(r.first);
    ci.hi = grid.value(r.last);
    runs.push_back(ci);
  }
  return runs;
}

std::vector<ConsistentInterval> consistent_intervals(std::span<const Point3> points,
                                                     const MotionSpec& spec, const CameraModel& cam,
                                                     int resolution) {
  auto runs = sweep_runs(points, spec, cam, resolution);
  std::erase_if(runs, [](const ConsistentInterval& r) { return r.point_index == kNoPoint; });
  return runs;
}

std::string_view method_name(PartitionMethod method) {
  switch (method) {
    case PartitionMethod::Exact: return "exact";
    case PartitionMethod::Lipschitz: return "lipschitz";
    case PartitionMethod::OneFrame: return "one-frame";
  }
  return "?";
}

PartitionMethod parse_method(std::string_view text) {
  for (auto m : {PartitionMethod::Exact, PartitionMethod::Lipschitz, PartitionMethod::OneFrame}) {
    if (method_name(m) == text) return m;
  }
  if (text == "one_frame" || text == "oneframe") return PartitionMethod::OneFrame;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(text) + "'");
}

void IntervalConfig::validate() const {
  require_resolution(resolution);
  if (!(quantile > 0.0 && quantile <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "quantile must lie in (0, 1]");
  }
  if (delta < 0.0 || !std::isfinite(delta)) throw Error(ErrorKind::InvalidArgument, "delta must be non-negative");
}

DeltaEstimate exact_delta(std::span<const Point3> points, const MotionSpec& spec, const CameraModel& cam,
                          const IntervalConfig& cfg) {
  cfg.validate();
  const auto runs = sweep_runs(points, spec, cam, cfg.resolution);
  const auto governing = per_pixel_bounds(runs, cfg.resolution, [](const ConsistentInterval& r) {
    return std::optional<double>(r.hi - r.lo);
  });
  return aggregate(bounds_only(governing), {spec, cfg.resolution}, cfg.quantile, false);
}

DeltaEstimate lipschitz_delta(std::span<const Point3> points, const MotionSpec& spec, const CameraModel& cam,
                              const IntervalConfig& cfg) {
  cfg.validate();
  spec.validate();
  require_visible(points, spec);
  const auto runs = sweep_runs(points, spec, cam, cfg.resolution);
  std::unordered_map<std::int32_t, double> lip;
  auto lipschitz_of = [&](std::int32_t idx) {
    auto it = lip.find(idx);
    if (it != lip.end()) return it->second;
    const double l = lipschitz_constant(points[idx], spec, cam);
    lip.emplace(idx, l);
    return l;
  };
  const auto governing = per_pixel_bounds(runs, cfg.resolution, [&](const ConsistentInterval& r) {
    if (r.point_index == kNoPoint) return std::optional<double>(r.hi - r.lo);
    const Point3& p = points[r.point_index];
    const double span = linf(project(p, {spec.axis, r.hi}, cam).pos, project(p, {spec.axis, r.lo}, cam).pos);
    const double l = lipschitz_of(r.point_index);
    // span <= L * width holds exactly; the min only removes rounding above it.
    // A point with zero rate never moves; its run width is then the only bound.
    return std::optional<double>(l > 0.0 ? std::min(span / l, r.hi - r.lo) : r.hi - r.lo);
  });
  DeltaEstimate est = aggregate(bounds_only(governing), {spec, cfg.resolution}, cfg.quantile, false);
  est.monotonicity_warnings = count_non_monotone(governing, runs, points, spec, cam, cfg.monotonicity_samples);
  return est;
}

DeltaEstimate one_frame_delta(std::span<const Point3> one_frame, const MotionSpec& spec, const CameraModel& cam,
                              const IntervalConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (!(cfg.delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "one-frame mode needs delta > 0");
  require_visible(one_frame, spec);
  double max_l = 0.0;
  for (const Point3& p : one_frame) max_l = std::max(max_l, lipschitz_constant(p, spec, cam));
  const double rate = max_l + delta_constant(spec, cam, one_frame, cfg.delta);
  const auto runs = sweep_runs(one_frame, spec, cam, cfg.resolution);
  const auto governing = per_pixel_bounds(runs, cfg.resolution, [&](const ConsistentInterval& r) -> std::optional<double> {
    if (r.point_index == kNoPoint) return r.hi - r.lo;
    const Point3& p = one_frame[r.point_index];
    const double span = linf(project(p, {spec.axis, r.hi}, cam).pos, project(p, {spec.axis, r.lo}, cam).pos);
    const double margin = span - 2.0 * cfg.delta;
    if (rate > 0.0) return std::min(margin / rate, r.hi - r.lo);
    return margin > 0.0 ? r.hi - r.lo : margin;
  });
  DeltaEstimate est = aggregate(bounds_only(governing), {spec, cfg.resolution}, cfg.quantile, true);
  est.monotonicity_warnings = count_non_monotone(governing, runs, one_frame, spec, cam, cfg.monotonicity_samples);
  return est;
}

DeltaEstimate estimate_delta(PartitionMethod method, std::span<const Point3> points, const MotionSpec& spec,
                             const CameraModel& cam, const IntervalConfig& cfg) {
  switch (method) {
    case PartitionMethod::Exact: return exact_delta(points, spec, cam, cfg);
    case PartitionMethod::Lipschitz: return lipschitz_delta(points, spec, cam, cfg);
    case PartitionMethod::OneFrame: return one_frame_delta(points, spec, cam, cfg);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown method");
}

bool check_delta_convexity(std::span<const Point3> full, std::span<const Point3> one_frame, double delta,
                           const MotionSpec& spec, const CameraModel& cam, int samples) {
  using Key = std::array<std::uint64_t, 3>;
  auto key_of = [](const Point3& p) {
    return Key{std::bit_cast<std::uint64_t>(p.x), std::bit_cast<std::uint64_t>(p.y), std::bit_cast<std::uint64_t>(p.z)};
  };
  std::vector<Key> members;
  members.reserve(one_frame.size());
  for (const Point3& p : one_frame) members.push_back(key_of(p));
  std::sort(members.begin(), members.end());
  std::vector<Point3> hidden;
  for (const Point3& p : full) {
    if (!std::binary_search(members.begin(), members.end(), key_of(p))) hidden.push_back(p);
  }
  if (hidden.empty()) return true;

  // Buckets are one pixel wide and cover the grid padded by the search reach.
  const int pad = static_cast<int>(std::ceil(delta)) + 1;
  const int bw = cam.width + 2 * pad;
  const int bh = cam.height + 2 * pad;
  auto bucket_of = [&](double u, double v) -> std::optional<std::size_t> {
    const double c = std::floor(u) + pad;
    const double r = std::floor(v) + pad;
    if (c < 0 || r < 0 || c >= bw || r >= bh) return std::nullopt;
    return static_cast<std::size_t>(r) * bw + static_cast<std::size_t>(c);
  };

  const int poses = std::max(samples, 1);
  for (int s = 0; s < poses; ++s) {
    const double alpha = poses == 1 ? 0.0 : spec.lo() + spec.width() * s / (poses - 1);
    const MotionTransform tf({spec.axis, alpha});
    std::vector<std::vector<Projection>> buckets(static_cast<std::size_t>(bw) * bh);
    for (const Point3& p : one_frame) {
      const auto proj = project_camera_point(tf.apply(p), cam);
      if (!proj) continue;
      if (const auto b = bucket_of(proj->pos.u, proj->pos.v)) buckets[*b].push_back(*proj);
    }
    for (const Point3& p : hidden) {
      const auto proj = project_camera_point(tf.apply(p), cam);
      if (!proj) continue;
      const double u = proj->pos.u, v = proj->pos.v;
      if (u < -delta || v < -delta || u >= cam.width + delta || v >= cam.height + delta) continue;
      bool covered = false;
      const int c0 = static_cast<int>(std::floor(u - delta)), c1 = static_cast<int>(std::floor(u + delta));
      const int r0 = static_cast<int>(std::floor(v - delta)), r1 = static_cast<int>(std::floor(v + delta));
      for (int r = r0; r <= r1 && !covered; ++r) {
        for (int c = c0; c <= c1 && !covered; ++c) {
          const auto b = bucket_of(c, r);
          if (!b) continue;
          for (const Projection& q : buckets[*b]) {
            if (std::abs(q.pos.u - u) <= delta && std::abs(q.pos.v - v) <= delta && proj->depth >= q.depth) {
              covered = true;
              break;
            }
          }
        }
      }
      if (!covered) return false;
    }
  }
  return true;
}

std::uint64_t PartitionPlan::digest() const {
  std::string bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  }
  return fnv1a64(bytes);
}

nlohmann::json PartitionPlan::to_json() const {
  return {{"axis", axis_name(spec.axis)},
          {"b", spec.radius},
          {"delta_alpha", delta_alpha},
          {"spacing", values.size() > 1 ? values[1] - values[0] : 0.0},
          {"N", values.size()},
          {"method", method_name(method)},
          {"quantile", quantile},
          {"values_digest", hex64(digest())}};
}

PartitionPlan build_partition(double delta_alpha, const MotionSpec& spec, PartitionMethod method, double quantile) {
  spec.validate();
  const double span = spec.width();
  if (!(delta_alpha > 0.0) || !(delta_alpha <= span)) {
    throw Error(ErrorKind::InvalidDelta,
                "delta_alpha " + format_double(delta_alpha) + " must lie in (0, " + format_double(span) + "]");
  }
  const double segments = std::ceil(span / delta_alpha);
  if (segments > 1e8) throw Error(ErrorKind::InvalidDelta, "partition would need more than 1e8 frames");
  auto n = static_cast<std::size_t>(segments) + 1;
  if (span / static_cast<double>(n - 1) > delta_alpha) ++n;
  PartitionPlan plan;
  plan.spec = spec;
  plan.delta_alpha = delta_alpha;
  plan.method = method;
  plan.quantile = quantile;
  plan.values.resize(n);
  const double step = span / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) plan.values[i] = spec.lo() + static_cast<double>(i) * step;
  plan.values.back() = spec.hi();
  return plan;
}

}  // namespace pws
