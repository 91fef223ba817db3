#include "pws/certify.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "pws/error.hpp"
#include "pws/formats.hpp"
#include "pws/rasterizer.hpp"
#include "pws/rng.hpp"
#include "pws/scenes.hpp"

namespace pws {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string_view verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::Certified: return "Certified";
    case Verdict::NotCertified: return "NotCertified";
    case Verdict::Abstain: return "Abstain";
  }
  return "?";
}

nlohmann::json CertifyConfig::to_json() const {
  nlohmann::json j = {{"axis", axis_name(spec.axis)},
                      {"radius", spec.radius},
                      {"method", method_name(method)},
                      {"resolution", intervals.resolution},
                      {"quantile", intervals.quantile},
                      {"smoothing", smoothing.to_json()}};
  if (method == PartitionMethod::OneFrame) j["delta_px"] = intervals.delta;
  j["background"] = background;
  return j;
}

nlohmann::json CertificationReport::to_json(bool include_timing) const {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : per_partition) {
    parts.push_back({{"alpha", p.alpha},
                     {"y_A", p.top_label},
                     {"y_B", p.runner_up},
                     {"pA_lower", p.pA_lower},
                     {"pB_upper", p.pB_upper},
                     {"radius", p.radius},
                     {"abstain", p.abstain}});
  }
  nlohmann::json j = {
      {"pws_report_version", kReportVersion},
      {"verdict", verdict_name(verdict)},
      {"reason", reason},
      {"config", config.to_json()},
      {"classifier", classifier},
      {"delta_alpha", delta.delta_alpha},
      {"delta",
       {{"grid_step", delta.grid_step},
        {"raw_quantile_value", delta.raw_quantile_value},
        {"pixels_considered", delta.pixels_considered},
        {"unconstrained", delta.unconstrained},
        {"monotonicity_warnings", delta.monotonicity_warnings}}},
      {"N", N},
      {"partition_digest", hex64(partition_digest)},
      {"top_label", top_label},
      {"max_adjacent_error", max_adjacent_error},
      {"min_radius", min_radius},
      {"margin", margin},
      {"frames_rendered", frames_rendered},
      {"aggregate_failure_bound", std::min(1.0, static_cast<double>(N) * config.smoothing.confidence_alpha)},
      {"per_partition", parts},
  };
  if (include_timing) j["timing"] = {{"delta_seconds", delta_seconds}, {"wall_seconds", wall_seconds}};
  return j;
}

Verdict decide_verdict(std::span<const PartitionEstimate> partitions, double max_adjacent_error, double min_radius) {
  if (partitions.empty()) return Verdict::Abstain;
  for (const auto& p : partitions) {
    if (p.abstain || p.top_label != partitions.front().top_label) return Verdict::Abstain;
  }
  return max_adjacent_error < min_radius ? Verdict::Certified : Verdict::NotCertified;
}

CertificationReport certify(const ColoredPointCloud& cloud, const CameraModel& cam,
                            const BaseClassifier& classifier, const CertifyConfig& cfg) {
  const auto t0 = Clock::now();
  cloud.validate();
  cam.validate();
  cfg.spec.validate();
  cfg.intervals.validate();
  cfg.smoothing.validate();
  if (cloud.empty()) throw Error(ErrorKind::InvalidArgument, "empty point cloud");
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!visible_over(cloud.points[i], cfg.spec)) {
      throw Error(ErrorKind::NonPositiveDepth,
                  "point " + std::to_string(i) + " leaves the visible half-space within S");
    }
  }

  CertificationReport report;
  report.config = cfg;
  report.classifier = classifier.describe();

  if (cfg.method == PartitionMethod::OneFrame) {
    const ColoredPointCloud one_frame = extract_one_frame(cloud, cam);
    report.delta = one_frame_delta(one_frame.points, cfg.spec, cam, cfg.intervals);
  } else {
    report.delta = estimate_delta(cfg.method, cloud.points, cfg.spec, cam, cfg.intervals);
  }
  report.delta_seconds = seconds_since(t0);

  const PartitionPlan plan = build_partition(report.delta.delta_alpha, cfg.spec, cfg.method, cfg.intervals.quantile);
  report.N = plan.count();
  report.partition_digest = plan.digest();

  // Frames are rendered one at a time so only two live at once.
  report.per_partition.reserve(plan.count());
  report.min_radius = std::numeric_limits<double>::infinity();
  Image previous;
  for (std::size_t i = 0; i < plan.count(); ++i) {
    Image frame = render(cloud, {cfg.spec.axis, plan.values[i]}, cam, cfg.background);
    ++report.frames_rendered;
    if (i > 0) report.max_adjacent_error = std::max(report.max_adjacent_error, adjacent_frame_error(previous, frame));
    SmoothingConfig sc = cfg.smoothing;
    sc.seed = mix_seed(cfg.smoothing.seed, i);
    const SmoothedEstimate est = smoothed_estimate(classifier, frame, sc);
    report.per_partition.push_back(
        {plan.values[i], est.top_label, est.runner_up, est.pA_lower, est.pB_upper, est.radius, est.abstain});
    report.min_radius = std::min(report.min_radius, est.radius);
    previous = std::move(frame);
  }

  report.verdict = decide_verdict(report.per_partition, report.max_adjacent_error, report.min_radius);
  report.margin = report.min_radius - report.max_adjacent_error;
  const bool agree = std::all_of(report.per_partition.begin(), report.per_partition.end(),
                                 [&](const PartitionEstimate& p) { return p.top_label == report.per_partition.front().top_label; });
  report.top_label = agree ? report.per_partition.front().top_label : -1;
  switch (report.verdict) {
    case Verdict::Certified: report.reason = "max adjacent error below min radius"; break;
    case Verdict::NotCertified: report.reason = "max adjacent error not below min radius"; break;
    case Verdict::Abstain:
      report.reason = agree ? "a partition abstained" : "top labels disagree across partitions";
      break;
  }
  report.wall_seconds = seconds_since(t0);
  return report;
}

nlohmann::json AttackReport::to_json() const {
  nlohmann::json j = {{"pws_report_version", kReportVersion},
                      {"poses_tested", poses_tested},
                      {"reference_label", reference_label},
                      {"empirically_robust", empirically_robust}};
  j["first_failure_pose"] = first_failure_pose ? nlohmann::json(*first_failure_pose) : nlohmann::json(nullptr);
  j["failure_label"] = failure_label ? nlohmann::json(*failure_label) : nlohmann::json(nullptr);
  return j;
}

AttackReport empirical_attack(const ColoredPointCloud& cloud, const CameraModel& cam,
                              const BaseClassifier& classifier, const MotionSpec& spec,
                              const SmoothingConfig& smoothing, int poses, std::span<const float> background) {
  if (poses < 1) throw Error(ErrorKind::InvalidArgument, "attack needs at least one pose");
  spec.validate();
  AttackReport report;
  SmoothingConfig sc = smoothing;
  sc.seed = mix_seed(smoothing.seed, std::numeric_limits<std::uint64_t>::max());
  const Image reference = render(cloud, MotionValue::identity(spec.axis), cam, background);
  report.reference_label = smoothed_estimate(classifier, reference, sc).top_label;
  for (int k = 0; k < poses; ++k) {
    const double alpha = poses == 1 ? 0.0 : spec.lo() + spec.width() * k / (poses - 1);
    sc.seed = mix_seed(smoothing.seed, static_cast<std::uint64_t>(k));
    const Image frame = render(cloud, {spec.axis, alpha}, cam, background);
    const int label = smoothed_estimate(classifier, frame, sc).top_label;
    ++report.poses_tested;
    if (label != report.reference_label) {
      report.first_failure_pose = alpha;
      report.failure_label = label;
      report.empirically_robust = false;
      break;
    }
  }
  return report;
}

double frame_budget_comparison(const CertificationReport& report, std::size_t baseline_mc_samples) {
  if (baseline_mc_samples < 1) throw Error(ErrorKind::InvalidArgument, "baseline must be at least 1");
  return static_cast<double>(report.N) / static_cast<double>(baseline_mc_samples);
}

double certified_accuracy(std::span<const SampleOutcome> outcomes) {
  if (outcomes.empty()) throw Error(ErrorKind::InvalidArgument, "certified accuracy of an empty corpus");
  const auto good = std::count_if(outcomes.begin(), outcomes.end(), [](const SampleOutcome& o) {
    return o.verdict == Verdict::Certified && o.predicted == o.truth;
  });
  return static_cast<double>(good) / static_cast<double>(outcomes.size());
}

}  // namespace pws
