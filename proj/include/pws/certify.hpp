#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pws/classifier.hpp"
#include "pws/geometry.hpp"
#include "pws/intervals.hpp"
#include "pws/point_cloud.hpp"
#include "pws/smoothing.hpp"

namespace pws {

inline constexpr int kReportVersion = 1;

enum class Verdict { Certified, NotCertified, Abstain };

std::string_view verdict_name(Verdict verdict);

struct CertifyConfig {
  MotionSpec spec;
  PartitionMethod method = PartitionMethod::Exact;
  IntervalConfig intervals;
  SmoothingConfig smoothing;
  /// Empty means mid-gray.
  std::vector<float> background;

  nlohmann::json to_json() const;
};

struct PartitionEstimate {
  double alpha = 0.0;
  int top_label = 0;
  int runner_up = 0;
  double pA_lower = 0.0;
  double pB_upper = 1.0;
  double radius = 0.0;
  bool abstain = true;
};

struct CertificationReport {
  Verdict verdict = Verdict::Abstain;
  std::string reason;
  CertifyConfig config;
  nlohmann::json classifier;
  DeltaEstimate delta;
  std::size_t N = 0;
  std::uint64_t partition_digest = 0;
  /// Consensus top label, or -1 when the partitions disagree.
  int top_label = -1;
  double max_adjacent_error = 0.0;
  double min_radius = 0.0;
  double margin = 0.0;
  std::vector<PartitionEstimate> per_partition;
  std::size_t frames_rendered = 0;
  double delta_seconds = 0.0;
  double wall_seconds = 0.0;

  /// Deterministic fields only; timings go under "timing" when requested.
  nlohmann::json to_json(bool include_timing = true) const;
};

/// Certified iff no partition abstains, all share the top label, and
/// max_adjacent_error < min_radius (strict). Abstain when a partition
/// abstains or the top labels disagree, NotCertified otherwise.
Verdict decide_verdict(std::span<const PartitionEstimate> partitions, double max_adjacent_error,
                       double min_radius);

/// Runs the whole pipeline on one scene. For the one-frame method the spacing
/// comes from extract_one_frame(cloud) while frames are rendered from the full
/// cloud. Every point must stay in front of the camera over S.
CertificationReport certify(const ColoredPointCloud& cloud, const CameraModel& cam,
                            const BaseClassifier& classifier, const CertifyConfig& cfg);

struct AttackReport {
  std::size_t poses_tested = 0;
  int reference_label = 0;
  std::optional<double> first_failure_pose;
  std::optional<int> failure_label;
  bool empirically_robust = true;

  nlohmann::json to_json() const;
};

/// Smoothed predictions at `poses` evenly spaced poses over S (only the
/// identity pose when poses == 1), scanned in increasing order and compared
/// to the prediction at the identity pose. Pose k uses seed mix(seed, k).
AttackReport empirical_attack(const ColoredPointCloud& cloud, const CameraModel& cam,
                              const BaseClassifier& classifier, const MotionSpec& spec,
                              const SmoothingConfig& smoothing, int poses,
                              std::span<const float> background = {});

/// N / baseline_mc_samples.
double frame_budget_comparison(const CertificationReport& report, std::size_t baseline_mc_samples = 10000);

struct SampleOutcome {
  Verdict verdict = Verdict::Abstain;
  int predicted = -1;
  int truth = -1;
};

/// Fraction certified with the correct label. Throws InvalidArgument if empty.
double certified_accuracy(std::span<const SampleOutcome> outcomes);

}  // namespace pws
