#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pws/classifier.hpp"
#include "pws/image.hpp"

namespace pws {

enum class SamplingMode {
  /// Sample in logit space when the classifier is affine in the pixels,
  /// otherwise in pixel space. Both draw the same argmax distribution.
  Auto,
  /// Always perturb every pixel and call the classifier.
  PixelSpace,
};

std::string_view sampling_mode_name(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view text);

struct SmoothingConfig {
  double sigma = 0.5;
  int n_samples = 10000;
  double confidence_alpha = 0.001;
  std::uint64_t seed = 0;
  SamplingMode mode = SamplingMode::Auto;

  /// Throws InvalidArgument unless sigma > 0, n_samples >= 100 and 0 < alpha < 1.
  void validate() const;
  nlohmann::json to_json() const;
};

struct SmoothedEstimate {
  int top_label = 0;
  int runner_up = 0;
  double pA_lower = 0.0;
  double pB_upper = 1.0;
  std::vector<std::uint64_t> counts;
  /// Zero when abstaining.
  double radius = 0.0;
  bool abstain = true;
  bool logit_space = false;
};

/// Monte-Carlo estimate of the Gaussian-smoothed classifier at x. Noisy
/// images are not clamped. Draw i uses its own stream keyed by (seed, i), so
/// the tallies do not depend on how draws are split across threads.
SmoothedEstimate smoothed_estimate(const BaseClassifier& classifier, const Image& x, const SmoothingConfig& cfg);

/// Inverse standard normal CDF. Throws DomainError outside (0, 1).
double gaussian_quantile(double p);

/// One-sided exact binomial lower confidence bound at level 1 - alpha.
double clopper_pearson_lower(std::uint64_t successes, std::uint64_t trials, double alpha);

/// sigma / 2 * (Phi^-1(pA) - Phi^-1(pB)).
double certified_radius(double sigma, double pA_lower, double pB_upper);

}  // namespace pws
