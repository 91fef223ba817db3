#include "pws/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "pws/error.hpp"
#include "pws/parallel.hpp"
#include "pws/rng.hpp"

namespace pws {

namespace {

// Acklam's rational approximation for the lower tail, p <= 0.5.
double lower_tail_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // One Halley step against the erfc-based CDF.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

struct Tally {
  std::vector<std::uint64_t> counts;
};

void tally_logit_space(const AffineLogits& model, double sigma, std::uint64_t seed, std::size_t begin,
                       std::size_t end, std::vector<std::uint64_t>& counts) {
  const int c = model.classes;
  std::vector<double> z(c), logits(c);
  for (std::size_t i = begin; i < end; ++i) {
    CounterRng rng(seed, i);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < c; ++k) z[k] = normal(rng);
    int best = 0;
    for (int r = 0; r < c; ++r) {
      double s = 0.0;
      for (int k = 0; k <= r; ++k) s += model.factor[r * c + k] * z[k];
      logits[r] = model.mean[r] + sigma * s;
      if (logits[r] > logits[best]) best = r;
    }
    ++counts[best];
  }
}

void tally_pixel_space(const BaseClassifier& classifier, const Image& x, double sigma, std::uint64_t seed,
                       std::size_t begin, std::size_t end, std::vector<std::uint64_t>& counts) {
  Image noisy = x;
  for (std::size_t i = begin; i < end; ++i) {
    CounterRng rng(seed, i);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < x.data.size(); ++j) {
      noisy.data[j] = static_cast<float>(x.data[j] + sigma * normal(rng));
    }
    const int label = classifier.predict_label(noisy);
    if (label < 0 || label >= static_cast<int>(counts.size())) {
      throw Error(ErrorKind::FormatError, "classifier returned label " + std::to_string(label));
    }
    ++counts[label];
  }
}

}  // namespace

std::string_view sampling_mode_name(SamplingMode mode) {
  return mode == SamplingMode::Auto ? "auto" : "pixel";
}

SamplingMode parse_sampling_mode(std::string_view text) {
  if (text == "auto") return SamplingMode::Auto;
  if (text == "pixel") return SamplingMode::PixelSpace;
  throw Error(ErrorKind::InvalidArgument, "unknown sampling mode '" + std::string(text) + "'");
}

void SmoothingConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::InvalidArgument, "sigma must be positive");
  if (n_samples < 100) throw Error(ErrorKind::InvalidArgument, "n_samples must be at least 100");
  if (!(confidence_alpha > 0.0 && confidence_alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "confidence alpha must lie in (0, 1)");
  }
}

nlohmann::json SmoothingConfig::to_json() const {
  return {{"sigma", sigma},
          {"n_samples", n_samples},
          {"confidence_alpha", confidence_alpha},
          {"seed", seed},
          {"sampling", sampling_mode_name(mode)},
          {"clamped", false}};
}

double gaussian_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::DomainError, "gaussian quantile needs 0 < p < 1, got " + std::to_string(p));
  }
  if (p == 0.5) return 0.0;
  // 1 - p is exact for p >= 0.5, so the upper half mirrors the lower one.
  return p < 0.5 ? lower_tail_quantile(p) : -lower_tail_quantile(1.0 - p);
}

double clopper_pearson_lower(std::uint64_t successes, std::uint64_t trials, double alpha) {
  if (trials == 0 || successes > trials) {
    throw Error(ErrorKind::InvalidArgument, "need 0 <= successes <= trials and trials >= 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  if (successes == 0) return 0.0;
  if (successes == trials) return std::pow(alpha, 1.0 / static_cast<double>(trials));
  return boost::math::ibeta_inv(static_cast<double>(successes), static_cast<double>(trials - successes + 1), alpha);
}

double certified_radius(double sigma, double pA_lower, double pB_upper) {
  return 0.5 * sigma * (gaussian_quantile(pA_lower) - gaussian_quantile(pB_upper));
}

SmoothedEstimate smoothed_estimate(const BaseClassifier& classifier, const Image& x, const SmoothingConfig& cfg) {
  cfg.validate();
  const int labels = classifier.label_count();
  const auto n = static_cast<std::size_t>(cfg.n_samples);
  std::optional<AffineLogits> affine;
  if (cfg.mode == SamplingMode::Auto) affine = classifier.affine_logits(x);

  SmoothedEstimate est;
  est.logit_space = affine.has_value();
  const std::size_t chunks = affine ? std::min<std::size_t>(worker_count(), n / 20000 + 1) : worker_count();
  std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(labels, 0));
  parallel_for(
      n,
      [&](std::size_t begin, std::size_t end, std::size_t c) {
        if (affine) {
          tally_logit_space(*affine, cfg.sigma, cfg.seed, begin, end, partial[c]);
        } else {
          tally_pixel_space(classifier, x, cfg.sigma, cfg.seed, begin, end, partial[c]);
        }
      },
      chunks);
  est.counts.assign(labels, 0);
  for (const auto& p : partial)
    for (int k = 0; k < labels; ++k) est.counts[k] += p[k];

  // Top label by count, lowest index on ties; runner-up likewise among the rest.
  est.top_label = 0;
  for (int k = 1; k < labels; ++k) {
    if (est.counts[k] > est.counts[est.top_label]) est.top_label = k;
  }
  est.runner_up = est.top_label == 0 ? 1 : 0;
  for (int k = 0; k < labels; ++k) {
    if (k != est.top_label && est.counts[k] > est.counts[est.runner_up]) est.runner_up = k;
  }
  est.pA_lower = clopper_pearson_lower(est.counts[est.top_label], n, cfg.confidence_alpha);
  est.pB_upper = 1.0 - est.pA_lower;
  est.abstain = !(est.pA_lower > 0.5);
  est.radius = est.abstain ? 0.0 : certified_radius(cfg.sigma, est.pA_lower, est.pB_upper);
  return est;
}

}  // namespace pws
