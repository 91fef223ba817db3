#include <doctest.h>

#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "pws/error.hpp"
#include "pws/smoothing.hpp"

using namespace pws;
using pws::test::kind_of;

namespace {

class ConstantClassifier final : public BaseClassifier {
 public:
  ConstantClassifier(int labels, int answer) : labels_(labels), answer_(answer) {}
  int label_count() const override { return labels_; }
  LabelDistribution predict(const Image&) const override {
    LabelDistribution d{std::vector<double>(labels_, 0.0)};
    d.scores[answer_] = 1.0;
    return d;
  }
  nlohmann::json describe() const override { return {{"kind", "constant"}}; }

 private:
  int labels_;
  int answer_;
};

// Thresholds one pixel at 0.5; on a mid-gray image the noise makes it a coin.
class ThresholdClassifier final : public BaseClassifier {
 public:
  int label_count() const override { return 2; }
  LabelDistribution predict(const Image& x) const override {
    return x.data[0] > 0.5f ? LabelDistribution{{0.0, 1.0}} : LabelDistribution{{1.0, 0.0}};
  }
  nlohmann::json describe() const override { return {{"kind", "threshold"}}; }
};

// Standard normal CDF through erfc, inverted by bisection. The upper half
// uses 1 - p, which is exact there, to keep the oracle's own resolution.
double bisect_quantile(double p) {
  if (p > 0.5) return -bisect_quantile(1.0 - p);
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// P(X >= k) for X ~ Binomial(n, p), summed term by term in log space.
double upper_tail(int k, int n, double p) {
  double s = 0.0;
  for (int j = k; j <= n; ++j) {
    s += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) + j * std::log(p) +
                  (n - j) * std::log1p(-p));
  }
  return s;
}

double bisect_cp_lower(int k, int n, double alpha) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (upper_tail(k, n, mid) < alpha) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

SmoothingConfig config(int n, double alpha = 0.001, double sigma = 0.5, std::uint64_t seed = 0) {
  SmoothingConfig cfg;
  cfg.n_samples = n;
  cfg.confidence_alpha = alpha;
  cfg.sigma = sigma;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("gaussian_quantile: known values and symmetry") {
  CHECK(gaussian_quantile(0.5) == 0.0);
  CHECK(gaussian_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(kind_of([] { gaussian_quantile(0.0); }) == ErrorKind::DomainError);
  CHECK(kind_of([] { gaussian_quantile(1.0); }) == ErrorKind::DomainError);
  CHECK(kind_of([] { gaussian_quantile(std::nan("")); }) == ErrorKind::DomainError);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(1e-6, 0.5);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng);
    CHECK(std::abs(gaussian_quantile(p) + gaussian_quantile(1.0 - p)) <= 1e-12 * std::max(1.0, std::abs(gaussian_quantile(p))) + 1e-12);
  }
}

TEST_CASE("gaussian_quantile: matches a bisection oracle") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> expo(-15.0, -1.0);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    double p = i % 2 ? u(rng) : std::pow(10.0, expo(rng));
    if (i % 4 == 2) p = 1.0 - p;
    if (!(p > 0.0 && p < 1.0)) continue;
    worst = std::max(worst, std::abs(gaussian_quantile(p) - bisect_quantile(p)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("clopper_pearson_lower: closed forms and oracle") {
  CHECK(clopper_pearson_lower(0, 50, 0.05) == 0.0);
  CHECK(clopper_pearson_lower(100, 100, 0.001) == doctest::Approx(std::pow(0.001, 0.01)).epsilon(1e-12));
  CHECK(clopper_pearson_lower(100, 100, 0.001) == doctest::Approx(0.933).epsilon(1e-3));
  CHECK(clopper_pearson_lower(80, 100, 0.05) == doctest::Approx(0.7228).epsilon(1e-4));
  for (auto [k, n] : {std::pair{80, 100}, {3, 10}, {995, 1000}, {1, 400}}) {
    CHECK(clopper_pearson_lower(k, n, 0.01) == doctest::Approx(bisect_cp_lower(k, n, 0.01)).epsilon(1e-9));
  }
  CHECK(kind_of([] { clopper_pearson_lower(5, 4, 0.05); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { clopper_pearson_lower(0, 0, 0.05); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("clopper_pearson_lower: coverage over simulated experiments") {
  const double alpha = 0.05;
  const int experiments = 2000, trials = 200;
  for (double p : {0.1, 0.5, 0.93}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(p * 1000));
    std::binomial_distribution<int> draw(trials, p);
    int violations = 0;
    for (int e = 0; e < experiments; ++e) violations += clopper_pearson_lower(draw(rng), trials, alpha) > p;
    const boost::math::binomial_distribution<double> null(experiments, alpha);
    CHECK(violations <= boost::math::quantile(null, 0.99));
  }
}

TEST_CASE("certified_radius: worked value, monotone in pA and linear in sigma") {
  CHECK(certified_radius(0.5, 0.99, 0.01) == doctest::Approx(0.25 * 2 * 2.3263478740408408).epsilon(1e-12));
  CHECK(certified_radius(0.5, 0.99, 0.01) == doctest::Approx(1.1632).epsilon(1e-4));
  double prev = -1.0;
  for (double pa = 0.51; pa < 0.999; pa += 0.01) {
    const double r = certified_radius(0.5, pa, 1.0 - pa);
    CHECK(r > prev);
    CHECK(certified_radius(1.5, pa, 1.0 - pa) == doctest::Approx(3.0 * r).epsilon(1e-12));
    prev = r;
  }
}

TEST_CASE("smoothed_estimate: constant classifier") {
  const ConstantClassifier c(5, 3);
  const SmoothedEstimate est = smoothed_estimate(c, Image(1, 4, 4, 0.5f), config(100));
  CHECK(est.top_label == 3);
  CHECK(est.counts[3] == 100);
  CHECK(est.pA_lower == doctest::Approx(std::pow(0.001, 0.01)).epsilon(1e-12));
  CHECK(est.pB_upper == doctest::Approx(1.0 - est.pA_lower).epsilon(1e-12));
  CHECK_FALSE(est.abstain);
  CHECK(est.radius == doctest::Approx(certified_radius(0.5, est.pA_lower, est.pB_upper)));
  CHECK_FALSE(est.logit_space);
}

TEST_CASE("smoothed_estimate: a fair coin abstains") {
  const ThresholdClassifier c;
  const SmoothedEstimate est = smoothed_estimate(c, Image(1, 2, 2, 0.5f), config(2000));
  CHECK(est.abstain);
  CHECK(est.radius == 0.0);
  CHECK(est.pA_lower < 0.5);
  CHECK(est.counts[0] + est.counts[1] == 2000);
}

TEST_CASE("smoothed_estimate: fixed seed reproduces tallies, new seed changes them") {
  const ThresholdClassifier c;
  const Image x(1, 2, 2, 0.45f);
  const auto a = smoothed_estimate(c, x, config(1000, 0.001, 0.5, 17));
  const auto b = smoothed_estimate(c, x, config(1000, 0.001, 0.5, 17));
  CHECK(a.counts == b.counts);
  CHECK(a.pA_lower == b.pA_lower);
  CHECK(smoothed_estimate(c, x, config(1000, 0.001, 0.5, 18)).counts != a.counts);
}

TEST_CASE("smoothed_estimate: logit-space and pixel-space sampling agree in distribution") {
  const auto data = test::reference_images(test::two_class_corpus(4));
  TrainOptions opts;
  opts.iterations = 100;
  const SoftmaxClassifier model = builtin_train(data, opts);
  // Large noise so both labels occur.
  auto cfg = config(4000, 0.001, 3.0, 9);
  for (std::size_t i : {std::size_t{0}, data.size() - 1}) {
    const auto fast = smoothed_estimate(model, data[i].image, cfg);
    cfg.mode = SamplingMode::PixelSpace;
    const auto slow = smoothed_estimate(model, data[i].image, cfg);
    cfg.mode = SamplingMode::Auto;
    CHECK(fast.logit_space);
    CHECK_FALSE(slow.logit_space);
    const double pf = static_cast<double>(fast.counts[data[i].label]) / 4000.0;
    const double ps = static_cast<double>(slow.counts[data[i].label]) / 4000.0;
    INFO("fast " << pf << " slow " << ps);
    CHECK(pf < 0.995);
    // Five standard errors of a difference of two proportions.
    CHECK(std::abs(pf - ps) <= 5.0 * std::sqrt(2 * 0.25 / 4000.0));
  }
}

TEST_CASE("SmoothingConfig validation") {
  CHECK(kind_of([] { config(99).validate(); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { config(100, 0.0).validate(); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { config(100, 0.01, -1.0).validate(); }) == ErrorKind::InvalidArgument);
  CHECK(parse_sampling_mode(sampling_mode_name(SamplingMode::PixelSpace)) == SamplingMode::PixelSpace);
}
