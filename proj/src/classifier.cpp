#include "pws/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <unistd.h>

#include "pws/error.hpp"
#include "pws/formats.hpp"
#include "pws/rng.hpp"

namespace pws {

namespace {

constexpr std::string_view kModelFormat = "pws-softmax";

// Lower-triangular L with L L^T = a for a symmetric positive semi-definite
// matrix; columns whose pivot vanishes are left at zero.
std::vector<double> cholesky_psd(const std::vector<double>& a, int n) {
  std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
  const double tiny = 1e-14 * std::max(scale, 1e-300);
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (d <= tiny) continue;
    const double pivot = std::sqrt(d);
    l[j * n + j] = pivot;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / pivot;
    }
  }
  return l;
}

std::uint64_t image_hash(const Image& x) {
  return fnv1a64(std::as_bytes(std::span(x.data.data(), x.data.size())));
}

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

int argmax_of(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

int LabelDistribution::argmax() const { return argmax_of(scores); }

SoftmaxClassifier::SoftmaxClassifier(int channels, int height, int width, int downsample, int labels,
                                     std::vector<float> weights, std::vector<float> biases)
    : channels_(channels), height_(height), width_(width), downsample_(downsample), labels_(labels),
      weights_(std::move(weights)), biases_(std::move(biases)) {
  if (channels < 1 || height < 1 || width < 1 || downsample < 1 || labels < 2) {
    throw Error(ErrorKind::InvalidArgument, "invalid classifier shape");
  }
  const int ph = (height + downsample - 1) / downsample;
  const int pw = (width + downsample - 1) / downsample;
  pixel_count_.reserve(static_cast<std::size_t>(channels) * ph * pw);
  for (int k = 0; k < channels; ++k) {
    for (int br = 0; br < ph; ++br) {
      for (int bc = 0; bc < pw; ++bc) {
        const int rows = std::min(downsample, height - br * downsample);
        const int cols = std::min(downsample, width - bc * downsample);
        pixel_count_.push_back(rows * cols);
      }
    }
  }
  const std::size_t d = pixel_count_.size();
  if (weights_.size() != d * labels || biases_.size() != static_cast<std::size_t>(labels)) {
    throw Error(ErrorKind::ShapeMismatch, "weight block does not match the declared shape");
  }
  // Covariance of the logits under unit pixel noise: W diag(1/m) W^T.
  std::vector<double> cov(static_cast<std::size_t>(labels) * labels, 0.0);
  for (int a = 0; a < labels; ++a) {
    for (int b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        s += static_cast<double>(weights_[a * d + f]) * weights_[b * d + f] / pixel_count_[f];
      }
      cov[a * labels + b] = cov[b * labels + a] = s;
    }
  }
  noise_factor_ = cholesky_psd(cov, labels);
}

void SoftmaxClassifier::check_shape(const Image& x) const {
  if (x.channels != channels_ || x.height != height_ || x.width != width_) {
    throw Error(ErrorKind::ShapeMismatch,
                "classifier expects " + std::to_string(channels_) + "x" + std::to_string(height_) + "x" +
                    std::to_string(width_) + ", got " + std::to_string(x.channels) + "x" +
                    std::to_string(x.height) + "x" + std::to_string(x.width));
  }
}

std::vector<double> SoftmaxClassifier::features(const Image& x) const {
  check_shape(x);
  const int ph = (height_ + downsample_ - 1) / downsample_;
  const int pw = (width_ + downsample_ - 1) / downsample_;
  std::vector<double> f(pixel_count_.size(), 0.0);
  for (int k = 0; k < channels_; ++k) {
    for (int r = 0; r < height_; ++r) {
      const std::size_t base = (static_cast<std::size_t>(k) * ph + r / downsample_) * pw;
      for (int c = 0; c < width_; ++c) f[base + c / downsample_] += x.at(k, r, c);
    }
  }
  for (std::size_t i = 0; i < f.size(); ++i) f[i] /= pixel_count_[i];
  return f;
}

std::vector<double> SoftmaxClassifier::logits(const Image& x) const {
  const std::vector<double> f = features(x);
  const std::size_t d = f.size();
  std::vector<double> z(labels_);
  for (int c = 0; c < labels_; ++c) {
    double s = biases_[c];
    for (std::size_t i = 0; i < d; ++i) s += static_cast<double>(weights_[c * d + i]) * f[i];
    z[c] = s;
  }
  return z;
}

LabelDistribution SoftmaxClassifier::predict(const Image& x) const {
  std::vector<double> z = logits(x);
  softmax_inplace(z);
  return {std::move(z)};
}

int SoftmaxClassifier::predict_label(const Image& x) const { return argmax_of(logits(x)); }

std::optional<AffineLogits> SoftmaxClassifier::affine_logits(const Image& x) const {
  return AffineLogits{labels_, logits(x), noise_factor_};
}

nlohmann::json SoftmaxClassifier::describe() const {
  return {{"kind", "softmax"},
          {"channels", channels_},
          {"height", height_},
          {"width", width_},
          {"downsample", downsample_},
          {"labels", labels_},
          {"features", feature_count()}};
}

std::string SoftmaxClassifier::serialize() const {
  nlohmann::json header = describe();
  header["format"] = kModelFormat;
  header["version"] = 1;
  std::string out = header.dump();
  out.push_back('\n');
  auto put = [&](float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
  };
  for (float w : weights_) put(w);
  for (float b : biases_) put(b);
  return out;
}

SoftmaxClassifier SoftmaxClassifier::deserialize(std::string_view bytes) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw Error(ErrorKind::FormatError, "model file has no header line");
  nlohmann::json h;
  int k = 0, hh = 0, w = 0, ds = 0, labels = 0;
  std::size_t features = 0;
  try {
    h = nlohmann::json::parse(bytes.substr(0, nl));
    if (h.at("format").get<std::string>() != kModelFormat) throw Error(ErrorKind::FormatError, "not a model file");
    k = h.at("channels").get<int>();
    hh = h.at("height").get<int>();
    w = h.at("width").get<int>();
    ds = h.at("downsample").get<int>();
    labels = h.at("labels").get<int>();
    features = h.at("features").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("model header: ") + e.what());
  }
  const std::string_view body = bytes.substr(nl + 1);
  const std::size_t expected = (features * labels + labels) * 4;
  if (labels < 2 || body.size() != expected) throw Error(ErrorKind::FormatError, "model weight block has the wrong size");
  auto get = [&](std::size_t i) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(body[4 * i + b])) << (8 * b);
    return std::bit_cast<float>(v);
  };
  std::vector<float> weights(features * labels), biases(labels);
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = get(i);
  for (int c = 0; c < labels; ++c) biases[c] = get(weights.size() + c);
  SoftmaxClassifier model(k, hh, w, ds, labels, std::move(weights), std::move(biases));
  if (model.feature_count() != features) throw Error(ErrorKind::FormatError, "feature count disagrees with shape");
  return model;
}

void SoftmaxClassifier::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

SoftmaxClassifier SoftmaxClassifier::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

SoftmaxClassifier builtin_train(const std::vector<LabeledImage>& dataset, const TrainOptions& opts) {
  if (dataset.empty()) throw Error(ErrorKind::DegenerateDataset, "empty dataset");
  if (opts.augment_count < 0 || opts.downsample < 1 || opts.iterations < 0 || !(opts.noise_sigma >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid training options");
  }
  const Image& first = dataset.front().image;
  int labels = 0;
  for (const auto& s : dataset) {
    if (!s.image.same_shape(first)) throw Error(ErrorKind::ShapeMismatch, "training images differ in shape");
    if (s.label < 0) throw Error(ErrorKind::DegenerateDataset, "negative label");
    labels = std::max(labels, s.label + 1);
  }
  std::vector<int> per_label(labels, 0);
  for (const auto& s : dataset) ++per_label[s.label];
  if (labels < 2) throw Error(ErrorKind::DegenerateDataset, "need at least two labels");
  for (int c = 0; c < labels; ++c) {
    if (per_label[c] == 0) throw Error(ErrorKind::DegenerateDataset, "label " + std::to_string(c) + " has no examples");
  }

  // Canonical order: by label, then content hash; identical images are
  // interchangeable, so their relative order does not matter.
  struct Entry {
    int label;
    std::uint64_t hash;
    std::size_t index;
    std::uint64_t ordinal = 0;
  };
  std::vector<Entry> order;
  order.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) order.push_back({dataset[i].label, image_hash(dataset[i].image), i});
  std::sort(order.begin(), order.end(), [&](const Entry& a, const Entry& b) {
    if (a.label != b.label) return a.label < b.label;
    if (a.hash != b.hash) return a.hash < b.hash;
    return dataset[a.index].image.data < dataset[b.index].image.data;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i].label == order[i - 1].label && order[i].hash == order[i - 1].hash) order[i].ordinal = order[i - 1].ordinal + 1;
  }

  // A zero model supplies the pooling layout.
  const int ph = (first.height + opts.downsample - 1) / opts.downsample;
  const int pw = (first.width + opts.downsample - 1) / opts.downsample;
  const std::size_t d = static_cast<std::size_t>(first.channels) * ph * pw;
  const SoftmaxClassifier layout(first.channels, first.height, first.width, opts.downsample, labels,
                                 std::vector<float>(d * labels, 0.0f), std::vector<float>(labels, 0.0f));

  std::vector<std::vector<double>> rows;
  std::vector<int> targets;
  rows.reserve(order.size() * (1 + opts.augment_count));
  for (const Entry& e : order) {
    const Image& x = dataset[e.index].image;
    rows.push_back(layout.features(x));
    targets.push_back(e.label);
    for (int copy = 0; copy < opts.augment_count; ++copy) {
      CounterRng rng(mix_seed(mix_seed(opts.seed, e.hash), (e.ordinal << 32) | static_cast<std::uint64_t>(copy)));
      std::normal_distribution<double> normal(0.0, 1.0);
      Image noisy = x;
      for (float& v : noisy.data) v = static_cast<float>(v + opts.noise_sigma * normal(rng));
      rows.push_back(layout.features(noisy));
      targets.push_back(e.label);
    }
  }
  const std::size_t n = rows.size();

  // Standardize features; the affine map is folded back into the weights.
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t f = 0; f < d; ++f) mean[f] += r[f];
  for (double& m : mean) m /= static_cast<double>(n);
  for (const auto& r : rows)
    for (std::size_t f = 0; f < d; ++f) scale[f] += (r[f] - mean[f]) * (r[f] - mean[f]);
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 1e-6)) s = 1.0;
  }
  for (auto& r : rows)
    for (std::size_t f = 0; f < d; ++f) r[f] = (r[f] - mean[f]) / scale[f];

  // Step 1/L with L bounding the loss curvature: 0.5 * lambda_max(Z^T Z / n) + l2,
  // where Z carries a constant column for the bias.
  std::vector<double> v(d + 1, 1.0);
  double lambda = 1.0;
  for (int it = 0; it < 60; ++it) {
    std::vector<double> next(d + 1, 0.0);
    for (const auto& r : rows) {
      double dot = v[d];
      for (std::size_t f = 0; f < d; ++f) dot += r[f] * v[f];
      for (std::size_t f = 0; f < d; ++f) next[f] += r[f] * dot;
      next[d] += dot;
    }
    double norm = 0.0;
    for (double& x : next) {
      x /= static_cast<double>(n);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) break;
    lambda = norm;
    for (std::size_t f = 0; f <= d; ++f) v[f] = next[f] / norm;
  }
  // Power iteration approaches lambda_max from below; pad it.
  const double step = 1.0 / (0.5 * 1.1 * lambda + opts.l2);

  std::vector<double> w(d * labels, 0.0), b(labels, 0.0);
  std::vector<double> gw(d * labels), gb(labels), z(labels);
  for (int it = 0; it < opts.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = rows[i];
      for (int c = 0; c < labels; ++c) {
        double s = b[c];
        for (std::size_t f = 0; f < d; ++f) s += w[c * d + f] * r[f];
        z[c] = s;
      }
      softmax_inplace(z);
      z[targets[i]] -= 1.0;
      for (int c = 0; c < labels; ++c) {
        gb[c] += z[c];
        for (std::size_t f = 0; f < d; ++f) gw[c * d + f] += z[c] * r[f];
      }
    }
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * (gw[k] / static_cast<double>(n) + opts.l2 * w[k]);
    for (int c = 0; c < labels; ++c) b[c] -= step * gb[c] / static_cast<double>(n);
  }

  std::vector<float> weights(d * labels), biases(labels);
  for (int c = 0; c < labels; ++c) {
    double bias = b[c];
    for (std::size_t f = 0; f < d; ++f) {
      const double raw = w[c * d + f] / scale[f];
      weights[c * d + f] = static_cast<float>(raw);
      bias -= raw * mean[f];
    }
    biases[c] = static_cast<float>(bias);
  }
  return SoftmaxClassifier(first.channels, first.height, first.width, opts.downsample, labels, std::move(weights),
                           std::move(biases));
}

SubprocessClassifier::SubprocessClassifier(std::string command, int labels)
    : command_(std::move(command)), labels_(labels) {
  if (command_.empty()) throw Error(ErrorKind::InvalidArgument, "empty classifier command");
  if (labels < 2) throw Error(ErrorKind::InvalidArgument, "subprocess classifier needs at least two labels");
}

LabelDistribution SubprocessClassifier::predict(const Image& x) const {
  static std::atomic<unsigned> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    ("pws-score-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".pwsi");
  write_image(path, x);
  const std::string cmd = command_ + " '" + path.string() + "'";
  std::string output;
  int status = -1;
  if (FILE* pipe = ::popen(cmd.c_str(), "r")) {
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) output.append(buf, got);
    status = ::pclose(pipe);
  }
  std::error_code ec;
  std::filesystem::remove(path, ec);
  if (status != 0) throw Error(ErrorKind::IoError, "classifier command failed: " + command_);
  std::istringstream in(output);
  std::vector<double> scores;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      scores.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      throw Error(ErrorKind::FormatError, "classifier printed a non-number: " + line);
    }
  }
  if (scores.size() != static_cast<std::size_t>(labels_)) {
    throw Error(ErrorKind::FormatError, "classifier printed " + std::to_string(scores.size()) + " scores, expected " +
                                            std::to_string(labels_));
  }
  double sum = 0.0;
  for (double s : scores) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw Error(ErrorKind::FormatError, "classifier score is negative or not finite");
    sum += s;
  }
  if (!(sum > 0.0)) throw Error(ErrorKind::FormatError, "classifier scores sum to zero");
  for (double& s : scores) s /= sum;
  return {std::move(scores)};
}

nlohmann::json SubprocessClassifier::describe() const {
  return {{"kind", "subprocess"}, {"command", command_}, {"labels", labels_}};
}

std::unique_ptr<BaseClassifier> load_classifier(const std::string& spec, int labels) {
  constexpr std::string_view prefix = "cmd:";
  if (spec.rfind(prefix, 0) == 0) return std::make_unique<SubprocessClassifier>(spec.substr(prefix.size()), labels);
  return std::make_unique<SoftmaxClassifier>(SoftmaxClassifier::load(spec));
}

}  // namespace pws
