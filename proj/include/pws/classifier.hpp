#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pws/image.hpp"

namespace pws {

struct LabelDistribution {
  std::vector<double> scores;

  /// Highest score, lowest index on ties.
  int argmax() const;
};

/// Logits of a model that is affine in the pixels, seen under additive
/// isotropic pixel noise of unit scale: logits(x + s*eps) = mean + s * F z
/// with z ~ N(0, I). `factor` is C x C row-major lower-triangular.
struct AffineLogits {
  int classes = 0;
  std::vector<double> mean;
  std::vector<double> factor;
};

class BaseClassifier {
 public:
  virtual ~BaseClassifier() = default;

  virtual int label_count() const = 0;
  /// Normalized scores. Throws ShapeMismatch for an image of the wrong shape.
  virtual LabelDistribution predict(const Image& x) const = 0;
  virtual int predict_label(const Image& x) const { return predict(x).argmax(); }
  /// Present only when the argmax under Gaussian pixel noise can be sampled
  /// in logit space with the same distribution as in pixel space.
  virtual std::optional<AffineLogits> affine_logits(const Image& /*x*/) const { return std::nullopt; }
  virtual nlohmann::json describe() const = 0;
};

/// Multinomial logistic regression on average-pooled pixels.
class SoftmaxClassifier final : public BaseClassifier {
 public:
  SoftmaxClassifier(int channels, int height, int width, int downsample, int labels,
                    std::vector<float> weights, std::vector<float> biases);

  int label_count() const override { return labels_; }
  LabelDistribution predict(const Image& x) const override;
  int predict_label(const Image& x) const override;
  std::optional<AffineLogits> affine_logits(const Image& x) const override;
  nlohmann::json describe() const override;

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int downsample() const { return downsample_; }
  std::size_t feature_count() const { return pixel_count_.size(); }
  const std::vector<float>& weights() const { return weights_; }
  const std::vector<float>& biases() const { return biases_; }

  /// Pooled feature vector: per channel, the mean of each downsample x
  /// downsample block (edge blocks average the pixels they contain).
  std::vector<double> features(const Image& x) const;
  std::vector<double> logits(const Image& x) const;

  /// Model file: one JSON header line, then float32 LE weights (labels x
  /// features, row-major) followed by float32 LE biases.
  void save(const std::filesystem::path& path) const;
  static SoftmaxClassifier load(const std::filesystem::path& path);
  std::string serialize() const;
  static SoftmaxClassifier deserialize(std::string_view bytes);

  friend bool operator==(const SoftmaxClassifier& a, const SoftmaxClassifier& b) {
    return a.channels_ == b.channels_ && a.height_ == b.height_ && a.width_ == b.width_ &&
           a.downsample_ == b.downsample_ && a.labels_ == b.labels_ && a.weights_ == b.weights_ &&
           a.biases_ == b.biases_;
  }

 private:
  void check_shape(const Image& x) const;

  int channels_;
  int height_;
  int width_;
  int downsample_;
  int labels_;
  std::vector<float> weights_;
  std::vector<float> biases_;
  std::vector<int> pixel_count_;
  std::vector<double> noise_factor_;
};

struct LabeledImage {
  Image image;
  int label = 0;
};

struct TrainOptions {
  double noise_sigma = 0.5;
  int augment_count = 8;
  std::uint64_t seed = 0;
  int downsample = 4;
  int iterations = 400;
  double l2 = 1e-3;
};

/// Full-batch gradient descent from zero on standardized pooled features,
/// with `augment_count` Gaussian-noised copies per image. The dataset is put
/// in a canonical order first and each copy's noise is keyed by (seed, image
/// content, copy index), so the model does not depend on input order.
/// Throws DegenerateDataset with fewer than two labels or an empty label.
SoftmaxClassifier builtin_train(const std::vector<LabeledImage>& dataset, const TrainOptions& opts);

/// External scorer: runs `command <image.pwsi>` and reads one score per line.
class SubprocessClassifier final : public BaseClassifier {
 public:
  SubprocessClassifier(std::string command, int labels);

  int label_count() const override { return labels_; }
  LabelDistribution predict(const Image& x) const override;
  nlohmann::json describe() const override;

 private:
  std::string command_;
  int labels_;
};

/// Loads a built-in model file, or wraps `cmd:<command>` with `labels` outputs.
std::unique_ptr<BaseClassifier> load_classifier(const std::string& spec, int labels = 0);

}  // namespace pws
