#include "pws/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <cstdio>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "pws/certify.hpp"
#include "pws/classifier.hpp"
#include "pws/error.hpp"
#include "pws/formats.hpp"
#include "pws/intervals.hpp"
#include "pws/parallel.hpp"
#include "pws/rasterizer.hpp"
#include "pws/rng.hpp"
#include "pws/scenes.hpp"
#include "pws/smoothing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pws {

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs a validation step, turning argument errors into configuration errors.
template <typename Fn>
auto as_config(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::InvalidDelta) throw ConfigError(e.what());
    throw;
  }
}

void require_file(const std::string& path, std::string_view what) {
  if (path.empty()) throw ConfigError(std::string(what) + " is required");
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

struct MotionOpts {
  std::string axis = "tz";
  std::string radius = "10mm";

  void add(CLI::App* cmd) {
    cmd->add_option("--axis", axis, "Motion axis: tx, ty, tz, rx, ry, rz")->capture_default_str();
    cmd->add_option("--radius", radius, "Radius b with unit suffix mm, m, deg or rad (bare = m or rad)")
        ->capture_default_str();
  }

  MotionSpec spec() const {
    return as_config([&] {
      MotionSpec s{parse_axis(axis), 0.0};
      s.radius = parse_radius(radius, s.axis);
      s.validate();
      return s;
    });
  }
};

struct IntervalOpts {
  std::string method = "exact";
  int resolution = 2000;
  double quantile = 0.995;
  double delta = 0.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--method", method, "Partition bound: exact, lipschitz, one-frame")->capture_default_str();
    cmd->add_option("--resolution", resolution, "Analysis poses across S")->capture_default_str();
    cmd->add_option("--quantile", quantile, "Lower quantile of per-pixel bounds (1 = strict minimum)")
        ->capture_default_str();
    cmd->add_option("--delta", delta, "Delta-convexity prior in pixels (one-frame only)");
  }

  PartitionMethod parsed_method() const { return as_config([&] { return parse_method(method); }); }

  IntervalConfig config() const {
    return as_config([&] {
      IntervalConfig c;
      c.resolution = resolution;
      c.quantile = quantile;
      c.delta = delta;
      c.validate();
      if (parse_method(method) == PartitionMethod::OneFrame && !(delta > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "--method one-frame needs --delta > 0");
      }
      return c;
    });
  }
};

struct SmoothOpts {
  double sigma = 0.5;
  int n_samples = 10000;
  double alpha = 0.001;
  std::uint64_t seed = 0;
  std::string sampling = "auto";

  void add(CLI::App* cmd) {
    cmd->add_option("--sigma", sigma, "Pixel noise standard deviation")->capture_default_str();
    cmd->add_option("-n,--samples", n_samples, "Monte-Carlo draws per frame")->capture_default_str();
    cmd->add_option("--alpha", alpha, "Failure probability per confidence bound")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for all randomness")->capture_default_str();
    cmd->add_option("--sampling", sampling, "auto (logit space when exact) or pixel")->capture_default_str();
  }

  SmoothingConfig config() const {
    return as_config([&] {
      SmoothingConfig c;
      c.sigma = sigma;
      c.n_samples = n_samples;
      c.confidence_alpha = alpha;
      c.seed = seed;
      c.mode = parse_sampling_mode(sampling);
      c.validate();
      return c;
    });
  }
};

// Scene selection: a corpus directory (optionally filtered by name) or one
// scene file with its camera.
struct SceneOpts {
  std::string corpus;
  std::vector<std::string> names;
  std::string scene;
  std::string camera;
  int label = -1;

  void add(CLI::App* cmd, bool many) {
    cmd->add_option("--corpus", corpus, "Corpus directory");
    cmd->add_option("--name", names, many ? "Restrict to these scene names" : "Scene name inside the corpus");
    cmd->add_option("--scene", scene, "Single PWSPC1 scene file");
    cmd->add_option("--camera", camera, "Camera JSON for --scene");
    if (many) cmd->add_option("--label", label, "Ground-truth label for --scene");
  }

  Corpus load(bool many) const {
    if (!corpus.empty() == !scene.empty()) throw ConfigError("give exactly one of --corpus or --scene");
    Corpus c;
    if (!scene.empty()) {
      require_file(scene, "--scene");
      require_file(camera, "--camera");
      c.camera = camera_from_json(json::parse(read_file(camera)));
      Scene s;
      s.name = fs::path(scene).stem().string();
      s.label = label;
      s.cloud = read_cloud(scene);
      c.scenes.push_back(std::move(s));
      return c;
    }
    require_file(corpus, "--corpus");
    require_file((fs::path(corpus) / "labels.json").string(), "labels.json");
    require_file((fs::path(corpus) / "camera.json").string(), "camera.json");
    c = read_corpus(corpus);
    if (!many && names.size() != 1) throw ConfigError("--corpus needs exactly one --name here");
    if (!names.empty()) {
      std::vector<Scene> kept;
      for (const auto& n : names) {
        auto it = std::find_if(c.scenes.begin(), c.scenes.end(), [&](const Scene& s) { return s.name == n; });
        if (it == c.scenes.end()) throw ConfigError("no scene named " + n + " in the corpus");
        kept.push_back(std::move(*it));
      }
      c.scenes = std::move(kept);
    }
    if (c.scenes.empty()) throw ConfigError("corpus has no scenes");
    return c;
  }
};

struct ModelOpts {
  std::string model;
  int labels = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", model, "Model file, or cmd:<command> for an external scorer")->required();
    cmd->add_option("--labels", labels, "Label count for an external scorer");
  }

  std::unique_ptr<BaseClassifier> load() const {
    if (model.rfind("cmd:", 0) == 0) {
      if (labels < 2) throw ConfigError("--labels >= 2 is required with cmd: models");
      return as_config([&] { return load_classifier(model, labels); });
    }
    require_file(model, "--model");
    return load_classifier(model);
  }
};

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir);
}

// ---- subcommands ----------------------------------------------------------

struct GenScenes {
  std::string out;
  std::vector<std::string> classes;
  int per_class = 10;
  std::size_t points = 5000;
  std::uint64_t seed = 0;
  int width = 32;
  int height = 32;
  double focal = 32.0;
  double color_noise = 0.03;
  std::string pattern = "jittered";

  int run(std::ostream& os) const {
    CorpusParams p;
    p.pattern = as_config([&] { return parse_pattern(pattern); });
    if (!classes.empty()) {
      p.classes.clear();
      for (const auto& c : classes) p.classes.push_back(as_config([&] { return parse_shape(c); }));
    }
    p.per_class = per_class;
    p.point_count = points;
    p.seed = seed;
    p.color_noise = color_noise;
    p.camera = {focal, focal, width / 2.0, height / 2.0, width, height};
    as_config([&] {
      p.camera.validate();
      if (per_class < 1 || points < 100) throw Error(ErrorKind::InvalidArgument, "need --per-class >= 1 and --points >= 100");
      return 0;
    });
    ensure_dir(out);
    const Corpus corpus = generate_corpus(p);
    write_corpus(out, corpus);
    os << json{{"corpus", out}, {"scenes", corpus.scenes.size()}, {"classes", p.classes.size()}}.dump() << "\n";
    return 0;
  }
};

struct Train {
  std::string corpus;
  std::string out;
  double sigma = 0.5;
  int augment = 8;
  std::uint64_t seed = 0;
  int downsample = 4;
  int iterations = 400;
  double l2 = 1e-3;

  int run(std::ostream& os) const {
    require_file(corpus, "--corpus");
    if (out.empty()) throw ConfigError("--out is required");
    const Corpus c = read_corpus(corpus);
    std::vector<LabeledImage> data;
    for (const Scene& s : c.scenes) data.push_back({render(s.cloud, MotionValue::identity(Axis::Tz), c.camera), s.label});
    TrainOptions opts;
    opts.noise_sigma = sigma;
    opts.augment_count = augment;
    opts.seed = seed;
    opts.downsample = downsample;
    opts.iterations = iterations;
    opts.l2 = l2;
    const SoftmaxClassifier model = as_config([&] { return builtin_train(data, opts); });
    model.save(out);
    std::size_t correct = 0;
    for (const auto& d : data) correct += model.predict_label(d.image) == d.label ? 1 : 0;
    os << json{{"model", out},
               {"examples", data.size()},
               {"labels", model.label_count()},
               {"clean_accuracy", static_cast<double>(correct) / static_cast<double>(data.size())}}
              .dump()
       << "\n";
    return 0;
  }
};

json delta_json(const DeltaEstimate& d) {
  return {{"delta_alpha", d.delta_alpha},
          {"grid_step", d.grid_step},
          {"raw_quantile_value", d.raw_quantile_value},
          {"pixels_considered", d.pixels_considered},
          {"unconstrained", d.unconstrained},
          {"monotonicity_warnings", d.monotonicity_warnings}};
}

DeltaEstimate delta_for(const ColoredPointCloud& cloud, const CameraModel& cam, const MotionSpec& spec,
                        PartitionMethod method, const IntervalConfig& ic) {
  if (method == PartitionMethod::OneFrame) {
    return one_frame_delta(extract_one_frame(cloud, cam).points, spec, cam, ic);
  }
  return estimate_delta(method, cloud.points, spec, cam, ic);
}

void warn_monotonicity(const DeltaEstimate& d, std::ostream& err) {
  if (d.monotonicity_warnings > 0) {
    err << "warning: " << d.monotonicity_warnings
        << " governing runs are not monotone in l-inf projection distance\n";
  }
}

struct Partition {
  SceneOpts scene;
  MotionOpts motion;
  IntervalOpts intervals;

  int run(std::ostream& os, std::ostream& err) const {
    const MotionSpec spec = motion.spec();
    const IntervalConfig ic = intervals.config();
    const PartitionMethod method = intervals.parsed_method();
    const Corpus c = scene.load(false);
    const DeltaEstimate d = delta_for(c.scenes.front().cloud, c.camera, spec, method, ic);
    warn_monotonicity(d, err);
    const PartitionPlan plan = build_partition(d.delta_alpha, spec, method, ic.quantile);
    json j = plan.to_json();
    j["scene"] = c.scenes.front().name;
    j["delta"] = delta_json(d);
    os << j.dump(2) << "\n";
    return 0;
  }
};

struct Project {
  SceneOpts scene;
  MotionOpts motion;
  IntervalOpts intervals;
  std::string out;

  int run(std::ostream& os, std::ostream& err) const {
    const MotionSpec spec = motion.spec();
    const IntervalConfig ic = intervals.config();
    const PartitionMethod method = intervals.parsed_method();
    const Corpus c = scene.load(false);
    ensure_dir(out);
    const ColoredPointCloud& cloud = c.scenes.front().cloud;
    const DeltaEstimate d = delta_for(cloud, c.camera, spec, method, ic);
    warn_monotonicity(d, err);
    const PartitionPlan plan = build_partition(d.delta_alpha, spec, method, ic.quantile);
    for (std::size_t i = 0; i < plan.count(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%06zu.pwsi", i);
      write_image(fs::path(out) / name, render(cloud, {spec.axis, plan.values[i]}, c.camera));
    }
    json j = plan.to_json();
    j["scene"] = c.scenes.front().name;
    j["delta"] = delta_json(d);
    json values = json::array();
    for (double v : plan.values) values.push_back(v);
    j["values"] = values;
    write_json(fs::path(out) / "plan.json", j);
    os << json{{"frames", plan.count()}, {"out", out}}.dump() << "\n";
    return 0;
  }
};

struct SampleResult {
  json summary;
  std::optional<SampleOutcome> outcome;
  std::size_t n = 0;
};

struct Certify {
  SceneOpts scene;
  ModelOpts model;
  MotionOpts motion;
  IntervalOpts intervals;
  SmoothOpts smoothing;
  std::string out;
  std::size_t baseline = 10000;

  int run(std::ostream& os, std::ostream& err) const {
    CertifyConfig cfg;
    cfg.spec = motion.spec();
    cfg.intervals = intervals.config();
    cfg.method = intervals.parsed_method();
    cfg.smoothing = smoothing.config();
    if (baseline < 1) throw ConfigError("--baseline must be at least 1");
    const Corpus c = scene.load(true);
    const auto classifier = model.load();
    ensure_dir(out);

    std::vector<SampleResult> results(c.scenes.size());
    parallel_for(c.scenes.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
      for (std::size_t i = begin; i < end; ++i) {
        const Scene& s = c.scenes[i];
        SampleResult& r = results[i];
        r.summary = {{"name", s.name}, {"label", s.label}};
        try {
          CertifyConfig sc = cfg;
          sc.smoothing.seed = mix_seed(cfg.smoothing.seed, fnv1a64(s.name));
          const CertificationReport rep = certify(s.cloud, c.camera, *classifier, sc);
          json j = rep.to_json();
          j["scene"] = s.name;
          j["label"] = s.label;
          j["frame_ratio"] = frame_budget_comparison(rep, baseline);
          write_json(fs::path(out) / (s.name + ".json"), j);
          r.summary["verdict"] = verdict_name(rep.verdict);
          r.summary["y_A"] = rep.top_label;
          r.summary["N"] = rep.N;
          r.summary["delta_alpha"] = rep.delta.delta_alpha;
          r.summary["max_adjacent_error"] = rep.max_adjacent_error;
          r.summary["min_radius"] = rep.min_radius;
          r.summary["frame_ratio"] = frame_budget_comparison(rep, baseline);
          r.summary["monotonicity_warnings"] = rep.delta.monotonicity_warnings;
          r.outcome = SampleOutcome{rep.verdict, rep.top_label, s.label};
          r.n = rep.N;
        } catch (const Error& e) {
          r.summary["verdict"] = "Error";
          r.summary["error_kind"] = to_string(e.kind());
          r.summary["error"] = e.what();
        }
      }
    });

    json samples = json::array();
    std::vector<SampleOutcome> outcomes;
    double sum_n = 0.0;
    std::size_t reported = 0, errors = 0, warnings = 0;
    for (const auto& r : results) {
      samples.push_back(r.summary);
      if (r.outcome) {
        outcomes.push_back(*r.outcome);
        sum_n += static_cast<double>(r.n);
        ++reported;
        warnings += r.summary.value("monotonicity_warnings", std::size_t{0});
      } else {
        outcomes.push_back({Verdict::Abstain, -1, r.summary.value("label", -1)});
        ++errors;
        err << r.summary["name"].get<std::string>() << ": " << r.summary["error_kind"].get<std::string>() << ": "
            << r.summary["error"].get<std::string>() << "\n";
      }
    }
    if (warnings > 0) err << "warning: " << warnings << " governing runs are not monotone in l-inf projection distance\n";
    const double mean_n = reported > 0 ? sum_n / static_cast<double>(reported) : 0.0;
    json summary = {{"pws_report_version", kReportVersion},
                    {"kind", "certify-summary"},
                    {"config", cfg.to_json()},
                    {"radius_text", motion.radius},
                    {"classifier", classifier->describe()},
                    {"baseline_mc_samples", baseline},
                    {"samples", samples},
                    {"errors", errors},
                    {"certified_accuracy", certified_accuracy(outcomes)},
                    {"mean_N", mean_n},
                    {"mean_ratio", mean_n / static_cast<double>(baseline)}};
    write_json(fs::path(out) / "summary.json", summary);
    os << json{{"summary", (fs::path(out) / "summary.json").string()},
               {"certified_accuracy", summary["certified_accuracy"]},
               {"mean_N", mean_n},
               {"errors", errors}}
              .dump()
       << "\n";
    return 0;
  }
};

struct Attack {
  SceneOpts scene;
  ModelOpts model;
  MotionOpts motion;
  SmoothOpts smoothing;
  int poses = 100;
  std::string out;

  int run(std::ostream& os) const {
    const MotionSpec spec = motion.spec();
    const SmoothingConfig sc = smoothing.config();
    if (poses < 1) throw ConfigError("--poses must be at least 1");
    const Corpus c = scene.load(true);
    const auto classifier = model.load();
    ensure_dir(out);
    std::vector<json> rows(c.scenes.size());
    parallel_for(c.scenes.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
      for (std::size_t i = begin; i < end; ++i) {
        const Scene& s = c.scenes[i];
        SmoothingConfig local = sc;
        local.seed = mix_seed(sc.seed, fnv1a64(s.name));
        try {
          const AttackReport rep = empirical_attack(s.cloud, c.camera, *classifier, spec, local, poses);
          json j = rep.to_json();
          j["scene"] = s.name;
          j["label"] = s.label;
          j["config"] = {{"axis", axis_name(spec.axis)}, {"radius", spec.radius}, {"smoothing", local.to_json()}};
          write_json(fs::path(out) / ("attack_" + s.name + ".json"), j);
          rows[i] = {{"name", s.name}, {"label", s.label}, {"reference_label", rep.reference_label},
                     {"empirically_robust", rep.empirically_robust}};
        } catch (const Error& e) {
          rows[i] = {{"name", s.name}, {"error_kind", to_string(e.kind())}, {"error", e.what()}};
        }
      }
    });
    std::size_t robust = 0;
    for (const auto& r : rows) robust += r.value("empirically_robust", false) ? 1 : 0;
    json summary = {{"pws_report_version", kReportVersion},
                    {"kind", "attack-summary"},
                    {"poses", poses},
                    {"samples", rows},
                    {"empirically_robust", robust}};
    write_json(fs::path(out) / "attack_summary.json", summary);
    os << json{{"robust", robust}, {"samples", rows.size()}}.dump() << "\n";
    return 0;
  }
};

struct Report {
  std::vector<std::string> inputs;
  std::string out;

  int run(std::ostream& os) const {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
      if (!fs::exists(in)) throw ConfigError("report input not found: " + in);
      if (fs::is_regular_file(in)) {
        files.emplace_back(in);
        continue;
      }
      for (const auto& entry : fs::recursive_directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().filename() == "summary.json") files.push_back(entry.path());
      }
    }
    struct Row {
      std::string method;
      double sigma, radius;
      std::string line;
    };
    std::vector<Row> rows;
    for (const auto& f : files) {
      json j;
      try {
        j = json::parse(read_file(f));
      } catch (const json::exception&) {
        continue;
      }
      if (j.value("kind", "") != "certify-summary") continue;
      const auto& cfg = j.at("config");
      Row r{cfg.at("method").get<std::string>(), cfg.at("smoothing").at("sigma").get<double>(),
            cfg.at("radius").get<double>(), {}};
      r.line = format_double(r.radius) + "," + r.method + "," + format_double(r.sigma) + "," +
               format_double(j.at("certified_accuracy").get<double>()) + "," +
               format_double(j.at("mean_N").get<double>()) + "," + format_double(j.at("mean_ratio").get<double>());
      rows.push_back(std::move(r));
    }
    if (rows.empty()) throw ConfigError("no certify summaries found");
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.method, a.sigma, a.radius, a.line) < std::tie(b.method, b.sigma, b.radius, b.line);
    });
    std::string csv = "radius,method,sigma,certified_accuracy,mean_N,mean_ratio\n";
    for (const auto& r : rows) csv += r.line + "\n";
    if (out.empty()) {
      os << csv;
    } else {
      write_file_atomic(out, csv);
    }
    return 0;
  }
};

}  // namespace

double parse_radius(std::string_view text, Axis axis) {
  std::size_t split = text.size();
  while (split > 0 && std::isalpha(static_cast<unsigned char>(text[split - 1]))) --split;
  const std::string_view number = text.substr(0, split);
  const std::string_view unit = text.substr(split);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
  if (number.empty() || ec != std::errc() || ptr != number.data() + number.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidArgument, "malformed radius '" + std::string(text) + "'");
  }
  const bool rotation = is_rotation(axis);
  if (unit.empty()) return value;
  if (!rotation && unit == "mm") return value / 1000.0;
  if (!rotation && unit == "m") return value;
  if (rotation && unit == "deg") return value * std::numbers::pi / 180.0;
  if (rotation && unit == "rad") return value;
  throw Error(ErrorKind::InvalidArgument, "unit '" + std::string(unit) + "' does not fit axis " +
                                              std::string(axis_name(axis)));
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certify image classifiers against one-axis camera motion by pixel-wise smoothing"};
  app.name("pws");
  app.require_subcommand(1);

  GenScenes gen;
  auto* c_gen = app.add_subcommand("gen-scenes", "Write a synthetic labeled corpus");
  c_gen->add_option("--out", gen.out, "Output corpus directory")->required();
  c_gen->add_option("--classes", gen.classes, "Shape classes (plane_billboard, sphere_cap, box_face, striped_wall)")
      ->delimiter(',');
  c_gen->add_option("--per-class", gen.per_class, "Scenes per class")->capture_default_str();
  c_gen->add_option("--points", gen.points, "Points per scene")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Generation seed")->capture_default_str();
  c_gen->add_option("--width", gen.width, "Image width")->capture_default_str();
  c_gen->add_option("--height", gen.height, "Image height")->capture_default_str();
  c_gen->add_option("--focal", gen.focal, "Focal length in pixels (fx = fy)")->capture_default_str();
  c_gen->add_option("--color-noise", gen.color_noise, "Per-point color jitter")->capture_default_str();
  c_gen->add_option("--pattern", gen.pattern, "Surface sampling: jittered (uses --points) or rays")
      ->capture_default_str();

  Train train;
  auto* c_train = app.add_subcommand("train", "Train the built-in classifier on a corpus");
  c_train->add_option("--corpus", train.corpus, "Corpus directory")->required();
  c_train->add_option("--out", train.out, "Model file to write")->required();
  c_train->add_option("--sigma", train.sigma, "Augmentation noise")->capture_default_str();
  c_train->add_option("--augment", train.augment, "Noisy copies per image")->capture_default_str();
  c_train->add_option("--seed", train.seed, "Training seed")->capture_default_str();
  c_train->add_option("--downsample", train.downsample, "Pooling factor")->capture_default_str();
  c_train->add_option("--iterations", train.iterations, "Gradient steps")->capture_default_str();
  c_train->add_option("--l2", train.l2, "Weight decay")->capture_default_str();

  Partition part;
  auto* c_part = app.add_subcommand("partition", "Print the partition spacing and frame count for a scene");
  part.scene.add(c_part, false);
  part.motion.add(c_part);
  part.intervals.add(c_part);

  Project proj;
  auto* c_proj = app.add_subcommand("project", "Render the partition frames of a scene as PWSI1 files");
  proj.scene.add(c_proj, false);
  proj.motion.add(c_proj);
  proj.intervals.add(c_proj);
  c_proj->add_option("--out", proj.out, "Output directory")->required();

  Certify cert;
  auto* c_cert = app.add_subcommand("certify", "Certify scenes and write per-sample reports plus a summary");
  cert.scene.add(c_cert, true);
  cert.model.add(c_cert);
  cert.motion.add(c_cert);
  cert.intervals.add(c_cert);
  cert.smoothing.add(c_cert);
  c_cert->add_option("--baseline", cert.baseline, "Motion-space smoothing frame budget to compare against")
      ->capture_default_str();
  c_cert->add_option("--out", cert.out, "Output directory")->required();

  Attack atk;
  auto* c_atk = app.add_subcommand("attack", "Search evenly spaced poses for a smoothed label change");
  atk.scene.add(c_atk, true);
  atk.model.add(c_atk);
  atk.motion.add(c_atk);
  atk.smoothing.add(c_atk);
  c_atk->add_option("--poses", atk.poses, "Poses across S")->capture_default_str();
  c_atk->add_option("--out", atk.out, "Output directory")->required();

  Report rep;
  auto* c_rep = app.add_subcommand("report", "Aggregate certify summaries into CSV");
  c_rep->add_option("inputs", rep.inputs, "Summary files or directories searched recursively")->required();
  c_rep->add_option("--out", rep.out, "CSV file (default stdout)");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("pws");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (c_gen->parsed()) return gen.run(out);
    if (c_train->parsed()) return train.run(out);
    if (c_part->parsed()) return part.run(out, err);
    if (c_proj->parsed()) return proj.run(out, err);
    if (c_cert->parsed()) return cert.run(out, err);
    if (c_atk->parsed()) return atk.run(out);
    if (c_rep->parsed()) return rep.run(out);
  } catch (const ConfigError& e) {
    err << "ConfigError: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "FormatError: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "InternalError: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace pws
