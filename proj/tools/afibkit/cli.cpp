#include "afibkit/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "afibkit/containers.hpp"
#include "afibkit/digest.hpp"
#include "afibkit/error.hpp"
#include "afibkit/eval.hpp"
#include "afibkit/models.hpp"
#include "afibkit/nn/serialize.hpp"
#include "afibkit/parallel.hpp"
#include "afibkit/rr_stats.hpp"
#include "afibkit/signal_prep.hpp"
#include "afibkit/spectro.hpp"
#include "afibkit/wfdb.hpp"

namespace afibkit::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

// --config: a JSON object whose top-level keys are global flags and whose
// nested objects, keyed by subcommand, hold that subcommand's flags.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("--config", e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("--config", "top level must be an object");
    std::vector<CLI::ConfigItem> items;
    walk(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const nlohmann::json& j, const std::vector<std::string>& parents,
                   std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        walk(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  unsigned threads = 0;
};

struct PrepOptions {
  std::vector<std::string> records;
  std::string annotator = "atr";
  double window_s = 10.0;
  double label_threshold = 0.5;
  int downsample = 2;
  double snr_db = 10.0;
  bool no_noise = false;
  double wander = 0.1;
  int channel = 0;
  bool ignore_checksum = false;
};

struct SegmentOptions {
  bool no_balance = false;
  std::size_t per_class_limit = 0;  // 0 = no cap
  double train_fraction = 0.9;
};

struct DetectOptions {
  std::string record;
  double start_s = 0.0;
  double dur_s = 30.0;
  int channel = 0;
  std::string rule = "default";
  bool ignore_checksum = false;
};

struct SpectrogramOptions {
  std::string input;
  std::optional<double> hz;
  std::size_t window = 128;
  std::size_t hop = 64;
  std::size_t pgm_count = 0;
};

struct TrainOptions {
  std::string model;
  std::string train;
  std::string val;
  std::optional<double> hz;
  std::size_t epochs = 0;  // 0 = model default
  std::size_t batch_size = 0;
  double lr = 1e-3;
};

struct EvalOptions {
  std::string model;
  std::string weights;
  std::string data;
  std::optional<double> hz;
  double threshold = 0.5;
};

struct CompareOptions {
  std::string cnn1d;
  std::string cnn2d;
};

// Run record written as manifest.json in the output directory.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args, const Globals& g) {
    j_["tool"] = "afibkit";
    j_["version"] = kVersion;
    j_["command"] = std::move(command);
    j_["argv"] = args;
    j_["seed"] = g.seed;
    j_["config"] = Json::object();
    j_["inputs"] = Json::array();
    j_["outputs"] = Json::array();
  }
  Json& config() { return j_["config"]; }
  void input(const fs::path& p) { j_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }
  void output(const fs::path& p) { j_["outputs"].push_back(p.filename().string()); }
  void set(const std::string& key, Json value) { j_[key] = std::move(value); }
  void write(const fs::path& dir) const {
    std::ofstream out(dir / "manifest.json");
    out << j_.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / "manifest.json").string());
  }

 private:
  Json j_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

fs::path sidecar(const fs::path& container) { return fs::path(container.string() + ".json"); }

// Effective sampling rate of a segment container, from --hz or its sidecar.
double container_hz(const fs::path& container, std::optional<double> hz) {
  if (hz) {
    if (!(*hz > 0.0)) throw Error(ErrorCode::kInvalidConfig, "--hz must be positive");
    return *hz;
  }
  std::ifstream in(sidecar(container));
  if (!in) {
    throw Error(ErrorCode::kInvalidConfig, "no sidecar for " + container.string() + "; pass --hz");
  }
  try {
    const auto j = nlohmann::json::parse(in);
    return j.at("effective_hz").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedContainer, sidecar(container).string() + ": " + e.what());
  }
}

void write_segments(const fs::path& path, const std::vector<prep::Segment>& segments, double hz,
                    std::size_t window) {
  io::write_container(path, io::to_container(segments));
  Json meta;
  meta["rank"] = 1;
  meta["count"] = segments.size();
  meta["effective_hz"] = hz;
  meta["window_samples"] = window;
  std::size_t positives = 0;
  Json sources = Json::array();
  for (const auto& s : segments) {
    positives += s.label == 1;
    sources.push_back({{"record", s.source.record_name}, {"start_sample", s.source.start_sample}, {"label", s.label}});
  }
  meta["afib_count"] = positives;
  meta["sources"] = std::move(sources);
  write_text(sidecar(path), meta.dump(2) + "\n");
}

Json prep_json(const prep::PrepConfig& cfg) {
  Json j;
  j["window_seconds"] = cfg.window_seconds;
  j["label_threshold"] = cfg.label_threshold;
  j["downsample_factor"] = cfg.downsample_factor;
  j["noise_snr_db"] = cfg.noise_snr_db ? Json(*cfg.noise_snr_db) : Json(nullptr);
  j["wander_amplitude"] = cfg.wander_amplitude;
  j["seed"] = cfg.seed;
  j["channel"] = cfg.channel;
  return j;
}

// Loads each record with its rhythm annotations and windows it.
std::vector<prep::Segment> collect_segments(const PrepOptions& o, const prep::PrepConfig& cfg, Manifest& m,
                                            std::ostream& err, double& effective_hz) {
  std::vector<prep::Segment> all;
  std::set<std::string> seen_dat;
  effective_hz = 0.0;
  for (const auto& rec : o.records) {
    const fs::path base(rec);
    const auto policy = o.ignore_checksum ? wfdb::ChecksumPolicy::kWarn : wfdb::ChecksumPolicy::kError;
    const auto record = wfdb::load_record(base, policy);
    for (const auto& w : record.warnings) err << "warning: " << rec << ": " << w << '\n';
    const auto ann = wfdb::load_annotations(base, record.header.sampling_hz, o.annotator);
    m.input(fs::path(rec + ".hea"));
    for (const auto& s : record.header.signals) {
      const fs::path dat = base.parent_path() / s.file_name;
      if (seen_dat.insert(dat.string()).second) m.input(dat);
    }
    m.input(fs::path(rec + "." + o.annotator));

    const auto intervals = wfdb::rhythm_intervals(ann, record.channels.empty() ? 0 : record.channels[0].size());
    auto segs = prep::segments_from_record(record, intervals, cfg);
    const double hz = record.header.sampling_hz / cfg.downsample_factor;
    if (effective_hz != 0.0 && hz != effective_hz) {
      throw Error(ErrorCode::kInvalidConfig, rec + " has a different sampling rate from earlier records");
    }
    effective_hz = hz;
    std::move(segs.begin(), segs.end(), std::back_inserter(all));
  }
  return all;
}

prep::PrepConfig make_prep(const PrepOptions& o, const Globals& g) {
  prep::PrepConfig cfg;
  cfg.window_seconds = o.window_s;
  cfg.label_threshold = o.label_threshold;
  cfg.downsample_factor = o.downsample;
  cfg.noise_snr_db = o.no_noise ? std::nullopt : std::optional<double>(o.snr_db);
  cfg.wander_amplitude = o.wander;
  cfg.seed = g.seed;
  cfg.channel = o.channel;
  cfg.validate();
  return cfg;
}

void add_record_options(CLI::App* sub, PrepOptions& o) {
  sub->add_option("--record", o.records, "Record path without extension (repeatable)")->required();
  sub->add_option("--annotator", o.annotator, "Annotation file extension")->capture_default_str();
  sub->add_option("--window-s", o.window_s, "Window length in seconds")->capture_default_str();
  sub->add_option("--label-threshold", o.label_threshold, "AFIB fraction for a positive label")
      ->capture_default_str();
  sub->add_option("--channel", o.channel, "Signal index to use")->capture_default_str();
  sub->add_flag("--ignore-checksum", o.ignore_checksum, "Warn instead of failing on checksum mismatch");
}

int run_convert(const PrepOptions& o, const Globals& g, const std::vector<std::string>& args,
                std::ostream& out, std::ostream& err) {
  prep::PrepConfig cfg = make_prep(o, g);
  cfg.downsample_factor = 1;
  cfg.noise_snr_db.reset();
  cfg.wander_amplitude = 0.0;
  Manifest m("convert", args, g);
  m.config() = prep_json(cfg);
  double hz = 0.0;
  const auto segs = collect_segments(o, cfg, m, err, hz);
  const fs::path dir(g.out_dir);
  const fs::path path = dir / "segments.bin";
  write_segments(path, segs, hz, prep::window_length(cfg, hz));
  m.output(path);
  m.output(sidecar(path));
  m.write(dir);
  out << segs.size() << " segments -> " << path.string() << '\n';
  return 0;
}

int run_segment(const PrepOptions& o, const SegmentOptions& so, const Globals& g,
                const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const prep::PrepConfig cfg = make_prep(o, g);
  Manifest m("segment", args, g);
  m.config() = prep_json(cfg);
  m.config()["balance"] = !so.no_balance;
  m.config()["per_class_limit"] = so.per_class_limit;
  m.config()["train_fraction"] = so.train_fraction;

  double hz = 0.0;
  auto segs = collect_segments(o, cfg, m, err, hz);
  const std::size_t raw = segs.size();
  if (!so.no_balance) {
    std::optional<std::size_t> cap;
    if (so.per_class_limit > 0) cap = so.per_class_limit;
    segs = prep::balance_classes(std::move(segs), prep::derive_seed(g.seed, "balance"), cap);
  }
  auto split = prep::split_dataset(std::move(segs), so.train_fraction, prep::derive_seed(g.seed, "split"));
  if (split.warning) err << "warning: " << *split.warning << '\n';

  const fs::path dir(g.out_dir);
  const std::size_t window = prep::window_length(cfg, hz);
  write_segments(dir / "train.bin", split.train, hz, window);
  write_segments(dir / "test.bin", split.test, hz, window);
  for (const char* f : {"train.bin", "train.bin.json", "test.bin", "test.bin.json"}) m.output(dir / f);
  m.set("counts", {{"windows", raw}, {"train", split.train.size()}, {"test", split.test.size()}});
  m.write(dir);
  out << raw << " windows, " << split.train.size() << " train / " << split.test.size() << " test\n";
  return 0;
}

int run_detect(const DetectOptions& o, const Globals& g, const std::vector<std::string>& args,
               std::ostream& out, std::ostream& err) {
  if (o.rule != "default" && o.rule != "range-only") {
    throw Error(ErrorCode::kInvalidConfig, "--rule must be default or range-only");
  }
  if (o.start_s < 0.0 || !(o.dur_s > 0.0)) throw Error(ErrorCode::kInvalidConfig, "bad time range");
  const fs::path base(o.record);
  const auto record =
      wfdb::load_record(base, o.ignore_checksum ? wfdb::ChecksumPolicy::kWarn : wfdb::ChecksumPolicy::kError);
  for (const auto& w : record.warnings) err << "warning: " << o.record << ": " << w << '\n';
  const auto mv = prep::select_channel(record, static_cast<std::size_t>(o.channel));
  const double hz = record.header.sampling_hz;
  const auto first = std::min(mv.size(), static_cast<std::size_t>(std::llround(o.start_s * hz)));
  const auto last = std::min(mv.size(), first + static_cast<std::size_t>(std::llround(o.dur_s * hz)));
  const std::span<const double> slice(mv.data() + first, last - first);

  const auto peaks = rr::detect_r_peaks(slice, hz);
  const auto rr_s = rr::rr_from_peaks(peaks, hz);
  const auto rule = o.rule == "default" ? rr::RrRule::kDefault : rr::RrRule::kRangeOnly;
  const auto v = rr::classify_rr(rr_s, {}, rule);

  Json j;
  j["record"] = o.record;
  j["channel"] = o.channel;
  j["start_s"] = o.start_s;
  j["dur_s"] = static_cast<double>(last - first) / hz;
  j["sampling_hz"] = hz;
  j["rule"] = o.rule;
  Json pk = Json::array();
  for (auto p : peaks.indices) pk.push_back(p + first);
  j["peak_count"] = peaks.indices.size();
  j["peaks"] = std::move(pk);
  j["rr_intervals"] = v.rr_intervals;
  j["rr_diffs"] = v.rr_diffs;
  j["min_rr"] = v.min_rr;
  j["max_rr"] = v.max_rr;
  j["mean_rr"] = v.mean_rr;
  j["cov"] = v.cov;
  j["rmssd"] = v.rmssd;
  j["classification"] = std::string(rr::to_string(v.classification));
  const std::string text = j.dump(2) + "\n";

  const fs::path dir(g.out_dir);
  write_text(dir / "rr_verdict.json", text);
  Manifest m("detect-rr", args, g);
  m.config() = {{"record", o.record}, {"start_s", o.start_s}, {"dur_s", o.dur_s},
                {"channel", o.channel}, {"rule", o.rule}};
  m.input(fs::path(o.record + ".hea"));
  m.input(base.parent_path() / record.header.signals.at(0).file_name);
  m.output(dir / "rr_verdict.json");
  m.write(dir);
  out << text;
  return 0;
}

int run_spectrogram(const SpectrogramOptions& o, const Globals& g, const std::vector<std::string>& args,
                    std::ostream& out) {
  const fs::path input(o.input);
  const double hz = container_hz(input, o.hz);
  const auto segs = io::read_container(input);
  const spectro::StftConfig cfg{o.window, o.hop};
  const auto imgs = io::to_spectrogram_container(segs, hz, cfg);

  const fs::path dir(g.out_dir);
  const fs::path path = dir / "spectrograms.bin";
  io::write_container(path, imgs);
  Manifest m("spectrogram", args, g);
  m.config() = {{"input", o.input}, {"sampling_hz", hz}, {"window", o.window}, {"hop", o.hop},
                {"pgm_count", o.pgm_count}};
  m.input(input);
  m.output(path);

  Json meta;
  meta["rank"] = 2;
  meta["count"] = imgs.items.size();
  meta["effective_hz"] = hz;
  meta["window"] = o.window;
  meta["hop"] = o.hop;
  if (!imgs.items.empty()) {
    meta["freq_bins"] = imgs.items[0].rows;
    meta["time_frames"] = imgs.items[0].cols;
    meta["bin_hz"] = hz / static_cast<double>(o.window);
  }
  write_text(sidecar(path), meta.dump(2) + "\n");
  m.output(sidecar(path));

  for (std::size_t i = 0; i < std::min(o.pgm_count, imgs.items.size()); ++i) {
    const auto& item = imgs.items[i];
    spectro::Spectrogram s{item.rows, item.cols, item.values, hz / static_cast<double>(o.window),
                           static_cast<double>(o.hop) / hz};
    char name[64];
    std::snprintf(name, sizeof name, "spectrogram_%04zu_label%d.pgm", i, item.label);
    std::ofstream pgm(dir / name, std::ios::binary);
    spectro::write_pgm(pgm, s);
    if (!pgm) throw Error(ErrorCode::kIoError, "cannot write " + (dir / name).string());
    m.output(dir / name);
  }
  m.write(dir);
  out << imgs.items.size() << " spectrograms -> " << path.string() << '\n';
  return 0;
}

models::ModelKind parse_model(const std::string& s) {
  return s == "1d" ? models::ModelKind::kCnn1d : models::ModelKind::kCnn2d;
}

// Reads a container and shapes it for the model; a 2D model accepts raw
// segments and converts them to spectrograms first.
models::Dataset load_dataset(const fs::path& path, models::ModelKind kind, std::optional<double> hz) {
  auto c = io::read_container(path);
  if (kind == models::ModelKind::kCnn1d && c.rank != 1) {
    throw Error(ErrorCode::kShapeMismatch, path.string() + " holds spectrograms; the 1d model needs segments");
  }
  if (kind == models::ModelKind::kCnn2d && c.rank == 1) {
    c = io::to_spectrogram_container(c, container_hz(path, hz));
  }
  return models::dataset_from_container(c);
}

models::ModelSpec spec_for(models::ModelKind kind, const models::Dataset& d) {
  if (kind == models::ModelKind::kCnn1d) return models::build_cnn1d(d.sample_shape.at(1));
  return models::build_cnn2d(d.sample_shape.at(1), d.sample_shape.at(2));
}

int run_train(const TrainOptions& o, const Globals& g, const std::vector<std::string>& args,
              std::ostream& out) {
  const auto kind = parse_model(o.model);
  const auto train_set = load_dataset(o.train, kind, o.hz);
  const auto val_set = load_dataset(o.val, kind, o.hz);
  const auto spec = spec_for(kind, train_set);

  models::TrainConfig cfg = models::default_train_config(kind);
  if (o.epochs > 0) cfg.epochs = o.epochs;
  if (o.batch_size > 0) cfg.batch_size = o.batch_size;
  cfg.lr = o.lr;
  cfg.seed = g.seed;
  cfg.validate();

  const fs::path dir(g.out_dir);
  const std::string stem = std::string(models::to_string(kind));
  const fs::path curves_path = dir / (stem + "_curves.csv");
  std::ofstream curves(curves_path, std::ios::binary);
  if (!curves) throw Error(ErrorCode::kIoError, "cannot write " + curves_path.string());
  models::write_curves_header(curves);
  cfg.on_epoch = [&](const models::EpochRow& row) {
    models::write_curve_row(curves, row);
    curves.flush();
    out << stem << " epoch " << row.epoch << "/" << cfg.epochs << " train_loss " << row.train_loss
        << " val_acc " << row.val_acc << '\n';
  };

  auto net = models::instantiate(spec, g.seed);
  models::train(net, train_set, val_set, cfg);
  curves.close();

  const fs::path weights = dir / (stem + "_weights.bin");
  nn::save_weights(net, weights);
  const auto metrics = models::evaluate(net, val_set);
  const fs::path metrics_path = dir / (stem + "_metrics.json");
  write_text(metrics_path, eval::to_json(metrics) + "\n");

  Manifest m("train", args, g);
  m.config() = {{"model", stem}, {"epochs", cfg.epochs}, {"batch_size", cfg.batch_size}, {"lr", cfg.lr},
                {"train", o.train}, {"val", o.val}, {"parameters", net.parameter_count()}};
  m.set("architecture", spec.manifest());
  m.input(o.train);
  m.input(o.val);
  for (const auto& p : {curves_path, weights, metrics_path}) m.output(p);
  m.write(dir);
  out << stem << " accuracy " << metrics.accuracy << '\n';
  return 0;
}

int run_eval(const EvalOptions& o, const Globals& g, const std::vector<std::string>& args, std::ostream& out) {
  const auto kind = parse_model(o.model);
  const auto data = load_dataset(o.data, kind, o.hz);
  auto net = models::instantiate(spec_for(kind, data), g.seed);
  nn::load_weights(net, fs::path(o.weights));
  const auto metrics = models::evaluate(net, data, o.threshold);
  const std::string text = eval::to_json(metrics) + "\n";

  const fs::path dir(g.out_dir);
  const std::string stem = std::string(models::to_string(kind));
  write_text(dir / (stem + "_eval.json"), text);
  Manifest m("eval", args, g);
  m.config() = {{"model", stem}, {"weights", o.weights}, {"data", o.data}, {"threshold", o.threshold}};
  m.input(o.weights);
  m.input(o.data);
  m.output(dir / (stem + "_eval.json"));
  m.write(dir);
  out << text;
  return 0;
}

eval::Metrics read_metrics(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return eval::metrics_from_json(ss.str());
}

int run_compare(const CompareOptions& o, const Globals& g, const std::vector<std::string>& args,
                std::ostream& out) {
  const auto report = eval::compare_report(read_metrics(o.cnn1d), read_metrics(o.cnn2d));
  const fs::path dir(g.out_dir);
  write_text(dir / "compare.json", report.json + "\n");
  write_text(dir / "compare.txt", report.table);
  Manifest m("compare", args, g);
  m.config() = {{"cnn1d", o.cnn1d}, {"cnn2d", o.cnn2d}};
  m.input(o.cnn1d);
  m.input(o.cnn2d);
  m.output(dir / "compare.json");
  m.output(dir / "compare.txt");
  m.write(dir);
  out << report.table;
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Atrial fibrillation toolkit: WFDB parsing, RR statistics, 1D/2D CNN training", "afibkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file of flag values (flags given on the command line win)");

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and manifest.json")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();

  PrepOptions conv_o;
  auto* convert = app.add_subcommand("convert", "WFDB records -> clean segment container (no degradation)");
  add_record_options(convert, conv_o);

  PrepOptions seg_o;
  SegmentOptions seg_s;
  auto* segment = app.add_subcommand("segment", "WFDB records -> degraded, balanced train/test containers");
  add_record_options(segment, seg_o);
  segment->add_option("--downsample", seg_o.downsample, "Decimation factor")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  segment->add_option("--snr-db", seg_o.snr_db, "Additive Gaussian noise SNR")->capture_default_str();
  segment->add_flag("--no-noise", seg_o.no_noise, "Skip Gaussian noise");
  segment->add_option("--wander", seg_o.wander, "Baseline wander amplitude, fraction of RMS")
      ->capture_default_str();
  segment->add_flag("--no-balance", seg_s.no_balance, "Keep the natural class ratio");
  segment->add_option("--per-class-limit", seg_s.per_class_limit, "Cap per class after balancing (0 = none)")
      ->capture_default_str();
  segment->add_option("--train-fraction", seg_s.train_fraction, "Share of segments in the train split")
      ->capture_default_str();

  DetectOptions det_o;
  auto* detect = app.add_subcommand("detect-rr", "R peaks and RR-statistics verdict as JSON");
  detect->add_option("--record", det_o.record, "Record path without extension")->required();
  detect->add_option("--start-s", det_o.start_s, "Start time in seconds")->capture_default_str();
  detect->add_option("--dur-s", det_o.dur_s, "Duration in seconds")->capture_default_str();
  detect->add_option("--channel", det_o.channel, "Signal index")->capture_default_str();
  detect->add_option("--rule", det_o.rule, "default | range-only")
      ->capture_default_str()
      ->check(CLI::IsMember({"default", "range-only"}));
  detect->add_flag("--ignore-checksum", det_o.ignore_checksum, "Warn instead of failing on checksum mismatch");

  SpectrogramOptions spec_o;
  auto* spectrogram = app.add_subcommand("spectrogram", "Segment container -> spectrogram container / PGM");
  spectrogram->add_option("--input", spec_o.input, "Segment container")->required();
  spectrogram->add_option("--hz", spec_o.hz, "Sampling rate (default: from the sidecar)");
  spectrogram->add_option("--window", spec_o.window, "STFT window")->capture_default_str();
  spectrogram->add_option("--hop", spec_o.hop, "STFT hop")->capture_default_str()->check(CLI::PositiveNumber);
  spectrogram->add_option("--pgm-count", spec_o.pgm_count, "Write the first N images as PGM")
      ->capture_default_str();

  TrainOptions train_o;
  auto* train = app.add_subcommand("train", "Train the 1D or 2D network");
  train->add_option("--model", train_o.model, "1d | 2d")->required()->check(CLI::IsMember({"1d", "2d"}));
  train->add_option("--train", train_o.train, "Training container")->required();
  train->add_option("--val", train_o.val, "Validation container")->required();
  train->add_option("--hz", train_o.hz, "Segment sampling rate for 2d on raw segments");
  train->add_option("--epochs", train_o.epochs, "Epochs (default 100 for 1d, 50 for 2d)")
      ->check(CLI::PositiveNumber);
  train->add_option("--batch-size", train_o.batch_size, "Batch size (default 128 for 1d, 50 for 2d)")
      ->check(CLI::PositiveNumber);
  train->add_option("--lr", train_o.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);

  EvalOptions eval_o;
  auto* evaluate = app.add_subcommand("eval", "Metrics of saved weights on a container");
  evaluate->add_option("--model", eval_o.model, "1d | 2d")->required()->check(CLI::IsMember({"1d", "2d"}));
  evaluate->add_option("--weights", eval_o.weights, "Weights file")->required();
  evaluate->add_option("--data", eval_o.data, "Container to score")->required();
  evaluate->add_option("--hz", eval_o.hz, "Segment sampling rate for 2d on raw segments");
  evaluate->add_option("--threshold", eval_o.threshold, "Decision threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  CompareOptions cmp_o;
  auto* compare = app.add_subcommand("compare", "Side-by-side 1D vs 2D metrics report");
  compare->add_option("--cnn1d", cmp_o.cnn1d, "1D metrics JSON")->required();
  compare->add_option("--cnn2d", cmp_o.cnn2d, "2D metrics JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    set_num_threads(g.threads);
    fs::create_directories(g.out_dir);
    if (*convert) return run_convert(conv_o, g, args, out, err);
    if (*segment) return run_segment(seg_o, seg_s, g, args, out, err);
    if (*detect) return run_detect(det_o, g, args, out, err);
    if (*spectrogram) return run_spectrogram(spec_o, g, args, out);
    if (*train) return run_train(train_o, g, args, out);
    if (*evaluate) return run_eval(eval_o, g, args, out);
    if (*compare) return run_compare(cmp_o, g, args, out);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "IoError: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace afibkit::cli
