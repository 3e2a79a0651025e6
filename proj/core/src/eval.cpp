#include "afibkit/eval.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "afibkit/error.hpp"

namespace afibkit::eval {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json metrics_object(const Metrics& m) {
  nlohmann::ordered_json j;
  j["tp"] = m.tp;
  j["tn"] = m.tn;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["accuracy"] = m.accuracy;
  j["sensitivity"] = m.sensitivity;
  j["specificity"] = m.specificity;
  j["precision"] = m.precision;
  j["f1"] = m.f1;
  return j;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

Metrics from_counts(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  Metrics m{tp, tn, fp, fn};
  m.accuracy = ratio(tp + tn, m.total());
  m.sensitivity = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  m.precision = ratio(tp, tp + fp);
  // 2PR / (P + R) reduces to 2TP / (2TP + FP + FN).
  m.f1 = ratio(2 * tp, 2 * tp + fp + fn);
  return m;
}

Metrics confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(labels.size()) + " labels vs " +
                                                std::to_string(predictions.size()) + " predictions");
  }
  if (labels.empty()) throw Error(ErrorCode::kEmptyInput, "no labels");
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if ((y != 0 && y != 1) || (p != 0 && p != 1)) {
      throw Error(ErrorCode::kInvalidConfig, "label values must be 0 or 1 (index " + std::to_string(i) + ")");
    }
    if (y == 1) {
      (p == 1 ? tp : fn)++;
    } else {
      (p == 1 ? fp : tn)++;
    }
  }
  return from_counts(tp, tn, fp, fn);
}

std::string to_json(const Metrics& m, int indent) { return metrics_object(m).dump(indent); }

Metrics metrics_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    return from_counts(j.at("tp").get<std::size_t>(), j.at("tn").get<std::size_t>(),
                       j.at("fp").get<std::size_t>(), j.at("fn").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedContainer, std::string("metrics JSON: ") + e.what());
  }
}

Comparison compare_report(const Metrics& m1d, const Metrics& m2d) {
  Comparison c{m1d, m2d, m1d.accuracy >= m2d.accuracy, {}, {}};

  nlohmann::ordered_json j;
  j["cnn1d"] = metrics_object(m1d);
  j["cnn2d"] = metrics_object(m2d);
  j["cnn1d_accuracy_at_least_cnn2d"] = c.cnn1d_at_least_cnn2d;
  c.json = j.dump(2);

  std::ostringstream t;
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %10s %10s\n", "metric", "cnn1d", "cnn2d");
  t << line;
  auto row = [&](const char* name, const std::string& a, const std::string& b) {
    std::snprintf(line, sizeof line, "%-12s %10s %10s\n", name, a.c_str(), b.c_str());
    t << line;
  };
  row("accuracy", fixed(m1d.accuracy), fixed(m2d.accuracy));
  row("sensitivity", fixed(m1d.sensitivity), fixed(m2d.sensitivity));
  row("specificity", fixed(m1d.specificity), fixed(m2d.specificity));
  row("precision", fixed(m1d.precision), fixed(m2d.precision));
  row("f1", fixed(m1d.f1), fixed(m2d.f1));
  row("tp", std::to_string(m1d.tp), std::to_string(m2d.tp));
  row("tn", std::to_string(m1d.tn), std::to_string(m2d.tn));
  row("fp", std::to_string(m1d.fp), std::to_string(m2d.fp));
  row("fn", std::to_string(m1d.fn), std::to_string(m2d.fn));
  t << "cnn1d accuracy >= cnn2d accuracy: " << (c.cnn1d_at_least_cnn2d ? "yes" : "no") << '\n';
  c.table = t.str();
  return c;
}

}  // namespace afibkit::eval
