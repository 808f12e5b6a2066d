#include "cqadet/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "cqadet/errors.hpp"

namespace cqadet {

namespace {

// One pass computing the clipped cost and, optionally, the gradient.
double evaluate(const Theta& theta, const TrainingSet& data, Theta* grad) {
  if (data.empty()) throw EmptyTrainingSet();
  double j = 0.0;
  Theta g{0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    const double y = data.label(i);
    const double z = theta[0] * x[0] + theta[1] * x[1] + theta[2] * x[2] + theta[3] * x[3];
    const double h = sigmoid(z);
    const double hc = std::min(std::max(h, kCostClip), 1.0 - kCostClip);
    // Labels are exactly 0 or 1, so only one of the two log terms survives.
    j -= y != 0.0 ? std::log(hc) : std::log(1.0 - hc);
    if (grad) {
      const double r = h - y;
      for (int k = 0; k < 4; ++k) g[k] += r * x[k];
    }
  }
  const double m = static_cast<double>(data.size());
  if (grad) {
    for (int k = 0; k < 4; ++k) (*grad)[k] = g[k] / m;
  }
  return j / m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const char* key) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw DataError(std::string("bad number for ") + key);
  return v;
}

std::uint64_t parse_count(const std::string& s, const char* key) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw DataError(std::string("bad count for ") + key);
  return std::stoull(s);
}

}  // namespace

void validate(const Model& m) {
  for (double t : m.theta) {
    if (!std::isfinite(t)) throw InvariantViolation("model theta is not finite");
  }
  if (!(m.threshold > 0.0 && m.threshold < 1.0))
    throw InvariantViolation("model threshold must lie in (0, 1)");
}

TrainingSet::TrainingSet(std::span<const FeatureVector> features, std::span<const Label> labels) {
  if (features.size() != labels.size())
    throw LengthMismatch("feature and label counts differ");
  rows_.reserve(4 * features.size());
  labels_.reserve(labels.size());
  for (std::size_t i = 0; i < features.size(); ++i) add(features[i], labels[i]);
}

void TrainingSet::add(const FeatureVector& fv, Label label) {
  rows_.insert(rows_.end(), {1.0, fv.sgqid, fv.sgaid, fv.sgtext});
  labels_.push_back(label == Label::Campaign ? 1.0 : 0.0);
  if (label == Label::Campaign) ++positives_;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double linear_term(const Theta& theta, const FeatureVector& fv) {
  return theta[0] + theta[1] * fv.sgqid + theta[2] * fv.sgaid + theta[3] * fv.sgtext;
}

double campaign_score(const Model& model, const FeatureVector& fv) {
  return sigmoid(linear_term(model.theta, fv));
}

double cost(const Theta& theta, const TrainingSet& data) { return evaluate(theta, data, nullptr); }

Theta gradient(const Theta& theta, const TrainingSet& data) {
  Theta g;
  evaluate(theta, data, &g);
  return g;
}

Model train(const TrainingSet& data, const TrainOptions& opts, std::uint64_t version,
            TrainTrace* trace) {
  if (data.empty()) throw EmptyTrainingSet();
  if (data.positives() == 0 || data.positives() == data.size()) throw SingleClassTrainingSet();

  Theta theta{0.0, 0.0, 0.0, 0.0};
  double previous = 0.0;
  std::size_t iter = 0;
  if (trace) trace->costs.clear();
  for (;; ++iter) {
    Theta g;
    const double j = evaluate(theta, data, &g);
    if (trace) trace->costs.push_back(j);
    if (iter > 0 && std::abs(previous - j) < opts.tolerance) break;
    if (iter == opts.max_iters) break;
    for (int k = 0; k < 4; ++k) theta[k] -= opts.learning_rate * g[k];
    previous = j;
  }
  if (trace) trace->iterations = iter;

  Model m;
  m.theta = theta;
  m.version = version;
  m.trained_count = data.size();
  validate(m);
  return m;
}

Verdict classify(const Model& model, const FeatureVector& fv) {
  const double score = campaign_score(model, fv);
  return {score, label_for(score, model.threshold)};
}

ConfusionMetrics confusion_metrics(std::span<const Label> predictions,
                                   std::span<const Label> labels) {
  if (predictions.size() != labels.size())
    throw LengthMismatch("predictions and labels differ in length");
  if (predictions.empty()) throw EmptyInput("no samples to evaluate");
  ConfusionMetrics m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] == Label::Campaign;
    const bool y = labels[i] == Label::Campaign;
    if (p && y) ++m.tp;
    else if (p) ++m.fp;
    else if (y) ++m.fn;
    else ++m.tn;
  }
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.accuracy = ratio(m.tp + m.tn, m.total());
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
    m.f_measure = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

std::vector<double> default_roc_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 9; ++k) t.push_back(k / 10.0);
  return t;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels,
                                std::span<const double> thresholds) {
  if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
  std::size_t pos = 0;
  for (Label l : labels) pos += l == Label::Campaign;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw SingleClassInput("ROC needs both classes");

  std::vector<RocPoint> out;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (label_for(scores[i], t) != Label::Campaign) continue;
      (labels[i] == Label::Campaign ? tp : fp)++;
    }
    out.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return out;
}

std::string format_model(const Model& m) {
  std::string out;
  out += "version=" + std::to_string(m.version) + "\n";
  out += "theta=" + format_double(m.theta[0]) + "," + format_double(m.theta[1]) + "," +
         format_double(m.theta[2]) + "," + format_double(m.theta[3]) + "\n";
  out += "threshold=" + format_double(m.threshold) + "\n";
  out += "trained_count=" + std::to_string(m.trained_count) + "\n";
  out += "neutral_sgtext=" + format_double(m.neutral_sgtext) + "\n";
  return out;
}

Model parse_model(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("model record line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("model record lacks ") + key);
    return it->second;
  };

  Model m;
  m.version = parse_count(get("version"), "version");
  std::istringstream thetas(get("theta"));
  std::string part;
  std::size_t k = 0;
  while (std::getline(thetas, part, ',')) {
    if (k == 4) throw DataError("model theta must have 4 values");
    m.theta[k++] = parse_double(part, "theta");
  }
  if (k != 4) throw DataError("model theta must have 4 values");
  m.threshold = parse_double(get("threshold"), "threshold");
  m.trained_count = parse_count(get("trained_count"), "trained_count");
  m.neutral_sgtext = parse_double(get("neutral_sgtext"), "neutral_sgtext");
  try {
    validate(m);
  } catch (const InvariantViolation& e) {
    throw DataError(e.what());
  }
  return m;
}

void save_model(const std::string& path, const Model& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file: " + path);
  out << format_model(m);
  if (!out) throw DataError("failed writing model file: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace cqadet
