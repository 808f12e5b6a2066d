#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqadet/corpus.hpp"
#include "cqadet/features.hpp"

namespace cqadet {

// theta[0] is the intercept, then SGqID, SGaID, SGtext.
using Theta = std::array<double, 4>;

struct Model {
  Theta theta{0.0, 0.0, 0.0, 0.0};
  double threshold = 0.5;
  std::uint64_t version = 0;  // 0 is the untrained cold-start model
  std::uint64_t trained_count = 0;
  double neutral_sgtext = 0.0;

  bool cold() const { return version == 0; }
  bool operator==(const Model&) const = default;
};

// Throws InvariantViolation on non-finite theta or a threshold outside (0,1).
void validate(const Model& m);

// Design matrix with the all-ones column, stored row-major.
class TrainingSet {
 public:
  TrainingSet() = default;
  TrainingSet(std::span<const FeatureVector> features, std::span<const Label> labels);

  void add(const FeatureVector& fv, Label label);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::span<const double> row(std::size_t i) const { return {rows_.data() + 4 * i, 4}; }
  double label(std::size_t i) const { return labels_[i]; }
  std::size_t positives() const { return positives_; }

 private:
  std::vector<double> rows_;
  std::vector<double> labels_;
  std::size_t positives_ = 0;
};

// Logistic function, stable over the whole double range.
double sigmoid(double z);

double linear_term(const Theta& theta, const FeatureVector& fv);
double campaign_score(const Model& model, const FeatureVector& fv);

inline constexpr double kCostClip = 1e-12;

// Mean cross-entropy with h clipped into [kCostClip, 1 - kCostClip].
double cost(const Theta& theta, const TrainingSet& data);
Theta gradient(const Theta& theta, const TrainingSet& data);

struct TrainOptions {
  double learning_rate = 0.1;
  std::size_t max_iters = 20000;
  double tolerance = 1e-7;
};

// Cost at every evaluated theta, in order; the last entry belongs to the
// returned theta.
struct TrainTrace {
  std::vector<double> costs;
  std::size_t iterations = 0;
};

// Full-batch gradient descent from theta = 0, stopping once successive costs
// differ by less than the tolerance. The model gets `version` and threshold
// 0.5; the caller fills in neutral_sgtext.
Model train(const TrainingSet& data, const TrainOptions& opts = {}, std::uint64_t version = 1,
            TrainTrace* trace = nullptr);

struct Verdict {
  double score = 0.0;
  Label label = Label::Normal;
};

// Campaign iff score >= threshold.
Verdict classify(const Model& model, const FeatureVector& fv);
inline Label label_for(double score, double threshold) {
  return score >= threshold ? Label::Campaign : Label::Normal;
}

struct ConfusionMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  // Absent when the denominator is zero.
  std::optional<double> precision, recall, f_measure, accuracy;

  std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionMetrics confusion_metrics(std::span<const Label> predictions,
                                   std::span<const Label> labels);

// Undefined ratios count as zero in aggregates.
inline double or_zero(const std::optional<double>& v) { return v.value_or(0.0); }

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

std::vector<double> default_roc_thresholds();

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const Label> labels,
                                std::span<const double> thresholds);
inline std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                       std::span<const Label> labels) {
  return roc_curve(scores, labels, default_roc_thresholds());
}

// Flat key=value text; doubles use 17 significant digits so a reload is exact.
std::string format_model(const Model& m);
Model parse_model(const std::string& text);
void save_model(const std::string& path, const Model& m);
Model load_model(const std::string& path);

}  // namespace cqadet
