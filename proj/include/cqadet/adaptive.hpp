#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cqadet/classifier.hpp"
#include "cqadet/corpus.hpp"
#include "cqadet/textstats.hpp"

namespace cqadet {

// A labeled session together with its cached word set.
struct PoolEntry {
  QASession session;
  WordSet words;

  explicit PoolEntry(QASession s) : session(std::move(s)), words(distinct_words(session)) {}
};

// Leave-one-out training features for every pool entry. Sessions without any
// words get the mean sgtext of the others (0 if there are none), which is
// also returned through `neutral`.
std::vector<FeatureVector> training_features(const CountState& state,
                                             std::span<const PoolEntry> pool, double& neutral);

// Trains a model on `pool`, whose labels must all be applied to `state`.
Model fit_model(const CountState& state, std::span<const PoolEntry> pool, std::uint64_t version,
                const TrainOptions& opts = {}, TrainTrace* trace = nullptr);

// Applies `new_labeled` to the state, adds them to the pool and publishes the
// next model version. Throws NoNewLabels / SingleClassTrainingSet without
// touching `state` or `pool`.
Model retrain(CountState& state, std::vector<PoolEntry>& pool,
              std::span<const QASession> new_labeled, const Model& previous,
              const TrainOptions& opts = {});

enum class ReplayMode { Adaptive, Fixed };

struct ReplayConfig {
  std::size_t seed_size = 200;
  std::size_t batch_size = 200;
  ReplayMode mode = ReplayMode::Adaptive;
  TrainOptions train;
};

struct IterationReport {
  std::size_t iteration_index = 0;
  std::uint64_t model_version = 0;
  Theta theta_snapshot{};
  ConfusionMetrics metrics;
  std::size_t training_size = 0;
  std::size_t test_size = 0;
  std::vector<double> scores;
  std::vector<Label> labels;
};

// Replays a fully labeled corpus in close-time order: train on the seed, then
// score each batch against the state and model from before the batch. In
// adaptive mode every batch is absorbed and the model retrained before the
// next one. A trailing short batch is a final iteration of its own.
std::vector<IterationReport> replay(std::span<const QASession> corpus, const ReplayConfig& cfg);

inline constexpr const char* kReplayReportHeader =
    "iteration,theta1,theta2,theta3,theta4,tp,fp,tn,fn,precision,recall,f_measure,accuracy,"
    "training_size,test_size";

// CSV, one row per iteration. Undefined ratios are left empty.
void write_replay_report(std::ostream& out, std::span<const IterationReport> reports);
void write_replay_report(const std::string& path, std::span<const IterationReport> reports);

struct HoldoutSplit {
  std::vector<QASession> train;
  std::vector<QASession> test;
};

// Seeded shuffle, then the first `train_count` sessions form the training part.
HoldoutSplit split_train_test(std::span<const QASession> corpus, std::size_t train_count,
                              std::uint64_t seed);

struct HoldoutResult {
  Model model;
  std::vector<double> scores;
  std::vector<Label> labels;
};

// Trains on `train` (leave-one-out features) and scores `test` against the
// training state.
HoldoutResult evaluate_holdout(const HoldoutSplit& split, const TrainOptions& opts = {});

}  // namespace cqadet
