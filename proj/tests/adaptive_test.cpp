#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "cqadet/adaptive.hpp"
#include "cqadet/errors.hpp"
#include "test_support.hpp"

namespace cqadet {
namespace {

using testing::make_session;

const TrainOptions kQuick{0.1, 2000, 1e-7};

std::vector<QASession> small_corpus(std::size_t n, std::uint64_t seed = 7) {
  SyntheticConfig cfg;
  cfg.total_sessions = n;
  cfg.rng_seed = seed;
  return generate_synthetic(cfg);
}

TEST(Replay, IterationArithmetic) {
  const auto corpus = small_corpus(1050);
  ReplayConfig cfg;
  cfg.seed_size = 200;
  cfg.batch_size = 200;
  cfg.train = kQuick;
  const auto reps = replay(corpus, cfg);
  ASSERT_EQ(reps.size(), 5u);  // 4 full batches and a trailing 50
  for (std::size_t k = 0; k < reps.size(); ++k) {
    EXPECT_EQ(reps[k].iteration_index, k);
    EXPECT_EQ(reps[k].model_version, k + 1);
    EXPECT_EQ(reps[k].training_size, 200 + 200 * k);
    EXPECT_EQ(reps[k].test_size, k + 1 < reps.size() ? 200u : 50u);
    EXPECT_EQ(reps[k].scores.size(), reps[k].test_size);
    EXPECT_EQ(reps[k].metrics.total(), reps[k].test_size);
  }
}

TEST(Replay, FixedModeKeepsSeedModel) {
  const auto corpus = small_corpus(900);
  ReplayConfig cfg;
  cfg.mode = ReplayMode::Fixed;
  cfg.train = kQuick;
  const auto reps = replay(corpus, cfg);
  ASSERT_EQ(reps.size(), 4u);
  for (const auto& r : reps) {
    EXPECT_EQ(r.theta_snapshot, reps[0].theta_snapshot);
    EXPECT_EQ(r.model_version, 1u);
    EXPECT_EQ(r.training_size, 200u);
  }
}

TEST(Replay, ScoresRecomputeFromPriorState) {
  auto corpus = small_corpus(700);
  ReplayConfig cfg;
  cfg.train = kQuick;
  const auto reps = replay(corpus, cfg);
  sort_by_close_time(corpus);

  std::vector<QASession> seen(corpus.begin(), corpus.begin() + 200);
  std::vector<PoolEntry> pool(seen.begin(), seen.end());
  for (const auto& rep : reps) {
    const CountState state = rebuild_counts(seen);
    const Model m = fit_model(state, pool, rep.model_version, cfg.train);
    EXPECT_EQ(m.theta, rep.theta_snapshot);
    const std::size_t begin = seen.size();
    for (std::size_t i = 0; i < rep.test_size; ++i) {
      const auto fv = feature_vector(corpus[begin + i], state, false, m.neutral_sgtext);
      EXPECT_EQ(campaign_score(m, fv), rep.scores[i]);
      EXPECT_EQ(*corpus[begin + i].label, rep.labels[i]);
    }
    for (std::size_t i = 0; i < rep.test_size; ++i) {
      seen.push_back(corpus[begin + i]);
      pool.emplace_back(corpus[begin + i]);
    }
  }
}

TEST(Replay, InputOrderDoesNotMatter) {
  auto corpus = small_corpus(500);
  ReplayConfig cfg;
  cfg.train = kQuick;
  const auto a = replay(corpus, cfg);
  std::reverse(corpus.begin(), corpus.end());
  const auto b = replay(corpus, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].theta_snapshot, b[k].theta_snapshot);
    EXPECT_EQ(a[k].scores, b[k].scores);
  }
}

TEST(Replay, Preconditions) {
  ReplayConfig cfg;
  cfg.train = kQuick;
  EXPECT_THROW(replay(small_corpus(200), cfg), CorpusTooSmall);

  auto unlabeled = small_corpus(300);
  unlabeled[5].label.reset();
  EXPECT_THROW(replay(unlabeled, cfg), DataError);

  std::vector<QASession> one_class;
  for (int i = 0; i < 300; ++i)
    one_class.push_back(make_session("u" + std::to_string(i), "q", "a", "t", Label::Normal, i, i));
  EXPECT_THROW(replay(one_class, cfg), SingleClassSeed);

  cfg.batch_size = 0;
  EXPECT_THROW(replay(small_corpus(300), cfg), InvalidConfig);
}

TEST(Replay, ReportFormat) {
  IterationReport r;
  r.iteration_index = 0;
  r.theta_snapshot = {0.5, -1, 0.25, 2};
  r.metrics.tp = 0;
  r.metrics.tn = 3;
  r.metrics.accuracy = 1.0;
  r.training_size = 200;
  r.test_size = 3;
  std::ostringstream out;
  write_replay_report(out, std::vector<IterationReport>{r});
  EXPECT_EQ(out.str(), std::string(kReplayReportHeader) +
                           "\n1,0.5,-1,0.25,2,0,0,3,0,,,,1.000000,200,3\n");
}

TEST(Retrain, AdvancesVersionAndAbsorbsLabels) {
  auto corpus = small_corpus(300);
  std::vector<PoolEntry> pool(corpus.begin(), corpus.begin() + 200);
  CountState state = rebuild_counts(std::vector<QASession>(corpus.begin(), corpus.begin() + 200));
  const Model first = fit_model(state, pool, 1, kQuick);
  const std::vector<QASession> fresh(corpus.begin() + 200, corpus.end());
  const Model second = retrain(state, pool, fresh, first, kQuick);
  EXPECT_EQ(second.version, 2u);
  EXPECT_EQ(second.trained_count, 300u);
  EXPECT_EQ(pool.size(), 300u);
  EXPECT_EQ(state, rebuild_counts(corpus));
}

TEST(Retrain, FailuresLeaveStateUntouched) {
  std::vector<QASession> normals;
  for (int i = 0; i < 6; ++i)
    normals.push_back(make_session("n" + std::to_string(i), "q", "a", "tea", Label::Normal));
  std::vector<PoolEntry> pool(normals.begin(), normals.begin() + 3);
  CountState state = rebuild_counts(std::vector<QASession>(normals.begin(), normals.begin() + 3));
  const CountState before = state;
  EXPECT_THROW(retrain(state, pool, std::vector<QASession>{}, Model{}), NoNewLabels);
  EXPECT_THROW(retrain(state, pool, std::vector<QASession>(normals.begin() + 3, normals.end()), Model{}),
               SingleClassTrainingSet);
  EXPECT_EQ(state, before);
  EXPECT_EQ(pool.size(), 3u);
}

TEST(TrainingFeatures, EmptySessionsGetTheMeanOfTheOthers) {
  std::vector<QASession> v = {make_session("a", "q1", "a1", "tea cup", Label::Campaign),
                              make_session("b", "q2", "a2", "rice", Label::Normal),
                              make_session("c", "q3", "a3", "tea rice", Label::Normal),
                              make_session("d", "q4", "a4", "...", Label::Campaign)};
  const std::vector<PoolEntry> pool(v.begin(), v.end());
  const CountState st = rebuild_counts(v);
  double neutral = -1;
  const auto f = training_features(st, pool, neutral);
  EXPECT_DOUBLE_EQ(neutral, (f[0].sgtext + f[1].sgtext + f[2].sgtext) / 3.0);
  EXPECT_EQ(f[3].sgtext, neutral);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(f[i], feature_vector(v[i], st, true, 0.0));
}

TEST(Holdout, SplitIsADeterministicPartition) {
  const auto corpus = small_corpus(300);
  const auto a = split_train_test(corpus, 200, 3);
  const auto b = split_train_test(corpus, 200, 3);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.size(), 200u);
  EXPECT_EQ(a.test.size(), 100u);
  std::set<std::string> urls;
  for (const auto& s : a.train) urls.insert(s.url);
  for (const auto& s : a.test) urls.insert(s.url);
  EXPECT_EQ(urls.size(), 300u);
  EXPECT_NE(split_train_test(corpus, 200, 4).train, a.train);
  EXPECT_THROW(split_train_test(corpus, 300, 3), InvalidConfig);
}

TEST(Holdout, ScoresEveryTestSession) {
  const auto split = split_train_test(small_corpus(600), 400, 1);
  const auto r = evaluate_holdout(split, kQuick);
  EXPECT_EQ(r.scores.size(), 200u);
  EXPECT_EQ(r.labels.size(), 200u);
  EXPECT_EQ(r.model.trained_count, 400u);
}

}  // namespace
}  // namespace cqadet
