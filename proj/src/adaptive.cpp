#include "cqadet/adaptive.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "cqadet/errors.hpp"
#include "cqadet/features.hpp"

namespace cqadet {

namespace {

Label require_label(const QASession& s) {
  if (!s.label) throw DataError("session " + s.url + " is unlabeled");
  return *s.label;
}

std::string ratio_cell(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string theta_cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<FeatureVector> training_features(const CountState& state,
                                             std::span<const PoolEntry> pool, double& neutral) {
  std::vector<FeatureVector> out;
  out.reserve(pool.size());
  double sum = 0.0;
  std::size_t with_words = 0;
  for (const auto& e : pool) {
    out.push_back(feature_vector(e.session, e.words, state, /*exclude_self=*/true, 0.0));
    if (!e.words.empty()) {
      sum += out.back().sgtext;
      ++with_words;
    }
  }
  neutral = with_words ? sum / static_cast<double>(with_words) : 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].words.empty()) out[i].sgtext = neutral;
  }
  return out;
}

Model fit_model(const CountState& state, std::span<const PoolEntry> pool, std::uint64_t version,
                const TrainOptions& opts, TrainTrace* trace) {
  double neutral = 0.0;
  const auto features = training_features(state, pool, neutral);
  TrainingSet data;
  for (std::size_t i = 0; i < pool.size(); ++i) data.add(features[i], require_label(pool[i].session));
  Model m = train(data, opts, version, trace);
  m.neutral_sgtext = neutral;
  return m;
}

Model retrain(CountState& state, std::vector<PoolEntry>& pool,
              std::span<const QASession> new_labeled, const Model& previous,
              const TrainOptions& opts) {
  if (new_labeled.empty()) throw NoNewLabels();
  bool has[2] = {false, false};
  for (const auto& e : pool) has[to_int(require_label(e.session))] = true;
  for (const auto& s : new_labeled) has[to_int(require_label(s))] = true;
  if (!has[0] || !has[1]) throw SingleClassTrainingSet();

  CountState next_state = state;
  std::vector<PoolEntry> next_pool = pool;
  for (const auto& s : new_labeled) {
    next_pool.emplace_back(s);
    apply_label(next_state, s, next_pool.back().words, *s.label, +1);
  }
  Model m = fit_model(next_state, next_pool, previous.version + 1, opts);
  state = std::move(next_state);
  pool = std::move(next_pool);
  return m;
}

std::vector<IterationReport> replay(std::span<const QASession> corpus, const ReplayConfig& cfg) {
  if (cfg.seed_size == 0 || cfg.batch_size == 0)
    throw InvalidConfig("seed_size and batch_size must be > 0");
  if (corpus.size() <= cfg.seed_size)
    throw CorpusTooSmall("replay needs more than " + std::to_string(cfg.seed_size) + " sessions");

  std::vector<QASession> ordered(corpus.begin(), corpus.end());
  for (const auto& s : ordered) require_label(s);
  sort_by_close_time(ordered);

  std::vector<PoolEntry> pool;
  pool.reserve(ordered.size());
  CountState state;
  bool has[2] = {false, false};
  for (std::size_t i = 0; i < cfg.seed_size; ++i) {
    pool.emplace_back(ordered[i]);
    apply_label(state, pool.back().session, pool.back().words, *ordered[i].label, +1);
    has[to_int(*ordered[i].label)] = true;
  }
  if (!has[0] || !has[1]) throw SingleClassSeed();

  Model model = fit_model(state, pool, 1, cfg.train);

  std::vector<IterationReport> reports;
  for (std::size_t begin = cfg.seed_size, k = 0; begin < ordered.size(); begin += cfg.batch_size, ++k) {
    const std::size_t end = std::min(begin + cfg.batch_size, ordered.size());

    IterationReport rep;
    rep.iteration_index = k;
    rep.model_version = model.version;
    rep.theta_snapshot = model.theta;
    rep.training_size = pool.size();
    rep.test_size = end - begin;

    std::vector<PoolEntry> batch;
    std::vector<Label> predictions;
    for (std::size_t i = begin; i < end; ++i) {
      batch.emplace_back(ordered[i]);
      const auto fv = feature_vector(ordered[i], batch.back().words, state, false,
                                     model.neutral_sgtext);
      const Verdict v = classify(model, fv);
      rep.scores.push_back(v.score);
      predictions.push_back(v.label);
      rep.labels.push_back(*ordered[i].label);
    }
    rep.metrics = confusion_metrics(predictions, rep.labels);
    reports.push_back(std::move(rep));

    if (cfg.mode == ReplayMode::Adaptive && end < ordered.size()) {
      for (auto& e : batch) {
        apply_label(state, e.session, e.words, *e.session.label, +1);
        pool.push_back(std::move(e));
      }
      model = fit_model(state, pool, model.version + 1, cfg.train);
    }
  }
  return reports;
}

void write_replay_report(std::ostream& out, std::span<const IterationReport> reports) {
  out << kReplayReportHeader << '\n';
  for (const auto& r : reports) {
    const auto& m = r.metrics;
    out << r.iteration_index + 1 << ',' << theta_cell(r.theta_snapshot[0]) << ','
        << theta_cell(r.theta_snapshot[1]) << ',' << theta_cell(r.theta_snapshot[2]) << ','
        << theta_cell(r.theta_snapshot[3]) << ',' << m.tp << ',' << m.fp << ',' << m.tn << ','
        << m.fn << ',' << ratio_cell(m.precision) << ',' << ratio_cell(m.recall) << ','
        << ratio_cell(m.f_measure) << ',' << ratio_cell(m.accuracy) << ',' << r.training_size
        << ',' << r.test_size << '\n';
  }
}

void write_replay_report(const std::string& path, std::span<const IterationReport> reports) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write report file: " + path);
  write_replay_report(out, reports);
  if (!out) throw DataError("failed writing report file: " + path);
}

HoldoutSplit split_train_test(std::span<const QASession> corpus, std::size_t train_count,
                              std::uint64_t seed) {
  if (train_count == 0 || train_count >= corpus.size())
    throw InvalidConfig("train_count must leave both parts non-empty");
  std::vector<QASession> shuffled(corpus.begin(), corpus.end());
  std::mt19937_64 rng(seed);
  // Fisher-Yates over raw engine output; std::shuffle's draws are not portable.
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(shuffled[i], shuffled[j]);
  }
  HoldoutSplit split;
  split.train.assign(std::make_move_iterator(shuffled.begin()),
                     std::make_move_iterator(shuffled.begin() + static_cast<std::ptrdiff_t>(train_count)));
  split.test.assign(std::make_move_iterator(shuffled.begin() + static_cast<std::ptrdiff_t>(train_count)),
                    std::make_move_iterator(shuffled.end()));
  return split;
}

HoldoutResult evaluate_holdout(const HoldoutSplit& split, const TrainOptions& opts) {
  std::vector<PoolEntry> pool;
  CountState state;
  for (const auto& s : split.train) {
    pool.emplace_back(s);
    apply_label(state, s, pool.back().words, require_label(s), +1);
  }
  HoldoutResult out;
  out.model = fit_model(state, pool, 1, opts);
  for (const auto& s : split.test) {
    const auto fv = feature_vector(s, state, false, out.model.neutral_sgtext);
    out.scores.push_back(campaign_score(out.model, fv));
    out.labels.push_back(require_label(s));
  }
  return out;
}

}  // namespace cqadet
