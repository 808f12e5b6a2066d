#include "cqadet/features.hpp"

#include <cmath>

#include "cqadet/errors.hpp"

namespace cqadet {

double sg_ratio(std::uint64_t c0, std::uint64_t c1, std::uint64_t min_support) {
  if (c0 + c1 < min_support) return 0.5;
  if (c1 == 0) return 0.5 / (static_cast<double>(c0) + 0.5);
  return static_cast<double>(c1) / static_cast<double>(c0 + c1);
}

double sg_word(std::uint64_t N, std::uint64_t n, std::uint64_t S, std::uint64_t s) {
  return std::log((static_cast<double>(N) + 1.0) / (static_cast<double>(n) + 1.0)) *
         ((static_cast<double>(s) + 1.0) / (static_cast<double>(S) + 1.0));
}

double sg_text(const WordSet& words, const WordStats& stats, double neutral) {
  if (words.empty()) return neutral;
  double sum = 0.0;
  for (const auto& w : words) {
    const WordCount c = stats.lookup(w);
    sum += sg_word(stats.normal_sessions, c.normal, stats.campaign_sessions, c.campaign);
  }
  return sum / static_cast<double>(words.size());
}

double sg_text(const QASession& s, const WordStats& stats, double neutral) {
  return sg_text(distinct_words(s), stats, neutral);
}

FeatureVector feature_vector(const QASession& s, const CountState& state, bool exclude_self,
                             double neutral_sgtext) {
  return feature_vector(s, distinct_words(s), state, exclude_self, neutral_sgtext);
}

FeatureVector feature_vector(const QASession& s, const WordSet& words, const CountState& state,
                             bool exclude_self, double neutral_sgtext) {
  UserCount q = state.users.lookup(s.questioner_id);
  UserCount a = state.users.lookup(s.answerer_id);
  const WordStats& stats = state.words;
  FeatureVector fv;

  if (!exclude_self) {
    fv.sgqid = sg_ratio(q.q0, q.q1);
    fv.sgaid = sg_ratio(a.a0, a.a1);
    fv.sgtext = sg_text(words, stats, neutral_sgtext);
    return fv;
  }

  // Leave-one-out: subtract this session's own contribution arithmetically,
  // which equals withdrawing and re-applying its label.
  if (!s.label) throw NotInDatabase(s.url + " carries no label");
  const bool campaign = *s.label == Label::Campaign;
  auto take = [&](std::uint64_t v, const char* what) {
    if (v == 0) throw NotInDatabase(s.url + " was never applied (" + what + ")");
    return v - 1;
  };

  (campaign ? q.q1 : q.q0) = take(campaign ? q.q1 : q.q0, "questioner");
  (campaign ? a.a1 : a.a0) = take(campaign ? a.a1 : a.a0, "answerer");
  std::uint64_t N = stats.normal_sessions;
  std::uint64_t S = stats.campaign_sessions;
  (campaign ? S : N) = take(campaign ? S : N, "session total");

  fv.sgqid = sg_ratio(q.q0, q.q1);
  fv.sgaid = sg_ratio(a.a0, a.a1);
  if (words.empty()) {
    fv.sgtext = neutral_sgtext;
    return fv;
  }
  double sum = 0.0;
  for (const auto& w : words) {
    WordCount c = stats.lookup(w);
    (campaign ? c.campaign : c.normal) = take(campaign ? c.campaign : c.normal, "word");
    sum += sg_word(N, c.normal, S, c.campaign);
  }
  fv.sgtext = sum / static_cast<double>(words.size());
  return fv;
}

}  // namespace cqadet
