#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "cqadet/corpus.hpp"
#include "cqadet/features.hpp"
#include "cqadet/textstats.hpp"

namespace cqadet::testing {

inline QASession make_session(std::string url, std::string questioner, std::string answerer,
                              std::string text, std::optional<Label> label = std::nullopt,
                              std::int64_t ask = 100, std::int64_t answer = 200) {
  QASession s;
  s.url = std::move(url);
  s.title = "";
  s.question_text = text;
  s.answer_text = "";
  s.questioner_id = std::move(questioner);
  s.answerer_id = std::move(answerer);
  s.ask_time = ask;
  s.answer_time = answer;
  s.label = label;
  return s;
}

// Word set built straight from the tokenizer, independent of distinct_words.
inline std::set<std::string> oracle_words(const QASession& s) {
  std::set<std::string> out;
  for (const auto* field : {&s.title, &s.question_text, &s.answer_text}) {
    for (auto& w : tokenize(*field)) out.insert(w);
  }
  return out;
}

inline double oracle_ratio(double c0, double c1) {
  if (c0 + c1 < 5) return 0.5;
  if (c1 == 0) return 0.5 / (c0 + 0.5);
  return c1 / (c0 + c1);
}

// Features recomputed by scanning the labeled database, with no count tables.
inline FeatureVector oracle_features(const QASession& s, const std::vector<QASession>& db,
                                     bool exclude_self, double neutral) {
  double q0 = 0, q1 = 0, a0 = 0, a1 = 0, N = 0, S = 0;
  std::vector<const QASession*> used;
  for (const auto& o : db) {
    if (!o.label) continue;
    if (exclude_self && o.url == s.url) continue;
    used.push_back(&o);
    const bool c = *o.label == Label::Campaign;
    (c ? S : N) += 1;
    if (o.questioner_id == s.questioner_id) (c ? q1 : q0) += 1;
    if (o.answerer_id == s.answerer_id) (c ? a1 : a0) += 1;
  }
  FeatureVector fv;
  fv.sgqid = oracle_ratio(q0, q1);
  fv.sgaid = oracle_ratio(a0, a1);
  const auto words = oracle_words(s);
  if (words.empty()) {
    fv.sgtext = neutral;
    return fv;
  }
  double sum = 0.0;
  for (const auto& w : words) {
    double n = 0, sc = 0;
    for (const auto* o : used) {
      if (!oracle_words(*o).count(w)) continue;
      (*o->label == Label::Campaign ? sc : n) += 1;
    }
    sum += std::log((N + 1.0) / (n + 1.0)) * ((sc + 1.0) / (S + 1.0));
  }
  fv.sgtext = sum / static_cast<double>(words.size());
  return fv;
}

}  // namespace cqadet::testing

#include <random>

#include "cqadet/classifier.hpp"

namespace cqadet::testing {

// Random dataset with features in the ranges the detector produces.
inline TrainingSet random_training_set(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> text(0.0, 3.0);
  TrainingSet data;
  for (std::size_t i = 0; i < m; ++i) {
    const FeatureVector fv{unit(rng), unit(rng), text(rng)};
    const bool campaign = i == 0 || (i != 1 && unit(rng) < 0.4 + 0.2 * fv.sgqid);
    data.add(fv, campaign ? Label::Campaign : Label::Normal);
  }
  return data;
}

inline Theta random_theta(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  return {d(rng), d(rng), d(rng), d(rng)};
}

// Central differences with step h on every coordinate.
inline Theta numeric_gradient(const Theta& theta, const TrainingSet& data, double h) {
  Theta g{};
  for (int k = 0; k < 4; ++k) {
    Theta up = theta, down = theta;
    up[k] += h;
    down[k] -= h;
    g[k] = (cost(up, data) - cost(down, data)) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), Euclidean norms.
inline double relative_error(const Theta& a, const Theta& b) {
  double diff = 0, na = 0, nb = 0;
  for (int k = 0; k < 4; ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

// Three small hand-built databases: disjoint users, heavy user overlap with
// self-answers, and CJK text with empty sessions.
inline std::vector<std::vector<QASession>> hand_built_corpora() {
  std::vector<std::vector<QASession>> out;

  std::vector<QASession> a;
  for (int i = 0; i < 12; ++i) {
    a.push_back(make_session("a" + std::to_string(i), "qa" + std::to_string(i % 6),
                             "aa" + std::to_string(i % 4), "word" + std::to_string(i % 5) + " common",
                             i % 3 == 0 ? Label::Campaign : Label::Normal));
  }
  a.push_back(make_session("a-unlabeled", "qa1", "aa1", "word1 fresh"));
  out.push_back(a);

  std::vector<QASession> b;
  const char* texts[] = {"slim tea buy now", "how to cook rice", "buy slim tea here",
                         "rice and tea", "now buy", "cook slim"};
  for (int i = 0; i < 40; ++i) {
    const std::string q = i % 5 == 0 ? "shill" : "user" + std::to_string(i % 7);
    const std::string ans = i % 9 == 0 ? q : (i % 2 ? "shill" : "helper" + std::to_string(i % 3));
    b.push_back(make_session("b" + std::to_string(i), q, ans, texts[i % 6],
                             (i % 5 == 0 || i % 4 == 1) ? Label::Campaign : Label::Normal));
  }
  out.push_back(b);

  std::vector<QASession> c;
  const char* cjk[] = {"\xE5\x87\x8F\xE8\x82\xA5\xE8\x8C\xB6", "\xE8\x8C\xB6",
                       "\xE5\x87\x8F\xE8\x82\xA5 abc", "", "!!!", "\xE8\x82\xA5\xE8\x8C\xB6 abc"};
  for (int i = 0; i < 30; ++i) {
    c.push_back(make_session("c" + std::to_string(i), "p" + std::to_string(i % 3),
                             "r" + std::to_string(i % 5), cjk[i % 6],
                             i % 2 ? Label::Campaign : Label::Normal));
  }
  out.push_back(c);
  return out;
}

}  // namespace cqadet::testing
