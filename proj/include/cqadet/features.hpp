#pragma once

#include <cstdint>

#include "cqadet/corpus.hpp"
#include "cqadet/textstats.hpp"

namespace cqadet {

inline constexpr std::uint64_t kMinSupport = 5;

struct FeatureVector {
  double sgqid = 0.5;
  double sgaid = 0.5;
  double sgtext = 0.0;
  bool operator==(const FeatureVector&) const = default;
};

// Campaign ratio of a user's history. Users with fewer than `min_support`
// labeled sessions get 0.5; a zero campaign count is smoothed to 0.5.
double sg_ratio(std::uint64_t c0, std::uint64_t c1, std::uint64_t min_support = kMinSupport);

// Campaign specificity of one word: ln((N+1)/(n+1)) * (s+1)/(S+1).
double sg_word(std::uint64_t N, std::uint64_t n, std::uint64_t S, std::uint64_t s);

// Mean sg_word over the distinct words, or `neutral` when there are none.
double sg_text(const WordSet& words, const WordStats& stats, double neutral);
double sg_text(const QASession& s, const WordStats& stats, double neutral);

// Features of `s` against `state`. With `exclude_self`, the session's own
// labeled contribution is subtracted first (leave-one-out); the session must
// carry a label and have been applied, otherwise NotInDatabase.
FeatureVector feature_vector(const QASession& s, const CountState& state, bool exclude_self,
                             double neutral_sgtext);
FeatureVector feature_vector(const QASession& s, const WordSet& words, const CountState& state,
                             bool exclude_self, double neutral_sgtext);

}  // namespace cqadet
