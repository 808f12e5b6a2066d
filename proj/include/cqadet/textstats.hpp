#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cqadet/corpus.hpp"

namespace cqadet {

// Splits UTF-8 text into lowercase alphanumeric words. Each maximal run of CJK
// characters of length L >= 2 contributes its L-1 overlapping bigrams; a lone
// CJK character is a word by itself. Fullwidth ASCII is folded to ASCII.
std::vector<std::string> tokenize(std::string_view text);

using WordSet = std::set<std::string>;

// Union of the words of title, question and best answer.
WordSet distinct_words(const QASession& s);

struct WordCount {
  std::uint64_t normal = 0;    // n_i
  std::uint64_t campaign = 0;  // s_i
  bool operator==(const WordCount&) const = default;
};

struct WordStats {
  std::map<std::string, WordCount, std::less<>> per_word;
  std::uint64_t normal_sessions = 0;    // N
  std::uint64_t campaign_sessions = 0;  // S

  WordCount lookup(std::string_view word) const {
    auto it = per_word.find(word);
    return it == per_word.end() ? WordCount{} : it->second;
  }
  bool operator==(const WordStats&) const = default;
};

struct UserCount {
  std::uint64_t q0 = 0;
  std::uint64_t q1 = 0;
  std::uint64_t a0 = 0;
  std::uint64_t a1 = 0;
  bool operator==(const UserCount&) const = default;
};

struct UserSpamCounts {
  std::map<std::string, UserCount, std::less<>> per_user;

  UserCount lookup(std::string_view user) const {
    auto it = per_user.find(user);
    return it == per_user.end() ? UserCount{} : it->second;
  }
  bool operator==(const UserSpamCounts&) const = default;
};

// Everything the features are computed from.
struct CountState {
  WordStats words;
  UserSpamCounts users;
  bool operator==(const CountState&) const = default;
};

// Adds (sign = +1) or withdraws (sign = -1) one labeled session. Entries that
// fall back to all-zero are erased, so withdrawing restores the prior state
// exactly. Throws UnderflowViolation, leaving `state` untouched.
void apply_label(CountState& state, const QASession& s, Label label, int sign);
void apply_label(CountState& state, const QASession& s, const WordSet& words, Label label,
                 int sign);

// Fresh state with every labeled session in `sessions` applied.
CountState rebuild_counts(std::span<const QASession> sessions);

}  // namespace cqadet
