#include "cqadet/textstats.hpp"

#include "cqadet/errors.hpp"

namespace cqadet {

namespace {

enum class CharClass { Separator, Word, Cjk };

// Decodes one code point; invalid sequences come back as U+FFFD and consume a
// single byte.
char32_t next_code_point(std::string_view text, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(text[pos]);
  std::size_t len;
  char32_t cp;
  if (b0 < 0x80) {
    ++pos;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  if (pos + len > text.size()) {
    ++pos;
    return 0xFFFD;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[pos + k]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return 0xFFFD;
  }
  pos += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // extension A
         (cp >= 0x20000 && cp <= 0x2FA1F) ||  // extensions B.. and compatibility supplement
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
         (cp >= 0x3040 && cp <= 0x30FF) ||    // kana
         (cp >= 0xAC00 && cp <= 0xD7AF);      // hangul syllables
}

// Fullwidth forms fold to ASCII, ASCII and Latin-1 letters are lowercased.
char32_t fold(char32_t cp) {
  if (cp >= 0xFF01 && cp <= 0xFF5E) cp -= 0xFEE0;
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    const bool alnum = (cp >= 'a' && cp <= 'z') || (cp >= '0' && cp <= '9');
    return alnum ? CharClass::Word : CharClass::Separator;
  }
  if (is_cjk(cp)) return CharClass::Cjk;
  if (cp <= 0xBF) return CharClass::Separator;                   // Latin-1 punctuation
  if (cp == 0xD7 || cp == 0xF7) return CharClass::Separator;     // x and division signs
  if (cp >= 0x2000 && cp <= 0x2BFF) return CharClass::Separator;  // punctuation, symbols
  if (cp >= 0x3000 && cp <= 0x303F) return CharClass::Separator;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return CharClass::Separator;  // CJK compatibility forms
  if (cp >= 0xFF00 && cp <= 0xFFEF) return CharClass::Separator;  // leftover halfwidth forms
  if (cp == 0xFFFD) return CharClass::Separator;
  return CharClass::Word;
}

void flush_cjk(std::vector<char32_t>& run, std::vector<std::string>& out) {
  if (run.size() == 1) {
    std::string w;
    append_utf8(w, run[0]);
    out.push_back(std::move(w));
  } else {
    for (std::size_t i = 0; i + 1 < run.size(); ++i) {
      std::string w;
      append_utf8(w, run[i]);
      append_utf8(w, run[i + 1]);
      out.push_back(std::move(w));
    }
  }
  run.clear();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  std::vector<char32_t> cjk;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = fold(next_code_point(text, pos));
    const CharClass cls = classify(cp);
    if (cls != CharClass::Word && !word.empty()) out.push_back(std::move(word)), word.clear();
    if (cls != CharClass::Cjk && !cjk.empty()) flush_cjk(cjk, out);
    if (cls == CharClass::Word) append_utf8(word, cp);
    if (cls == CharClass::Cjk) cjk.push_back(cp);
  }
  if (!word.empty()) out.push_back(std::move(word));
  if (!cjk.empty()) flush_cjk(cjk, out);
  return out;
}

WordSet distinct_words(const QASession& s) {
  WordSet out;
  for (const auto* field : {&s.title, &s.question_text, &s.answer_text}) {
    for (auto& w : tokenize(*field)) out.insert(std::move(w));
  }
  return out;
}

void apply_label(CountState& state, const QASession& s, Label label, int sign) {
  apply_label(state, s, distinct_words(s), label, sign);
}

void apply_label(CountState& state, const QASession& s, const WordSet& words, Label label,
                 int sign) {
  if (sign != 1 && sign != -1) throw InvariantViolation("apply_label sign must be +1 or -1");
  const bool campaign = label == Label::Campaign;
  auto& stats = state.words;
  auto& users = state.users;

  if (sign < 0) {
    // Check everything first so a failed withdrawal leaves no partial update.
    auto fail = [&](const std::string& what) {
      throw UnderflowViolation("withdrawing " + s.url + " would make " + what + " negative");
    };
    if ((campaign ? stats.campaign_sessions : stats.normal_sessions) == 0) fail("session total");
    for (const auto& w : words) {
      const WordCount c = stats.lookup(w);
      if ((campaign ? c.campaign : c.normal) == 0) fail("count of word '" + w + "'");
    }
    const UserCount q = users.lookup(s.questioner_id);
    if ((campaign ? q.q1 : q.q0) == 0) fail("questioner count of " + s.questioner_id);
    UserCount a = users.lookup(s.answerer_id);
    if (s.answerer_id == s.questioner_id) a = q;
    if ((campaign ? a.a1 : a.a0) == 0) fail("answerer count of " + s.answerer_id);
  }

  auto bump = [sign](std::uint64_t& v) { v = sign > 0 ? v + 1 : v - 1; };

  bump(campaign ? stats.campaign_sessions : stats.normal_sessions);
  for (const auto& w : words) {
    auto it = stats.per_word.try_emplace(w).first;
    bump(campaign ? it->second.campaign : it->second.normal);
    if (it->second == WordCount{}) stats.per_word.erase(it);
  }
  {
    auto it = users.per_user.try_emplace(s.questioner_id).first;
    bump(campaign ? it->second.q1 : it->second.q0);
    if (it->second == UserCount{}) users.per_user.erase(it);
  }
  {
    auto it = users.per_user.try_emplace(s.answerer_id).first;
    bump(campaign ? it->second.a1 : it->second.a0);
    if (it->second == UserCount{}) users.per_user.erase(it);
  }
}

CountState rebuild_counts(std::span<const QASession> sessions) {
  CountState state;
  for (const auto& s : sessions) {
    if (s.label) apply_label(state, s, *s.label, +1);
  }
  return state;
}

}  // namespace cqadet
