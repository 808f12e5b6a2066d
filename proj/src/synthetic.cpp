// Seeded generator for labeled Q&A corpora.
//
// Campaign sessions are produced by a set of campaign scripts ("templates").
// Scripts launch one after another over the timeline and remain active once
// launched, so the vocabulary that gives a campaign away shifts over time. A
// campaign answer is a piece of ordinary-looking advice followed by a product
// pitch; both participants are drawn mostly from a fixed pool of paid poster
// accounts. Timing, likes and answer counts are drawn from the same
// distributions for both classes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "cqadet/corpus.hpp"
#include "cqadet/errors.hpp"

namespace cqadet {

namespace {

// Distributions are derived from raw mt19937_64 output (whose sequence is
// fixed by the standard) so corpora are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t index(std::size_t n) {
    // Lemire's multiply-shift with rejection, unbiased.
    const std::uint64_t bound = n;
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  std::size_t between(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }

  bool chance(double p) { return uniform() < p; }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  double normal() {
    // Box-Muller; one variate per call keeps the stream simple.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

class Zipf {
 public:
  Zipf(std::size_t n, double exponent) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += 1.0 / std::pow(static_cast<double>(k + 1), exponent);
      cdf_[k] = acc;
    }
    for (auto& c : cdf_) c /= acc;
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

constexpr std::string_view kOnsets = "bcdfghjklmnprstvwz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::size_t kSyllables = kOnsets.size() * kVowels.size();

// Bijective base-90 numeral over consonant-vowel syllables, offset so every
// word has at least two syllables.
std::string pseudo_word(std::size_t index) {
  std::size_t n = index + kSyllables + 1;
  std::string out;
  while (n > 0) {
    --n;
    const std::size_t syl = n % kSyllables;
    out.insert(0, 1, kVowels[syl % kVowels.size()]);
    out.insert(0, 1, kOnsets[syl / kVowels.size()]);
    n /= kSyllables;
  }
  return out;
}

std::string user_name(std::size_t index) {
  // 7919 is coprime with 900000, so this is a bijection on [0, 900000).
  return "u" + std::to_string(100000 + (index * 7919) % 900000);
}

constexpr std::int64_t kEpoch = 1317427200;  // 2011-10-01T00:00:00Z
constexpr const char* kCategories[] = {"health", "digital", "education", "travel",
                                       "finance", "family", "beauty", "games"};

struct Vocabulary {
  std::vector<std::string> normal;
  std::vector<std::string> shared;
  std::vector<std::string> campaign;
};

Vocabulary make_vocabulary(const SyntheticConfig& cfg) {
  Vocabulary v;
  std::size_t next = 0;
  for (std::size_t i = 0; i < cfg.normal_vocab_size; ++i) v.normal.push_back(pseudo_word(next++));
  for (std::size_t i = 0; i < cfg.shared_vocab_size; ++i) v.shared.push_back(pseudo_word(next++));
  for (std::size_t i = 0; i < cfg.campaign_vocab_size; ++i)
    v.campaign.push_back(pseudo_word(next++));
  return v;
}

struct Script {
  std::size_t vocab_begin;
  std::size_t vocab_end;
  std::vector<std::size_t> pitch;  // fixed slogan, indices into campaign vocab
  std::size_t launch;              // first session position the script may appear at
};

class Writer {
 public:
  Writer(const SyntheticConfig& cfg, Rng& rng)
      : cfg_(cfg),
        rng_(rng),
        vocab_(make_vocabulary(cfg)),
        normal_words_(cfg.normal_vocab_size, 1.0),
        normal_users_(cfg.n_users - cfg.n_paid_posters, 1.0) {
    const std::size_t t = cfg.template_count;
    for (std::size_t j = 0; j < t; ++j) {
      Script s;
      s.vocab_begin = j * cfg.campaign_vocab_size / t;
      s.vocab_end = std::max(s.vocab_begin + 1, (j + 1) * cfg.campaign_vocab_size / t);
      s.vocab_end = std::min(s.vocab_end, cfg.campaign_vocab_size);
      s.vocab_begin = std::min(s.vocab_begin, s.vocab_end - 1);
      const std::size_t slogan = std::min<std::size_t>(6, s.vocab_end - s.vocab_begin);
      for (std::size_t k = 0; k < slogan; ++k) s.pitch.push_back(s.vocab_begin + k);
      s.launch = j * cfg.total_sessions / t;
      scripts_.push_back(std::move(s));
    }
  }

  std::string normal_phrase(std::size_t lo, std::size_t hi) {
    std::string out;
    const std::size_t n = rng_.between(lo, hi);
    for (std::size_t k = 0; k < n; ++k) append(out, any_word());
    return out;
  }

  void append(std::string& text, const std::string& word) {
    if (!text.empty()) text += ' ';
    text += word;
  }

  const std::string& any_word() {
    if (!vocab_.shared.empty() && rng_.chance(0.2))
      return vocab_.shared[rng_.index(vocab_.shared.size())];
    return vocab_.normal[normal_words_.draw(rng_)];
  }

  const Script& pick_script(std::size_t position) {
    std::size_t launched = 0;
    while (launched < scripts_.size() && scripts_[launched].launch <= position) ++launched;
    launched = std::max<std::size_t>(launched, 1);
    if (rng_.chance(0.5)) return scripts_[launched - 1];
    return scripts_[rng_.index(launched)];
  }

  const std::string& script_word(const Script& s) {
    return vocab_.campaign[s.vocab_begin + rng_.index(s.vocab_end - s.vocab_begin)];
  }

  std::size_t paid_poster() { return rng_.index(cfg_.n_paid_posters); }
  std::size_t normal_asker() {
    return cfg_.n_paid_posters + rng_.index(cfg_.n_users - cfg_.n_paid_posters);
  }
  std::size_t normal_answerer() { return cfg_.n_paid_posters + normal_users_.draw(rng_); }

  void fill_normal(QASession& s, std::size_t position) {
    s.title = normal_phrase(3, 7);
    s.question_text = normal_phrase(6, 20);
    s.answer_text = normal_phrase(8, 30);
    if (rng_.chance(0.05)) {
      // Genuine discussion of an advertised product.
      const Script& sc = pick_script(position);
      append(s.answer_text, script_word(sc));
      if (rng_.chance(0.5)) append(s.answer_text, vocab_.campaign[sc.pitch.front()]);
    }
    const std::size_t asker = normal_asker();
    std::size_t answerer = rng_.chance(0.03) ? paid_poster() : normal_answerer();
    for (int retry = 0; answerer == asker && retry < 8; ++retry) answerer = normal_answerer();
    s.questioner_id = user_name(asker);
    s.answerer_id = user_name(answerer);
  }

  void fill_campaign(QASession& s, std::size_t position) {
    const Script& sc = pick_script(position);
    s.title = normal_phrase(3, 6);
    if (rng_.chance(0.5)) append(s.title, vocab_.campaign[sc.pitch.front()]);
    s.question_text = normal_phrase(6, 16);

    // Useful advice first, then the pitch.
    std::string answer = normal_phrase(5, 15);
    if (rng_.chance(0.05)) {
      append(answer, script_word(sc));
    } else {
      for (std::size_t w : sc.pitch) append(answer, vocab_.campaign[w]);
      const std::size_t extra = rng_.between(2, 6);
      for (std::size_t k = 0; k < extra; ++k) append(answer, script_word(sc));
    }
    s.answer_text = std::move(answer);

    const std::size_t asker = rng_.chance(0.85) ? paid_poster() : normal_asker();
    std::size_t answerer = rng_.chance(0.9) ? paid_poster() : normal_answerer();
    for (int retry = 0; answerer == asker && retry < 8; ++retry) answerer = paid_poster();
    s.questioner_id = user_name(asker);
    s.answerer_id = user_name(answerer);
  }

 private:
  const SyntheticConfig& cfg_;
  Rng& rng_;
  Vocabulary vocab_;
  Zipf normal_words_;
  Zipf normal_users_;
  std::vector<Script> scripts_;
};

}  // namespace

void validate(const SyntheticConfig& cfg) {
  if (cfg.total_sessions == 0) throw InvalidConfig("total_sessions must be > 0");
  if (!(cfg.campaign_fraction >= 0.0 && cfg.campaign_fraction <= 1.0))
    throw InvalidConfig("campaign_fraction must lie in [0, 1]");
  if (cfg.n_users == 0 || cfg.n_paid_posters == 0) throw InvalidConfig("user counts must be > 0");
  if (cfg.n_paid_posters >= cfg.n_users)
    throw InvalidConfig("n_paid_posters must leave at least one ordinary user");
  if (cfg.n_users > 900000) throw InvalidConfig("n_users must not exceed 900000");
  if (cfg.campaign_vocab_size == 0 || cfg.normal_vocab_size == 0 || cfg.shared_vocab_size == 0)
    throw InvalidConfig("vocabulary sizes must be > 0");
  if (cfg.template_count == 0) throw InvalidConfig("template_count must be > 0");
  if (cfg.template_count > cfg.campaign_vocab_size)
    throw InvalidConfig("template_count must not exceed campaign_vocab_size");
}

std::size_t campaign_count(const SyntheticConfig& cfg) {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.total_sessions) * cfg.campaign_fraction));
}

std::vector<QASession> generate_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.rng_seed);
  Writer writer(cfg, rng);

  const std::size_t total = cfg.total_sessions;
  const std::size_t campaigns = std::min(campaign_count(cfg), total);

  // Exactly `campaigns` positions, chosen by a partial Fisher-Yates shuffle.
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  for (std::size_t i = 0; i < campaigns; ++i) std::swap(order[i], order[i + rng.index(total - i)]);
  std::vector<bool> is_campaign(total, false);
  for (std::size_t i = 0; i < campaigns; ++i) is_campaign[order[i]] = true;

  std::vector<QASession> out;
  out.reserve(total);
  std::int64_t clock = kEpoch;
  for (std::size_t i = 0; i < total; ++i) {
    QASession s;
    char url[64];
    std::snprintf(url, sizeof url, "https://qa.example.com/question/%zu.html", 10000000 + i);
    s.url = url;

    clock += 1 + static_cast<std::int64_t>(rng.exponential(1500.0));
    s.answer_time = clock;
    const double interval = std::exp(std::log(7200.0) + 1.6 * rng.normal());
    s.ask_time = s.answer_time - static_cast<std::int64_t>(std::min(interval, 3.0e7));
    s.likes = static_cast<std::int64_t>(rng.exponential(3.0));
    s.other_answers = static_cast<std::int64_t>(rng.exponential(2.5));
    s.category = kCategories[rng.index(std::size(kCategories))];
    if (rng.chance(0.7)) s.rating = std::to_string(rng.between(1, 5));

    if (is_campaign[i]) {
      writer.fill_campaign(s, i);
      s.label = Label::Campaign;
    } else {
      writer.fill_normal(s, i);
      s.label = Label::Normal;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace cqadet
