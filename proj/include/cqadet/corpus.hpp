#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cqadet {

enum class Label : int { Normal = 0, Campaign = 1 };

inline int to_int(Label l) { return static_cast<int>(l); }

// Throws DataError for anything other than 0 or 1.
Label label_from_int(long long v);

// One closed Q&A session. `answer_time` doubles as the close timestamp.
struct QASession {
  std::string url;
  std::string title;
  std::string question_text;
  std::string answer_text;
  std::string questioner_id;
  std::string answerer_id;
  std::optional<std::string> category;
  std::int64_t ask_time = 0;
  std::int64_t answer_time = 0;
  std::int64_t likes = 0;
  std::int64_t other_answers = 0;
  std::optional<std::string> rating;
  std::optional<Label> label;

  bool operator==(const QASession&) const = default;
};

// Empty string when valid, otherwise a description of the first violated
// invariant. Time order is reported separately by `time_ordered`.
std::string validate_fields(const QASession& s);
inline bool time_ordered(const QASession& s) { return s.answer_time >= s.ask_time; }

// Corpus line format: one JSON object per line, keys exactly the QASession
// field names. Optional fields are omitted when absent.
std::string format_corpus_line(const QASession& s);

// Parses one record. `line_no` is used only for error reporting.
QASession parse_corpus_line(std::string_view line, std::size_t line_no);

std::vector<QASession> load_corpus(const std::string& path);
std::vector<QASession> read_corpus(std::istream& in);
void write_corpus(const std::string& path, std::span<const QASession> sessions);
void write_corpus(std::ostream& out, std::span<const QASession> sessions);

// Stable sort by (answer_time, url); the replay order.
void sort_by_close_time(std::vector<QASession>& sessions);

std::int64_t interval_post_time(const QASession& s);

struct SyntheticConfig {
  std::size_t total_sessions = 4998;
  double campaign_fraction = 2147.0 / 4998.0;
  std::size_t n_users = 3000;
  std::size_t n_paid_posters = 150;
  std::size_t campaign_vocab_size = 1100;
  std::size_t normal_vocab_size = 3000;
  std::size_t shared_vocab_size = 300;
  std::size_t template_count = 11;
  std::uint64_t rng_seed = 7;
};

// Throws InvalidConfig.
void validate(const SyntheticConfig& cfg);

std::size_t campaign_count(const SyntheticConfig& cfg);

std::vector<QASession> generate_synthetic(const SyntheticConfig& cfg);

// ---- diagnostics -----------------------------------------------------------

struct CdfPoint {
  double value;
  double cumulative;
  bool operator==(const CdfPoint&) const = default;
};

using CdfTable = std::vector<CdfPoint>;

CdfTable empirical_cdf(std::span<const double> values);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

// Features with a KS distance below this do not tell the classes apart.
inline constexpr double kSeparatingKs = 0.1;

struct FeatureDiagnostic {
  std::string feature;
  CdfTable campaign;
  CdfTable normal;
  double ks = 0.0;
  bool separating = false;
};

// interval_post_time, likes and other_answers, split by label. Unlabeled
// sessions are ignored; both classes must be present.
std::vector<FeatureDiagnostic> diagnose(std::span<const QASession> corpus);

}  // namespace cqadet
