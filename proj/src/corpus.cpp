#include "cqadet/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cqadet/errors.hpp"
#include "json.hpp"

namespace cqadet {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kFields[] = {
    "url",        "title",     "question_text", "answer_text",   "questioner_id",
    "answerer_id", "category", "ask_time",      "answer_time",   "likes",
    "other_answers", "rating", "label"};

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

std::string required_string(const Json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) throw MalformedRecord(line_no, std::string("missing field ") + key);
  if (!it->is_string()) throw MalformedRecord(line_no, std::string(key) + " must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const Json& obj, const char* key,
                                           std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw MalformedRecord(line_no, std::string(key) + " must be a string");
  return it->get<std::string>();
}

std::int64_t required_int(const Json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) throw MalformedRecord(line_no, std::string("missing field ") + key);
  if (it->is_number_unsigned()) {
    auto v = it->get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(INT64_MAX))
      throw MalformedRecord(line_no, std::string(key) + " out of range");
    return static_cast<std::int64_t>(v);
  }
  if (!it->is_number_integer())
    throw MalformedRecord(line_no, std::string(key) + " must be an integer");
  return it->get<std::int64_t>();
}

}  // namespace

Label label_from_int(long long v) {
  if (v == 0) return Label::Normal;
  if (v == 1) return Label::Campaign;
  throw DataError("label must be 0 or 1, got " + std::to_string(v));
}

std::string validate_fields(const QASession& s) {
  if (s.url.empty()) return "url is empty";
  if (s.questioner_id.empty()) return "questioner_id is empty";
  if (s.answerer_id.empty()) return "answerer_id is empty";
  if (s.likes < 0) return "likes is negative";
  if (s.other_answers < 0) return "other_answers is negative";
  return {};
}

std::string format_corpus_line(const QASession& s) {
  Json j;
  j["url"] = s.url;
  j["title"] = s.title;
  j["question_text"] = s.question_text;
  j["answer_text"] = s.answer_text;
  j["questioner_id"] = s.questioner_id;
  j["answerer_id"] = s.answerer_id;
  if (s.category) j["category"] = *s.category;
  j["ask_time"] = s.ask_time;
  j["answer_time"] = s.answer_time;
  j["likes"] = s.likes;
  j["other_answers"] = s.other_answers;
  if (s.rating) j["rating"] = *s.rating;
  if (s.label) j["label"] = to_int(*s.label);
  return j.dump();
}

QASession parse_corpus_line(std::string_view line, std::size_t line_no) {
  Json obj;
  try {
    obj = Json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedRecord(line_no, std::string("not a JSON object: ") + e.what());
  }
  if (!obj.is_object()) throw MalformedRecord(line_no, "not a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(std::begin(kFields), std::end(kFields), key) == std::end(kFields))
      throw MalformedRecord(line_no, "unknown field " + key);
  }

  QASession s;
  s.url = required_string(obj, "url", line_no);
  s.title = required_string(obj, "title", line_no);
  s.question_text = required_string(obj, "question_text", line_no);
  s.answer_text = required_string(obj, "answer_text", line_no);
  s.questioner_id = required_string(obj, "questioner_id", line_no);
  s.answerer_id = required_string(obj, "answerer_id", line_no);
  s.category = optional_string(obj, "category", line_no);
  s.ask_time = required_int(obj, "ask_time", line_no);
  s.answer_time = required_int(obj, "answer_time", line_no);
  s.likes = required_int(obj, "likes", line_no);
  s.other_answers = required_int(obj, "other_answers", line_no);
  s.rating = optional_string(obj, "rating", line_no);
  if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw MalformedRecord(line_no, "label must be 0 or 1");
    auto v = it->get<long long>();
    if (v != 0 && v != 1) throw MalformedRecord(line_no, "label must be 0 or 1");
    s.label = static_cast<Label>(v);
  }

  if (auto problem = validate_fields(s); !problem.empty()) throw MalformedRecord(line_no, problem);
  if (!time_ordered(s)) throw TimeOrderViolation(line_no);
  return s;
}

std::vector<QASession> read_corpus(std::istream& in) {
  std::vector<QASession> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    QASession s = parse_corpus_line(line, line_no);
    if (!seen.insert(s.url).second) throw DuplicateUrl(s.url);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<QASession> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return read_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const QASession> sessions) {
  for (const auto& s : sessions) out << format_corpus_line(s) << '\n';
}

void write_corpus(const std::string& path, std::span<const QASession> sessions) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus file: " + path);
  write_corpus(out, sessions);
  if (!out) throw DataError("failed writing corpus file: " + path);
}

void sort_by_close_time(std::vector<QASession>& sessions) {
  std::stable_sort(sessions.begin(), sessions.end(), [](const QASession& a, const QASession& b) {
    if (a.answer_time != b.answer_time) return a.answer_time < b.answer_time;
    return a.url < b.url;
  });
}

std::int64_t interval_post_time(const QASession& s) { return s.answer_time - s.ask_time; }

}  // namespace cqadet
