#include "cqadet/store.hpp"

#include <cstdio>
#include <sstream>

#include "cqadet/adaptive.hpp"
#include "cqadet/errors.hpp"
#include "cqadet/features.hpp"
#include "json.hpp"

namespace cqadet {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kSnapshotMagic = "cqadet-snapshot 1";

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

QASession without_label(QASession s) {
  s.label.reset();
  return s;
}

Json model_to_json(const Model& m) {
  return Json{{"version", m.version},
              {"theta", {m.theta[0], m.theta[1], m.theta[2], m.theta[3]}},
              {"threshold", m.threshold},
              {"trained_count", m.trained_count},
              {"neutral_sgtext", m.neutral_sgtext}};
}

Model model_from_json(const Json& j) {
  Model m;
  m.version = j.at("version").get<std::uint64_t>();
  const auto& t = j.at("theta");
  if (!t.is_array() || t.size() != 4) throw DataError("model theta must have 4 values");
  for (std::size_t k = 0; k < 4; ++k) m.theta[k] = t[k].get<double>();
  m.threshold = j.at("threshold").get<double>();
  m.trained_count = j.at("trained_count").get<std::uint64_t>();
  m.neutral_sgtext = j.at("neutral_sgtext").get<double>();
  return m;
}

// ---- pure state transitions, shared by live operations and log replay ----

bool do_upsert(StoreState& st, const QASession& s) {
  QASession fresh = without_label(s);
  if (auto problem = validate_fields(fresh); !problem.empty()) throw DataError(problem);
  if (!time_ordered(fresh)) throw DataError("answer_time precedes ask_time for " + s.url);
  auto it = st.sessions.find(fresh.url);
  if (it == st.sessions.end()) {
    st.sessions.emplace(fresh.url, std::move(fresh));
    return true;
  }
  if (without_label(it->second) != fresh)
    throw ConflictingContent("url " + s.url + " is stored with different content");
  return false;
}

// Returns true when the effective label changed.
bool do_label(StoreState& st, const std::string& url, std::optional<Label> label) {
  auto it = st.sessions.find(url);
  if (it == st.sessions.end()) throw NotFound("unknown url: " + url);
  QASession& s = it->second;
  if (s.label == label) return false;
  const WordSet words = distinct_words(s);
  CountState next = st.counts;
  if (s.label) apply_label(next, s, words, *s.label, -1);
  if (label) apply_label(next, s, words, *label, +1);
  st.counts = std::move(next);
  s.label = label;
  ++st.labels_since_retrain;
  return true;
}

void do_verdict(StoreState& st, const std::string& url, const CachedVerdict& v, bool replace) {
  if (!st.sessions.count(url)) throw NotFound("verdict for unknown url: " + url);
  if (replace)
    st.verdicts[url] = v;
  else
    st.verdicts.emplace(url, v);
}

void do_model(StoreState& st, const Model& m, std::uint64_t consumed) {
  const std::uint64_t last = st.models.empty() ? 0 : st.models.back().version;
  if (m.version <= last) throw InvariantViolation("model versions must increase");
  st.models.push_back(m);
  st.labels_since_retrain -= std::min(consumed, st.labels_since_retrain);
}

void apply_op(StoreState& st, const Json& op) {
  const auto kind = op.at("op").get<std::string>();
  if (kind == "session") {
    do_upsert(st, parse_corpus_line(op.at("session").dump(), 0));
  } else if (kind == "label") {
    const auto& l = op.at("label");
    std::optional<Label> label;
    if (!l.is_null()) label = label_from_int(l.get<long long>());
    do_label(st, op.at("url").get<std::string>(), label);
  } else if (kind == "verdict") {
    CachedVerdict v{op.at("score").get<double>(), label_from_int(op.at("label").get<long long>()),
                    op.at("version").get<std::uint64_t>()};
    do_verdict(st, op.at("url").get<std::string>(), v, op.value("replace", false));
  } else if (kind == "model") {
    do_model(st, model_from_json(op.at("model")), op.at("consumed").get<std::uint64_t>());
  } else {
    throw DataError("unknown log operation " + kind);
  }
}

std::string framed(const std::string& payload) {
  return std::to_string(payload.size()) + " " + hex16(fnv1a(payload)) + " " + payload + "\n";
}

}  // namespace

std::optional<Role> parse_role(std::string_view name) {
  if (name == "regular") return Role::Regular;
  if (name == "helper") return Role::Helper;
  if (name == "admin") return Role::Admin;
  return std::nullopt;
}

const char* to_string(Role r) {
  switch (r) {
    case Role::Regular: return "regular";
    case Role::Helper: return "helper";
    case Role::Admin: return "admin";
  }
  return "regular";
}

// ---- snapshot file ----------------------------------------------------------

void persist(const StoreState& state, const std::filesystem::path& path, std::uint64_t log_epoch) {
  std::string body;
  body += kSnapshotMagic;
  body += '\n';
  body += "sessions " + std::to_string(state.sessions.size()) + "\n";
  for (const auto& [_, s] : state.sessions) body += format_corpus_line(s) + "\n";
  body += "verdicts " + std::to_string(state.verdicts.size()) + "\n";
  for (const auto& [url, v] : state.verdicts)
    body += Json{url, v.score, to_int(v.label), v.model_version}.dump() + "\n";
  const auto& words = state.counts.words;
  body += "words " + std::to_string(words.per_word.size()) + "\n";
  body += Json{words.normal_sessions, words.campaign_sessions}.dump() + "\n";
  for (const auto& [w, c] : words.per_word) body += Json{w, c.normal, c.campaign}.dump() + "\n";
  body += "users " + std::to_string(state.counts.users.per_user.size()) + "\n";
  for (const auto& [u, c] : state.counts.users.per_user)
    body += Json{u, c.q0, c.q1, c.a0, c.a1}.dump() + "\n";
  body += "models " + std::to_string(state.models.size()) + "\n";
  for (const auto& m : state.models) body += model_to_json(m).dump() + "\n";
  body += "pending " + std::to_string(state.labels_since_retrain) + "\n";
  body += "epoch " + std::to_string(log_epoch) + "\n";
  body += "checksum " + hex16(fnv1a(body)) + "\n";

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write snapshot: " + tmp);
    out << body;
    out.flush();
    if (!out) throw DataError("failed writing snapshot: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

StoreState restore(const std::filesystem::path& path, std::uint64_t* log_epoch) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open snapshot: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  // The checksum line must be the last line and cover everything before it.
  if (text.empty() || text.back() != '\n') throw CorruptSnapshot("snapshot is truncated");
  const auto tail = text.rfind('\n', text.size() - 2);
  const std::size_t last_begin = tail == std::string::npos ? 0 : tail + 1;
  const std::string last = text.substr(last_begin, text.size() - 1 - last_begin);
  if (last.rfind("checksum ", 0) != 0) throw CorruptSnapshot("snapshot has no checksum line");
  if (last.substr(9) != hex16(fnv1a(std::string_view(text).substr(0, last_begin))))
    throw CorruptSnapshot("snapshot checksum mismatch");

  StoreState st;
  std::istringstream lines(text.substr(0, last_begin));
  std::string line;
  auto next = [&]() -> const std::string& {
    if (!std::getline(lines, line)) throw CorruptSnapshot("snapshot ends early");
    return line;
  };
  auto section = [&](const char* name) -> std::size_t {
    const std::string& l = next();
    const std::string prefix = std::string(name) + " ";
    if (l.rfind(prefix, 0) != 0) throw CorruptSnapshot(std::string("expected section ") + name);
    return std::stoull(l.substr(prefix.size()));
  };

  try {
    if (next() != kSnapshotMagic) throw CorruptSnapshot("not a snapshot file");
    for (std::size_t n = section("sessions"), i = 0; i < n; ++i) {
      QASession s = parse_corpus_line(next(), i + 1);
      const std::string url = s.url;
      if (!st.sessions.emplace(url, std::move(s)).second) throw CorruptSnapshot("duplicate url");
    }
    for (std::size_t n = section("verdicts"), i = 0; i < n; ++i) {
      const auto j = Json::parse(next());
      st.verdicts[j.at(0).get<std::string>()] = CachedVerdict{
          j.at(1).get<double>(), label_from_int(j.at(2).get<long long>()), j.at(3).get<std::uint64_t>()};
    }
    const std::size_t n_words = section("words");
    {
      const auto j = Json::parse(next());
      st.counts.words.normal_sessions = j.at(0).get<std::uint64_t>();
      st.counts.words.campaign_sessions = j.at(1).get<std::uint64_t>();
    }
    for (std::size_t i = 0; i < n_words; ++i) {
      const auto j = Json::parse(next());
      st.counts.words.per_word[j.at(0).get<std::string>()] =
          WordCount{j.at(1).get<std::uint64_t>(), j.at(2).get<std::uint64_t>()};
    }
    for (std::size_t n = section("users"), i = 0; i < n; ++i) {
      const auto j = Json::parse(next());
      st.counts.users.per_user[j.at(0).get<std::string>()] =
          UserCount{j.at(1).get<std::uint64_t>(), j.at(2).get<std::uint64_t>(),
                    j.at(3).get<std::uint64_t>(), j.at(4).get<std::uint64_t>()};
    }
    for (std::size_t n = section("models"), i = 0; i < n; ++i)
      st.models.push_back(model_from_json(Json::parse(next())));
    st.labels_since_retrain = section("pending");
    const std::uint64_t epoch = section("epoch");
    if (log_epoch) *log_epoch = epoch;
  } catch (const CorruptSnapshot&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptSnapshot(std::string("unreadable snapshot: ") + e.what());
  }

  std::vector<QASession> all;
  for (const auto& [_, s] : st.sessions) all.push_back(s);
  if (rebuild_counts(all) != st.counts) throw CorruptSnapshot("counts do not match stored labels");
  for (const auto& [url, _] : st.verdicts) {
    if (!st.sessions.count(url)) throw CorruptSnapshot("verdict for unknown url " + url);
  }
  for (std::size_t i = 1; i < st.models.size(); ++i) {
    if (st.models[i].version <= st.models[i - 1].version)
      throw CorruptSnapshot("model history out of order");
  }
  return st;
}

// ---- Store --------------------------------------------------------------------

Store::Store() : ctx_(std::make_shared<ScoringContext>()) {}

Store::Store(const std::filesystem::path& dir) : dir_(dir) {
  std::filesystem::create_directories(dir_);
  if (std::filesystem::exists(dir_ / "snapshot.dat"))
    state_ = restore(dir_ / "snapshot.dat", &epoch_);
  replay_log();
  auto ctx = std::make_shared<ScoringContext>();
  if (!state_.models.empty()) ctx->model = state_.models.back();
  ctx->counts = state_.counts;
  ctx_ = std::move(ctx);
}

Store::~Store() = default;

// The log opens with an epoch record. A log from an older epoch was already
// folded into the snapshot by a compaction that stopped before truncating it.
void Store::replay_log() {
  const auto path = dir_ / "ops.log";
  std::string text;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }

  std::size_t pos = 0;
  bool stale = false;
  bool first = true;
  while (pos < text.size()) {
    const auto sp1 = text.find(' ', pos);
    const auto sp2 = sp1 == std::string::npos ? sp1 : text.find(' ', sp1 + 1);
    if (sp2 == std::string::npos) break;  // torn header at the tail
    std::size_t len = 0;
    try {
      len = std::stoull(text.substr(pos, sp1 - pos));
    } catch (const std::exception&) {
      throw CorruptSnapshot("bad record length in operation log");
    }
    const std::size_t body = sp2 + 1;
    if (body + len + 1 > text.size()) break;  // torn record at the tail
    const std::string payload = text.substr(body, len);
    if (text.substr(sp1 + 1, sp2 - sp1 - 1) != hex16(fnv1a(payload)) || text[body + len] != '\n')
      throw CorruptSnapshot("operation log record checksum mismatch");
    try {
      const Json op = Json::parse(payload);
      if (op.at("op") == "epoch") {
        if (!first) throw DataError("epoch record inside the log");
        const auto e = op.at("epoch").get<std::uint64_t>();
        if (e > epoch_) throw DataError("operation log is newer than the snapshot");
        if (e < epoch_) {
          stale = true;
          break;
        }
      } else {
        apply_op(state_, op);
      }
    } catch (const CorruptSnapshot&) {
      throw;
    } catch (const std::exception& e) {
      throw CorruptSnapshot(std::string("bad operation log record: ") + e.what());
    }
    first = false;
    pos = body + len + 1;
  }

  if (stale || pos == 0) {
    start_log(/*truncate=*/true);
    return;
  }
  if (pos < text.size()) std::filesystem::resize_file(path, pos);
  start_log(/*truncate=*/false);
}

void Store::start_log(bool truncate) {
  log_.close();
  log_.open(dir_ / "ops.log", std::ios::binary | (truncate ? std::ios::trunc : std::ios::app));
  if (!log_) throw DataError("cannot open operation log in " + dir_.string());
  if (truncate) append_log(Json{{"op", "epoch"}, {"epoch", epoch_}}.dump());
}

void Store::append_log(const std::string& payload) {
  if (!log_.is_open()) return;
  log_ << framed(payload);
  log_.flush();
  if (!log_) throw DataError("failed appending to operation log");
}

void Store::publish(std::shared_ptr<const ScoringContext> ctx) {
  std::lock_guard lock(ctx_mu_);
  ctx_ = std::move(ctx);
}

std::shared_ptr<const ScoringContext> Store::scoring_context() const {
  std::lock_guard lock(ctx_mu_);
  return ctx_;
}

bool Store::upsert_session(const QASession& s) {
  std::unique_lock lock(mu_);
  const bool inserted = do_upsert(state_, s);
  if (inserted) {
    append_log(Json{{"op", "session"},
                    {"session", Json::parse(format_corpus_line(without_label(s)))}}
                   .dump());
  }
  return inserted;
}

void Store::ingest_labeled(std::span<const QASession> corpus) {
  std::unique_lock lock(mu_);
  StoreState next = state_;
  std::vector<std::string> ops;
  for (const auto& s : corpus) {
    if (!s.label) throw DataError("ingest_labeled needs labeled sessions: " + s.url);
    if (do_upsert(next, s)) {
      ops.push_back(Json{{"op", "session"},
                         {"session", Json::parse(format_corpus_line(without_label(s)))}}
                        .dump());
    }
    if (do_label(next, s.url, s.label))
      ops.push_back(Json{{"op", "label"}, {"url", s.url}, {"label", to_int(*s.label)}}.dump());
  }
  state_ = std::move(next);
  for (const auto& op : ops) append_log(op);
}

std::optional<QASession> Store::find_session(const std::string& url) const {
  std::shared_lock lock(mu_);
  auto it = state_.sessions.find(url);
  if (it == state_.sessions.end()) return std::nullopt;
  return it->second;
}

std::optional<CachedVerdict> Store::find_by_url(const std::string& url) const {
  std::shared_lock lock(mu_);
  auto it = state_.verdicts.find(url);
  if (it == state_.verdicts.end()) return std::nullopt;
  return it->second;
}

CachedVerdict Store::record_verdict(const std::string& url, const CachedVerdict& v) {
  std::unique_lock lock(mu_);
  if (auto it = state_.verdicts.find(url); it != state_.verdicts.end()) return it->second;
  do_verdict(state_, url, v, false);
  append_log(Json{{"op", "verdict"},
                  {"url", url},
                  {"score", v.score},
                  {"label", to_int(v.label)},
                  {"version", v.model_version}}
                 .dump());
  return v;
}

void Store::set_label(const std::string& url, Label label, Role role) {
  if (!may_annotate(role)) throw Unauthorized("role may not annotate sessions");
  std::unique_lock lock(mu_);
  if (do_label(state_, url, label))
    append_log(Json{{"op", "label"}, {"url", url}, {"label", to_int(label)}}.dump());
}

void Store::clear_label(const std::string& url, Role role) {
  if (!may_annotate(role)) throw Unauthorized("role may not annotate sessions");
  std::unique_lock lock(mu_);
  if (do_label(state_, url, std::nullopt))
    append_log(Json{{"op", "label"}, {"url", url}, {"label", nullptr}}.dump());
}

std::uint64_t Store::labels_since_retrain() const {
  std::shared_lock lock(mu_);
  return state_.labels_since_retrain;
}

RetrainResult Store::retrain(const TrainOptions& opts) {
  std::lock_guard serial(retrain_mu_);

  std::vector<PoolEntry> pool;
  CountState counts;
  std::uint64_t consumed = 0;
  std::uint64_t version = 0;
  {
    std::shared_lock lock(mu_);
    if (state_.labels_since_retrain == 0) throw NoNewLabels();
    for (const auto& [_, s] : state_.sessions) {
      if (s.label) pool.emplace_back(s);
    }
    counts = state_.counts;
    consumed = state_.labels_since_retrain;
    version = (state_.models.empty() ? 0 : state_.models.back().version) + 1;
  }

  Model m = fit_model(counts, pool, version, opts);

  std::unique_lock lock(mu_);
  do_model(state_, m, consumed);
  append_log(Json{{"op", "model"}, {"model", model_to_json(m)}, {"consumed", consumed}}.dump());
  publish(std::make_shared<ScoringContext>(ScoringContext{m, std::move(counts)}));
  return {m, pool.size()};
}

std::size_t Store::rescore() {
  std::unique_lock lock(mu_);
  const auto ctx = scoring_context();
  std::size_t n = 0;
  for (auto& [url, v] : state_.verdicts) {
    const auto fv = feature_vector(state_.sessions.at(url), ctx->counts, false,
                                   ctx->model.neutral_sgtext);
    const Verdict fresh = classify(ctx->model, fv);
    v = CachedVerdict{fresh.score, fresh.label, ctx->model.version};
    append_log(Json{{"op", "verdict"},
                    {"url", url},
                    {"score", v.score},
                    {"label", to_int(v.label)},
                    {"version", v.model_version},
                    {"replace", true}}
                   .dump());
    ++n;
  }
  return n;
}

std::optional<Model> Store::model_version(std::uint64_t version) const {
  if (version == 0) return Model{};
  std::shared_lock lock(mu_);
  for (const auto& m : state_.models) {
    if (m.version == version) return m;
  }
  return std::nullopt;
}

StoreState Store::snapshot() const {
  std::shared_lock lock(mu_);
  return state_;
}

void Store::compact() {
  if (dir_.empty()) return;
  std::unique_lock lock(mu_);
  persist(state_, dir_ / "snapshot.dat", epoch_ + 1);
  ++epoch_;
  start_log(/*truncate=*/true);
}

}  // namespace cqadet
