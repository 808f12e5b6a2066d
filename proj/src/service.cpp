#include "cqadet/service.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cqadet/encoding.hpp"
#include "cqadet/errors.hpp"
#include "cqadet/features.hpp"
#include "json.hpp"

namespace cqadet {

namespace {

using Json = nlohmann::ordered_json;

Response reply(int status, const Json& body) { return {status, body.dump()}; }
Response error(int status, const std::string& message) {
  return reply(status, Json{{"error", message}});
}

// Request bodies are JSON objects; the declared charset (UTF-8 when absent) is
// converted before parsing. Throws EncodingError or DataError.
Json parse_body(const Request& req) {
  const std::string charset = charset_of(req.content_type).value_or("utf-8");
  const std::string text = to_utf8(req.body, charset);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw DataError("request body is not valid JSON");
  }
  if (!j.is_object()) throw DataError("request body must be a JSON object");
  return j;
}

void allow_only(const Json& j, std::initializer_list<std::string_view> keys) {
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw DataError("unexpected field " + k);
  }
}

std::optional<std::string> token_of(const Json& body, const Request& req) {
  if (auto it = body.find("token"); it != body.end()) {
    if (!it->is_string()) throw DataError("token must be a string");
    return it->get<std::string>();
  }
  constexpr std::string_view kBearer = "Bearer ";
  if (req.authorization.rfind(kBearer, 0) == 0) return req.authorization.substr(kBearer.size());
  return std::nullopt;
}

std::string required_url(const Json& body) {
  auto it = body.find("url");
  if (it == body.end() || !it->is_string()) throw DataError("url must be a string");
  auto url = it->get<std::string>();
  if (url.empty()) throw DataError("url must not be empty");
  return url;
}

Json verdict_body(const CachedVerdict& v) {
  return Json{{"score", v.score},
              {"label", to_int(v.label)},
              {"alert", v.label == Label::Campaign},
              {"model_version", v.model_version},
              {"cold", v.model_version == 0}};
}

Json model_body(const Model& m) {
  return Json{{"version", m.version},
              {"theta", {m.theta[0], m.theta[1], m.theta[2], m.theta[3]}},
              {"threshold", m.threshold},
              {"trained_count", m.trained_count},
              {"neutral_sgtext", m.neutral_sgtext},
              {"cold", m.cold()}};
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

TokenTable TokenTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open token file: " + path.string());
  std::map<std::string, Role> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string token, role_name, extra;
    fields >> token >> role_name;
    const auto role = parse_role(role_name);
    if (token.empty() || !role || (fields >> extra))
      throw DataError("token file line " + std::to_string(line_no) + ": expected '<token> <role>'");
    tokens[token] = *role;
  }
  return TokenTable(std::move(tokens));
}

std::optional<Role> TokenTable::role_of(const std::string& token) const {
  auto it = tokens_.find(token);
  if (it == tokens_.end()) return std::nullopt;
  return it->second;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base / p;
  };

  ServiceConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("config line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "listen") cfg.listen = value;
      else if (key == "tokens") cfg.token_file = resolve(value);
      else if (key == "store_dir") cfg.store_dir = resolve(value);
      else if (key == "retrain_every") cfg.retrain_every = std::stoull(value);
      else if (key == "learning_rate") cfg.train.learning_rate = std::stod(value);
      else if (key == "max_iters") cfg.train.max_iters = std::stoull(value);
      else if (key == "tolerance") cfg.train.tolerance = std::stod(value);
      else throw DataError("unknown config key: " + key);
    } catch (const std::logic_error&) {
      throw DataError("bad value for config key " + key);
    }
  }
  return cfg;
}

Service::Service(Store& store, TokenTable tokens, ServiceConfig cfg)
    : store_(store), tokens_(std::move(tokens)), cfg_(std::move(cfg)) {
  worker_ = std::thread([this] { worker_loop(); });
}

Service::~Service() {
  {
    std::lock_guard lock(worker_mu_);
    stopping_ = true;
  }
  worker_cv_.notify_all();
  worker_.join();
}

void Service::schedule_retrain() {
  {
    std::lock_guard lock(worker_mu_);
    retrain_requested_ = true;
  }
  worker_cv_.notify_all();
}

void Service::worker_loop() {
  std::unique_lock lock(worker_mu_);
  for (;;) {
    worker_cv_.wait(lock, [this] { return stopping_ || retrain_requested_; });
    if (stopping_) return;
    retrain_requested_ = false;
    busy_ = true;
    lock.unlock();
    try {
      store_.retrain(cfg_.train);
    } catch (const DataError&) {
      // Nothing new or a single-class pool; the next label will try again.
    }
    lock.lock();
    busy_ = false;
    worker_cv_.notify_all();
  }
}

void Service::wait_idle() {
  std::unique_lock lock(worker_mu_);
  worker_cv_.wait(lock, [this] { return !retrain_requested_ && !busy_; });
}

Response Service::score_by_url(const Request& req) {
  try {
    const Json body = parse_body(req);
    allow_only(body, {"url", "token"});
    const std::string url = required_url(body);
    const auto v = store_.find_by_url(url);
    if (!v) return reply(200, Json{{"found", false}});
    return reply(200, Json{{"found", true},
                           {"score", v->score},
                           {"label", to_int(v->label)},
                           {"model_version", v->model_version}});
  } catch (const EncodingError& e) {
    return error(415, e.what());
  } catch (const DataError& e) {
    return error(400, e.what());
  }
}

Response Service::submit_session(const Request& req) {
  QASession s;
  try {
    Json body = parse_body(req);
    if (body.contains("label")) throw DataError("submissions must not carry a label");
    body.erase("token");
    s = parse_corpus_line(body.dump(), 1);
  } catch (const EncodingError& e) {
    return error(415, e.what());
  } catch (const TimeOrderViolation&) {
    return error(422, "answer_time precedes ask_time");
  } catch (const MalformedRecord& e) {
    return error(400, e.detail());
  } catch (const DataError& e) {
    return error(400, e.what());
  }

  try {
    if (auto cached = store_.find_by_url(s.url)) {
      const auto existing = store_.find_session(s.url);
      QASession stored = *existing;
      stored.label.reset();
      if (stored != s) return error(409, "url is stored with different content");
      return reply(200, verdict_body(*cached));
    }
    store_.upsert_session(s);
    const auto ctx = store_.scoring_context();
    const auto fv = feature_vector(s, ctx->counts, false, ctx->model.neutral_sgtext);
    const Verdict v = classify(ctx->model, fv);
    const CachedVerdict stored =
        store_.record_verdict(s.url, CachedVerdict{v.score, v.label, ctx->model.version});
    return reply(200, verdict_body(stored));
  } catch (const ConflictingContent& e) {
    return error(409, e.what());
  }
}

Response Service::feedback(const Request& req) {
  std::string url;
  Label label;
  std::optional<Role> role;
  try {
    const Json body = parse_body(req);
    allow_only(body, {"url", "label", "token"});
    url = required_url(body);
    const auto it = body.find("label");
    if (it == body.end() || !it->is_number_integer()) throw DataError("label must be 0 or 1");
    label = label_from_int(it->get<long long>());
    if (auto token = token_of(body, req)) role = tokens_.role_of(*token);
  } catch (const EncodingError& e) {
    return error(415, e.what());
  } catch (const DataError& e) {
    return error(400, e.what());
  }

  if (!role || !may_annotate(*role)) return error(403, "this token may not annotate sessions");
  try {
    store_.set_label(url, label, *role);
  } catch (const NotFound& e) {
    return error(404, e.what());
  }
  const auto pending = store_.labels_since_retrain();
  if (cfg_.retrain_every > 0 && pending >= cfg_.retrain_every) schedule_retrain();
  return reply(200, Json{{"accepted", true},
                         {"url", url},
                         {"label", to_int(label)},
                         {"labels_since_retrain", pending}});
}

Response Service::retrain(const Request& req) {
  std::optional<Role> role;
  try {
    const Json body = parse_body(req);
    allow_only(body, {"token"});
    if (auto token = token_of(body, req)) role = tokens_.role_of(*token);
  } catch (const EncodingError& e) {
    return error(415, e.what());
  } catch (const DataError& e) {
    return error(400, e.what());
  }
  if (role != Role::Admin) return error(403, "retraining requires the admin role");
  try {
    const RetrainResult r = store_.retrain(cfg_.train);
    return reply(200, Json{{"version", r.model.version}, {"training_size", r.training_size}});
  } catch (const NoNewLabels& e) {
    return error(409, e.what());
  } catch (const SingleClassTrainingSet& e) {
    return error(409, e.what());
  }
}

Response Service::rescore(const Request& req) {
  std::optional<Role> role;
  try {
    const Json body = parse_body(req);
    allow_only(body, {"token"});
    if (auto token = token_of(body, req)) role = tokens_.role_of(*token);
  } catch (const EncodingError& e) {
    return error(415, e.what());
  } catch (const DataError& e) {
    return error(400, e.what());
  }
  if (role != Role::Admin) return error(403, "rescoring requires the admin role");
  const std::size_t n = store_.rescore();
  return reply(200, Json{{"rescored", n}, {"model_version", store_.scoring_context()->model.version}});
}

Response Service::health() const {
  return reply(200, Json{{"status", "ok"}, {"model_version", store_.scoring_context()->model.version}});
}

Response Service::model(std::optional<std::uint64_t> version) const {
  if (!version) return reply(200, model_body(store_.scoring_context()->model));
  const auto m = store_.model_version(*version);
  if (!m) return error(404, "unknown model version");
  return reply(200, model_body(*m));
}

}  // namespace cqadet
