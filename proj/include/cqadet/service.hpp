#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "cqadet/classifier.hpp"
#include "cqadet/store.hpp"

namespace cqadet {

class TokenTable {
 public:
  TokenTable() = default;
  explicit TokenTable(std::map<std::string, Role> tokens) : tokens_(std::move(tokens)) {}

  // One "<token> <role>" pair per line; blank lines and '#' comments skipped.
  static TokenTable load(const std::filesystem::path& path);

  std::optional<Role> role_of(const std::string& token) const;

 private:
  std::map<std::string, Role> tokens_;
};

struct ServiceConfig {
  std::string listen = "127.0.0.1:8080";
  std::filesystem::path token_file;
  std::filesystem::path store_dir;  // empty: in-memory store
  std::size_t retrain_every = 200;  // 0 disables the automatic trigger
  TrainOptions train;
};

// Flat key=value file: listen, tokens, store_dir, retrain_every,
// learning_rate, max_iters, tolerance. Relative paths resolve against the
// config file's directory.
ServiceConfig load_service_config(const std::filesystem::path& path);

struct Request {
  std::string body;
  std::string content_type;
  std::string authorization;  // raw Authorization header, may be empty
};

struct Response {
  int status = 200;
  std::string body;
};

// The plugin/server protocol, independent of the HTTP transport. Response
// bodies are JSON objects with a fixed key order (see docs/API.md).
class Service {
 public:
  Service(Store& store, TokenTable tokens, ServiceConfig cfg = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response score_by_url(const Request& req);
  Response submit_session(const Request& req);
  Response feedback(const Request& req);
  Response retrain(const Request& req);
  Response rescore(const Request& req);
  Response health() const;
  Response model(std::optional<std::uint64_t> version) const;

  // Blocks until any retrain started by the automatic trigger has finished.
  void wait_idle();

  Store& store() { return store_; }

 private:
  void schedule_retrain();
  void worker_loop();

  Store& store_;
  TokenTable tokens_;
  ServiceConfig cfg_;

  std::mutex worker_mu_;
  std::condition_variable worker_cv_;
  bool retrain_requested_ = false;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace cqadet
