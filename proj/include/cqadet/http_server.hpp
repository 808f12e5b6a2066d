#pragma once

#include <memory>
#include <string>
#include <utility>

#include "cqadet/service.hpp"

namespace cqadet {

// "host:port" -> (host, port). Throws InvalidConfig.
std::pair<std::string, int> parse_listen(const std::string& address);

// HTTP/1.1 transport for a Service. Routes:
//   POST /score  /session  /feedback  /admin/retrain  /admin/rescore
//   GET  /health  /model[?version=N]
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port; the
  // bound port is returned.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop() is called.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cqadet
