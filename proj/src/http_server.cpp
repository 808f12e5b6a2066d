#include "cqadet/http_server.hpp"

#include <thread>

#include "cqadet/errors.hpp"
#include "httplib.h"

namespace cqadet {

std::pair<std::string, int> parse_listen(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw InvalidConfig("listen address must be host:port, got " + address);
  const std::string port_text = address.substr(colon + 1);
  if (port_text.find_first_not_of("0123456789") != std::string::npos || port_text.size() > 5)
    throw InvalidConfig("bad port in listen address " + address);
  const int port = std::stoi(port_text);
  if (port > 65535) throw InvalidConfig("bad port in listen address " + address);
  return {address.substr(0, colon), port};
}

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}

  Service& service;
  httplib::Server server;
  std::thread thread;
};

namespace {

Request to_request(const httplib::Request& req) {
  return {req.body, req.get_header_value("Content-Type"), req.get_header_value("Authorization")};
}

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json; charset=utf-8");
}

}  // namespace

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  Service& svc = impl_->service;

  srv.set_tcp_nodelay(true);

  // The browser client runs from an extension origin.
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto post = [&srv, &svc](const char* path, Response (Service::*handler)(const Request&)) {
    srv.Post(path, [&svc, handler](const httplib::Request& req, httplib::Response& res) {
      send(res, (svc.*handler)(to_request(req)));
    });
  };
  post("/score", &Service::score_by_url);
  post("/session", &Service::submit_session);
  post("/feedback", &Service::feedback);
  post("/admin/retrain", &Service::retrain);
  post("/admin/rescore", &Service::rescore);

  srv.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.health()); });
  srv.Get("/model", [&svc](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::uint64_t> version;
    if (req.has_param("version")) {
      const std::string v = req.get_param_value("version");
      if (v.empty() || v.size() > 19 || v.find_first_not_of("0123456789") != std::string::npos) {
        send(res, {400, R"({"error":"version must be a non-negative integer"})"});
        return;
      }
      version = std::stoull(v);
    }
    send(res, svc.model(version));
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    send(res, {500, R"({"error":"internal error"})"});
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw InvalidConfig("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port))
    throw InvalidConfig("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace cqadet
