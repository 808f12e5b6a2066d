#include <gtest/gtest.h>

#include "cqadet/errors.hpp"
#include "cqadet/http_server.hpp"
#include "httplib.h"

namespace cqadet {
namespace {

TEST(ParseListen, HostAndPort) {
  EXPECT_EQ(parse_listen("127.0.0.1:8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_listen("::1:0"), (std::pair<std::string, int>{"::1", 0}));
  EXPECT_THROW(parse_listen("localhost"), InvalidConfig);
  EXPECT_THROW(parse_listen(":80"), InvalidConfig);
  EXPECT_THROW(parse_listen("host:"), InvalidConfig);
  EXPECT_THROW(parse_listen("host:http"), InvalidConfig);
  EXPECT_THROW(parse_listen("host:70000"), InvalidConfig);
}

class HttpTest : public ::testing::Test {
 protected:
  HttpTest()
      : service_(store_, TokenTable({{"h", Role::Helper}, {"a", Role::Admin}}), config()),
        server_(service_),
        port_(server_.start("127.0.0.1", 0)),
        client_("127.0.0.1", port_) {}

  static ServiceConfig config() {
    ServiceConfig cfg;
    cfg.retrain_every = 0;
    return cfg;
  }

  Store store_;
  Service service_;
  HttpServer server_;
  int port_;
  httplib::Client client_;
};

TEST_F(HttpTest, RoutesAndHeaders) {
  auto health = client_.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->body, R"({"status":"ok","model_version":0})");
  EXPECT_EQ(health->get_header_value("Content-Type"), "application/json; charset=utf-8");
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");

  auto miss = client_.Post("/score", R"({"url":"https://x/1"})", "application/json");
  ASSERT_TRUE(miss);
  EXPECT_EQ(miss->body, R"({"found":false})");

  auto preflight = client_.Options("/session");
  ASSERT_TRUE(preflight);
  EXPECT_EQ(preflight->status, 204);
  EXPECT_EQ(preflight->get_header_value("Access-Control-Allow-Headers"), "Content-Type, Authorization");

  auto model = client_.Get("/model?version=0");
  ASSERT_TRUE(model);
  EXPECT_EQ(model->status, 200);
  auto bad_version = client_.Get("/model?version=abc");
  ASSERT_TRUE(bad_version);
  EXPECT_EQ(bad_version->status, 400);
  auto unknown = client_.Get("/nowhere");
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);
}

TEST_F(HttpTest, BearerHeaderCarriesTheRole) {
  const std::string session =
      R"({"url":"https://x/2","title":"t","question_text":"q","answer_text":"a","questioner_id":"u1",)"
      R"("answerer_id":"u2","ask_time":1,"answer_time":2,"likes":0,"other_answers":0})";
  ASSERT_EQ(client_.Post("/session", session, "application/json")->status, 200);
  httplib::Headers auth = {{"Authorization", "Bearer h"}};
  auto fb = client_.Post("/feedback", auth, R"({"url":"https://x/2","label":0})", "application/json");
  ASSERT_TRUE(fb);
  EXPECT_EQ(fb->status, 200);
  auto retrain = client_.Post("/admin/retrain", auth, "{}", "application/json");
  ASSERT_TRUE(retrain);
  EXPECT_EQ(retrain->status, 403);
}

}  // namespace
}  // namespace cqadet
