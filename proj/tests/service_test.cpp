#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cqadet/encoding.hpp"
#include "cqadet/errors.hpp"
#include "cqadet/service.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace cqadet {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const TrainOptions kQuick{0.1, 500, 1e-7};

TokenTable tokens() {
  return TokenTable({{"reg-token", Role::Regular}, {"help-token", Role::Helper}, {"admin-token", Role::Admin}});
}

Request json_request(const Json& body, std::string authorization = "") {
  return {body.dump(), "application/json", std::move(authorization)};
}

Json session_json(const std::string& url, const std::string& text = "hello world") {
  return Json{{"url", url},          {"title", "t"},         {"question_text", text},
              {"answer_text", "a"},  {"questioner_id", "q"}, {"answerer_id", "r"},
              {"ask_time", 100},     {"answer_time", 200},   {"likes", 0},
              {"other_answers", 1}};
}

class ServiceTest : public ::testing::Test {
 protected:
  ServiceTest() {
    ServiceConfig cfg;
    cfg.retrain_every = 0;
    cfg.train = kQuick;
    service_ = std::make_unique<Service>(store_, tokens(), cfg);
  }

  void seed_model() {
    SyntheticConfig cfg;
    cfg.total_sessions = 150;
    store_.ingest_labeled(generate_synthetic(cfg));
    store_.retrain(kQuick);
  }

  Store store_;
  std::unique_ptr<Service> service_;
};

TEST_F(ServiceTest, ScoreByUrl) {
  auto r = service_->score_by_url(json_request({{"url", "https://x/1"}}));
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, R"({"found":false})");

  EXPECT_EQ(service_->score_by_url(json_request({{"url", ""}})).status, 400);
  EXPECT_EQ(service_->score_by_url(json_request({{"link", "x"}})).status, 400);
  EXPECT_EQ(service_->score_by_url(json_request({{"url", 5}})).status, 400);
  EXPECT_EQ(service_->score_by_url({"{oops", "application/json", ""}).status, 400);
  EXPECT_EQ(service_->score_by_url({"[1]", "application/json", ""}).status, 400);
  EXPECT_EQ(service_->score_by_url(json_request({{"url", "https://x/1"}, {"token", "reg-token"}})).status, 200);
}

TEST_F(ServiceTest, ColdSubmissionThenCacheHit) {
  const auto r = service_->submit_session(json_request(session_json("https://x/1")));
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, R"({"score":0.5,"label":1,"alert":true,"model_version":0,"cold":true})");

  const auto hit = service_->score_by_url(json_request({{"url", "https://x/1"}}));
  EXPECT_EQ(hit.body, R"({"found":true,"score":0.5,"label":1,"model_version":0})");

  // Resubmission returns the cached verdict even after a new model exists.
  seed_model();
  EXPECT_EQ(service_->submit_session(json_request(session_json("https://x/1"))).body, r.body);

  const auto conflict = service_->submit_session(json_request(session_json("https://x/1", "other text")));
  EXPECT_EQ(conflict.status, 409);
}

TEST_F(ServiceTest, SubmissionIsScoredAgainstThePublishedContext) {
  seed_model();
  const Json body = session_json("https://x/2", "bacu bafi kare");
  const auto r = service_->submit_session(json_request(body));
  ASSERT_EQ(r.status, 200);
  const auto ctx = store_.scoring_context();
  const QASession s = parse_corpus_line(body.dump(), 1);
  const Verdict v = classify(ctx->model, feature_vector(s, ctx->counts, false, ctx->model.neutral_sgtext));
  const Json expected{{"score", v.score},
                      {"label", to_int(v.label)},
                      {"alert", v.label == Label::Campaign},
                      {"model_version", 1},
                      {"cold", false}};
  EXPECT_EQ(r.body, expected.dump());
  EXPECT_EQ(store_.find_session("https://x/2"), s);
}

TEST_F(ServiceTest, SubmissionValidation) {
  Json labeled = session_json("https://x/3");
  labeled["label"] = 1;
  EXPECT_EQ(service_->submit_session(json_request(labeled)).status, 400);

  Json missing = session_json("https://x/3");
  missing.erase("answerer_id");
  EXPECT_EQ(service_->submit_session(json_request(missing)).status, 400);

  Json backwards = session_json("https://x/3");
  backwards["answer_time"] = 50;
  const auto r = service_->submit_session(json_request(backwards));
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body, R"({"error":"answer_time precedes ask_time"})");

  Json empty_url = session_json("");
  EXPECT_EQ(service_->submit_session(json_request(empty_url)).status, 400);
  EXPECT_FALSE(store_.find_session("https://x/3").has_value());
}

TEST_F(ServiceTest, EncodingHandling) {
  const std::string utf8_text = "\xE5\x87\x8F\xE8\x82\xA5\xE8\x8C\xB6 tea";
  const std::string body = session_json("https://x/gb", utf8_text).dump();
  const std::string gb = from_utf8(body, "gb2312");
  ASSERT_NE(gb, body);

  // Undeclared charset: the body must be UTF-8.
  EXPECT_EQ(service_->submit_session({gb, "application/json", ""}).status, 415);
  EXPECT_EQ(service_->submit_session({gb, "application/json; charset=klingon", ""}).status, 415);
  EXPECT_FALSE(store_.find_session("https://x/gb").has_value());

  const auto r = service_->submit_session({gb, "application/json; charset=GB2312", ""});
  EXPECT_EQ(r.status, 200);
  const auto stored = store_.find_session("https://x/gb");
  ASSERT_TRUE(stored);
  EXPECT_EQ(stored->question_text, utf8_text);
  EXPECT_EQ(distinct_words(*stored), distinct_words(parse_corpus_line(body, 1)));
}

TEST_F(ServiceTest, FeedbackRoles) {
  service_->submit_session(json_request(session_json("https://x/4")));
  const Json fb{{"url", "https://x/4"}, {"label", 1}};

  EXPECT_EQ(service_->feedback(json_request(fb)).status, 403);
  EXPECT_EQ(service_->feedback(json_request(fb, "Bearer reg-token")).status, 403);
  EXPECT_EQ(service_->feedback(json_request(fb, "Bearer nobody")).status, 403);
  Json with_token = fb;
  with_token["token"] = "reg-token";
  const auto denied = service_->feedback(json_request(with_token));
  EXPECT_EQ(denied.status, 403);
  EXPECT_EQ(denied.body, R"({"error":"this token may not annotate sessions"})");
  EXPECT_EQ(store_.snapshot().counts, CountState{});

  with_token["token"] = "help-token";
  const auto ok = service_->feedback(json_request(with_token));
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.body, R"({"accepted":true,"url":"https://x/4","label":1,"labels_since_retrain":1})");
  EXPECT_EQ(store_.find_session("https://x/4")->label, Label::Campaign);
  EXPECT_EQ(store_.snapshot().counts.words.campaign_sessions, 1u);

  EXPECT_EQ(service_->feedback(json_request({{"url", "https://x/none"}, {"label", 0}}, "Bearer admin-token")).status,
            404);
  EXPECT_EQ(service_->feedback(json_request({{"url", "https://x/4"}, {"label", 2}}, "Bearer admin-token")).status,
            400);
  EXPECT_EQ(service_->feedback(json_request({{"url", "https://x/4"}}, "Bearer admin-token")).status, 400);
}

TEST_F(ServiceTest, RetrainAndModelInspection) {
  seed_model();
  EXPECT_EQ(service_->retrain(json_request({{"token", "help-token"}})).status, 403);
  EXPECT_EQ(service_->retrain(json_request(Json::object())).status, 403);
  const auto none = service_->retrain(json_request({{"token", "admin-token"}}));
  EXPECT_EQ(none.status, 409);

  service_->submit_session(json_request(session_json("https://x/5")));
  service_->feedback(json_request({{"url", "https://x/5"}, {"label", 1}}, "Bearer help-token"));
  const auto r = service_->retrain(json_request(Json::object(), "Bearer admin-token"));
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, R"({"version":2,"training_size":151})");

  const Model m = *store_.model_version(2);
  const Json expected{{"version", 2},
                      {"theta", {m.theta[0], m.theta[1], m.theta[2], m.theta[3]}},
                      {"threshold", 0.5},
                      {"trained_count", 151},
                      {"neutral_sgtext", m.neutral_sgtext},
                      {"cold", false}};
  EXPECT_EQ(service_->model(std::nullopt).body, expected.dump());
  EXPECT_EQ(service_->model(2).body, expected.dump());
  EXPECT_EQ(service_->model(0).body,
            R"({"version":0,"theta":[0.0,0.0,0.0,0.0],"threshold":0.5,"trained_count":0,"neutral_sgtext":0.0,"cold":true})");
  EXPECT_EQ(service_->model(9).status, 404);
  EXPECT_EQ(service_->health().body, R"({"status":"ok","model_version":2})");
}

TEST_F(ServiceTest, SingleClassRetrainIsAConflict) {
  service_->submit_session(json_request(session_json("https://x/6")));
  service_->feedback(json_request({{"url", "https://x/6"}, {"label", 0}}, "Bearer help-token"));
  EXPECT_EQ(service_->retrain(json_request({{"token", "admin-token"}})).status, 409);
}

TEST_F(ServiceTest, RescoreIsAdminOnly) {
  service_->submit_session(json_request(session_json("https://x/7")));
  seed_model();
  EXPECT_EQ(service_->rescore(json_request({{"token", "help-token"}})).status, 403);
  const auto r = service_->rescore(json_request({{"token", "admin-token"}}));
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, R"({"rescored":1,"model_version":1})");
  EXPECT_EQ(store_.find_by_url("https://x/7")->model_version, 1u);
}

TEST(ServiceAutoRetrain, TriggersAfterKLabels) {
  Store store;
  SyntheticConfig gen;
  gen.total_sessions = 100;
  store.ingest_labeled(generate_synthetic(gen));
  store.retrain(kQuick);

  ServiceConfig cfg;
  cfg.retrain_every = 3;
  cfg.train = kQuick;
  Service service(store, tokens(), cfg);
  for (int i = 0; i < 3; ++i) {
    const std::string url = "https://x/auto" + std::to_string(i);
    service.submit_session(json_request(session_json(url, "text " + std::to_string(i))));
    service.feedback(json_request({{"url", url}, {"label", i % 2}}, "Bearer help-token"));
    if (i < 2) {
      service.wait_idle();
      EXPECT_EQ(store.scoring_context()->model.version, 1u);
    }
  }
  service.wait_idle();
  EXPECT_EQ(store.scoring_context()->model.version, 2u);
  EXPECT_EQ(store.labels_since_retrain(), 0u);
}

TEST(ServiceConfigFile, ParsesAndResolvesPaths) {
  const fs::path dir = fs::temp_directory_path() / ("cqadet-cfg-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream(dir / "svc.conf") << "# service\nlisten = 0.0.0.0:9000\ntokens=tokens.txt\n"
                                       "store_dir=/var/lib/x\nretrain_every=50\nlearning_rate=0.2\n"
                                       "max_iters=100\ntolerance=1e-6\n";
    std::ofstream(dir / "tokens.txt") << "# token role\nabc helper\n\nxyz admin\n";
    std::ofstream(dir / "bad.conf") << "colour=blue\n";
    std::ofstream(dir / "bad_tokens.txt") << "abc superuser\n";
  }
  const ServiceConfig cfg = load_service_config(dir / "svc.conf");
  EXPECT_EQ(cfg.listen, "0.0.0.0:9000");
  EXPECT_EQ(cfg.token_file, dir / "tokens.txt");
  EXPECT_EQ(cfg.store_dir, fs::path("/var/lib/x"));
  EXPECT_EQ(cfg.retrain_every, 50u);
  EXPECT_DOUBLE_EQ(cfg.train.learning_rate, 0.2);
  EXPECT_EQ(cfg.train.max_iters, 100u);
  EXPECT_DOUBLE_EQ(cfg.train.tolerance, 1e-6);

  const TokenTable t = TokenTable::load(cfg.token_file);
  EXPECT_EQ(t.role_of("abc"), Role::Helper);
  EXPECT_EQ(t.role_of("xyz"), Role::Admin);
  EXPECT_FALSE(t.role_of("nope").has_value());

  EXPECT_THROW(load_service_config(dir / "bad.conf"), DataError);
  EXPECT_THROW(TokenTable::load(dir / "bad_tokens.txt"), DataError);
  EXPECT_THROW(load_service_config(dir / "missing.conf"), DataError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cqadet
