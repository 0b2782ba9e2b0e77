#include <cmath>
#include <fstream>
#include <string>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "recast/recast.h"
#include "test_support.hpp"

extern "C" int capi_from_c(const char* lexicon, const char* embeddings,
                           const char* corpus, double* score_out);

namespace {

using nlohmann::json;
using recast::testing::fixture_path;
using recast::testing::golden;

// Owns a string returned by the library.
struct Owned {
  char* ptr = nullptr;
  ~Owned() { recast_string_free(ptr); }
  std::string str() const { return ptr == nullptr ? std::string() : ptr; }
};

class CApiTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(recast_backend_load(fixture_path("lexicon.tsv").c_str(),
                                  fixture_path("embeddings.txt").c_str(),
                                  fixture_path("corpus.txt").c_str(), &backend_),
              RECAST_OK);
    recast_thresholds_default(&thresholds_);
  }
  void TearDown() override { recast_backend_free(backend_); }

  recast_backend* backend_ = nullptr;
  recast_thresholds thresholds_{};
};

TEST(CApi, UsableFromC) {
  double score = 0.0;
  ASSERT_EQ(capi_from_c(fixture_path("lexicon.tsv").c_str(),
                        fixture_path("embeddings.txt").c_str(),
                        fixture_path("corpus.txt").c_str(), &score),
            1);
  EXPECT_NEAR(score, 0.26894, 1e-5);
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(recast_version(), "1.0.0");
  EXPECT_STREQ(recast_status_name(RECAST_OK), "ok");
  EXPECT_STREQ(recast_status_name(RECAST_ERR_INPUT_TOO_LARGE), "input too large");
  EXPECT_STREQ(recast_status_name(static_cast<recast_status>(999)), "unknown status");
  recast_string_free(nullptr);
}

TEST(CApi, LoadFailureSetsLastError) {
  recast_backend* b = nullptr;
  EXPECT_EQ(recast_backend_load("/nonexistent.tsv", "/x", "/y", &b), RECAST_ERR_IO);
  EXPECT_EQ(b, nullptr);
  EXPECT_NE(std::string(recast_last_error()).find("/nonexistent.tsv"), std::string::npos);
  EXPECT_EQ(recast_backend_load(nullptr, "/x", "/y", &b), RECAST_ERR_INVALID_ARGUMENT);
}

TEST_F(CApiTest, ScoresMatchService) {
  double p = 0.0;
  ASSERT_EQ(recast_score(backend_, "hello there", &p), RECAST_OK);
  EXPECT_NEAR(p, 0.01799, 1e-5);
  ASSERT_EQ(recast_score_span(backend_, "you are stupid", 2, 3, &p), RECAST_OK);
  EXPECT_NEAR(p, 0.26894, 1e-5);
  Owned body;
  ASSERT_EQ(recast_analyze_json(backend_, &thresholds_, "you are stupid", &body.ptr), RECAST_OK);
  EXPECT_EQ(body.str(), golden("score_stupid.json"));
  Owned defaults;
  ASSERT_EQ(recast_analyze_json(backend_, nullptr, "have a nice day", &defaults.ptr), RECAST_OK);
  EXPECT_EQ(defaults.str(), golden("score_neutral.json"));
}

TEST_F(CApiTest, ErrorsMapToStatuses) {
  double p = 0.0;
  EXPECT_EQ(recast_score(backend_, std::string(10'001, 'a').c_str(), &p),
            RECAST_ERR_INPUT_TOO_LARGE);
  EXPECT_EQ(recast_score(backend_, "\xff", &p), RECAST_ERR_INVALID_UTF8);
  EXPECT_EQ(recast_score(backend_, nullptr, &p), RECAST_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(recast_score(nullptr, "a", &p), RECAST_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(recast_score_span(backend_, "a b", 1, 1, &p), RECAST_ERR_SPAN_OUT_OF_BOUNDS);
  Owned body;
  EXPECT_EQ(recast_alternatives_json(backend_, &thresholds_, "a b c d e f g", 0, 6, &body.ptr),
            RECAST_ERR_SPAN_TOO_LONG);
  EXPECT_EQ(body.ptr, nullptr);
  recast_thresholds bad = thresholds_;
  bad.attn_cutoff = 2.0;
  EXPECT_EQ(recast_analyze_json(backend_, &bad, "a", &body.ptr), RECAST_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(recast_last_error()), "");
}

TEST_F(CApiTest, AlternativesJson) {
  Owned body;
  ASSERT_EQ(recast_alternatives_json(backend_, &thresholds_, "you are stupid", 2, 3, &body.ptr),
            RECAST_OK);
  const json parsed = json::parse(body.str());
  EXPECT_EQ(parsed["span"]["start_token"], 2);
  EXPECT_FALSE(parsed["candidates"].empty());
}

TEST(CApi, Statistics) {
  const double x[] = {1, 2, 3, 4};
  const double y[] = {1, 3, 2, 4};
  recast_kendall k{};
  ASSERT_EQ(recast_kendall_tau_b(x, y, 4, &k), RECAST_OK);
  EXPECT_DOUBLE_EQ(k.tau, 2.0 / 3.0);
  EXPECT_EQ(k.concordant, 5u);
  const double flat[] = {1, 1, 1, 1};
  EXPECT_EQ(recast_kendall_tau_b(flat, y, 4, &k), RECAST_ERR_UNDEFINED_CORRELATION);

  double low = 0.0, high = 0.0;
  ASSERT_EQ(recast_binomial_ci(50, 100, 1.96, &low, &high), RECAST_OK);
  EXPECT_NEAR(low, 0.402, 1e-9);
  EXPECT_NEAR(high, 0.598, 1e-9);
  EXPECT_EQ(recast_binomial_ci(0, 0, 1.96, &low, &high), RECAST_ERR_EMPTY_SAMPLE);

  const size_t a[] = {2, 0, 1, 1};
  const size_t b[] = {1, 2, 3};
  EXPECT_EQ(recast_overlap(a, 4, b, 3), 2.0 / 3.0);
  EXPECT_EQ(recast_overlap(a, 4, nullptr, 0), 0.0);

  const double source[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  const double target[] = {1, 2, 3, 4, 5};
  recast_calibration c{};
  ASSERT_EQ(recast_calibrate_cutoff(source, 5, target, 5, 0.2, &c), RECAST_OK);
  EXPECT_EQ(c.mapped_cutoff, 2.0);
  EXPECT_EQ(c.source_percentile, 0.4);
  EXPECT_EQ(recast_calibrate_cutoff(source, 0, target, 5, 0.2, &c),
            RECAST_ERR_EMPTY_DISTRIBUTION);
}

TEST(CApi, LabelsReport) {
  recast::testing::TempDir dir;
  const std::string path = dir.file("labels.csv");
  std::ofstream(path) << "id,original,edit,condition\n1,5,4,on\n2,4,2,on\n3,2,1,on\n";
  Owned text;
  Owned json_report;
  ASSERT_EQ(recast_labels_report(path.c_str(), 4.0, 1.96, &text.ptr, &json_report.ptr),
            RECAST_OK);
  EXPECT_NE(text.str().find("[on] n = 3"), std::string::npos);
  EXPECT_EQ(json::parse(json_report.str())["conditions"][0]["n"], 3);
  EXPECT_EQ(recast_labels_report(dir.file("missing.csv").c_str(), 4.0, 1.96, &text.ptr, nullptr),
            RECAST_ERR_IO);
}

TEST(CApi, ServerLifecycle) {
  recast::testing::TempDir dir;
  recast_server_config config;
  recast_server_config_default(&config);
  const std::string lexicon = fixture_path("lexicon.tsv");
  const std::string embeddings = fixture_path("embeddings.txt");
  const std::string corpus = fixture_path("corpus.txt");
  const std::string log = dir.file("feedback.jsonl");
  config.host = "127.0.0.1";
  config.port = 0;
  config.lexicon_path = lexicon.c_str();
  config.embeddings_path = embeddings.c_str();
  config.corpus_path = corpus.c_str();
  config.feedback_log_path = log.c_str();

  recast_server* server = nullptr;
  ASSERT_EQ(recast_server_create(&config, &server), RECAST_OK);
  int port = 0;
  ASSERT_EQ(recast_server_bind(server, &port), RECAST_OK);
  ASSERT_GT(port, 0);
  recast_status run_status = RECAST_ERR_INTERNAL;
  std::thread runner([&] { run_status = recast_server_run(server); });

  httplib::Client client("127.0.0.1", port);
  int health = 0;
  for (int i = 0; i < 500 && health != 200; ++i) {
    if (auto r = client.Get("/api/health")) health = r->status;
    if (health != 200) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  EXPECT_EQ(health, 200);
  auto scored = client.Post("/api/score", R"({"text": "you are stupid"})", "application/json");
  ASSERT_TRUE(scored);
  EXPECT_EQ(scored->body, golden("score_stupid.json"));
  auto fb = client.Post("/api/feedback", R"({"text": "x", "comment": "y"})", "application/json");
  ASSERT_TRUE(fb);
  EXPECT_EQ(fb->status, 200);

  recast_server_stop(server);
  runner.join();
  EXPECT_EQ(run_status, RECAST_OK);
  recast_server_free(server);
  EXPECT_EQ(recast::testing::read_lines(log).size(), 1u);

  config.lexicon_path = "/nonexistent.tsv";
  EXPECT_EQ(recast_server_create(&config, &server), RECAST_ERR_IO);
}

}  // namespace
