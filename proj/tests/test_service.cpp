#include <sys/stat.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <future>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "recast/error.hpp"
#include "recast/service.hpp"
#include "test_support.hpp"

namespace recast {
namespace {

using json = nlohmann::json;
using testing::fixture_path;

ServiceConfig fixture_config(const testing::TempDir& dir) {
  ServiceConfig c;
  c.host = "127.0.0.1";
  c.port = 0;
  c.lexicon_path = fixture_path("lexicon.tsv");
  c.embeddings_path = fixture_path("embeddings.txt");
  c.corpus_path = fixture_path("corpus.txt");
  c.feedback_log_path = dir.file("feedback.jsonl");
  return c;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    service_ = std::make_unique<Service>(fixture_config(dir_));
    service_->use_backend(backend());
  }

  static std::shared_ptr<ReferenceBackend> backend() {
    static const auto shared = testing::fixture_backend();
    return shared;
  }

  HttpResult post(const std::string& path, const json& body) {
    return service_->handle("POST", path, body.dump());
  }

  testing::TempDir dir_;
  std::unique_ptr<Service> service_;
};

TEST_F(ServiceTest, ScoreGoldens) {
  EXPECT_EQ(post("/api/score", {{"text", "have a nice day"}}).body,
            testing::golden("score_neutral.json"));
  EXPECT_EQ(post("/api/score", {{"text", ""}}).body, testing::golden("score_empty.json"));
  const auto r = post("/api/score", {{"text", "you are stupid"}});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, testing::golden("score_stupid.json"));
  const json body = json::parse(r.body);
  EXPECT_EQ(body["score_0_100"], 26.894);
  EXPECT_EQ(body["tokens"][2]["attention"], 1.0);
  EXPECT_EQ(body["tokens"][2]["highlighted"], true);
}

TEST_F(ServiceTest, RoundingIsThreeDecimals) {
  EXPECT_EQ(round3(1.7986209962091559), 1.799);
  EXPECT_EQ(round3(26.894142136999512), 26.894);
  EXPECT_EQ(round3(0.0), 0.0);
  EXPECT_EQ(round3(100.0), 100.0);
}

TEST_F(ServiceTest, AlternativesForStupid) {
  const auto r = post("/api/alternatives",
                      {{"text", "you are stupid"},
                       {"span", {{"start_token", 2}, {"end_token", 3}}}});
  ASSERT_EQ(r.status, 200);
  const json body = json::parse(r.body);
  EXPECT_EQ(body["text"], "stupid");
  EXPECT_EQ(body["original_score_0_100"], 26.894);
  const auto& candidates = body["candidates"];
  ASSERT_FALSE(candidates.empty());
  EXPECT_EQ(candidates[0]["resulting_score_0_100"], 1.799);
  bool foolish = false;
  for (const auto& c : candidates) {
    EXPECT_LT(c["resulting_score_0_100"].get<double>(), 26.894);
    EXPECT_LT(c["individual_score_0_100"].get<double>(), 40.0);
    if (c["replacement"] == "foolish") {
      foolish = true;
      EXPECT_EQ(c["source"], "both");
    }
  }
  EXPECT_TRUE(foolish);
}

TEST_F(ServiceTest, ScoreSpan) {
  const auto span = [&](std::size_t a, std::size_t b) {
    return json::parse(post("/api/score-span",
                            {{"text", "you are stupid"},
                             {"span", {{"start_token", a}, {"end_token", b}}}})
                           .body)["score_0_100"];
  };
  EXPECT_EQ(span(2, 3), 26.894);
  EXPECT_EQ(span(0, 2), 1.799);
  EXPECT_EQ(span(0, 3), json::parse(post("/api/score", {{"text", "you are stupid"}}).body)["score_0_100"]);
}

TEST_F(ServiceTest, ErrorStatuses) {
  const auto status = [&](const std::string& path, const std::string& body) {
    return service_->handle("POST", path, body).status;
  };
  EXPECT_EQ(status("/api/score", "not json"), 400);
  EXPECT_EQ(status("/api/score", "[1,2]"), 400);
  EXPECT_EQ(status("/api/score", R"({"txt": "a"})"), 400);
  EXPECT_EQ(status("/api/score", R"({"text": 5})"), 400);
  EXPECT_EQ(status("/api/score", json{{"text", std::string(10'001, 'a')}}.dump()), 413);
  EXPECT_EQ(status("/api/score", json{{"text", std::string(10'000, 'a')}}.dump()), 200);
  EXPECT_EQ(status("/api/score", "{\"text\": \"\\udc00\"}"), 400);
  EXPECT_EQ(status("/api/alternatives", R"({"text": "a b", "span": {"start_token": 1, "end_token": 1}})"), 422);
  EXPECT_EQ(status("/api/alternatives", R"({"text": "a b", "span": {"start_token": 0, "end_token": 3}})"), 422);
  EXPECT_EQ(status("/api/alternatives", R"({"text": "a b c d e f", "span": {"start_token": 0, "end_token": 6}})"), 422);
  EXPECT_EQ(status("/api/alternatives", R"({"text": "a b", "span": {"start_token": -1, "end_token": 1}})"), 422);
  EXPECT_EQ(status("/api/alternatives", R"({"text": "a b"})"), 422);
  EXPECT_EQ(status("/api/score-span", R"({"text": "a b", "span": {"start_token": 2, "end_token": 1}})"), 422);
  EXPECT_EQ(status("/api/feedback", R"({"text": "a", "comment": ""})"), 422);
  EXPECT_EQ(status("/api/feedback", json{{"text", "a"}, {"comment", std::string(5001, 'c')}}.dump()), 422);
  EXPECT_EQ(status("/api/nope", "{}"), 404);
  EXPECT_EQ(service_->handle("GET", "/api/score", "").status, 405);
  EXPECT_EQ(service_->handle("POST", "/api/health", "").status, 405);
  const json err = json::parse(service_->handle("POST", "/api/score", "{").body);
  EXPECT_TRUE(err.contains("error"));
  EXPECT_TRUE(err.contains("message"));
}

TEST_F(ServiceTest, HealthReportsVocabularySizes) {
  const auto r = service_->handle("GET", "/api/health", "");
  ASSERT_EQ(r.status, 200);
  const json body = json::parse(r.body);
  EXPECT_EQ(body["status"], "ok");
  EXPECT_EQ(body["backend"], "reference");
  // Line counts of the fixture files.
  const auto lines = [](const char* name) {
    std::size_t n = 0;
    for (const auto& l : testing::read_lines(fixture_path(name))) {
      if (!l.empty() && l[0] != '#') ++n;
    }
    return n;
  };
  EXPECT_EQ(body["vocab_sizes"]["lexicon"], lines("lexicon.tsv"));
  EXPECT_EQ(body["vocab_sizes"]["embeddings"], lines("embeddings.txt"));
  EXPECT_EQ(body["vocab_sizes"]["corpus_lines"], lines("corpus.txt"));
}

TEST(ServiceStartup, HealthIs503UntilLoaded) {
  testing::TempDir dir;
  Service service(fixture_config(dir));
  EXPECT_FALSE(service.ready());
  const auto r = service.handle("GET", "/api/health", "");
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(json::parse(r.body)["status"], "loading");
  EXPECT_EQ(service.handle("POST", "/api/score", R"({"text": "a"})").status, 503);
  service.load_backend();
  EXPECT_TRUE(service.ready());
  EXPECT_EQ(service.handle("GET", "/api/health", "").status, 200);
}

TEST_F(ServiceTest, FeedbackAppendsEscapedRecord) {
  const std::string path = dir_.file("feedback.jsonl");
  const auto r = post("/api/feedback", {{"text", "you are stupid"},
                                        {"comment", "line one\nline \"two\""}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(json::parse(r.body), json({{"accepted", true}}));
  const auto lines = testing::read_lines(path);
  ASSERT_EQ(lines.size(), 1u);
  const json record = json::parse(lines[0]);
  EXPECT_EQ(record["comment"], "line one\nline \"two\"");
  EXPECT_EQ(record["text"], "you are stupid");
  EXPECT_EQ(record["score_0_100"], 26.894);
  const std::string ts = record["timestamp"];
  EXPECT_EQ(ts.size(), 24u);
  EXPECT_EQ(ts.back(), 'Z');
  EXPECT_EQ(ts[10], 'T');
  ASSERT_EQ(post("/api/feedback", {{"text", ""}, {"comment", "again"}}).status, 200);
  EXPECT_EQ(testing::read_lines(path).size(), 2u);
}

TEST_F(ServiceTest, ConcurrentFeedbackLinesStayIntact) {
  std::vector<std::thread> threads;
  std::atomic<int> accepted{0};
  for (int t = 0; t < 40; ++t) {
    threads.emplace_back([&, t] {
      const std::string comment = "comment " + std::to_string(t) + " " + std::string(300, 'x');
      if (post("/api/feedback", {{"text", "text " + std::to_string(t)}, {"comment", comment}})
              .status == 200) {
        ++accepted;
      }
    });
  }
  for (auto& t : threads) t.join();
  const auto lines = testing::read_lines(dir_.file("feedback.jsonl"));
  EXPECT_EQ(accepted.load(), 40);
  ASSERT_EQ(lines.size(), 40u);
  std::set<std::string> texts;
  for (const auto& l : lines) texts.insert(json::parse(l)["text"].get<std::string>());
  EXPECT_EQ(texts.size(), 40u);
}

TEST(FeedbackLog, UnwritablePathIsIoError) {
  FeedbackLog log("/nonexistent-dir/feedback.jsonl", 4);
  EXPECT_EQ(log.append("{}"), FeedbackLog::Status::kIoError);
  EXPECT_THROW(log.append("a\nb"), Error);
}

TEST(FeedbackLog, FullQueueRejectsWithoutBlocking) {
  testing::TempDir dir;
  const std::string fifo = dir.file("feedback.fifo");
  ASSERT_EQ(::mkfifo(fifo.c_str(), 0600), 0);
  FeedbackLog log(fifo, 1);
  const auto append = [&log](int n) {
    return std::async(std::launch::async, [&log, n] {
      return log.append("{\"n\":" + std::to_string(n) + "}");
    });
  };
  const auto pause = [] { std::this_thread::sleep_for(std::chrono::milliseconds(200)); };
  // The writer takes the first record and blocks opening the FIFO until a
  // reader appears; the second record then fills the queue.
  auto first = append(1);
  pause();
  auto second = append(2);
  pause();
  auto third = append(3);
  pause();

  std::ifstream reader(fifo);
  std::string line;
  int lines = 0;
  while (lines < 2 && std::getline(reader, line)) ++lines;
  if (third.wait_for(std::chrono::seconds(1)) != std::future_status::ready) {
    std::getline(reader, line);  // third was queued after all; drain it
  }
  EXPECT_EQ(third.get(), FeedbackLog::Status::kQueueFull);
  EXPECT_EQ(first.get(), FeedbackLog::Status::kAccepted);
  EXPECT_EQ(second.get(), FeedbackLog::Status::kAccepted);
  EXPECT_EQ(lines, 2);
}

TEST(FeedbackLog, UnwritableLogMapsTo500) {
  testing::TempDir dir;
  ServiceConfig c = fixture_config(dir);
  c.feedback_log_path = "/nonexistent-dir/feedback.jsonl";
  Service service(c);
  service.use_backend(std::make_shared<testing::ConstantBackend>(0.5));
  EXPECT_EQ(service.handle("POST", "/api/feedback", R"({"text": "a", "comment": "b"})").status,
            500);
}

TEST(ServiceConfig, EnvironmentOverridesFields) {
  ServiceConfig c;
  c.port = 9000;
  const std::map<std::string, std::string> env{
      {"RECAST_PORT", "8123"},         {"RECAST_ATTN_CUTOFF", "0.3"},
      {"RECAST_KNN", "4"},             {"RECAST_MLM_TOPK", "7"},
      {"RECAST_ALT_TOXICITY_MAX", "0.5"}, {"RECAST_FEEDBACK_LOG", "/tmp/x.jsonl"},
      {"RECAST_CORS_ORIGINS", "http://a.test, http://b.test"},
      {"RECAST_LEXICON", "lex.tsv"}};
  c.apply_environment([&](const std::string& name) -> std::optional<std::string> {
    const auto it = env.find(name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  });
  EXPECT_EQ(c.port, 8123);
  EXPECT_EQ(c.thresholds.attn_cutoff, 0.3);
  EXPECT_EQ(c.thresholds.knn, 4u);
  EXPECT_EQ(c.thresholds.mlm_topk, 7u);
  EXPECT_EQ(c.thresholds.alt_toxicity_max, 0.5);
  EXPECT_EQ(c.feedback_log_path, "/tmp/x.jsonl");
  EXPECT_EQ(c.lexicon_path, "lex.tsv");
  EXPECT_EQ(c.cors_origins, (std::vector<std::string>{"http://a.test", "http://b.test"}));
  EXPECT_EQ(c.host, "0.0.0.0");

  const auto bad = [](const char* name, const char* value) {
    ServiceConfig d;
    d.apply_environment([&](const std::string& n) -> std::optional<std::string> {
      if (n == name) return std::string(value);
      return std::nullopt;
    });
    d.validate();
  };
  EXPECT_THROW(bad("RECAST_PORT", "80x"), Error);
  EXPECT_THROW(bad("RECAST_PORT", "70000"), Error);
  EXPECT_THROW(bad("RECAST_KNN", "0"), Error);
  EXPECT_THROW(bad("RECAST_ATTN_CUTOFF", "1.5"), Error);
}

TEST(ServiceConfig, ModelPathsChecked) {
  ServiceConfig c;
  EXPECT_THROW(c.check_model_paths(), Error);
  c.lexicon_path = fixture_path("lexicon.tsv");
  c.embeddings_path = fixture_path("embeddings.txt");
  c.corpus_path = fixture_path("corpus.txt");
  EXPECT_NO_THROW(c.check_model_paths());
}

TEST_F(ServiceTest, CrossEndpointConsistency) {
  testing::DocumentFuzzer fuzz(testing::fixture_vocabulary(*backend()), 7);
  int highlighted = 0;
  for (int n = 0; n < 40; ++n) {
    const std::string text = fuzz.next();
    const json scored = json::parse(post("/api/score", {{"text", text}}).body);
    const double before = scored["score_0_100"];
    const auto& tokens = scored["tokens"];
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto r = post("/api/alternatives",
                          {{"text", text}, {"span", {{"start_token", i}, {"end_token", i + 1}}}});
      ASSERT_EQ(r.status, 200);
      const json alts = json::parse(r.body);
      if (tokens[i]["highlighted"] == true) {
        ++highlighted;
        ASSERT_FALSE(alts["candidates"].empty()) << text << " token " << i;
      }
      // End-to-end safeguard: the edited text re-scores strictly lower.
      for (const auto& c : alts["candidates"]) {
        const Document doc = tokenize(text);
        const Document edited =
            apply_replacement(doc, {i, i + 1}, c["replacement"].get<std::string>());
        const double after =
            json::parse(post("/api/score", {{"text", edited.raw()}}).body)["score_0_100"];
        ASSERT_LT(backend()->score(edited.raw()), backend()->score(text));
        ASSERT_LE(after, before);
      }
    }
  }
  EXPECT_GT(highlighted, 0);
}

TEST_F(ServiceTest, RestartGivesIdenticalBytes) {
  const std::vector<std::string> texts{"have a nice day", "", "you are stupid",
                                       "You IDIOT, that's garbage!"};
  std::vector<std::string> first;
  for (const auto& t : texts) first.push_back(post("/api/score", {{"text", t}}).body);
  service_.reset();
  testing::TempDir other;
  Service restarted(fixture_config(other));
  restarted.load_backend();
  for (std::size_t i = 0; i < texts.size(); ++i) {
    EXPECT_EQ(restarted.handle("POST", "/api/score", json{{"text", texts[i]}}.dump()).body,
              first[i]);
  }
}

TEST_F(ServiceTest, HttpRoundTripWithCors) {
  const int port = service_->start();
  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");

  auto scored = client.Post("/api/score", R"({"text": "you are stupid"})", "application/json");
  ASSERT_TRUE(scored);
  EXPECT_EQ(scored->status, 200);
  EXPECT_EQ(scored->body, testing::golden("score_stupid.json"));
  EXPECT_EQ(scored->get_header_value("Content-Type"), "application/json");

  auto preflight = client.Options("/api/score");
  ASSERT_TRUE(preflight);
  EXPECT_EQ(preflight->status, 204);
  EXPECT_NE(preflight->get_header_value("Access-Control-Allow-Methods").find("POST"),
            std::string::npos);

  auto missing = client.Post("/api/unknown", "{}", "application/json");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto wrong = client.Get("/api/score");
  ASSERT_TRUE(wrong);
  EXPECT_EQ(wrong->status, 405);
  service_->stop();
}

TEST(ServiceHttp, CorsAllowlist) {
  testing::TempDir dir;
  ServiceConfig c = fixture_config(dir);
  c.cors_origins = {"http://ui.test"};
  Service service(c);
  service.use_backend(std::make_shared<testing::ConstantBackend>(0.5));
  const int port = service.start();
  httplib::Client client("127.0.0.1", port);
  auto allowed = client.Get("/api/health", {{"Origin", "http://ui.test"}});
  ASSERT_TRUE(allowed);
  EXPECT_EQ(allowed->get_header_value("Access-Control-Allow-Origin"), "http://ui.test");
  auto denied = client.Get("/api/health", {{"Origin", "http://evil.test"}});
  ASSERT_TRUE(denied);
  EXPECT_FALSE(denied->has_header("Access-Control-Allow-Origin"));
  service.stop();
}

}  // namespace
}  // namespace recast
