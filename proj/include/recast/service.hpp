#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recast/alternatives.hpp"
#include "recast/backend.hpp"
#include "recast/explanation.hpp"

namespace recast {

inline constexpr std::size_t kMaxCommentBytes = 5'000;

struct ServiceConfig {
  std::string host = "0.0.0.0";
  int port = 8080;  // 0 binds an ephemeral port
  std::string lexicon_path;
  std::string embeddings_path;
  std::string corpus_path;
  std::string feedback_log_path = "feedback.jsonl";
  Thresholds thresholds;
  std::vector<std::string> cors_origins{"*"};
  std::size_t feedback_queue_capacity = 1024;

  // RECAST_PORT, RECAST_LEXICON, RECAST_EMBEDDINGS, RECAST_CORPUS,
  // RECAST_FEEDBACK_LOG, RECAST_ATTN_CUTOFF, RECAST_ALT_TOXICITY_MAX,
  // RECAST_KNN, RECAST_MLM_TOPK, RECAST_HOST, RECAST_CORS_ORIGINS (comma
  // separated). Set variables win over whatever the fields already hold.
  void apply_environment(
      const std::function<std::optional<std::string>(const std::string&)>&
          lookup);
  void apply_environment();

  void validate() const;
  // Throws kIo unless every model file can be opened.
  void check_model_paths() const;
};

// Response values are rounded to three decimals so that identical requests
// serialise to identical bytes.
double round3(double value) noexcept;

nlohmann::json score_response(const Document& doc, const Backend& backend,
                              const Thresholds& thresholds);
nlohmann::json suggestion_json(const SuggestionSet& suggestions,
                               const Document& doc);

// Append-only JSON-lines log fed through one writer thread. append() blocks
// until the record is fsynced.
class FeedbackLog {
 public:
  enum class Status { kAccepted, kQueueFull, kIoError, kClosed };

  FeedbackLog(std::string path, std::size_t capacity);
  ~FeedbackLog();
  FeedbackLog(const FeedbackLog&) = delete;
  FeedbackLog& operator=(const FeedbackLog&) = delete;

  Status append(std::string line);
  const std::string& path() const noexcept;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::string utc_timestamp_rfc3339();

struct HttpResult {
  int status = 200;
  std::string body;
};

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const noexcept;

  // Loads the reference backend from the configured paths.
  void load_backend();
  void use_backend(std::shared_ptr<const Backend> backend);
  bool ready() const;

  // Routes one request without going through a socket.
  HttpResult handle(const std::string& method, const std::string& path,
                    const std::string& body) const;

  // Binds the listening socket and returns the bound port.
  int bind();
  // Serves on the bound socket until stop(); binds first if needed.
  void run();
  // bind() and run() on a background thread.
  int start();
  // Blocks until a start()ed server stops.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace recast
