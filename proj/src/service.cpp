#include "recast/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <fstream>
#include <future>
#include <mutex>
#include <set>
#include <thread>

#define CPPHTTPLIB_LISTEN_BACKLOG 128
#include <httplib.h>

#include "recast/error.hpp"

namespace recast {

using nlohmann::json;

double round3(double value) noexcept {
  const double r = std::round(value * 1000.0) / 1000.0;
  return r == 0.0 ? 0.0 : r;
}

json score_response(const Document& doc, const Backend& backend,
                    const Thresholds& thresholds) {
  const AlternativesSession session(doc, backend, thresholds);
  const std::vector<double>& attention = session.attention();
  json tokens = json::array();
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const Token& t = doc[i];
    tokens.push_back({{"text", t.text},
                      {"byte_start", t.byte_start},
                      {"byte_end", t.byte_end},
                      {"attention", round3(attention[i])},
                      {"highlighted", session.is_highlighted(i)}});
  }
  return {{"score_0_100", round3(100.0 * session.original_toxicity())},
          {"tokens", std::move(tokens)}};
}

json suggestion_json(const SuggestionSet& suggestions, const Document& doc) {
  json candidates = json::array();
  for (const Candidate& c : suggestions.candidates) {
    candidates.push_back(
        {{"replacement", c.replacement},
         {"individual_score_0_100", round3(100.0 * c.individual_toxicity)},
         {"resulting_score_0_100", round3(100.0 * c.resulting_toxicity)},
         {"source", std::string(candidate_source_name(c.source))}});
  }
  return {{"span",
           {{"start_token", suggestions.span.start_token},
            {"end_token", suggestions.span.end_token}}},
          {"text", std::string(doc.span_text(suggestions.span))},
          {"original_score_0_100", round3(100.0 * suggestions.original_toxicity)},
          {"candidates", std::move(candidates)}};
}

std::string utc_timestamp_rfc3339() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t seconds = std::chrono::system_clock::to_time_t(now);
  const auto millis = std::chrono::duration_cast<std::chrono::milliseconds>(
                          now.time_since_epoch())
                          .count() %
                      1000;
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[40];
  const std::size_t len =
      std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%S", &utc);
  char out[64];
  std::snprintf(out, sizeof(out), "%.*s.%03dZ", static_cast<int>(len), buffer,
                static_cast<int>(millis));
  return out;
}

// ------------------------------------------------------------ ServiceConfig

namespace {

double parse_real(const std::string& name, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidArgument,
                name + ": expected a number, got '" + value + "'");
  }
  return out;
}

long long parse_integer(const std::string& name, const std::string& value) {
  long long out = 0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidArgument,
                name + ": expected an integer, got '" + value + "'");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    std::size_t cut = value.find(',', start);
    if (cut == std::string::npos) cut = value.size();
    std::string item = value.substr(start, cut - start);
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(std::move(item));
    start = cut + 1;
  }
  return out;
}

}  // namespace

void ServiceConfig::apply_environment(
    const std::function<std::optional<std::string>(const std::string&)>& lookup) {
  const auto with = [&](const char* name, auto&& apply) {
    if (auto value = lookup(name)) apply(std::string(name), *value);
  };
  with("RECAST_HOST", [&](const auto&, const auto& v) { host = v; });
  with("RECAST_PORT", [&](const auto& n, const auto& v) {
    port = static_cast<int>(parse_integer(n, v));
  });
  with("RECAST_LEXICON", [&](const auto&, const auto& v) { lexicon_path = v; });
  with("RECAST_EMBEDDINGS", [&](const auto&, const auto& v) { embeddings_path = v; });
  with("RECAST_CORPUS", [&](const auto&, const auto& v) { corpus_path = v; });
  with("RECAST_FEEDBACK_LOG", [&](const auto&, const auto& v) { feedback_log_path = v; });
  with("RECAST_ATTN_CUTOFF", [&](const auto& n, const auto& v) {
    thresholds.attn_cutoff = parse_real(n, v);
  });
  with("RECAST_ALT_TOXICITY_MAX", [&](const auto& n, const auto& v) {
    thresholds.alt_toxicity_max = parse_real(n, v);
  });
  with("RECAST_KNN", [&](const auto& n, const auto& v) {
    const auto k = parse_integer(n, v);
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, n + " must be >= 1");
    thresholds.knn = static_cast<std::size_t>(k);
  });
  with("RECAST_MLM_TOPK", [&](const auto& n, const auto& v) {
    const auto k = parse_integer(n, v);
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, n + " must be >= 1");
    thresholds.mlm_topk = static_cast<std::size_t>(k);
  });
  with("RECAST_CORS_ORIGINS",
       [&](const auto&, const auto& v) { cors_origins = split_list(v); });
}

void ServiceConfig::apply_environment() {
  apply_environment([](const std::string& name) -> std::optional<std::string> {
    const char* value = std::getenv(name.c_str());
    if (value == nullptr) return std::nullopt;
    return std::string(value);
  });
}

void ServiceConfig::validate() const {
  thresholds.validate();
  if (port < 0 || port > 65535) {
    throw Error(ErrorCode::kInvalidArgument,
                "port " + std::to_string(port) + " is out of range");
  }
  if (feedback_log_path.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "feedback log path is empty");
  }
  if (feedback_queue_capacity == 0) {
    throw Error(ErrorCode::kInvalidArgument, "feedback queue capacity is 0");
  }
}

void ServiceConfig::check_model_paths() const {
  for (const auto* path : {&lexicon_path, &embeddings_path, &corpus_path}) {
    if (path->empty() || !std::ifstream(*path)) {
      throw Error(ErrorCode::kIo, "cannot read model file '" + *path + "'");
    }
  }
}

// -------------------------------------------------------------- FeedbackLog

struct FeedbackLog::State {
  struct Request {
    std::string line;
    std::promise<Status> done;
  };

  std::string path;
  std::size_t capacity;
  std::mutex mutex;
  std::condition_variable wake;
  std::deque<Request> queue;
  bool closing = false;
  int fd = -1;
  std::thread writer;

  Status write_line(const std::string& line) {
    if (fd < 0) {
      fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
      if (fd < 0) return Status::kIoError;
    }
    const char* data = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      const ssize_t n = ::write(fd, data, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        return Status::kIoError;
      }
      data += n;
      left -= static_cast<std::size_t>(n);
    }
    // Pipes and character devices cannot be synced and report EINVAL.
    if (::fsync(fd) == 0 || errno == EINVAL) return Status::kAccepted;
    return Status::kIoError;
  }

  void run() {
    std::unique_lock lock(mutex);
    while (true) {
      wake.wait(lock, [this] { return closing || !queue.empty(); });
      if (queue.empty()) return;
      Request request = std::move(queue.front());
      queue.pop_front();
      lock.unlock();
      request.done.set_value(write_line(request.line));
      lock.lock();
    }
  }
};

FeedbackLog::FeedbackLog(std::string path, std::size_t capacity)
    : state_(std::make_unique<State>()) {
  state_->path = std::move(path);
  state_->capacity = capacity;
  state_->writer = std::thread([s = state_.get()] { s->run(); });
}

FeedbackLog::~FeedbackLog() {
  {
    std::lock_guard lock(state_->mutex);
    state_->closing = true;
  }
  state_->wake.notify_all();
  state_->writer.join();
  if (state_->fd >= 0) ::close(state_->fd);
}

const std::string& FeedbackLog::path() const noexcept { return state_->path; }

FeedbackLog::Status FeedbackLog::append(std::string line) {
  while (!line.empty() && line.back() == '\n') line.pop_back();
  if (line.find('\n') != std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "feedback record spans lines");
  }
  line.push_back('\n');
  std::future<Status> done;
  {
    std::lock_guard lock(state_->mutex);
    if (state_->closing) return Status::kClosed;
    if (state_->queue.size() >= state_->capacity) return Status::kQueueFull;
    state_->queue.push_back({std::move(line), {}});
    done = state_->queue.back().done.get_future();
  }
  state_->wake.notify_one();
  return done.get();
}

// ------------------------------------------------------------------ Service

namespace {

HttpResult json_result(int status, const json& body) {
  return {status, body.dump()};
}

HttpResult error_result(int status, std::string_view code,
                        const std::string& message) {
  return json_result(status, {{"error", code}, {"message", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInputTooLarge: return 413;
    case ErrorCode::kInvalidUtf8: return 400;
    case ErrorCode::kSpanOutOfBounds:
    case ErrorCode::kSpanTooLong: return 422;
    default: return 500;
  }
}

struct BadRequest {
  int status;
  std::string code;
  std::string message;
};

json parse_object(const std::string& body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw BadRequest{400, "MalformedBody", "body must be a JSON object"};
  }
  return parsed;
}

std::string required_string(const json& body, const char* field) {
  const auto it = body.find(field);
  if (it == body.end() || !it->is_string()) {
    throw BadRequest{400, "MalformedBody",
                     std::string("field '") + field + "' must be a string"};
  }
  return it->get<std::string>();
}

std::string request_text(const json& body) {
  std::string text = required_string(body, "text");
  if (text.size() > kMaxInputBytes) {
    throw BadRequest{413, "InputTooLarge",
                     "text exceeds " + std::to_string(kMaxInputBytes) + " bytes"};
  }
  return text;
}

Span request_span(const json& body) {
  const auto it = body.find("span");
  if (it == body.end() || !it->is_object()) {
    throw BadRequest{422, "InvalidSpan", "field 'span' must be an object"};
  }
  const auto index = [&](const char* field) -> std::size_t {
    const auto f = it->find(field);
    if (f == it->end() || !f->is_number_integer() ||
        f->get<long long>() < 0) {
      throw BadRequest{422, "InvalidSpan",
                       std::string("span.") + field +
                           " must be a non-negative integer"};
    }
    return f->get<std::size_t>();
  };
  return Span{index("start_token"), index("end_token")};
}

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceConfig c)
      : config(std::move(c)),
        feedback(config.feedback_log_path, config.feedback_queue_capacity) {}

  ServiceConfig config;
  mutable std::mutex backend_mutex;
  std::shared_ptr<const Backend> backend;
  mutable FeedbackLog feedback;

  httplib::Server server;
  std::thread background;
  std::mutex join_mutex;
  int bound_port = -1;
  bool routes_installed = false;

  std::shared_ptr<const Backend> current_backend() const {
    std::lock_guard lock(backend_mutex);
    return backend;
  }

  HttpResult health() const {
    const auto b = current_backend();
    if (!b) return json_result(503, {{"status", "loading"}});
    return json_result(200, {{"status", "ok"},
                             {"backend", b->name()},
                             {"vocab_sizes", b->vocab_sizes()}});
  }

  HttpResult post(const std::string& path, const std::string& body) const {
    const auto b = current_backend();
    if (!b) return error_result(503, "Loading", "backend is still loading");
    const Thresholds& th = config.thresholds;
    try {
      const json request = parse_object(body);
      if (path == "/api/score") {
        const Document doc = tokenize(request_text(request));
        return json_result(200, score_response(doc, *b, th));
      }
      if (path == "/api/alternatives") {
        const Document doc = tokenize(request_text(request));
        const Span span = request_span(request);
        const SuggestionSet set = generate_span_alternatives(doc, span, *b, th);
        return json_result(200, suggestion_json(set, doc));
      }
      if (path == "/api/score-span") {
        const Document doc = tokenize(request_text(request));
        const Span span = request_span(request);
        return json_result(
            200, {{"score_0_100", round3(100.0 * score_span(doc, span, *b))}});
      }
      if (path == "/api/feedback") {
        return submit_feedback(request, *b);
      }
      return error_result(404, "NotFound", "no route for " + path);
    } catch (const BadRequest& e) {
      return error_result(e.status, e.code, e.message);
    } catch (const Error& e) {
      return error_result(status_for(e.code()), error_code_name(e.code()),
                          e.what());
    }
  }

  HttpResult route(const std::string& method, const std::string& path,
                   const std::string& body) const {
    static const std::set<std::string> kPostRoutes{
        "/api/score", "/api/alternatives", "/api/score-span", "/api/feedback"};
    const bool is_health = path == "/api/health";
    if (!is_health && kPostRoutes.count(path) == 0) {
      return error_result(404, "NotFound", "no route for " + path);
    }
    const std::string expected = is_health ? "GET" : "POST";
    if (method != expected) {
      return error_result(405, "MethodNotAllowed",
                          path + " accepts " + expected + " only");
    }
    return is_health ? health() : post(path, body);
  }

  HttpResult submit_feedback(const json& request, const Backend& b) const {
    const std::string text = request_text(request);
    const std::string comment = required_string(request, "comment");
    if (comment.empty() || comment.size() > kMaxCommentBytes) {
      throw BadRequest{422, "InvalidComment",
                       "comment must be 1 to " +
                           std::to_string(kMaxCommentBytes) + " bytes"};
    }
    if (!is_valid_utf8(comment)) {
      throw BadRequest{400, "InvalidUtf8", "comment is not valid UTF-8"};
    }
    const double score = b.score(text);
    const json record = {{"timestamp", utc_timestamp_rfc3339()},
                         {"text", text},
                         {"comment", comment},
                         {"score_0_100", round3(100.0 * score)}};
    switch (feedback.append(record.dump())) {
      case FeedbackLog::Status::kAccepted:
        return json_result(200, {{"accepted", true}});
      case FeedbackLog::Status::kQueueFull:
        return error_result(503, "Busy", "feedback queue is full");
      case FeedbackLog::Status::kClosed:
        return error_result(503, "ShuttingDown", "service is stopping");
      case FeedbackLog::Status::kIoError:
        break;
    }
    return error_result(500, "FeedbackLogUnwritable",
                        "cannot append to " + feedback.path());
  }

  void add_cors(const httplib::Request& req, httplib::Response& res) const {
    const auto& origins = config.cors_origins;
    if (std::find(origins.begin(), origins.end(), "*") != origins.end()) {
      res.set_header("Access-Control-Allow-Origin", "*");
    } else if (req.has_header("Origin")) {
      const std::string origin = req.get_header_value("Origin");
      if (std::find(origins.begin(), origins.end(), origin) != origins.end()) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Vary", "Origin");
      }
    }
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  }

  void install_routes() {
    if (routes_installed) return;
    routes_installed = true;
    const auto reply = [](httplib::Response& res, const HttpResult& result) {
      res.status = result.status;
      res.set_content(result.body, "application/json");
    };
    server.set_payload_max_length(1u << 20);
    const auto dispatch = [this, reply](const httplib::Request& req,
                                        httplib::Response& res) {
      reply(res, route(req.method, req.path, req.body));
    };
    server.Get(R"(/api/.*)", dispatch);
    server.Post(R"(/api/.*)", dispatch);
    server.Options(R"(/api/.*)",
                   [](const httplib::Request&, httplib::Response& res) {
                     res.status = 204;
                   });
    server.set_post_routing_handler(
        [this](const httplib::Request& req, httplib::Response& res) {
          add_cors(req, res);
        });
  }
};

Service::Service(ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
  impl_->config.validate();
}

Service::~Service() { stop(); }

const ServiceConfig& Service::config() const noexcept { return impl_->config; }

void Service::load_backend() {
  use_backend(ReferenceBackend::load(impl_->config.lexicon_path,
                                     impl_->config.embeddings_path,
                                     impl_->config.corpus_path));
}

void Service::use_backend(std::shared_ptr<const Backend> backend) {
  std::lock_guard lock(impl_->backend_mutex);
  impl_->backend = std::move(backend);
}

bool Service::ready() const { return impl_->current_backend() != nullptr; }

HttpResult Service::handle(const std::string& method, const std::string& path,
                           const std::string& body) const {
  return impl_->route(method, path, body);
}

int Service::bind() {
  if (impl_->bound_port >= 0) return impl_->bound_port;
  impl_->install_routes();
  const auto& c = impl_->config;
  int port = c.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(c.host);
  } else if (!impl_->server.bind_to_port(c.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + c.host + ":" +
                                    std::to_string(c.port));
  }
  impl_->bound_port = port;
  return port;
}

void Service::run() {
  bind();
  impl_->server.listen_after_bind();
}

int Service::start() {
  const int port = bind();
  impl_->background = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::wait() {
  std::lock_guard lock(impl_->join_mutex);
  if (impl_->background.joinable()) impl_->background.join();
}

void Service::stop() {
  impl_->server.stop();
  wait();
}

}  // namespace recast
