// recast: command-line front end over the librecast C API.
//
//   recast serve --lexicon L --embeddings E --corpus C [--port 8080] ...
//   recast score --lexicon L --embeddings E --corpus C "some text"
//   recast alternatives ... --start 2 --end 3 "some text"
//   recast score-span ... --start 0 --end 2 "some text"
//   recast stats labels.csv [--threshold 4] [--z 1.96] [--json report.json]
//   recast calibrate --source attn.txt --target grad.txt --cutoff 0.2

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "recast/recast.h"

namespace {

struct ModelOptions {
  std::string lexicon;
  std::string embeddings;
  std::string corpus;
  recast_thresholds thresholds{};
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--lexicon", m.lexicon, "word<TAB>weight lexicon file")
      ->envname("RECAST_LEXICON")
      ->required();
  cmd->add_option("--embeddings", m.embeddings, "text-format word vectors")
      ->envname("RECAST_EMBEDDINGS")
      ->required();
  cmd->add_option("--corpus", m.corpus, "plain-text language model corpus")
      ->envname("RECAST_CORPUS")
      ->required();
}

void add_threshold_options(CLI::App* cmd, recast_thresholds& t) {
  cmd->add_option("--attn-cutoff", t.attn_cutoff, "attention cutoff")
      ->capture_default_str();
  cmd->add_option("--alt-toxicity-max", t.alt_toxicity_max,
                  "maximum individual toxicity of a replacement")
      ->capture_default_str();
  cmd->add_option("--knn", t.knn, "embedding neighbours per word")
      ->capture_default_str();
  cmd->add_option("--mlm-topk", t.mlm_topk, "masked-LM fills kept")
      ->capture_default_str();
}

int report(recast_status status) {
  std::cerr << "recast: " << recast_status_name(status) << ": "
            << recast_last_error() << "\n";
  return 1;
}

// "-" reads stdin.
std::string resolve_text(const std::string& text) {
  if (text != "-") return text;
  return std::string(std::istreambuf_iterator<char>(std::cin), {});
}

class Backend {
 public:
  Backend() = default;
  ~Backend() { recast_backend_free(handle_); }
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  recast_status load(const ModelOptions& m) {
    return recast_backend_load(m.lexicon.c_str(), m.embeddings.c_str(),
                               m.corpus.c_str(), &handle_);
  }
  const recast_backend* get() const { return handle_; }

 private:
  recast_backend* handle_ = nullptr;
};

int print_owned(char* json) {
  std::cout << json << "\n";
  recast_string_free(json);
  return 0;
}

std::vector<double> read_reals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("cannot open " + path);
  std::vector<double> values;
  double v = 0.0;
  while (in >> v) values.push_back(v);
  if (!in.eof()) throw CLI::ValidationError(path + ": expected real numbers");
  return values;
}

int serve(const ModelOptions& m, const std::string& host, int port,
          const std::string& feedback_log, const std::string& cors) {
  recast_server_config config;
  recast_server_config_default(&config);
  config.host = host.c_str();
  config.port = port;
  config.lexicon_path = m.lexicon.c_str();
  config.embeddings_path = m.embeddings.c_str();
  config.corpus_path = m.corpus.c_str();
  config.feedback_log_path = feedback_log.c_str();
  config.cors_origins = cors.c_str();
  config.thresholds = m.thresholds;

  // Signals are taken synchronously by one thread; every other thread
  // inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  recast_server* server = nullptr;
  if (auto s = recast_server_create(&config, &server); s != RECAST_OK) {
    return report(s);
  }
  int bound = 0;
  if (auto s = recast_server_bind(server, &bound); s != RECAST_OK) {
    recast_server_free(server);
    return report(s);
  }
  std::cerr << "recast: listening on " << host << ":" << bound << "\n";

  std::thread waiter([server, signals] {
    int received = 0;
    sigwait(&signals, &received);
    recast_server_stop(server);
  });
  const recast_status status = recast_server_run(server);
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  recast_server_free(server);
  return status == RECAST_OK ? 0 : report(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recast: toxicity scoring, attribution and alternative wording"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(recast_version()));

  ModelOptions model;
  recast_thresholds_default(&model.thresholds);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  add_model_options(serve_cmd, model);
  add_threshold_options(serve_cmd, model.thresholds);
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string feedback_log = "feedback.jsonl";
  std::string cors = "*";
  serve_cmd->add_option("--host", host, "bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "listen port")->capture_default_str();
  serve_cmd->add_option("--feedback-log", feedback_log, "JSON-lines feedback log")
      ->capture_default_str();
  serve_cmd->add_option("--cors-origins", cors,
                        "comma separated allowlist, * for any")
      ->capture_default_str();

  // score / alternatives / score-span
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  auto* score_cmd = app.add_subcommand("score", "print the /api/score body");
  add_model_options(score_cmd, model);
  add_threshold_options(score_cmd, model.thresholds);
  score_cmd->add_option("text", text, "input text, - for stdin")->required();

  auto* alt_cmd = app.add_subcommand("alternatives",
                                     "print the /api/alternatives body");
  add_model_options(alt_cmd, model);
  add_threshold_options(alt_cmd, model.thresholds);
  alt_cmd->add_option("--start", start, "first token of the span")->required();
  alt_cmd->add_option("--end", end, "one past the last token")->required();
  alt_cmd->add_option("text", text, "input text, - for stdin")->required();

  auto* span_cmd = app.add_subcommand("score-span", "score a token span");
  add_model_options(span_cmd, model);
  span_cmd->add_option("--start", start, "first token of the span")->required();
  span_cmd->add_option("--end", end, "one past the last token")->required();
  span_cmd->add_option("text", text, "input text, - for stdin")->required();

  // stats
  std::string labels_path;
  std::string json_path;
  double toxic_threshold = 4.0;
  double z = 1.96;
  auto* stats_cmd = app.add_subcommand(
      "stats", "Kendall tau-b and toxic-label proportions from a labels file");
  stats_cmd->add_option("labels", labels_path,
                        "rows: id, original_label, edit_label, condition")
      ->required()
      ->check(CLI::ExistingFile);
  stats_cmd->add_option("--threshold", toxic_threshold,
                        "labels at or above this count as toxic")
      ->capture_default_str();
  stats_cmd->add_option("--z", z, "normal quantile for intervals")
      ->capture_default_str();
  stats_cmd->add_option("--json", json_path, "also write a JSON report here");

  // calibrate
  std::string source_path;
  std::string target_path;
  double cutoff = 0.2;
  auto* calibrate_cmd = app.add_subcommand(
      "calibrate", "map a cutoff between two score distributions");
  calibrate_cmd->add_option("--source", source_path, "source scores, one per line")
      ->required();
  calibrate_cmd->add_option("--target", target_path, "target scores, one per line")
      ->required();
  calibrate_cmd->add_option("--cutoff", cutoff, "cutoff on the source scale")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*serve_cmd) return serve(model, host, port, feedback_log, cors);

  if (*score_cmd || *alt_cmd || *span_cmd) {
    Backend backend;
    if (auto s = backend.load(model); s != RECAST_OK) return report(s);
    const std::string input = resolve_text(text);
    char* json = nullptr;
    recast_status s = RECAST_OK;
    if (*score_cmd) {
      s = recast_analyze_json(backend.get(), &model.thresholds, input.c_str(),
                              &json);
    } else if (*alt_cmd) {
      s = recast_alternatives_json(backend.get(), &model.thresholds,
                                   input.c_str(), start, end, &json);
    } else {
      double score = 0.0;
      s = recast_score_span(backend.get(), input.c_str(), start, end, &score);
      if (s == RECAST_OK) {
        std::printf("%.3f\n", 100.0 * score);
        return 0;
      }
    }
    return s == RECAST_OK ? print_owned(json) : report(s);
  }

  if (*stats_cmd) {
    char* text_report = nullptr;
    char* json_report = nullptr;
    const auto s =
        recast_labels_report(labels_path.c_str(), toxic_threshold, z,
                             &text_report, json_path.empty() ? nullptr : &json_report);
    if (s != RECAST_OK) return report(s);
    std::cout << text_report;
    recast_string_free(text_report);
    if (json_report != nullptr) {
      std::ofstream out(json_path);
      out << json_report << "\n";
      recast_string_free(json_report);
      if (!out) {
        std::cerr << "recast: cannot write " << json_path << "\n";
        return 1;
      }
    }
    return 0;
  }

  if (*calibrate_cmd) {
    try {
      const auto source = read_reals(source_path);
      const auto target = read_reals(target_path);
      recast_calibration result{};
      const auto s = recast_calibrate_cutoff(source.data(), source.size(),
                                             target.data(), target.size(),
                                             cutoff, &result);
      if (s != RECAST_OK) return report(s);
      std::printf("source_cutoff %.6g\nsource_percentile %.6g\nmapped_cutoff %.6g\n",
                  result.source_cutoff, result.source_percentile,
                  result.mapped_cutoff);
      return 0;
    } catch (const CLI::ValidationError& e) {
      std::cerr << "recast: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}
