#include "recast/recast.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <set>
#include <sstream>
#include <string>

#include "recast/alternatives.hpp"
#include "recast/backend.hpp"
#include "recast/error.hpp"
#include "recast/explanation.hpp"
#include "recast/service.hpp"
#include "recast/stats.hpp"

struct recast_backend {
  std::shared_ptr<const recast::ReferenceBackend> impl;
};

struct recast_server {
  std::unique_ptr<recast::Service> impl;
};

namespace {

thread_local std::string last_error;

recast_status to_status(recast::ErrorCode code) {
  using recast::ErrorCode;
  switch (code) {
    case ErrorCode::kInputTooLarge: return RECAST_ERR_INPUT_TOO_LARGE;
    case ErrorCode::kInvalidUtf8: return RECAST_ERR_INVALID_UTF8;
    case ErrorCode::kSpanOutOfBounds: return RECAST_ERR_SPAN_OUT_OF_BOUNDS;
    case ErrorCode::kSpanTooLong: return RECAST_ERR_SPAN_TOO_LONG;
    case ErrorCode::kEmptyDistribution: return RECAST_ERR_EMPTY_DISTRIBUTION;
    case ErrorCode::kUndefinedCorrelation:
      return RECAST_ERR_UNDEFINED_CORRELATION;
    case ErrorCode::kEmptySample: return RECAST_ERR_EMPTY_SAMPLE;
    case ErrorCode::kInvalidArgument: return RECAST_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return RECAST_ERR_IO;
    case ErrorCode::kParse: return RECAST_ERR_PARSE;
  }
  return RECAST_ERR_INTERNAL;
}

recast_status fail(recast_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename Body>
recast_status guarded(Body&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const recast::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RECAST_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RECAST_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RECAST_ERR_INTERNAL, "unknown error");
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

recast::Thresholds thresholds_from(const recast_thresholds* t) {
  recast::Thresholds out;
  if (t != nullptr) {
    out.attn_cutoff = t->attn_cutoff;
    out.alt_toxicity_max = t->alt_toxicity_max;
    out.knn = t->knn;
    out.mlm_topk = t->mlm_topk;
  }
  out.validate();
  return out;
}

#define RECAST_REQUIRE(cond, what)                                   \
  do {                                                               \
    if (!(cond)) return fail(RECAST_ERR_INVALID_ARGUMENT, (what));   \
  } while (0)

}  // namespace

extern "C" {

const char* recast_status_name(recast_status status) {
  switch (status) {
    case RECAST_OK: return "ok";
    case RECAST_ERR_INPUT_TOO_LARGE: return "input too large";
    case RECAST_ERR_INVALID_UTF8: return "invalid utf-8";
    case RECAST_ERR_SPAN_OUT_OF_BOUNDS: return "span out of bounds";
    case RECAST_ERR_SPAN_TOO_LONG: return "span too long";
    case RECAST_ERR_EMPTY_DISTRIBUTION: return "empty distribution";
    case RECAST_ERR_UNDEFINED_CORRELATION: return "undefined correlation";
    case RECAST_ERR_EMPTY_SAMPLE: return "empty sample";
    case RECAST_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RECAST_ERR_IO: return "i/o error";
    case RECAST_ERR_PARSE: return "parse error";
    case RECAST_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* recast_last_error(void) { return last_error.c_str(); }

const char* recast_version(void) { return "1.0.0"; }

void recast_string_free(char* str) { std::free(str); }

void recast_thresholds_default(recast_thresholds* out) {
  if (out == nullptr) return;
  const recast::Thresholds d;
  out->attn_cutoff = d.attn_cutoff;
  out->alt_toxicity_max = d.alt_toxicity_max;
  out->knn = static_cast<uint32_t>(d.knn);
  out->mlm_topk = static_cast<uint32_t>(d.mlm_topk);
}

recast_status recast_backend_load(const char* lexicon_path,
                                  const char* embeddings_path,
                                  const char* corpus_path,
                                  recast_backend** out) {
  RECAST_REQUIRE(out != nullptr, "out is NULL");
  *out = nullptr;
  RECAST_REQUIRE(lexicon_path && embeddings_path && corpus_path,
                 "model paths must not be NULL");
  return guarded([&] {
    auto handle = std::make_unique<recast_backend>();
    handle->impl = recast::ReferenceBackend::load(lexicon_path, embeddings_path,
                                                  corpus_path);
    *out = handle.release();
    return RECAST_OK;
  });
}

void recast_backend_free(recast_backend* backend) { delete backend; }

recast_status recast_score(const recast_backend* backend, const char* text,
                           double* out) {
  RECAST_REQUIRE(backend && text && out, "NULL argument");
  return guarded([&] {
    *out = backend->impl->score(std::string_view(text));
    return RECAST_OK;
  });
}

recast_status recast_score_span(const recast_backend* backend, const char* text,
                                size_t start_token, size_t end_token,
                                double* out) {
  RECAST_REQUIRE(backend && text && out, "NULL argument");
  return guarded([&] {
    const recast::Document doc = recast::tokenize(text);
    *out = recast::score_span(doc, {start_token, end_token}, *backend->impl);
    return RECAST_OK;
  });
}

recast_status recast_analyze_json(const recast_backend* backend,
                                  const recast_thresholds* thresholds,
                                  const char* text, char** out_json) {
  RECAST_REQUIRE(backend && text && out_json, "NULL argument");
  *out_json = nullptr;
  return guarded([&] {
    const recast::Document doc = recast::tokenize(text);
    const auto body = recast::score_response(doc, *backend->impl,
                                             thresholds_from(thresholds));
    *out_json = duplicate(body.dump());
    return RECAST_OK;
  });
}

recast_status recast_alternatives_json(const recast_backend* backend,
                                       const recast_thresholds* thresholds,
                                       const char* text, size_t start_token,
                                       size_t end_token, char** out_json) {
  RECAST_REQUIRE(backend && text && out_json, "NULL argument");
  *out_json = nullptr;
  return guarded([&] {
    const recast::Document doc = recast::tokenize(text);
    const auto set = recast::generate_span_alternatives(
        doc, {start_token, end_token}, *backend->impl,
        thresholds_from(thresholds));
    *out_json = duplicate(recast::suggestion_json(set, doc).dump());
    return RECAST_OK;
  });
}

recast_status recast_kendall_tau_b(const double* x, const double* y, size_t n,
                                   recast_kendall* out) {
  RECAST_REQUIRE(out != nullptr, "out is NULL");
  RECAST_REQUIRE(n == 0 || (x && y), "NULL sample array");
  return guarded([&] {
    std::vector<recast::PairedSample> samples(n);
    for (size_t i = 0; i < n; ++i) samples[i] = {x[i], y[i]};
    const auto r = recast::kendall_tau_b(samples);
    *out = {r.tau,    r.concordant, r.discordant, r.ties_x,
            r.ties_y, r.ties_both,  r.z,          r.p_value};
    return RECAST_OK;
  });
}

recast_status recast_binomial_ci(uint64_t successes, uint64_t trials, double z,
                                 double* low, double* high) {
  RECAST_REQUIRE(low && high, "NULL output");
  return guarded([&] {
    const auto ci = recast::binomial_ci(successes, trials, z);
    *low = ci.low;
    *high = ci.high;
    return RECAST_OK;
  });
}

double recast_overlap(const size_t* x, size_t nx, const size_t* y, size_t ny) {
  if ((nx > 0 && x == nullptr) || (ny > 0 && y == nullptr)) return 0.0;
  const std::set<size_t> a(x, x + nx);
  const std::set<size_t> b(y, y + ny);
  return recast::overlap(a, b);
}

recast_status recast_calibrate_cutoff(const double* source, size_t n_source,
                                      const double* target, size_t n_target,
                                      double source_cutoff,
                                      recast_calibration* out) {
  RECAST_REQUIRE(out != nullptr, "out is NULL");
  RECAST_REQUIRE((n_source == 0 || source) && (n_target == 0 || target),
                 "NULL sample array");
  return guarded([&] {
    const auto r = recast::calibrate_cutoff(
        std::span<const double>(source, n_source),
        std::span<const double>(target, n_target), source_cutoff);
    *out = {r.source_cutoff, r.source_percentile, r.mapped_cutoff};
    return RECAST_OK;
  });
}

recast_status recast_labels_report(const char* labels_path,
                                   double toxic_threshold, double z,
                                   char** out_text, char** out_json) {
  RECAST_REQUIRE(labels_path != nullptr, "labels path is NULL");
  if (out_text) *out_text = nullptr;
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    std::ifstream in(labels_path, std::ios::binary);
    if (!in) {
      throw recast::Error(recast::ErrorCode::kIo,
                          std::string("cannot open ") + labels_path);
    }
    std::ostringstream content;
    content << in.rdbuf();
    const auto report = recast::analyze_labels(
        recast::parse_labels(content.str()), toxic_threshold, z);
    std::unique_ptr<char, decltype(&std::free)> text(nullptr, &std::free);
    if (out_text) text.reset(duplicate(report.to_text()));
    if (out_json) *out_json = duplicate(report.to_json());
    if (out_text) *out_text = text.release();
    return RECAST_OK;
  });
}

void recast_server_config_default(recast_server_config* out) {
  if (out == nullptr) return;
  const recast::ServiceConfig d;
  out->host = nullptr;
  out->port = d.port;
  out->lexicon_path = nullptr;
  out->embeddings_path = nullptr;
  out->corpus_path = nullptr;
  out->feedback_log_path = nullptr;
  out->cors_origins = nullptr;
  recast_thresholds_default(&out->thresholds);
}

recast_status recast_server_create(const recast_server_config* config,
                                   recast_server** out) {
  RECAST_REQUIRE(config && out, "NULL argument");
  *out = nullptr;
  return guarded([&] {
    recast::ServiceConfig c;
    if (config->host) c.host = config->host;
    c.port = config->port;
    if (config->lexicon_path) c.lexicon_path = config->lexicon_path;
    if (config->embeddings_path) c.embeddings_path = config->embeddings_path;
    if (config->corpus_path) c.corpus_path = config->corpus_path;
    if (config->feedback_log_path) {
      c.feedback_log_path = config->feedback_log_path;
    }
    if (config->cors_origins) {
      c.cors_origins.clear();
      std::stringstream list(config->cors_origins);
      std::string item;
      while (std::getline(list, item, ',')) {
        if (!item.empty()) c.cors_origins.push_back(item);
      }
    }
    c.thresholds.attn_cutoff = config->thresholds.attn_cutoff;
    c.thresholds.alt_toxicity_max = config->thresholds.alt_toxicity_max;
    c.thresholds.knn = config->thresholds.knn;
    c.thresholds.mlm_topk = config->thresholds.mlm_topk;
    c.apply_environment();
    c.validate();
    c.check_model_paths();
    auto handle = std::make_unique<recast_server>();
    handle->impl = std::make_unique<recast::Service>(std::move(c));
    *out = handle.release();
    return RECAST_OK;
  });
}

void recast_server_free(recast_server* server) { delete server; }

recast_status recast_server_bind(recast_server* server, int* out_port) {
  RECAST_REQUIRE(server != nullptr, "server is NULL");
  return guarded([&] {
    const int port = server->impl->bind();
    if (out_port) *out_port = port;
    return RECAST_OK;
  });
}

recast_status recast_server_run(recast_server* server) {
  RECAST_REQUIRE(server != nullptr, "server is NULL");
  return guarded([&] {
    server->impl->start();
    try {
      server->impl->load_backend();
    } catch (...) {
      server->impl->stop();
      throw;
    }
    server->impl->wait();
    return RECAST_OK;
  });
}

void recast_server_stop(recast_server* server) {
  if (server != nullptr) server->impl->stop();
}

}  // extern "C"
