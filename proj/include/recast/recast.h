/* C interface to librecast: toxicity scoring, token attribution, alternative
 * wording generation, explanation-method statistics and the HTTP service.
 *
 * Every fallible call returns a recast_status. On failure the message for the
 * calling thread is available from recast_last_error() until the next call on
 * that thread. Strings returned through char** are owned by the caller and
 * released with recast_string_free().
 */
#ifndef RECAST_RECAST_H_
#define RECAST_RECAST_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RECAST_BUILDING_LIBRARY)
#    define RECAST_API __declspec(dllexport)
#  else
#    define RECAST_API __declspec(dllimport)
#  endif
#else
#  define RECAST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum recast_status {
  RECAST_OK = 0,
  RECAST_ERR_INPUT_TOO_LARGE = 1,
  RECAST_ERR_INVALID_UTF8 = 2,
  RECAST_ERR_SPAN_OUT_OF_BOUNDS = 3,
  RECAST_ERR_SPAN_TOO_LONG = 4,
  RECAST_ERR_EMPTY_DISTRIBUTION = 5,
  RECAST_ERR_UNDEFINED_CORRELATION = 6,
  RECAST_ERR_EMPTY_SAMPLE = 7,
  RECAST_ERR_INVALID_ARGUMENT = 8,
  RECAST_ERR_IO = 9,
  RECAST_ERR_PARSE = 10,
  RECAST_ERR_INTERNAL = 11
} recast_status;

RECAST_API const char* recast_status_name(recast_status status);
RECAST_API const char* recast_last_error(void);
RECAST_API const char* recast_version(void);
RECAST_API void recast_string_free(char* str);

typedef struct recast_thresholds {
  double attn_cutoff;      /* default 0.2 */
  double alt_toxicity_max; /* default 0.4 */
  uint32_t knn;            /* default 10 */
  uint32_t mlm_topk;       /* default 20 */
} recast_thresholds;

RECAST_API void recast_thresholds_default(recast_thresholds* out);

/* Reference backend ---------------------------------------------------- */

typedef struct recast_backend recast_backend;

RECAST_API recast_status recast_backend_load(const char* lexicon_path,
                                             const char* embeddings_path,
                                             const char* corpus_path,
                                             recast_backend** out);
RECAST_API void recast_backend_free(recast_backend* backend);

/* Probability in [0, 1]. */
RECAST_API recast_status recast_score(const recast_backend* backend,
                                      const char* text, double* out);

/* Span score, [start_token, end_token). */
RECAST_API recast_status recast_score_span(const recast_backend* backend,
                                           const char* text,
                                           size_t start_token,
                                           size_t end_token, double* out);

/* JSON body identical to POST /api/score. */
RECAST_API recast_status recast_analyze_json(const recast_backend* backend,
                                             const recast_thresholds* thresholds,
                                             const char* text, char** out_json);

/* JSON body identical to POST /api/alternatives. */
RECAST_API recast_status recast_alternatives_json(
    const recast_backend* backend, const recast_thresholds* thresholds,
    const char* text, size_t start_token, size_t end_token, char** out_json);

/* Statistics ------------------------------------------------------------ */

typedef struct recast_kendall {
  double tau;
  uint64_t concordant;
  uint64_t discordant;
  uint64_t ties_x;
  uint64_t ties_y;
  uint64_t ties_both;
  double z;
  double p_value;
} recast_kendall;

RECAST_API recast_status recast_kendall_tau_b(const double* x, const double* y,
                                              size_t n, recast_kendall* out);

RECAST_API recast_status recast_binomial_ci(uint64_t successes,
                                            uint64_t trials, double z,
                                            double* low, double* high);

/* Overlap of two index sets (need not be sorted; duplicates ignored). */
RECAST_API double recast_overlap(const size_t* x, size_t nx, const size_t* y,
                                 size_t ny);

typedef struct recast_calibration {
  double source_cutoff;
  double source_percentile;
  double mapped_cutoff;
} recast_calibration;

RECAST_API recast_status recast_calibrate_cutoff(const double* source,
                                                 size_t n_source,
                                                 const double* target,
                                                 size_t n_target,
                                                 double source_cutoff,
                                                 recast_calibration* out);

/* Reads a labels file and renders the per-condition report. Either output
 * pointer may be NULL. */
RECAST_API recast_status recast_labels_report(const char* labels_path,
                                              double toxic_threshold, double z,
                                              char** out_text,
                                              char** out_json);

/* HTTP service ---------------------------------------------------------- */

typedef struct recast_server_config {
  const char* host;            /* NULL: 0.0.0.0 */
  int port;                    /* 0: ephemeral */
  const char* lexicon_path;
  const char* embeddings_path;
  const char* corpus_path;
  const char* feedback_log_path;
  const char* cors_origins;    /* comma separated; NULL: "*" */
  recast_thresholds thresholds;
} recast_server_config;

typedef struct recast_server recast_server;

RECAST_API void recast_server_config_default(recast_server_config* out);

/* Validates the configuration after applying RECAST_* environment overrides.
 * The backend is not loaded yet; /api/health answers 503 until it is. */
RECAST_API recast_status recast_server_create(const recast_server_config* config,
                                              recast_server** out);
RECAST_API void recast_server_free(recast_server* server);

/* Binds the socket; *out_port receives the bound port. */
RECAST_API recast_status recast_server_bind(recast_server* server,
                                            int* out_port);
/* Loads the backend while the socket already answers health checks, then
 * serves until recast_server_stop(). Blocks. */
RECAST_API recast_status recast_server_run(recast_server* server);
RECAST_API void recast_server_stop(recast_server* server);

#ifdef __cplusplus
}
#endif

#endif /* RECAST_RECAST_H_ */
