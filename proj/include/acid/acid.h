/* C interface to the conditional-intensity distribution library.
 *
 * All functions return an acid_status; every non-OK status leaves a
 * human-readable message retrievable with acid_last_error() (thread-local).
 * Handles are opaque and freed with the matching *_free function.
 */
#ifndef ACID_H
#define ACID_H

#include <stddef.h>

#ifndef ACID_API
#if defined(_WIN32)
#define ACID_API __declspec(dllexport)
#elif defined(__GNUC__)
#define ACID_API __attribute__((visibility("default")))
#else
#define ACID_API
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct acid_model acid_model;
typedef struct acid_result acid_result;

typedef enum acid_status {
  ACID_OK = 0,
  ACID_ERR_INVALID_ARGUMENT = 1,
  ACID_ERR_NON_FINITE_STATE = 2,
  ACID_ERR_EVENT_TOLERANCE = 3,
  ACID_ERR_ALL_STATES_ZERO = 4,
  ACID_ERR_NONSTATIONARY = 5,
  ACID_ERR_SUPPORT_NOT_COVERED = 6,
  ACID_ERR_NOT_CONVERGED = 7,
  ACID_ERR_SINGULAR_KERNEL = 8,
  ACID_ERR_LOST_NULLCLINE = 9,
  ACID_ERR_FILTER_BLOWUP = 10,
  ACID_ERR_FILE_NOT_FOUND = 11,
  ACID_ERR_PARSE = 12,
  ACID_ERR_IO = 13,
  ACID_ERR_INTERNAL = 14
} acid_status;

ACID_API const char* acid_version(void);
ACID_API const char* acid_status_name(acid_status status);
/* Message of the most recent failure on the calling thread. */
ACID_API const char* acid_last_error(void);

/* Model descriptions are JSON documents:
 *   {"type": "random_telegraph" | "dark_current" | "donsoff" | "hawkes" |
 *            "gamma_filter" | "ctmc" | "renewal",
 *    "params": { ... }}
 */
ACID_API acid_status acid_model_from_json(const char* json, acid_model** out);
ACID_API acid_status acid_model_from_file(const char* path, acid_model** out);
ACID_API void acid_model_free(acid_model* model);

/* Runs a command with JSON-encoded options and returns a result bundle.
 *
 * Commands: "acid"    - boundary density and intensity distribution
 *           "mirate"  - mutual information rate
 *           "phase"   - telegraph phase-plane analysis (model may be NULL)
 *           "validate"- Monte Carlo cross-checks
 *
 * The result carries a JSON document (acid_result_json) plus named numeric
 * tables with per-column headers.
 */
ACID_API acid_status acid_run(const acid_model* model, const char* command, const char* options_json,
                     acid_result** out);

ACID_API const char* acid_result_json(const acid_result* result);
/* Row-major table data; returns ACID_ERR_INVALID_ARGUMENT for unknown names. */
ACID_API acid_status acid_result_table(const acid_result* result, const char* name, const double** data,
                              size_t* rows, size_t* cols);
ACID_API acid_status acid_result_table_header(const acid_result* result, const char* name,
                                     const char** header);

ACID_API void acid_result_free(acid_result* result);

#ifdef __cplusplus
}
#endif

#endif /* ACID_H */
