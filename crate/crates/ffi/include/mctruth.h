#ifndef MCTRUTH_H
#define MCTRUTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Non-zero values other than the last two match the CLI exit codes.
 */
typedef enum MctStatus {
  MCT_STATUS_OK = 0,
  MCT_STATUS_CONFIG_ERROR = 2,
  MCT_STATUS_VALIDATION_FAILURE = 3,
  MCT_STATUS_NUMERICAL_ERROR = 4,
  MCT_STATUS_IO_ERROR = 5,
  MCT_STATUS_INVALID_ARGUMENT = 6,
  MCT_STATUS_PANIC = 7,
} MctStatus;

typedef enum MctCommand {
  MCT_COMMAND_TRUTH = 0,
  MCT_COMMAND_ORACLE = 1,
  MCT_COMMAND_DIAGNOSE = 2,
  MCT_COMMAND_SIMSTUDY = 3,
  MCT_COMMAND_VALIDATE = 4,
} MctCommand;

typedef enum MctFormat {
  MCT_FORMAT_JSON = 0,
  MCT_FORMAT_CSV = 1,
} MctFormat;

/**
 * Opaque parsed run configuration.
 */
typedef struct MctConfig MctConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a TOML configuration file. Relative source paths resolve against the file's directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MctStatus mct_config_from_file(const char *path, struct MctConfig **out);

/**
 * Parses configuration text. `base_dir` may be null (current directory).
 *
 * # Safety
 * `text` and a non-null `base_dir` must be NUL-terminated strings; `out` must be writable.
 */
enum MctStatus mct_config_from_str(const char *text, const char *base_dir, struct MctConfig **out);

/**
 * Releases a configuration. Null is ignored.
 *
 * # Safety
 * `config` must come from `mct_config_from_*` and not be freed twice.
 */
void mct_config_free(struct MctConfig *config);

/**
 * Overrides the master seed.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum MctStatus mct_config_set_seed(struct MctConfig *config, uint64_t master_seed);

/**
 * Runs a command and returns the rendered report in `*out_report`.
 *
 * A failed `Validate` returns `ValidationFailure` and still sets the report.
 *
 * # Safety
 * `config` must be a live handle; `out_report` must be writable.
 */
enum MctStatus mct_run(const struct MctConfig *config,
                       enum MctCommand command,
                       enum MctFormat format,
                       char **out_report);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void mct_string_free(char *s);

/**
 * Message for the last failure on this thread, or null. Valid until the next call.
 */
const char *mct_last_error(void);

/**
 * Logistic function. Non-finite input is a `NumericalError`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MctStatus mct_expit(double x, double *out);

/**
 * Marginal odds ratio of logit P(Y=1|A,C) = b0 + b1*A + b2*C with C ~ N(mu, sigma^2),
 * contrasting A=1 with A=0, by Gauss-Hermite quadrature with `nodes` points.
 *
 * # Safety
 * `out` must be writable.
 */
enum MctStatus mct_quadrature_psi(double b0,
                                  double b1,
                                  double b2,
                                  double mu,
                                  double sigma,
                                  uint32_t nodes,
                                  double *out);

/**
 * Library version, static storage.
 */
const char *mct_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCTRUTH_H */
