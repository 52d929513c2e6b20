#ifndef CHEMOFRONT_H
#define CHEMOFRONT_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes of every fallible call.
 */
typedef enum CfStatus {
  CF_STATUS_OK = 0,
  CF_STATUS_NULL_POINTER = 1,
  CF_STATUS_INVALID_UTF8 = 2,
  CF_STATUS_CONFIG = 3,
  CF_STATUS_NUMERICAL = 4,
  CF_STATUS_IO = 5,
  CF_STATUS_NOT_FOUND = 6,
  CF_STATUS_PANIC = 7,
} CfStatus;

/*
 Verdict of a finished scenario.
 */
typedef enum CfVerdict {
  CF_VERDICT_PASS = 0,
  CF_VERDICT_FAIL = 1,
  CF_VERDICT_ERROR = 2,
} CfVerdict;

/*
 A parsed and validated scenario configuration.
 */
typedef struct CfConfig CfConfig;

/*
 Report and artefacts of one scenario run.
 */
typedef struct CfOutcome CfOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *cf_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *cf_version(void);

/*
 Parses and validates a TOML configuration.

 # Safety
 `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CfStatus cf_config_from_toml(const char *toml, struct CfConfig **out);

/*
 Applies a dotted `key = value` override, e.g. `grid.cells` = `800`.

 # Safety
 `config` must come from [`cf_config_from_toml`]; `key` and `value` must
 be NUL-terminated strings.
 */
enum CfStatus cf_config_set(struct CfConfig *config, const char *key, const char *value);

/*
 # Safety
 `config` must come from [`cf_config_from_toml`] or be NULL.
 */
void cf_config_free(struct CfConfig *config);

/*
 Runs the configured scenario. Numerical failures during the run yield
 an outcome with verdict `CF_VERDICT_ERROR`, not a failing status.

 # Safety
 `config` must be a live handle and `out` a valid pointer.
 */
enum CfStatus cf_run(const struct CfConfig *config, struct CfOutcome **out);

/*
 Certificates from the initial data only, without running the solver.

 # Safety
 `config` must be a live handle and `out` a valid pointer.
 */
enum CfStatus cf_certify(const struct CfConfig *config, struct CfOutcome **out);

/*
 # Safety
 `outcome` must be a live handle.
 */
enum CfVerdict cf_outcome_verdict(const struct CfOutcome *outcome);

/*
 Looks up a named metric of the report.

 # Safety
 `outcome` must be a live handle, `name` a NUL-terminated string and
 `value` a valid pointer.
 */
enum CfStatus cf_outcome_metric(const struct CfOutcome *outcome, const char *name, double *value);

/*
 Number of checks and how many of them failed.

 # Safety
 `outcome` must be a live handle; `total` and `failed` may be NULL.
 */
enum CfStatus cf_outcome_check_counts(const struct CfOutcome *outcome,
                                      uintptr_t *total,
                                      uintptr_t *failed);

/*
 The report as JSON. Release the string with [`cf_string_free`].

 # Safety
 `outcome` must be a live handle and `out` a valid pointer.
 */
enum CfStatus cf_outcome_report_json(const struct CfOutcome *outcome, char **out);

/*
 Writes `trace.csv`, `snapshots/` and `report.json` into `dir`.

 # Safety
 `outcome` must be a live handle and `dir` a NUL-terminated path.
 */
enum CfStatus cf_outcome_write(const struct CfOutcome *outcome, const char *dir);

/*
 # Safety
 `outcome` must come from [`cf_run`] or [`cf_certify`], or be NULL.
 */
void cf_outcome_free(struct CfOutcome *outcome);

/*
 # Safety
 `s` must come from this library or be NULL.
 */
void cf_string_free(char *s);

/*
 Initial front speed `R₀(2m/(m−1) K₀^{m−1} − χμ)` of the canonical bump.

 # Safety
 `out` must be a valid pointer.
 */
enum CfStatus cf_predicted_speed(double m,
                                 double chi,
                                 double k0,
                                 double r0,
                                 double mu,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEMOFRONT_H */
