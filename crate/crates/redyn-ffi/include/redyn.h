/* C interface for the redyn reduced-dynamics toolkit. Generated by cbindgen; do not edit. */

#ifndef REDYN_H
#define REDYN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every function in this interface.
typedef enum RedynStatus {
  // Success.
  REDYN_STATUS_OK = 0,
  // A required pointer argument was NULL.
  REDYN_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  REDYN_STATUS_INVALID_UTF8 = 2,
  // The input was rejected: malformed JSON, unknown command or field,
  // dimension mismatch, or a value that fails validation.
  REDYN_STATUS_INVALID_INPUT = 3,
  // A numerical operation failed (singular map, non-convergent solve).
  REDYN_STATUS_NUMERICAL_FAILURE = 4,
  // The command ran to completion and reports a verification failure
  // (the process-level exit code 2).
  REDYN_STATUS_VERIFICATION_FAILED = 5,
  // An internal panic was caught at the boundary.
  REDYN_STATUS_PANIC = 6,
} RedynStatus;

// Opaque handle to the result of a command run: report JSON, optional CSV,
// and the process-level exit code.
typedef struct RedynOutcome RedynOutcome;

// Opaque handle to a superoperator (a linear map on operators).
typedef struct RedynSuperOp RedynSuperOp;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; do not free.
const char *redyn_version(void);

// Description of the most recent failure on this thread, as a
// NUL-terminated UTF-8 string. Empty when the last call succeeded. The
// pointer is valid until the next call into this library on the same
// thread; do not free it.
const char *redyn_last_error_message(void);

// Release a string returned by this library.
//
// # Safety
// `s` must be NULL (a no-op) or a pointer previously returned through a
// `*mut c_char` out-parameter of this library, not yet freed.
void redyn_string_free(char *s);

// Parse a superoperator from its JSON form
// `{"d_in": n, "d_out": m, "transfer": {"rows", "cols", "re", "im"}}`
// (square transfers may use `"dim"` instead of `"rows"`/`"cols"`).
//
// # Safety
// `json` must be a valid NUL-terminated string; `out` must be a valid
// pointer. On `Ok`, `*out` owns a new handle to free with
// [`redyn_superop_free`].
enum RedynStatus redyn_superop_parse(const char *json, struct RedynSuperOp **out);

// Input and output dimensions of the map (it sends `d_in × d_in` operators
// to `d_out × d_out` operators).
//
// # Safety
// `op` must be a live handle from [`redyn_superop_parse`]; `d_in` and
// `d_out` must be valid pointers.
enum RedynStatus redyn_superop_dims(const struct RedynSuperOp *op, size_t *d_in, size_t *d_out);

// Smallest eigenvalue of the map's Choi matrix. Non-negative within
// tolerance exactly when the map is completely positive.
//
// # Safety
// `op` must be a live handle; `out` must be a valid pointer.
enum RedynStatus redyn_superop_min_choi_eigenvalue(const struct RedynSuperOp *op, double *out);

// Classify the map (Hermiticity preservation, trace preservation, complete
// positivity, sampled positivity) and return the report as JSON.
//
// # Safety
// `op` must be a live handle; `out_json` must be a valid pointer. On `Ok`,
// `*out_json` owns a string to free with [`redyn_string_free`].
enum RedynStatus redyn_superop_classify(const struct RedynSuperOp *op,
                                        size_t n_samples,
                                        uint64_t seed,
                                        char **out_json);

// Release a superoperator handle.
//
// # Safety
// `op` must be NULL (a no-op) or a live handle from
// [`redyn_superop_parse`], not yet freed.
void redyn_superop_free(struct RedynSuperOp *op);

// Run a command against a JSON config — the same contract as the `redyn`
// binary. `command` is one of `classify-map`, `build-assignment`,
// `u-consistency`, `verify-prop1`, `cp-family`, `lindblad-scan`.
//
// `seed` overrides the config's seed when non-NULL; `tol_scale` multiplies
// every tolerance when non-NULL (must point to a positive finite value).
//
// Returns `Ok` when the command completes with exit code 0 and
// `VerificationFailed` when it completes with exit code 2 (a counterexample
// was found); in both cases `*out` owns an outcome handle carrying the full
// report. Input errors return without an outcome.
//
// # Safety
// `command` and `config_json` must be valid NUL-terminated strings; `out`
// must be a valid pointer; `seed` and `tol_scale` must each be NULL or
// valid. On `Ok` or `VerificationFailed`, `*out` owns a handle to free with
// [`redyn_outcome_free`].
enum RedynStatus redyn_run(const char *command,
                           const char *config_json,
                           const uint64_t *seed,
                           const double *tol_scale,
                           struct RedynOutcome **out);

// Process-level exit code of a completed run: 0 for success, 2 for a
// verification failure.
//
// # Safety
// `outcome` must be a live handle from [`redyn_run`]; `out` must be a valid
// pointer.
enum RedynStatus redyn_outcome_exit_code(const struct RedynOutcome *outcome, int32_t *out);

// The run's JSON report (identical to the binary's stdout).
//
// # Safety
// `outcome` must be a live handle; `out_json` must be a valid pointer. On
// `Ok`, `*out_json` owns a string to free with [`redyn_string_free`].
enum RedynStatus redyn_outcome_report_json(const struct RedynOutcome *outcome, char **out_json);

// The run's CSV sidecar, or NULL when the command produces none (only
// `lindblad-scan` writes CSV).
//
// # Safety
// `outcome` must be a live handle; `out_csv` must be a valid pointer. On
// `Ok` with a non-NULL result, `*out_csv` owns a string to free with
// [`redyn_string_free`].
enum RedynStatus redyn_outcome_csv(const struct RedynOutcome *outcome, char **out_csv);

// Release an outcome handle.
//
// # Safety
// `outcome` must be NULL (a no-op) or a live handle from [`redyn_run`], not
// yet freed.
void redyn_outcome_free(struct RedynOutcome *outcome);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REDYN_H */
