#ifndef ATTEND_H
#define ATTEND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AttendStatus {
  ATTEND_STATUS_OK = 0,
  ATTEND_STATUS_NULL_POINTER = 1,
  ATTEND_STATUS_INVALID_UTF8 = 2,
  /**
   * Program or task text did not parse or validate.
   */
  ATTEND_STATUS_PARSE = 3,
  /**
   * The kernel rejected the request (unknown program, infeasible display).
   */
  ATTEND_STATUS_RUNTIME = 4,
  ATTEND_STATUS_PANIC = 5,
} AttendStatus;

/**
 * Default hierarchy, runtime configuration and program library.
 */
typedef struct AttendKernel AttendKernel;

/**
 * Result of one trial.
 */
typedef struct AttendTrial AttendTrial;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty if none.
 */
const char *attend_last_error(void);

const char *attend_version(void);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void attend_string_free(char *s);

/**
 * Kernel with the built-in programs and default hierarchy. Never null.
 */
struct AttendKernel *attend_kernel_new(void);

/**
 * # Safety
 * `k` must come from [`attend_kernel_new`]. Null is ignored.
 */
void attend_kernel_free(struct AttendKernel *k);

/**
 * Parses and validates a program. On `Parse`, `line`/`col` (if non-null)
 * receive the error position, or 0 when it has none.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `line` and `col` null or writable.
 */
enum AttendStatus attend_check_program(const char *source, uint32_t *line, uint32_t *col);

/**
 * Adds (or replaces) a program in the kernel's library under its own name.
 *
 * # Safety
 * `k` must be a live kernel handle and `source` NUL-terminated.
 */
enum AttendStatus attend_kernel_add_program(struct AttendKernel *k, const char *source);

/**
 * Runs one trial of the task described by `task_toml`. On `Ok`, `*out`
 * holds a new trial handle; a trial that fails its task still returns `Ok`
 * (see [`attend_trial_success`]).
 *
 * # Safety
 * `k` must be a live kernel handle, `task_toml` NUL-terminated, `out` writable.
 */
enum AttendStatus attend_run_trial(const struct AttendKernel *k,
                                   const char *task_toml,
                                   uint64_t seed,
                                   uint64_t trial,
                                   struct AttendTrial **out);

/**
 * # Safety
 * `t` must come from [`attend_run_trial`]. Null is ignored.
 */
void attend_trial_free(struct AttendTrial *t);

/**
 * # Safety
 * `t` must be a live trial handle or null (false).
 */
bool attend_trial_success(const struct AttendTrial *t);

/**
 * # Safety
 * `t` must be a live trial handle or null (false).
 */
bool attend_trial_correct(const struct AttendTrial *t);

/**
 * Cycles from stimulus onset to the response.
 *
 * # Safety
 * `t` must be a live trial handle or null (0).
 */
uint64_t attend_trial_cycles(const struct AttendTrial *t);

/**
 * Borrowed response text, or null when the trial gave none.
 *
 * # Safety
 * `t` must be a live trial handle or null.
 */
const char *attend_trial_response(const struct AttendTrial *t);

/**
 * Report as JSON. Free with [`attend_string_free`].
 *
 * # Safety
 * `t` must be a live trial handle or null (returns null).
 */
char *attend_trial_report_json(const struct AttendTrial *t);

/**
 * Control-signal trace as CSV. Free with [`attend_string_free`].
 *
 * # Safety
 * `t` must be a live trial handle or null (returns null).
 */
char *attend_trial_trace_csv(const struct AttendTrial *t);

/**
 * Fixation log as CSV. Free with [`attend_string_free`].
 *
 * # Safety
 * `t` must be a live trial handle or null (returns null).
 */
char *attend_trial_fixations_csv(const struct AttendTrial *t);

/**
 * Claims table as CSV, optionally filtered by id substring (`filter` may be
 * null). Free with [`attend_string_free`]; null on a non-UTF-8 filter.
 *
 * # Safety
 * `filter` must be null or NUL-terminated.
 */
char *attend_oracle_csv(const char *filter);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATTEND_H */
