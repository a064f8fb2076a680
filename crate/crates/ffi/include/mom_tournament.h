#ifndef MOM_TOURNAMENT_H
#define MOM_TOURNAMENT_H

/* Generated by build.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Set in the flags of [`mt_mean_tournament`] when no champion won every home match.
#define MT_FLAG_WINNERS_EMPTY 1

// Set when there was no champion and the full-sample SAA was returned.
#define MT_FLAG_CHAMPIONS_EMPTY 2

typedef enum MtStatus {
  MT_STATUS_OK = 0,
  MT_STATUS_NULL_POINTER = 1,
  MT_STATUS_INVALID_ARGUMENT = 2,
  MT_STATUS_CONFIG = 3,
  MT_STATUS_IO = 4,
  MT_STATUS_NUMERICAL = 5,
  MT_STATUS_PANIC = 6,
} MtStatus;

// A validated experiment configuration.
typedef struct MtExperiment MtExperiment;

// Results of a finished experiment.
typedef struct MtResult MtResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *mt_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *mt_version(void);

// Median of `blocks` contiguous block means of `values[0..len]`.
//
// # Safety
// `values` must point to `len` readable doubles and `out` to one writable double.
enum MtStatus mt_median_of_means(const double *values, size_t len, size_t blocks, double *out);

// Probability that the empirical mean of `n` two-point adversarial draws
// misses the mean by at least `r`, with the law designed for `(n, r)`.
//
// # Safety
// `out` must point to one writable double.
enum MtStatus mt_adversarial_failure_probability(size_t n, double r, double *out);

// Parses and validates a JSON experiment config.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable handle slot.
enum MtStatus mt_experiment_from_json(const char *json, struct MtExperiment **out);

// Overrides the root seed of an experiment.
//
// # Safety
// `experiment` must be a live handle from [`mt_experiment_from_json`].
enum MtStatus mt_experiment_set_seed(struct MtExperiment *experiment, uint64_t seed);

// Runs the experiment on `threads` workers (0: library default). Output does
// not depend on the thread count.
//
// # Safety
// `experiment` must be a live handle and `out` a writable handle slot.
enum MtStatus mt_experiment_run(const struct MtExperiment *experiment,
                                size_t threads,
                                struct MtResult **out);

// Releases an experiment handle; null is ignored.
//
// # Safety
// `experiment` must be null or a handle not yet freed.
void mt_experiment_free(struct MtExperiment *experiment);

// Number of `(method, N, r)` cells in a result.
//
// # Safety
// `result` must be null or a live handle.
size_t mt_result_cell_count(const struct MtResult *result);

// The cell table as CSV; free with [`mt_string_free`].
//
// # Safety
// `result` must be a live handle and `out` a writable pointer slot.
enum MtStatus mt_result_to_csv(const struct MtResult *result, char **out);

// The cell table as JSON; free with [`mt_string_free`].
//
// # Safety
// `result` must be a live handle and `out` a writable pointer slot.
enum MtStatus mt_result_to_json(const struct MtResult *result, char **out);

// Releases a result handle; null is ignored.
//
// # Safety
// `result` must be null or a handle not yet freed.
void mt_result_free(struct MtResult *result);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void mt_string_free(char *s);

// Unconstrained mean estimation by tournament over `count` points of
// dimension `dim` (row-major in `points`), Euclidean norm, `c_H = 1`.
// Writes the selected point to `out[0..dim]` and fallback bits
// (`MT_FLAG_*`) to `flags`, which may be null.
//
// # Safety
// `points` must hold `count * dim` doubles, `out` must have room for `dim`.
enum MtStatus mt_mean_tournament(const double *points,
                                 size_t count,
                                 size_t dim,
                                 double r,
                                 double sigma2,
                                 double *out,
                                 uint32_t *flags);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOM_TOURNAMENT_H */
