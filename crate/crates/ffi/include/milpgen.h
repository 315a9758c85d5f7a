/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MILPGEN_H
#define MILPGEN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MilpgenError {
  MILPGEN_ERROR_OK = 0,
  MILPGEN_ERROR_NULL_POINTER = 1,
  MILPGEN_ERROR_VALIDATION = 2,
  MILPGEN_ERROR_SOLVER_LIMIT = 3,
  MILPGEN_ERROR_ASSEMBLY = 4,
  MILPGEN_ERROR_PARSE = 5,
  MILPGEN_ERROR_IO = 6,
  MILPGEN_ERROR_INVALID_UTF8 = 7,
  MILPGEN_ERROR_PANIC = 8,
  MILPGEN_ERROR_OTHER = 9,
} MilpgenError;

typedef enum MilpgenStatus {
  MILPGEN_STATUS_INFEASIBLE = 0,
  MILPGEN_STATUS_UNBOUNDED = 1,
  MILPGEN_STATUS_OPTIMAL = 2,
} MilpgenStatus;

// An instance, optionally with its solution tuple.
typedef struct MilpgenInstance MilpgenInstance;

// A trained generator.
typedef struct MilpgenModel MilpgenModel;

// Branch-and-bound result under default parameters.
typedef struct MilpgenSolveResult {
  // Meaningful only when `proven` is true.
  enum MilpgenStatus status;
  bool proven;
  // Optimal objective in the instance's original sense; NaN otherwise.
  double value;
  size_t nodes;
  size_t pivots;
  bool limit_hit;
} MilpgenSolveResult;

typedef struct MilpgenStats {
  double density_mean;
  double cons_degree_mean;
  double cons_degree_std;
  double var_degree_mean;
  double var_degree_std;
  double b_mean;
  double b_std;
  double c_mean;
  double c_std;
} MilpgenStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. The
// pointer stays valid until the next failing call on the same thread.
const char *milpgen_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *milpgen_version(void);

// Parses an instance from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum MilpgenError milpgen_instance_from_json(const char *json, struct MilpgenInstance **out);

// Loads the first instance of a JSON file or directory.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MilpgenError milpgen_instance_load(const char *path, struct MilpgenInstance **out);

// Serializes an instance (with labels, if attached). Free the string with
// [`milpgen_string_free`].
//
// # Safety
// `inst` must be a live handle; `out` must be writable.
enum MilpgenError milpgen_instance_to_json(const struct MilpgenInstance *inst, char **out);

// # Safety
// `s` must come from this library, or be null.
void milpgen_string_free(char *s);

// # Safety
// `inst` must come from this library and not be used afterwards, or be null.
void milpgen_instance_free(struct MilpgenInstance *inst);

// Constraint count, variable count and number of nonzeros.
//
// # Safety
// `inst` must be a live handle; outputs must be writable.
enum MilpgenError milpgen_instance_dims(const struct MilpgenInstance *inst,
                                        size_t *n_cons,
                                        size_t *n_vars,
                                        size_t *nnz);

// Whether the instance bounds every variable by 1.
//
// # Safety
// `inst` must be a live handle; `out` must be writable.
enum MilpgenError milpgen_instance_is_binary(const struct MilpgenInstance *inst, bool *out);

// Copies the canonical right-hand side `b` (length = constraint count).
//
// # Safety
// `inst` must be a live handle; `buf` must hold `len` doubles.
enum MilpgenError milpgen_instance_rhs(const struct MilpgenInstance *inst, double *buf, size_t len);

// Copies the canonical objective `c` (length = variable count).
//
// # Safety
// `inst` must be a live handle; `buf` must hold `len` doubles.
enum MilpgenError milpgen_instance_objective(const struct MilpgenInstance *inst,
                                             double *buf,
                                             size_t len);

// Set-cover instance in canonical form.
//
// # Safety
// `out` must be writable.
enum MilpgenError milpgen_gen_set_cover(size_t n_cons,
                                        size_t n_vars,
                                        double density,
                                        uint64_t seed,
                                        struct MilpgenInstance **out);

// Combinatorial-auction (set packing) instance.
//
// # Safety
// `out` must be writable.
enum MilpgenError milpgen_gen_comb_auction(size_t n_items,
                                           size_t n_bids,
                                           size_t max_bundle,
                                           uint64_t seed,
                                           struct MilpgenInstance **out);

// # Safety
// `inst` must be a live handle; `out` must be writable.
enum MilpgenError milpgen_classify(const struct MilpgenInstance *inst, enum MilpgenStatus *out);

// # Safety
// `inst` must be a live handle; `out` must be writable.
enum MilpgenError milpgen_solve(const struct MilpgenInstance *inst, struct MilpgenSolveResult *out);

// Solves the instance and its dual and attaches the `(x, y, s, r)` tuple.
//
// # Safety
// `inst` must be a live handle not shared with another thread.
enum MilpgenError milpgen_instance_label(struct MilpgenInstance *inst);

// Builds the instance whose `(b, c)` follow from a solution tuple.
//
// The matrix is given as `nnz` triplets. `y2` (length `n_vars`) is read
// only when `binary` is true and must be null otherwise.
//
// # Safety
// Every non-null array must hold the stated number of elements.
enum MilpgenError milpgen_instance_from_tuple(bool binary,
                                              size_t n_cons,
                                              size_t n_vars,
                                              size_t nnz,
                                              const size_t *rows,
                                              const size_t *cols,
                                              const double *vals,
                                              const double *x,
                                              const double *y,
                                              const double *y2,
                                              const double *s,
                                              const double *r,
                                              struct MilpgenInstance **out);

// # Safety
// `inst` must be a live handle; `out` must be writable.
enum MilpgenError milpgen_instance_stats(const struct MilpgenInstance *inst,
                                         struct MilpgenStats *out);

// Loads a generator checkpoint.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum MilpgenError milpgen_model_load(const char *path, struct MilpgenModel **out);

// # Safety
// `model` must come from this library and not be used afterwards, or be null.
void milpgen_model_free(struct MilpgenModel *model);

// Generates `count` instances by rewriting constraints of labeled sources.
// `out` receives `count` new handles, each to be freed by the caller.
//
// # Safety
// `sources` must hold `n_sources` live handles; `out` must hold `count`
// writable slots.
enum MilpgenError milpgen_sample(const struct MilpgenModel *model,
                                 const struct MilpgenInstance *const *sources,
                                 size_t n_sources,
                                 double gamma,
                                 size_t count,
                                 uint64_t seed,
                                 struct MilpgenInstance **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MILPGEN_H */
