#ifndef COHERDIST_H
#define COHERDIST_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Solver termination, as reported in [`CdSolution::solve_status`].
#define CD_SOLVE_OPTIMAL 0

#define CD_SOLVE_MAX_ITERATIONS 1

#define CD_SOLVE_NUMERICAL_FAILURE 2

// Result code of every fallible call.
typedef enum CdStatus {
  CD_STATUS_OK = 0,
  CD_STATUS_NULL_POINTER = 1,
  CD_STATUS_INVALID_ARGUMENT = 2,
  CD_STATUS_SOLVER_FAILURE = 3,
  CD_STATUS_PANIC = 4,
} CdStatus;

// Distillation instance: input density, target dimension and infidelity.
typedef struct CdInstance CdInstance;

// Free-operation class: `CD_CLASS_MIO` or `CD_CLASS_DIO`.
typedef uint32_t CdClass;

// Solution route.
typedef uint32_t CdRoute;

typedef struct CdSolution {
  // Clamped to `[0, 1]`.
  double probability;
  double raw;
  double gap;
  uint32_t iterations;
  uint32_t solve_status;
  // Nonzero when `eps >= 1 - 1/m` and no program was solved.
  uint32_t trivial;
} CdSolution;

// Two-state family for catalysis.
typedef uint32_t CdFamily;

typedef struct CdCatalysis {
  double p_assisted;
  double p_unassisted;
  double ratio;
  double gap;
  uint32_t solve_status;
} CdCatalysis;

#define CD_CLASS_MIO 0

#define CD_CLASS_DIO 1

#define CD_ROUTE_COMPACT_PRIMAL 0

#define CD_ROUTE_DUAL 1

#define CD_ROUTE_CHOI 2

#define CD_FAMILY_V 0

#define CD_FAMILY_U 1

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *cd_version(void);

// Copies the calling thread's last error message into `buf` (truncated,
// always NUL-terminated when `len > 0`). Returns the full message length
// without the terminator; 0 when the last call succeeded.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t cd_last_error_message(char *buf, size_t len);

// New instance from a `dim × dim` row-major density matrix. `im` may be
// null for a real matrix. The matrix must be a density operator.
//
// # Safety
// `re` (and `im` when non-null) must hold `dim * dim` doubles; `out` must
// be writable.
enum CdStatus cd_instance_new(const double *re,
                              const double *im,
                              size_t dim,
                              size_t m,
                              double eps,
                              struct CdInstance **out);

// New instance from real amplitudes of a pure input (normalized here).
//
// # Safety
// `amps` must hold `n` doubles; `out` must be writable.
enum CdStatus cd_instance_from_amplitudes(const double *amps,
                                          size_t n,
                                          size_t m,
                                          double eps,
                                          struct CdInstance **out);

// Releases an instance; null is ignored.
//
// # Safety
// `inst` must come from a `cd_instance_*` constructor and not be used after.
void cd_instance_free(struct CdInstance *inst);

// Input dimension of an instance.
//
// # Safety
// `inst` must be a live handle; `dim` must be writable.
enum CdStatus cd_instance_dim(const struct CdInstance *inst, size_t *dim);

// Optimal success probability for `class` by `route`.
//
// # Safety
// `inst` must be a live handle; `out` must be writable.
enum CdStatus cd_solve(const struct CdInstance *inst,
                       CdClass op_class,
                       CdRoute route,
                       struct CdSolution *out);

// Closed-form SIO/IO probability for a pure input given by real amplitudes.
//
// # Safety
// `amps` must hold `n` doubles; `out` must be writable.
enum CdStatus cd_p_sio_pure(const double *amps, size_t n, size_t m, double *out);

// DIO distillation of the family mixture at `q`, with and without a
// maximally coherent qubit catalyst smoothed by `delta`.
//
// # Safety
// `out` must be writable.
enum CdStatus cd_catalysis(CdFamily family,
                           double q,
                           double delta,
                           size_t m,
                           double eps,
                           struct CdCatalysis *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COHERDIST_H */
