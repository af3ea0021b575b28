#ifndef PENCIL_RESTORE_H
#define PENCIL_RESTORE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PrStatus {
  PR_STATUS_OK = 0,
  PR_STATUS_NULL_POINTER = 1,
  PR_STATUS_INVALID_ARGUMENT = 2,
  PR_STATUS_PARSE = 3,
  PR_STATUS_NUMERICAL = 4,
  PR_STATUS_NON_CONVERGENCE = 5,
  PR_STATUS_BUFFER_TOO_SMALL = 6,
  PR_STATUS_PANIC = 7,
} PrStatus;

/**
 * Opaque result of a restoration run.
 */
typedef struct PrRestoration PrRestoration;

/**
 * Opaque descriptor system, optionally with its port-Hamiltonian form.
 */
typedef struct PrSystem PrSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. The pointer stays valid
 * until the next library call on the same thread.
 */
const char *pr_last_error(void);

/**
 * Releases a string returned by the library.
 *
 * # Safety
 * `s` must be null or a string returned by this library that has not been freed.
 */
void pr_string_free(char *s);

/**
 * Seeded strictly passive port-Hamiltonian system with default generator options.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum PrStatus pr_system_generate(size_t n, size_t m, uint64_t seed, struct PrSystem **out);

/**
 * Parses a system file (JSON text).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writing a pointer.
 */
enum PrStatus pr_system_from_json(const char *json, struct PrSystem **out);

/**
 * Serializes a system to JSON; release the result with [`pr_string_free`].
 *
 * # Safety
 * `sys` must be a live handle; `out` must be valid for writing a pointer.
 */
enum PrStatus pr_system_to_json(const struct PrSystem *sys, char **out);

/**
 * State dimension `n` and port dimension `m`.
 *
 * # Safety
 * `sys` must be a live handle; `n` and `m` must be valid for writing.
 */
enum PrStatus pr_system_dims(const struct PrSystem *sys, size_t *n, size_t *m);

/**
 * Releases a system handle.
 *
 * # Safety
 * `sys` must be null or a handle from this library that has not been freed.
 */
void pr_system_free(struct PrSystem *sys);

/**
 * Stability radius `ρ` of `(E, A)` and the minimizing frequency; when the
 * minimum is attained at infinity `*omega_infinite` is set and `*omega` is
 * infinite.
 *
 * # Safety
 * `sys` must be a live handle; the output pointers must be valid for writing.
 */
enum PrStatus pr_stability_radius(const struct PrSystem *sys,
                                  double *rho,
                                  double *omega,
                                  bool *omega_infinite);

/**
 * Passivity checks of the system's even pencil and state pencil; the full
 * report is returned as JSON when `report_json` is non-null (release it
 * with [`pr_string_free`]).
 *
 * # Safety
 * `sys` must be a live handle; `passed` must be valid for writing;
 * `report_json` must be null or valid for writing a pointer.
 */
enum PrStatus pr_check_passivity(const struct PrSystem *sys, bool *passed, char **report_json);

/**
 * Applies a seeded random structured perturbation of norm `delta` to the
 * system's even pencil and restores its structure.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be valid for writing a pointer.
 */
enum PrStatus pr_restore(const struct PrSystem *sys,
                         double delta,
                         uint64_t seed,
                         struct PrRestoration **out);

/**
 * Number of fixed-point iterations used.
 *
 * # Safety
 * `r` must be a live handle; `out` must be valid for writing.
 */
enum PrStatus pr_restoration_iterations(const struct PrRestoration *r, size_t *out);

/**
 * Copies the residual history `δ₀, δ₁, …` into `buf`. `*len` receives the
 * full length; `BufferTooSmall` is returned (and nothing copied) when
 * `capacity` is insufficient.
 *
 * # Safety
 * `r` must be a live handle; `buf` must be valid for `capacity` writes (or
 * null when `capacity` is 0); `len` must be valid for writing.
 */
enum PrStatus pr_restoration_residual_history(const struct PrRestoration *r,
                                              double *buf,
                                              size_t capacity,
                                              size_t *len);

/**
 * `‖(Y₂₁, Y₁₂)‖_F` and the backward errors in descriptor
 * `‖(ΔE, ΔA, ΔB, ΔC, ΔD)‖_F` and port-Hamiltonian `‖(ΔR, ΔJ, ΔG, ΔP)‖_F`
 * coordinates. Any output pointer may be null.
 *
 * # Safety
 * `r` must be a live handle; non-null outputs must be valid for writing.
 */
enum PrStatus pr_restoration_norms(const struct PrRestoration *r,
                                   double *y_norm,
                                   double *descriptor_error,
                                   double *ph_error);

/**
 * The restored descriptor system as a new handle.
 *
 * # Safety
 * `r` must be a live handle; `out` must be valid for writing a pointer.
 */
enum PrStatus pr_restoration_restored_system(const struct PrRestoration *r, struct PrSystem **out);

/**
 * Full restoration report as JSON; release it with [`pr_string_free`].
 *
 * # Safety
 * `r` must be a live handle; `out` must be valid for writing a pointer.
 */
enum PrStatus pr_restoration_to_json(const struct PrRestoration *r, char **out);

/**
 * Releases a restoration handle.
 *
 * # Safety
 * `r` must be null or a handle from this library that has not been freed.
 */
void pr_restoration_free(struct PrRestoration *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PENCIL_RESTORE_H */
