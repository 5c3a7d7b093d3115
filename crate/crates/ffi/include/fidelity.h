#ifndef FIDELITY_H
#define FIDELITY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Stencil fit of `F²`.
 */
#define FID_METHOD_STENCIL 0

/**
 * Finite-difference derivative vectors.
 */
#define FID_METHOD_DERIVATIVE 1

#define FID_WARN_FIT_RESIDUAL 1

#define FID_WARN_H_UNCONVERGED 2

#define FID_WARN_METHOD_MISMATCH 4

enum FidStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  FID_STATUS_OK = 0,
  FID_STATUS_NULL_POINTER = 1,
  FID_STATUS_INVALID_ARGUMENT = 2,
  FID_STATUS_OUT_OF_RANGE = 3,
  FID_STATUS_NOT_CONVERGED = 4,
  FID_STATUS_DEGENERATE = 5,
  FID_STATUS_GAUGE = 6,
  FID_STATUS_BUFFER_TOO_SMALL = 7,
  FID_STATUS_PANIC = 8,
};
#ifndef __cplusplus
typedef int32_t FidStatus;
#endif // __cplusplus

/**
 * Sz = 0 basis of an even chain.
 */
typedef struct FidBasis FidBasis;

/**
 * Ground state of one Hamiltonian.
 */
typedef struct FidSolution FidSolution;

typedef struct FidExpansion {
  double lambda;
  double step;
  double chi2;
  double chi3;
  double fit_residual;
  double energy;
  double gap;
  /**
   * `F(λ, λ + h)`.
   */
  double f_plus_h;
  /**
   * Bitwise OR of `FID_WARN_*`.
   */
  uint32_t warnings;
} FidExpansion;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *fid_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t fid_basis_new(uint32_t sites, struct FidBasis **out);

/**
 * # Safety
 * `basis` must come from [`fid_basis_new`] and not be used afterwards.
 */
void fid_basis_free(struct FidBasis *basis);

/**
 * # Safety
 * Pointers must be valid.
 */
int32_t fid_basis_dim(const struct FidBasis *basis, uint64_t *out);

/**
 * Index of a bit configuration within the basis.
 *
 * # Safety
 * Pointers must be valid.
 */
int32_t fid_basis_rank(const struct FidBasis *basis, uint64_t mask, uint64_t *out);

/**
 * # Safety
 * Pointers must be valid.
 */
int32_t fid_basis_unrank(const struct FidBasis *basis, uint64_t index, uint64_t *out);

/**
 * Ground state of `H(λ)` with default solver settings and the given seed.
 *
 * # Safety
 * Pointers must be valid.
 */
int32_t fid_ground_state(const struct FidBasis *basis,
                         double lambda,
                         uint64_t seed,
                         struct FidSolution **out);

/**
 * # Safety
 * `solution` must come from [`fid_ground_state`] and not be used afterwards.
 */
void fid_solution_free(struct FidSolution *solution);

/**
 * # Safety
 * Pointers must be valid.
 */
int32_t fid_solution_energy(const struct FidSolution *solution, double *out);

/**
 * # Safety
 * Pointers must be valid.
 */
int32_t fid_solution_gap(const struct FidSolution *solution, double *out);

/**
 * Copies the ground-state vector into `buffer`, which must hold `len`
 * doubles with `len` at least the basis dimension.
 *
 * # Safety
 * `buffer` must be valid for `len` writes.
 */
int32_t fid_solution_vector(const struct FidSolution *solution, double *buffer, size_t len);

/**
 * `|⟨a|b⟩|` of two vectors of length `len`.
 *
 * # Safety
 * `a` and `b` must be valid for `len` reads.
 */
int32_t fid_overlap_fidelity(const double *a, const double *b, size_t len, double *out);

/**
 * `χ^(2)` and `χ^(3)` at `λ` with stencil step `h`.
 *
 * # Safety
 * Pointers must be valid.
 */
int32_t fid_expansion_point(const struct FidBasis *basis,
                            double lambda,
                            double h,
                            int32_t method,
                            struct FidExpansion *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIDELITY_H */
