#ifndef SPINSQUEEZE_H
#define SPINSQUEEZE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum SsqStatus {
  SSQ_STATUS_OK = 0,
  SSQ_STATUS_INVALID_ARGUMENT = 1,
  SSQ_STATUS_DEGENERATE_DIRECTION = 2,
  SSQ_STATUS_CUTOFF_OVERFLOW = 3,
  SSQ_STATUS_STEP_SIZE = 4,
  SSQ_STATUS_OPEN_LOOP = 5,
  SSQ_STATUS_RESOURCE = 6,
  SSQ_STATUS_NULL_POINTER = 7,
  SSQ_STATUS_PANIC = 8,
} SsqStatus;

// Rotation axis.
typedef enum SsqAxis {
  SSQ_AXIS_X = 0,
  SSQ_AXIS_Y = 1,
  SSQ_AXIS_Z = 2,
} SsqAxis;

// Opaque collective spin state.
typedef struct SsqSpinState SsqSpinState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Coherent spin state of `n` particles with mean spin along +x.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SsqStatus ssq_coherent_state(uint32_t n, struct SsqSpinState **out);

// Dicke basis state `index` (0 is M = +N/2) of `n` particles.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SsqStatus ssq_dicke_state(uint32_t n, size_t index, struct SsqSpinState **out);

// State from `len = n + 1` complex amplitudes given as separate real and
// imaginary arrays. The vector is normalized on input.
//
// # Safety
// `re` and `im` must point to `len` readable doubles; `out` must be writable.
enum SsqStatus ssq_spin_state_from_amplitudes(const double *re,
                                              const double *im,
                                              size_t len,
                                              struct SsqSpinState **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `state` must be null or a handle returned by this library and not yet freed.
void ssq_spin_state_free(struct SsqSpinState *state);

// Hilbert-space dimension N + 1, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
size_t ssq_spin_state_dim(const struct SsqSpinState *state);

// Copies amplitudes into `re` and `im`; `len` must equal the dimension.
//
// # Safety
// `state` must be a live handle; `re` and `im` must point to `len` writable doubles.
enum SsqStatus ssq_spin_state_amplitudes(const struct SsqSpinState *state,
                                         double *re,
                                         double *im,
                                         size_t len);

// One-axis twisting exp(-i chi_t Jz^2) applied to `state`.
//
// # Safety
// `state` must be a live handle; `out` must be writable.
enum SsqStatus ssq_oat_evolve(const struct SsqSpinState *state,
                              double chi_t,
                              struct SsqSpinState **out);

// Rotation exp(-i angle J_axis) applied to `state`.
//
// # Safety
// `state` must be a live handle; `out` must be writable.
enum SsqStatus ssq_rotate(const struct SsqSpinState *state,
                          enum SsqAxis axis,
                          double angle,
                          struct SsqSpinState **out);

// Squeezing parameter: minimum tangent-plane standard deviation over the
// coherent-state value sqrt(J/2).
//
// # Safety
// `state` must be a live handle; `xi` must be writable.
enum SsqStatus ssq_squeezing_xi(const struct SsqSpinState *state, double *xi);

// Noise reduction 10 log10(var_squeezed / var_unsqueezed).
//
// # Safety
// `db` must be writable.
enum SsqStatus ssq_squeezing_db(double var_squeezed, double var_unsqueezed, double *db);

// Runs the spin-boson gate on `state` with the oscillator starting in |0>.
//
// Time is in units of 1/delta'. `n_max` of 0 selects the automatic Fock
// cutoff. On success `out` receives the spin state projected onto the
// oscillator ground state, `chi_t_eff` the equivalent twisting strength and
// `oat_overlap` the overlap of the reduced spin state with the ideal twist.
//
// # Safety
// `state` must be a live handle; all output pointers must be writable.
enum SsqStatus ssq_gate_as_squeezer(const struct SsqSpinState *state,
                                    double lambda_over_delta,
                                    uint32_t loops,
                                    size_t n_max,
                                    struct SsqSpinState **out,
                                    double *chi_t_eff,
                                    double *oat_overlap);

// Fits the gate phase to a*m^2 over all m for `n` particles and reports the
// fitted and closed-form coefficients.
//
// # Safety
// `coefficient` and `analytic` must be writable.
enum SsqStatus ssq_gate_phase_coefficient(uint32_t n,
                                          double lambda_over_delta,
                                          uint32_t loops,
                                          double *coefficient,
                                          double *analytic);

// Message for the last failed call on this thread, or null if the last call
// succeeded. The pointer stays valid until the next call on the same thread.
const char *ssq_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ssq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPINSQUEEZE_H */
