#ifndef GKP_SIM_H
#define GKP_SIM_H

#pragma once

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum GkpStatus {
  GKP_STATUS_OK = 0,
  GKP_STATUS_NULL_POINTER = 1,
  GKP_STATUS_INVALID_ARGUMENT = 2,
  GKP_STATUS_DIMENSION_MISMATCH = 3,
  GKP_STATUS_NOT_SYMPLECTIC = 4,
  GKP_STATUS_ZERO_PROBABILITY = 5,
  GKP_STATUS_NUMERICAL = 6,
  GKP_STATUS_PANIC = 7,
} GkpStatus;

// Bred inputs, a circuit and a homodyne measurement.
typedef struct GkpScenario GkpScenario;

// A sum-of-Gaussians state.
typedef struct GkpState GkpState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message on this thread into `buf` (NUL-terminated, truncated to
// `len`). Returns the full message length in bytes, excluding the terminator.
//
// # Safety
// `buf` must be null or point to at least `len` writable bytes.
uintptr_t gkp_last_error_message(char *buf, uintptr_t len);

// Static NUL-terminated string identifying the sign and ordering conventions.
const char *gkp_convention_version(void);

// Cat amplitude that puts an `M`-round bred state on the sensor lattice.
double gkp_sensor_amplitude(uint32_t rounds);

// # Safety
// `out_state` must be a valid pointer; on success it receives a handle to free with
// [`gkp_state_free`].
enum GkpStatus gkp_bred_state_new(uint32_t rounds,
                                  double amplitude,
                                  double squeezing,
                                  struct GkpState **out_state);

// # Safety
// As for [`gkp_bred_state_new`].
enum GkpStatus gkp_squeezed_cat_new(double amplitude,
                                    double squeezing,
                                    struct GkpState **out_state);

// # Safety
// `state` must be null or a handle from this library that has not been freed.
void gkp_state_free(struct GkpState *state);

// Number of modes, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
uintptr_t gkp_state_n_modes(const struct GkpState *state);

// Number of Gaussian terms, or 0 for a null handle.
//
// # Safety
// `state` must be null or a live handle.
uintptr_t gkp_state_n_terms(const struct GkpState *state);

// `⟨D(r̄)⟩` with `r̄ = (x1, p1, x2, p2, …)` of length `2 · n_modes`.
//
// # Safety
// `rbar` must point to `len` doubles; `out_re`/`out_im` must be valid.
enum GkpStatus gkp_state_displacement_ev(const struct GkpState *state,
                                         const double *rbar,
                                         uintptr_t len,
                                         double *out_re,
                                         double *out_im);

// Wigner function at phase-space point `r` (length `2 · n_modes`).
//
// # Safety
// As for [`gkp_state_displacement_ev`].
enum GkpStatus gkp_state_wigner(const struct GkpState *state,
                                const double *r,
                                uintptr_t len,
                                double *out_re,
                                double *out_im);

// Two bred inputs through the dumbbell CZ, `p` measured on the second mode.
//
// # Safety
// `out_scenario` must be valid; free the result with [`gkp_scenario_free`].
enum GkpStatus gkp_bell_scenario_new(uint32_t rounds,
                                     double amplitude,
                                     double squeezing,
                                     bool compensate,
                                     struct GkpScenario **out_scenario);

// Four bred inputs through the three-mode linear-cluster circuit with default angles.
//
// # Safety
// As for [`gkp_bell_scenario_new`].
enum GkpStatus gkp_linear3_scenario_new(uint32_t rounds,
                                        double amplitude,
                                        double squeezing,
                                        struct GkpScenario **out_scenario);

// # Safety
// `scenario` must be null or a live handle.
void gkp_scenario_free(struct GkpScenario *scenario);

// Postselected `⟨D(r̄)⟩` on the unmeasured modes at `outcome`, and the outcome density.
//
// # Safety
// `displacement` must point to `len` doubles; all out pointers must be valid.
enum GkpStatus gkp_scenario_stabilizer_ev(const struct GkpScenario *scenario,
                                          double outcome,
                                          const double *displacement,
                                          uintptr_t len,
                                          double *out_re,
                                          double *out_im,
                                          double *out_density);

// Both linear-cluster witnesses at the centred outcome.
//
// # Safety
// `scenario` must come from [`gkp_linear3_scenario_new`]; out pointers must be valid.
enum GkpStatus gkp_linear3_witnesses(const struct GkpScenario *scenario,
                                     double *out_w,
                                     double *out_w_bar);

// Jacobi `θ₃(z, q)`.
//
// # Safety
// Out pointers must be valid.
enum GkpStatus gkp_theta3(double z_re, double z_im, double q, double *out_re, double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GKP_SIM_H */
