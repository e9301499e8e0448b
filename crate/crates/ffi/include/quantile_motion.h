#ifndef QUANTILE_MOTION_H
#define QUANTILE_MOTION_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QmStatus {
  QM_STATUS_OK = 0,
  QM_STATUS_NULL_POINTER = 1,
  QM_STATUS_INVALID_ARGUMENT = 2,
  QM_STATUS_NON_CONVERGENCE = 3,
  QM_STATUS_NO_SIGN_CHANGE = 4,
  QM_STATUS_STEP_UNDERFLOW = 5,
  QM_STATUS_GRID_TOO_COARSE = 6,
  QM_STATUS_NORM_BELOW_P = 7,
  QM_STATUS_VELOCITY_SINGULAR = 8,
  // The model does not support the operation.
  QM_STATUS_UNSUPPORTED = 9,
  QM_STATUS_PANIC = 10,
} QmStatus;

typedef enum QmMethod {
  QM_METHOD_CDF = 0,
  QM_METHOD_ODE = 1,
} QmMethod;

typedef enum QmTermination {
  QM_TERMINATION_COMPLETED = 0,
  QM_TERMINATION_NORM_BELOW_P = 1,
  QM_TERMINATION_VELOCITY_SINGULAR = 2,
} QmTermination;

// Opaque 1D packet model.
typedef struct QmModel QmModel;

// Opaque traced trajectory.
typedef struct QmTrajectory QmTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Free Gaussian packet with mean position `x_bar`, momentum `p_bar`,
// momentum width `sigma_p` and mass `mass` (ħ = 1).
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QmStatus qm_free_gaussian_new(double x_bar,
                                   double p_bar,
                                   double sigma_p,
                                   double mass,
                                   struct QmModel **out);

// Gaussian packet losing probability at the uniform rate `lambda`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QmStatus qm_dissipative_gaussian_new(double x_bar,
                                          double p_bar,
                                          double sigma_p,
                                          double mass,
                                          double lambda,
                                          struct QmModel **out);

// Gaussian packet (m = ħ = 1) scattering off the barrier of height
// `barrier_height` on |x| ≤ `barrier_halfwidth`, superposed over `k_nodes`
// wave numbers.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QmStatus qm_tunneling_packet_new(double x_bar,
                                      double p_bar,
                                      double sigma_p,
                                      double barrier_height,
                                      double barrier_halfwidth,
                                      size_t k_nodes,
                                      struct QmModel **out);

// The free packet with the same truncated spectrum as
// `qm_tunneling_packet_new`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum QmStatus qm_free_reference_new(double x_bar,
                                    double p_bar,
                                    double sigma_p,
                                    size_t k_nodes,
                                    struct QmModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must come from a `qm_*_new` call and not be used afterwards.
void qm_model_free(struct QmModel *model);

// Density ρ and current j at (x, t).
//
// # Safety
// `model` must be a live handle; `rho` and `current` valid writable pointers.
enum QmStatus qm_density(const struct QmModel *model,
                         double x,
                         double t,
                         double *rho,
                         double *current);

// Tail probability ∫ₓ^∞ ρ(x′, t) dx′.
//
// # Safety
// `model` must be a live handle; `out` a valid writable pointer.
enum QmStatus qm_tail_probability(const struct QmModel *model, double x, double t, double *out);

// Position x with tail probability `p` at time `t`.
//
// # Safety
// `model` must be a live handle; `out` a valid writable pointer.
enum QmStatus qm_quantile_position(const struct QmModel *model, double p, double t, double *out);

// Quantile velocity at (x, t).
//
// # Safety
// `model` must be a live handle; `out` a valid writable pointer.
enum QmStatus qm_quantile_velocity(const struct QmModel *model, double x, double t, double *out);

// Σ |T(k)|² |ψ̃(k)|² over the grid; `Unsupported` for Gaussian models.
//
// # Safety
// `model` must be a live handle; `out` a valid writable pointer.
enum QmStatus qm_transmission_probability(const struct QmModel *model, double *out);

// Traces the quantile `p` over the strictly increasing `times`.
//
// # Safety
// `model` must be a live handle, `times` must point to `n_times` doubles
// and `out` to writable storage for one handle.
enum QmStatus qm_trace(const struct QmModel *model,
                       double p,
                       const double *times,
                       size_t n_times,
                       enum QmMethod method,
                       struct QmTrajectory **out);

// Number of samples; 0 for null.
//
// # Safety
// `traj` must be null or a live handle.
size_t qm_trajectory_len(const struct QmTrajectory *traj);

// Sample `i`: time, position, velocity and status (0 ok, 1 cdf-fallback).
//
// # Safety
// `traj` must be a live handle; output pointers valid and writable.
enum QmStatus qm_trajectory_sample(const struct QmTrajectory *traj,
                                   size_t i,
                                   double *t,
                                   double *x,
                                   double *v,
                                   int *status);

// How the trajectory ended; `time` receives t_end (NormBelowP), the time
// of the singularity (VelocitySingular) or the last sample time.
//
// # Safety
// `traj` must be a live handle; output pointers valid and writable.
enum QmStatus qm_trajectory_termination(const struct QmTrajectory *traj,
                                        enum QmTermination *kind,
                                        double *time);

// Releases a trajectory; null is ignored.
//
// # Safety
// `traj` must come from `qm_trace` and not be used afterwards.
void qm_trajectory_free(struct QmTrajectory *traj);

// Message of the last failed call on this thread (empty if none). The
// pointer stays valid until the next failing call on the same thread.
const char *qm_last_error_message(void);

// Static description of a status code.
const char *qm_status_message(enum QmStatus status);

// Library version, NUL-terminated.
const char *qm_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUANTILE_MOTION_H */
