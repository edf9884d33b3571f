#ifndef CV_TELEPORT_H
#define CV_TELEPORT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CvtStatus {
  CVT_STATUS_OK = 0,
  CVT_STATUS_NULL_POINTER = 1,
  CVT_STATUS_INVALID_ARGUMENT = 2,
  CVT_STATUS_DIMENSION_MISMATCH = 3,
  // The Fock basis is too small for the requested state.
  CVT_STATUS_TRUNCATION = 4,
  // A state or outcome has zero norm or probability.
  CVT_STATUS_ZERO_NORM = 5,
  // The outcome grid misses too much probability.
  CVT_STATUS_GRID_TRUNCATION = 6,
  CVT_STATUS_BUFFER_TOO_SMALL = 7,
  CVT_STATUS_PANIC = 99,
} CvtStatus;

// Single-mode density matrix.
typedef struct CvtDensityMatrix CvtDensityMatrix;

// Single-mode pure state.
typedef struct CvtSingleMode CvtSingleMode;

// Two-mode pure state.
typedef struct CvtTwoMode CvtTwoMode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *cvt_last_error(void);

// Static description of a status code.
const char *cvt_status_description(enum CvtStatus status);

// Normalized odd cat state `∝ |α⟩ − |−α⟩` in a basis of `dim` Fock states.
enum CvtStatus cvt_odd_cat_new(double alpha_re,
                               double alpha_im,
                               size_t dim,
                               struct CvtSingleMode **out);

// Normalized coherent state `|α⟩`.
enum CvtStatus cvt_coherent_new(double alpha_re,
                                double alpha_im,
                                size_t dim,
                                struct CvtSingleMode **out);

// Single-mode state from `dim` coefficients; normalized on construction.
enum CvtStatus cvt_single_mode_from_coeffs(const double *re,
                                           const double *im,
                                           size_t dim,
                                           struct CvtSingleMode **out);

size_t cvt_single_mode_dim(const struct CvtSingleMode *state);

// Copies the coefficients into caller buffers of length `len >= dim`.
enum CvtStatus cvt_single_mode_coeffs(const struct CvtSingleMode *state,
                                      double *re,
                                      double *im,
                                      size_t len);

void cvt_single_mode_free(struct CvtSingleMode *state);

// Normalized two-mode squeezed vacuum with parameter `q`.
enum CvtStatus cvt_tmsv_new(double q, size_t dim, struct CvtTwoMode **out);

// Photon-subtracted squeezed vacuum heralded by `n1`, `n2` detector
// clicks behind beam splitters of reflectance `r1`, `r2`. The returned
// state is normalized; the heralding probability goes to `probability`
// when it is non-null.
enum CvtStatus cvt_subtracted_tmsv_new(double q,
                                       size_t n1,
                                       size_t n2,
                                       double r1,
                                       double r2,
                                       size_t dim,
                                       struct CvtTwoMode **out,
                                       double *probability);

size_t cvt_two_mode_dim(const struct CvtTwoMode *state);

// Copies the `dim × dim` coefficients row-major into buffers of length
// `len >= dim²`.
enum CvtStatus cvt_two_mode_coeffs(const struct CvtTwoMode *state,
                                   double *re,
                                   double *im,
                                   size_t len);

// Entanglement entropy in bits.
enum CvtStatus cvt_two_mode_entropy(const struct CvtTwoMode *state, double *bits);

void cvt_two_mode_free(struct CvtTwoMode *state);

// Probability density and conditional fidelity at one homodyne outcome.
// Either output may be null.
enum CvtStatus cvt_teleport_outcome(const struct CvtSingleMode *input,
                                    const struct CvtTwoMode *entangled,
                                    double x0,
                                    double p1,
                                    double *probability_density,
                                    double *fidelity);

// Outcome-averaged output density matrix on a square Gauss–Legendre grid
// of `order²` nodes over `[−bound, bound]²`.
enum CvtStatus cvt_teleport_average(const struct CvtSingleMode *input,
                                    const struct CvtTwoMode *entangled,
                                    double bound,
                                    size_t order,
                                    struct CvtDensityMatrix **out);

size_t cvt_density_matrix_dim(const struct CvtDensityMatrix *rho);

enum CvtStatus cvt_density_matrix_trace(const struct CvtDensityMatrix *rho, double *trace);

// Copies `⟨m|ρ|m'⟩` row-major into buffers of length `len >= dim²`.
enum CvtStatus cvt_density_matrix_elements(const struct CvtDensityMatrix *rho,
                                           double *re,
                                           double *im,
                                           size_t len);

// `⟨ψ|ρ|ψ⟩`.
enum CvtStatus cvt_density_matrix_fidelity(const struct CvtDensityMatrix *rho,
                                           const struct CvtSingleMode *state,
                                           double *fidelity);

// Wigner function `W(x, p)`.
enum CvtStatus cvt_density_matrix_wigner(const struct CvtDensityMatrix *rho,
                                         double x,
                                         double p,
                                         double *value);

void cvt_density_matrix_free(struct CvtDensityMatrix *rho);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CV_TELEPORT_H */
