#ifndef SBL_H
#define SBL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SblStatus {
  SBL_STATUS_OK = 0,
  SBL_STATUS_INVALID_ARGUMENT = 1,
  SBL_STATUS_NOT_ON_SPHERE = 2,
  SBL_STATUS_DIMENSION_MISMATCH = 3,
  SBL_STATUS_DUPLICATE_NODES = 4,
  SBL_STATUS_DEGENERATE_NODES = 5,
  SBL_STATUS_INFEASIBLE = 6,
  SBL_STATUS_NOT_POSITIVE_DEFINITE = 7,
  SBL_STATUS_DEGENERATE_OPERATOR = 8,
  SBL_STATUS_NO_CONVERGENCE = 9,
  SBL_STATUS_DIVERGENCE = 10,
  SBL_STATUS_UNSUPPORTED = 11,
  SBL_STATUS_CONFIG = 12,
  SBL_STATUS_FORMAT = 13,
  SBL_STATUS_VERIFICATION = 14,
  SBL_STATUS_IO = 15,
  SBL_STATUS_NULL_POINTER = 16,
  SBL_STATUS_BUFFER_TOO_SMALL = 17,
  SBL_STATUS_PANIC = 18,
} SblStatus;

/**
 * How μ_ℓ is computed.
 */
typedef enum SblSpectrumMethod {
  SBL_SPECTRUM_METHOD_CLOSED_FORM = 0,
  SBL_SPECTRUM_METHOD_FUNK_HECKE1D = 1,
  SBL_SPECTRUM_METHOD_DENSE_SPHERE = 2,
} SblSpectrumMethod;

/**
 * Matrix P of the training loss.
 */
typedef enum SblLossKind {
  SBL_LOSS_KIND_MSE = 0,
  SBL_LOSS_KIND_QUADRATURE = 1,
  SBL_LOSS_KIND_SOBOLEV = 2,
} SblLossKind;

typedef enum SblInitScheme {
  SBL_INIT_SCHEME_GAUSSIAN = 0,
  SBL_INIT_SCHEME_ANTITHETIC = 1,
} SblInitScheme;

/**
 * A 2-D Sobolev frequency mask.
 */
typedef struct SblImageMask SblImageMask;

/**
 * The limiting NTK Gram matrix.
 */
typedef struct SblKernel SblKernel;

/**
 * A loss matrix P.
 */
typedef struct SblLoss SblLoss;

/**
 * A two-layer ReLU network.
 */
typedef struct SblNet SblNet;

/**
 * Points on S^{d-1}.
 */
typedef struct SblPointSet SblPointSet;

/**
 * Nodes with positive weights.
 */
typedef struct SblQuadrature SblQuadrature;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sbl_version(void);

/**
 * Copies the calling thread's last error message (NUL-terminated, possibly
 * truncated) into `buf` and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t sbl_last_error_message(char *buf, size_t cap);

/**
 * K∞(t) for t in [-1, 1].
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SblStatus sbl_k_infinity(double t, double *out);

/**
 * Eigenvalue μ_ℓ of K∞ on S^{d-1}.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SblStatus sbl_mu(size_t d, size_t ell, enum SblSpectrumMethod method, double *out);

/**
 * Points from `n` rows of `d` coordinates each; every row must have unit norm.
 *
 * # Safety
 * `coords` must be valid for `n * d` reads; `out` for one write.
 */
enum SblStatus sbl_point_set_new(const double *coords,
                                 size_t n,
                                 size_t d,
                                 struct SblPointSet **out);

/**
 * Points on S¹ at the given angles.
 *
 * # Safety
 * `thetas` must be valid for `n` reads; `out` for one write.
 */
enum SblStatus sbl_point_set_from_angles(const double *thetas, size_t n, struct SblPointSet **out);

/**
 * Three arcs on S¹ with the given per-arc counts.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SblStatus sbl_point_set_three_arc(size_t n_base,
                                       size_t n_arc1,
                                       size_t n_arc2,
                                       struct SblPointSet **out);

/**
 * # Safety
 * `set` must be a live handle and `out` valid for one write.
 */
enum SblStatus sbl_point_set_len(const struct SblPointSet *set, size_t *out);

/**
 * # Safety
 * `set` must be null or a handle not yet freed.
 */
void sbl_point_set_free(struct SblPointSet *set);

/**
 * Least-norm positive rule exact through degree `l_max`.
 *
 * # Safety
 * `set` must be a live handle and `out` valid for one write.
 */
enum SblStatus sbl_quadrature_design(const struct SblPointSet *set,
                                     size_t l_max,
                                     struct SblQuadrature **out);

/**
 * Copies the weights into `out`.
 *
 * # Safety
 * `rule` must be a live handle, `out` valid for `cap` writes, `len_out` null or valid.
 */
enum SblStatus sbl_quadrature_weights(const struct SblQuadrature *rule,
                                      double *out,
                                      size_t cap,
                                      size_t *len_out);

/**
 * Σ c_i f(x_i) for samples f(x_i) in node order.
 *
 * # Safety
 * `rule` must be a live handle, `samples` valid for `n` reads, `out` for one write.
 */
enum SblStatus sbl_quadrature_integrate(const struct SblQuadrature *rule,
                                        const double *samples,
                                        size_t n,
                                        double *out);

/**
 * # Safety
 * `rule` must be null or a handle not yet freed.
 */
void sbl_quadrature_free(struct SblQuadrature *rule);

/**
 * H∞ over a point set.
 *
 * # Safety
 * `set` must be a live handle and `out` valid for one write.
 */
enum SblStatus sbl_kernel_new(const struct SblPointSet *set, struct SblKernel **out);

/**
 * Copies the n×n entries, row-major.
 *
 * # Safety
 * `kernel` must be a live handle, `out` valid for `cap` writes, `len_out` null or valid.
 */
enum SblStatus sbl_kernel_entries(const struct SblKernel *kernel,
                                  double *out,
                                  size_t cap,
                                  size_t *len_out);

/**
 * Eigenvalues in ascending order.
 *
 * # Safety
 * `kernel` must be a live handle, `out` valid for `cap` writes, `len_out` null or valid.
 */
enum SblStatus sbl_kernel_eigenvalues(const struct SblKernel *kernel,
                                      double *out,
                                      size_t cap,
                                      size_t *len_out);

/**
 * # Safety
 * `kernel` must be null or a handle not yet freed.
 */
void sbl_kernel_free(struct SblKernel *kernel);

/**
 * Loss matrix for a rule: n⁻¹I, D_c, or P_s (using `s` and `l_max`).
 *
 * # Safety
 * `rule` must be a live handle and `out` valid for one write.
 */
enum SblStatus sbl_loss_new(const struct SblQuadrature *rule,
                            enum SblLossKind kind,
                            double s,
                            size_t l_max,
                            struct SblLoss **out);

/**
 * ½ vᵀPv.
 *
 * # Safety
 * `loss` must be a live handle, `v` valid for `n` reads, `out` for one write.
 */
enum SblStatus sbl_loss_value(const struct SblLoss *loss, const double *v, size_t n, double *out);

/**
 * Step-size bound that guarantees descent for this loss.
 *
 * # Safety
 * `loss` must be a live handle and `out` valid for one write.
 */
enum SblStatus sbl_loss_max_step_size(const struct SblLoss *loss, double *out);

/**
 * # Safety
 * `loss` must be null or a handle not yet freed.
 */
void sbl_loss_free(struct SblLoss *loss);

/**
 * Random network of width `m` on S^{d-1}.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SblStatus sbl_net_new(size_t m,
                           size_t d,
                           double kappa,
                           enum SblInitScheme scheme,
                           uint64_t seed,
                           struct SblNet **out);

/**
 * Network outputs at every point of `set`.
 *
 * # Safety
 * Handles must be live, `out` valid for `cap` writes, `len_out` null or valid.
 */
enum SblStatus sbl_net_predict(const struct SblNet *net,
                               const struct SblPointSet *set,
                               double *out,
                               size_t cap,
                               size_t *len_out);

/**
 * Full-batch gradient descent on ½(y − u)ᵀP(y − u); writes the final loss.
 *
 * # Safety
 * Handles must be live, `y` valid for `n` reads, `final_loss` null or valid.
 */
enum SblStatus sbl_net_train(struct SblNet *net,
                             const struct SblPointSet *set,
                             const struct SblLoss *loss,
                             const double *y,
                             size_t n,
                             double eta,
                             size_t epochs,
                             double *final_loss);

/**
 * # Safety
 * `net` must be null or a handle not yet freed.
 */
void sbl_net_free(struct SblNet *net);

/**
 * Mask (1 + ‖ξ‖²)^{s/2} over centered frequencies of an h×w image.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum SblStatus sbl_image_mask_new(size_t h, size_t w, double s, struct SblImageMask **out);

/**
 * ½‖S ∘ F r‖² for a row-major residual image r.
 *
 * # Safety
 * `mask` must be a live handle, `r` valid for `len` reads, `out` for one write.
 */
enum SblStatus sbl_image_mask_loss(const struct SblImageMask *mask,
                                   const double *r,
                                   size_t len,
                                   double *out);

/**
 * # Safety
 * `mask` must be null or a handle not yet freed.
 */
void sbl_image_mask_free(struct SblImageMask *mask);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SBL_H */
