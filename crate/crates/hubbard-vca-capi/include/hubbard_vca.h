#ifndef HUBBARD_VCA_H
#define HUBBARD_VCA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
typedef enum HvStatus {
  HvStatus_Ok = 0,
  HvStatus_Error = 1,
  HvStatus_ConfigError = 2,
  HvStatus_NonConverged = 3,
  HvStatus_ResourceError = 4,
  HvStatus_NullPointer = 5,
  HvStatus_Panic = 6,
} HvStatus;

/**
 * Opaque solver context.
 */
typedef struct HvSolver HvSolver;

/**
 * Saddle-point result in plain C layout.
 */
typedef struct HvSaddleResult {
  double mu_prime;
  double delta_prime;
  double delta_d_prime;
  double m_prime;
  double omega_per_site;
  double gradient_norm;
  size_t iterations;
  bool converged;
} HvSaddleResult;

/**
 * Scalar lattice observables in plain C layout. `xi` is negative when the
 * coherence length is undefined (vanishing condensate).
 */
typedef struct HvObservables {
  double density;
  double pairing;
  double xi;
} HvObservables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a solver context from a JSON run configuration.
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated UTF-8 string and `out` a
 * valid pointer; the returned handle must be released with
 * [`hv_solver_free`].
 */
enum HvStatus hv_solver_new(const char *config_json, struct HvSolver **out);

/**
 * Release a solver context.
 *
 * # Safety
 * `solver` must be a handle obtained from [`hv_solver_new`] (or null).
 */
void hv_solver_free(struct HvSolver *solver);

/**
 * Copy the last error message into a caller buffer (always NUL-terminated;
 * truncates).
 *
 * # Safety
 * `solver` must be a live handle, `buf` valid for `len` bytes.
 */
enum HvStatus hv_last_error(const struct HvSolver *solver, char *buf, size_t len);

/**
 * Grand potential per site at explicit Weiss fields (d-wave and Néel
 * fields are taken from the configuration).
 *
 * # Safety
 * `solver` and `out` must be valid pointers.
 */
enum HvStatus hv_grand_potential(struct HvSolver *solver,
                                 double mu_prime,
                                 double delta_prime,
                                 double *out);

/**
 * Run the saddle search with the configured solver block.
 *
 * # Safety
 * `solver` and `out` must be valid pointers.
 */
enum HvStatus hv_find_saddle(struct HvSolver *solver, struct HvSaddleResult *out);

/**
 * Lattice observables at the stored saddle (or at the configured Weiss
 * fields when no saddle has been run).
 *
 * # Safety
 * `solver` and `out` must be valid pointers.
 */
enum HvStatus hv_observables(struct HvSolver *solver, struct HvObservables *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HUBBARD_VCA_H */
