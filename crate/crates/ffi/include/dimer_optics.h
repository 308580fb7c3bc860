/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef DIMER_OPTICS_H
#define DIMER_OPTICS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status codes; the non-zero values match the command-line exit codes
 * where a category exists.
 */
typedef enum DoptStatus {
  DOPT_STATUS_OK = 0,
  DOPT_STATUS_IO = 1,
  DOPT_STATUS_CONFIG = 2,
  DOPT_STATUS_NUMERIC = 3,
  DOPT_STATUS_SECULAR = 4,
  DOPT_STATUS_NULL_POINTER = 5,
  DOPT_STATUS_PANIC = 6,
} DoptStatus;

typedef enum DoptCase {
  DOPT_CASE_DIRECT_A = 0,
  DOPT_CASE_INDIRECT_B = 1,
  DOPT_CASE_MIXED_C = 2,
  DOPT_CASE_NUMERIC = 3,
} DoptCase;

/**
 * Opaque dimer configuration.
 */
typedef struct DoptDimer DoptDimer;

/**
 * Opaque eigen-decomposition of a dimer.
 */
typedef struct DoptEigen DoptEigen;

typedef struct DoptVec3 {
  double x;
  double y;
  double z;
} DoptVec3;

/**
 * Monomer in eV and Debye.
 */
typedef struct DoptMonomer {
  double energy;
  struct DoptVec3 mu;
  struct DoptVec3 perm_ground;
  struct DoptVec3 perm_excited;
} DoptMonomer;

/**
 * Symmetric electrostatic couplings, eV.
 */
typedef struct DoptCoupling {
  double q00;
  double q11;
  double q22;
  double q01;
  double q02;
  double q12;
} DoptCoupling;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *dopt_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *dopt_last_error(void);

enum DoptStatus dopt_dimer_new(const struct DoptMonomer *monomer1,
                               const struct DoptMonomer *monomer2,
                               const struct DoptCoupling *coupling,
                               struct DoptDimer **out);

void dopt_dimer_free(struct DoptDimer *dimer);

/**
 * Refractive index `n` and cutoff energy `nu_c` (eV) of the medium.
 */
enum DoptStatus dopt_dimer_set_medium(struct DoptDimer *dimer, double n, double nu_c);

enum DoptStatus dopt_dimer_set_self_dipole(struct DoptDimer *dimer, bool on);

/**
 * Replaces the derived λ; a NaN argument restores the derived value.
 */
enum DoptStatus dopt_dimer_set_lambda(struct DoptDimer *dimer, double lambda);

enum DoptStatus dopt_dimer_lambda(const struct DoptDimer *dimer, double *out);

enum DoptStatus dopt_diagonalize(const struct DoptDimer *dimer, struct DoptEigen **out);

void dopt_eigen_free(struct DoptEigen *eigen);

enum DoptStatus dopt_eigen_case(const struct DoptEigen *eigen, enum DoptCase *out);

/**
 * Ascending eigenenergies, eV, into `out[3]`.
 */
enum DoptStatus dopt_eigen_energies(const struct DoptEigen *eigen, double *out);

/**
 * Site amplitudes of eigenstate `state` into `out[3]`.
 */
enum DoptStatus dopt_eigen_vector(const struct DoptEigen *eigen, uint32_t state, double *out);

/**
 * Eigenbasis dipole `d_ab`, Debye.
 */
enum DoptStatus dopt_eigen_dipole(const struct DoptEigen *eigen,
                                  uint32_t a,
                                  uint32_t b,
                                  struct DoptVec3 *out);

/**
 * Eigenbasis rate matrix at `temperature` (K) into `out[9]`, row-major
 * `[from][to]`, eV.
 */
enum DoptStatus dopt_rate_matrix(const struct DoptEigen *eigen, double temperature, double *out);

/**
 * Fourth-order corrected rate `from -> to`; `shifted` evaluates kernels at
 * the polaron-shifted frequency.
 */
enum DoptStatus dopt_corrected_rate(const struct DoptEigen *eigen,
                                    double temperature,
                                    uint32_t from,
                                    uint32_t to,
                                    bool shifted,
                                    double *out);

/**
 * Populations at `n_times` ascending times (ħ/eV) into `out[3 * n_times]`.
 */
enum DoptStatus dopt_evolve(const double *rates,
                            const double *initial,
                            const double *times,
                            size_t n_times,
                            double *out);

/**
 * Unique stationary populations into `out[3]`.
 */
enum DoptStatus dopt_steady_state(const double *rates, double *out);

/**
 * Runs a TOML run configuration. With a null `out_dir` the artifact is
 * returned in `*contents` (free with [`dopt_string_free`]); otherwise it is
 * written under `out_dir` and `*contents` receives its path.
 */
enum DoptStatus dopt_run_config(const char *config_toml, const char *out_dir, char **contents);

void dopt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DIMER_OPTICS_H */
