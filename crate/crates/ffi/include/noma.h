#ifndef NOMA_H
#define NOMA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NomaStatus {
  NOMA_STATUS_OK = 0,
  NOMA_STATUS_NULL_POINTER = 1,
  NOMA_STATUS_INVALID_ARGUMENT = 2,
  // Power split outside the NOMA range or a degenerate time split.
  NOMA_STATUS_INVALID_SPLIT = 3,
  NOMA_STATUS_NON_CONVERGENCE = 4,
  NOMA_STATUS_UNSUPPORTED = 5,
  NOMA_STATUS_INTERNAL = 6,
  NOMA_STATUS_PANIC = 7,
} NomaStatus;

// Ordered user pair drawn from `users` i.i.d. Rayleigh users.
typedef struct NomaPairing NomaPairing;

typedef struct NomaEventProbs {
  // P(E1) .. P(E4).
  double p[4];
  // Monte Carlo standard errors; zero for deterministic methods.
  double std_error[4];
  // Trials behind a Monte Carlo estimate, 0 otherwise.
  uint64_t trials;
} NomaEventProbs;

typedef struct NomaAverageRates {
  double r1_noma;
  double r2_noma;
  double r1_tdma;
  double r2_tdma;
  double std_error[4];
  uint64_t trials;
} NomaAverageRates;

typedef struct NomaRatePair {
  double r1;
  double r2;
} NomaRatePair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *noma_last_error_message(void);

// Library version as a static nul-terminated string.
const char *noma_version(void);

// Creates a pairing of the `weak`-th and `strong`-th weakest of `users`
// users at average SNR `rho` (linear). Free with [`noma_pairing_free`].
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum NomaStatus noma_pairing_new(uint32_t users,
                                 uint32_t weak,
                                 uint32_t strong,
                                 double rho,
                                 struct NomaPairing **out);

// Releases a handle from [`noma_pairing_new`]. Null is ignored.
//
// # Safety
// `pairing` must be null or a live handle not freed before.
void noma_pairing_free(struct NomaPairing *pairing);

// Closed-form event probabilities (equal time slots).
//
// # Safety
// `pairing` must be a live handle; `out` must be null or writable.
enum NomaStatus noma_event_probs_closed(const struct NomaPairing *pairing,
                                        double a2,
                                        struct NomaEventProbs *out);

// Event probabilities by 2-D quadrature, any `b2` in (0, 1).
//
// # Safety
// `pairing` must be a live handle; `out` must be null or writable.
enum NomaStatus noma_event_probs_quadrature(const struct NomaPairing *pairing,
                                            double a2,
                                            double b2,
                                            double tol,
                                            struct NomaEventProbs *out);

// Monte Carlo event frequencies.
//
// # Safety
// `pairing` must be a live handle; `out` must be null or writable.
enum NomaStatus noma_event_probs_mc(const struct NomaPairing *pairing,
                                    double a2,
                                    double b2,
                                    uint64_t trials,
                                    uint64_t seed,
                                    uint32_t shards,
                                    struct NomaEventProbs *out);

// Monte Carlo average rates of NOMA and TDMA.
//
// # Safety
// `pairing` must be a live handle; `out` must be null or writable.
enum NomaStatus noma_average_rates_mc(const struct NomaPairing *pairing,
                                      double a2,
                                      double b2,
                                      uint64_t trials,
                                      uint64_t seed,
                                      uint32_t shards,
                                      struct NomaAverageRates *out);

// Classifies one channel pair; writes 1..=4 for E1..E4.
//
// # Safety
// `event` must be null or writable.
enum NomaStatus noma_classify(double x, double y, double a2, double b2, uint32_t *event);

// NOMA rate pair with successive interference cancellation.
//
// # Safety
// `out` must be null or writable.
enum NomaStatus noma_rates(double x, double y, double a2, struct NomaRatePair *out);

// TDMA rate pair with time fraction `b2` for the strong user.
//
// # Safety
// `out` must be null or writable.
enum NomaStatus noma_tdma_rates(double x, double y, double b2, struct NomaRatePair *out);

// Power split maximizing P(E2) for the pairing of the weakest and strongest
// user.
//
// # Safety
// `out` must be null or writable.
enum NomaStatus noma_optimal_a2(double rho, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOMA_H */
