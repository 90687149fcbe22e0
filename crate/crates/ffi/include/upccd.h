#ifndef UPCCD_H
#define UPCCD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum UpccdStatus {
  UPCCD_STATUS_OK = 0,
  UPCCD_STATUS_NULL_POINTER = 1,
  UPCCD_STATUS_PARSE = 2,
  UPCCD_STATUS_IO = 3,
  UPCCD_STATUS_INVALID_INPUT = 4,
  UPCCD_STATUS_SIZE_CAP = 5,
  UPCCD_STATUS_NUMERICAL = 6,
  UPCCD_STATUS_PANIC = 7,
} UpccdStatus;

/**
 * pCCD amplitudes with the energy they were solved at.
 */
typedef struct UpccdAmplitudes UpccdAmplitudes;

/**
 * Gate list of a UpCCD state-preparation circuit.
 */
typedef struct UpccdCircuit UpccdCircuit;

/**
 * Hamiltonian in a spatial-orbital basis.
 */
typedef struct UpccdIntegrals UpccdIntegrals;

/**
 * Gate totals of a circuit, see `upccd_circuit_counts`.
 */
typedef struct UpccdGateCounts {
  size_t native;
  size_t paired_rotations;
  size_t two_qubit;
  size_t cx;
  size_t native_depth;
  size_t depth;
} UpccdGateCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *upccd_last_error(void);

/**
 * Parses FCIDUMP text.
 *
 * # Safety
 * `text` must be a valid nul-terminated string and `out` a valid pointer.
 */
enum UpccdStatus upccd_integrals_from_fcidump(const char *text, struct UpccdIntegrals **out);

/**
 * Half-filled or general Hubbard chain in the site basis.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum UpccdStatus upccd_integrals_hubbard(size_t sites,
                                         double hopping,
                                         double interaction,
                                         size_t filling,
                                         bool periodic,
                                         struct UpccdIntegrals **out);

/**
 * Number of spatial orbitals, or 0 for a null handle.
 *
 * # Safety
 * `ints` must be null or a live handle.
 */
size_t upccd_integrals_norb(const struct UpccdIntegrals *ints);

/**
 * Number of electrons, or 0 for a null handle.
 *
 * # Safety
 * `ints` must be null or a live handle.
 */
size_t upccd_integrals_nelec(const struct UpccdIntegrals *ints);

/**
 * # Safety
 * `ints` must be null or a handle not yet freed.
 */
void upccd_integrals_free(struct UpccdIntegrals *ints);

/**
 * Lowest energy of the singlet `(N/2, N/2)` sector.
 *
 * # Safety
 * `ints` must be a live handle and `energy` a valid pointer.
 */
enum UpccdStatus upccd_exact_ground_energy(const struct UpccdIntegrals *ints, double *energy);

/**
 * Solves pCCD in the given orbitals.
 *
 * # Safety
 * `ints` must be a live handle and `out` a valid pointer.
 */
enum UpccdStatus upccd_solve_pccd(const struct UpccdIntegrals *ints, struct UpccdAmplitudes **out);

/**
 * Orbital-optimized pCCD with `restarts` extra seeded starts. Writes the
 * rotated integrals and the amplitudes solved in them.
 *
 * # Safety
 * `ints` must be a live handle; `rotated` and `out` valid pointers.
 */
enum UpccdStatus upccd_optimize_orbitals(const struct UpccdIntegrals *ints,
                                         size_t restarts,
                                         uint64_t seed,
                                         struct UpccdIntegrals **rotated,
                                         struct UpccdAmplitudes **out);

/**
 * pCCD energy the amplitudes were solved at, or NaN for a null handle.
 *
 * # Safety
 * `amps` must be null or a live handle.
 */
double upccd_amplitudes_energy(const struct UpccdAmplitudes *amps);

/**
 * Amplitude `t[i][a]` with `i` occupied and `a` virtual.
 *
 * # Safety
 * `amps` must be a live handle and `value` a valid pointer.
 */
enum UpccdStatus upccd_amplitudes_get(const struct UpccdAmplitudes *amps,
                                      size_t i,
                                      size_t a,
                                      double *value);

/**
 * # Safety
 * `amps` must be null or a handle not yet freed.
 */
void upccd_amplitudes_free(struct UpccdAmplitudes *amps);

/**
 * UpCCD circuit from the amplitudes with `|t| >= threshold`.
 *
 * # Safety
 * `amps` must be a live handle and `out` a valid pointer.
 */
enum UpccdStatus upccd_circuit_build(const struct UpccdAmplitudes *amps,
                                     double threshold,
                                     struct UpccdCircuit **out);

/**
 * # Safety
 * `circuit` must be a live handle and `counts` a valid pointer.
 */
enum UpccdStatus upccd_circuit_counts(const struct UpccdCircuit *circuit,
                                      struct UpccdGateCounts *counts);

/**
 * OpenQASM 2.0 text of the decomposed circuit; release with `upccd_string_free`.
 *
 * # Safety
 * `circuit` must be a live handle and `out` a valid pointer.
 */
enum UpccdStatus upccd_circuit_qasm(const struct UpccdCircuit *circuit, char **out);

/**
 * # Safety
 * `circuit` must be null or a handle not yet freed.
 */
void upccd_circuit_free(struct UpccdCircuit *circuit);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void upccd_string_free(char *s);

/**
 * Overlap of the thresholded UpCCD state with the exact singlet ground state
 * of `ints` (which must be the orbitals the amplitudes were solved in).
 *
 * # Safety
 * `ints` and `amps` must be live handles and `fidelity` a valid pointer.
 */
enum UpccdStatus upccd_fidelity(const struct UpccdIntegrals *ints,
                                const struct UpccdAmplitudes *amps,
                                double threshold,
                                double *fidelity);

/**
 * Canonical QPE on the singlet sector started from the thresholded UpCCD
 * state. Writes the modal-bin energy and that bin's sampled mass.
 *
 * # Safety
 * `ints` and `amps` must be live handles; `energy` and `mass` valid pointers.
 */
enum UpccdStatus upccd_qpe(const struct UpccdIntegrals *ints,
                           const struct UpccdAmplitudes *amps,
                           double threshold,
                           size_t n_ancilla,
                           uint64_t shots,
                           size_t trotter_steps,
                           bool exact,
                           uint64_t seed,
                           double *energy,
                           double *mass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UPCCD_H */
