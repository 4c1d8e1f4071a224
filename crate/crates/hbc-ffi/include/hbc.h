/* Generated by cbindgen from crates/hbc-ffi. Do not edit. */

#ifndef HBC_H
#define HBC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of every call.
typedef enum HbcStatus {
  HBC_STATUS_OK = 0,
  // A required pointer argument was null.
  HBC_STATUS_NULL_POINTER = 1,
  // An argument lies outside its physical domain.
  HBC_STATUS_DOMAIN = 2,
  // A denominator vanished or the scenario is degenerate.
  HBC_STATUS_DEGENERATE = 3,
  // The nodal system is singular.
  HBC_STATUS_SINGULAR = 4,
  // Config text, table or profile could not be used.
  HBC_STATUS_CONFIG = 5,
  HBC_STATUS_IO = 6,
  // A lookup coordinate lies outside its table or profile.
  HBC_STATUS_RANGE = 7,
  // No interior resonance peak in the sweep.
  HBC_STATUS_PEAK = 8,
  // Internal panic; the message carries the payload.
  HBC_STATUS_PANIC = 9,
} HbcStatus;

// Opaque scenario handle.
typedef struct HbcScenario HbcScenario;

// Lumped channel capacitances in farads.
typedef struct HbcCapacitances {
  double c_x_tx;
  double c_x_rx;
  double c_gb_rx;
  double c_l;
  double c_b;
  double c_c;
} HbcCapacitances;

// Every transfer estimate for one scenario. Geometric forms are NaN when
// the matching `has_` flag is false.
typedef struct HbcReport {
  struct HbcCapacitances capacitances;
  double frequency_hz;
  double body_potential;
  double rx_distant;
  double simplified;
  double full;
  bool has_geometric;
  double geometric;
  bool has_geometric_distant;
  double geometric_distant;
  double oracle;
  double oracle_imag;
  double distant_vs_full;
  double simplified_vs_full;
  double oracle_vs_full;
  bool distant;
  bool coupled;
  bool invalid_approximation;
} HbcReport;

// Result of a resonance-based capacitance extraction.
typedef struct HbcExtraction {
  double resonant_frequency_hz;
  double capacitance_f;
  // True when the peak lies inside the quasi-static range.
  bool eqs;
} HbcExtraction;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a
// successful call. The pointer stays valid until the next call.
const char *hbc_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *hbc_version(void);

// Creates a scenario from lumped capacitances. `frequency_hz = 0` selects
// the default analysis frequency.
//
// # Safety
// `caps` must point to a readable `HbcCapacitances`; `out` must be writable.
enum HbcStatus hbc_scenario_from_capacitances(const struct HbcCapacitances *caps,
                                              double frequency_hz,
                                              struct HbcScenario **out);

// Creates a scenario from config text. Relative table paths resolve
// against `base_dir`, which may be null.
//
// # Safety
// `config_text` and a non-null `base_dir` must be NUL-terminated strings;
// `out` must be writable.
enum HbcStatus hbc_scenario_from_config(const char *config_text,
                                        const char *base_dir,
                                        struct HbcScenario **out);

// Releases a scenario. Null is ignored.
//
// # Safety
// `scenario` must be null or a handle from `hbc_scenario_from_*` that has
// not been freed.
void hbc_scenario_free(struct HbcScenario *scenario);

// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum HbcStatus hbc_scenario_capacitances(const struct HbcScenario *scenario,
                                         struct HbcCapacitances *out);

// Evaluates every closed form and the nodal solve.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum HbcStatus hbc_scenario_report(const struct HbcScenario *scenario, struct HbcReport *out);

// Full coupled transfer ratio.
//
// # Safety
// `caps` must be readable and `out` writable.
enum HbcStatus hbc_full_transfer(const struct HbcCapacitances *caps, double *out);

// Simplified coupled transfer ratio (large body and load capacitance).
//
// # Safety
// `caps` must be readable and `out` writable.
enum HbcStatus hbc_simplified_transfer(const struct HbcCapacitances *caps, double *out);

// Transfer ratio ignoring inter-device coupling.
//
// # Safety
// `caps` must be readable and `out` writable.
enum HbcStatus hbc_rx_transfer_distant(const struct HbcCapacitances *caps, double *out);

// Solves the lumped channel circuit at `frequency_hz`; writes the real
// and imaginary parts of the transfer ratio.
//
// # Safety
// `caps` must be readable; `out_re` and `out_im` writable.
enum HbcStatus hbc_oracle_transfer(const struct HbcCapacitances *caps,
                                   double frequency_hz,
                                   double *out_re,
                                   double *out_im);

// Return-path capacitance of a disc device with shadowing fraction `x`.
//
// # Safety
// `out` must be writable.
enum HbcStatus hbc_return_path_capacitance(double radius_m,
                                           double thickness_m,
                                           double disc_height_m,
                                           double x,
                                           double *out);

// Capacitance between the two plates of a device.
//
// # Safety
// `out` must be writable.
enum HbcStatus hbc_plate_to_plate_capacitance(double radius_m, double thickness_m, double *out);

// Inter-device coupling `k π a² / d`.
//
// # Safety
// `out` must be writable.
enum HbcStatus hbc_coupling_capacitance(double radius_m,
                                        double separation_m,
                                        double k_f_per_m,
                                        double *out);

// Fits `k` from one coupling measurement.
//
// # Safety
// `out` must be writable.
enum HbcStatus hbc_calibrate_coupling_constant(double c_c_f,
                                               double separation_m,
                                               double area_m2,
                                               double *out);

// Channel ratio in dB, `20 log10(ratio)`.
//
// # Safety
// `out` must be writable.
enum HbcStatus hbc_ratio_to_db(double ratio, double *out);

// Locates the resonance peak of a measured magnitude sweep and converts it
// to a capacitance for series inductance `inductance_h`.
//
// # Safety
// `frequencies_hz` and `magnitudes` must each point to `len` readable
// doubles; `out` must be writable.
enum HbcStatus hbc_capacitance_from_sweep(const double *frequencies_hz,
                                          const double *magnitudes,
                                          size_t len,
                                          double inductance_h,
                                          struct HbcExtraction *out);

// Simulates the series LC bench over a log grid of `points` frequencies
// and recovers the capacitance from its peak.
//
// # Safety
// `out` must be writable.
enum HbcStatus hbc_simulate_extraction(double inductance_h,
                                       double capacitance_f,
                                       double resistance_ohm,
                                       double f_start_hz,
                                       double f_stop_hz,
                                       size_t points,
                                       struct HbcExtraction *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HBC_H */
