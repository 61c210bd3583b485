#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace biomap {

// Match-line sensing model. Each bit-cell on a row contributes one resistor
// to the shared match line: R_high when the stored bit equals the queried
// bit, R_low when it differs. Cell resistances vary from device to device;
// both populations are modelled as normal distributions restricted to the
// window mean +/- 4 sd (clipped below at zero), mimicking manufacturing
// screening of out-of-corner devices. The row's effective resistance is the
// parallel combination, so rows with more mismatched bits sit lower, and a
// threshold on R_eff decides match vs. mismatch. Because every pair of
// distinct proper base codes differs in exactly two bits, a row holding k
// mismatched bases presents 2k low cells.
struct ResistanceModel {
  double mean_r_high = 243.8e3;  // ohms
  double sd_r_high = 50.9e3;
  double mean_r_low = 21.2e3;
  double sd_r_low = 2.5e3;
  uint64_t rng_seed = 1;

  void validate() const;  // throws std::invalid_argument
};

/// One device draw; values outside [max(0, mean - 4 sd), mean + 4 sd] are
/// rejected and redrawn (screened devices). sd == 0 short-circuits to the
/// mean without consuming randomness.
double sample_cell_resistance(double mean, double sd, std::mt19937_64& rng);

/// Parallel combination of a full row: `mismatched_bits` cells at R_low,
/// the remaining `row_bits - mismatched_bits` at R_high.
double effective_resistance(uint32_t mismatched_bits, uint32_t row_bits,
                            const ResistanceModel& model, std::mt19937_64& rng);

/// Single-draw convenience; seeds a fresh generator from model.rng_seed.
double effective_resistance(uint32_t mismatched_bits, uint32_t row_bits,
                            const ResistanceModel& model);

enum class CalibrationPolicy {
  kSampleMin,       // threshold = smallest R_eff seen at exactly the tolerance
  kNormalQuantile,  // threshold = sample mean + z(quantile) * sample sd
};

struct SenseThreshold {
  uint32_t tolerance = 0;   // base mismatches a row may carry and still match
  uint32_t row_bits = 0;
  double threshold_resistance = 0.0;
  // Calibration metadata (statistics of R_eff at exactly 2*tolerance low bits).
  uint64_t n_samples = 0;
  double sample_mean = 0.0;
  double sample_sd = 0.0;
};

/// Monte Carlo threshold calibration at the acceptance boundary: rows with
/// exactly `tolerance` base mismatches (2*tolerance low bits). With the
/// sample-min policy no such row in the calibration sample is rejected, so
/// the calibrated system has zero false negatives on it by construction.
///
/// Deterministic for fixed inputs: work is split into 64 fixed shards with
/// seeds derived from model.rng_seed, so the result does not depend on
/// `threads`. Requires n_samples >= 10^5 for a usable tail estimate.
SenseThreshold calibrate_threshold(uint32_t tolerance, uint32_t row_bits,
                                   const ResistanceModel& model,
                                   uint64_t n_samples,
                                   CalibrationPolicy policy = CalibrationPolicy::kSampleMin,
                                   double quantile = 1e-6,
                                   unsigned threads = 1);

/// One sensing event: draw the row's R_eff and compare to the threshold.
bool sense_row(uint32_t mismatched_bits, const SenseThreshold& threshold,
               const ResistanceModel& model, std::mt19937_64& rng);

struct OvershootBin {
  uint32_t extra = 0;       // base mismatches beyond tolerance
  uint64_t samples = 0;
  uint64_t matched = 0;     // rows this far over tolerance still sensed as match
  double probability = 0.0;
};

/// Estimates, for each k in 1..max_extra, the probability that a row with
/// tolerance+k base mismatches is nonetheless sensed as a match. Same fixed
/// sharding scheme as calibrate_threshold; deterministic for fixed inputs.
std::vector<OvershootBin> overshoot_distribution(const SenseThreshold& threshold,
                                                 const ResistanceModel& model,
                                                 uint32_t max_extra,
                                                 uint64_t samples_per_bin,
                                                 unsigned threads = 1);

/// Re-runs the calibration sampling streams and counts rows at exactly the
/// tolerance that would fall below the threshold. Zero for the sample-min
/// policy by construction.
uint64_t count_false_negatives(const SenseThreshold& threshold,
                               const ResistanceModel& model,
                               uint64_t n_samples, unsigned threads = 1);

struct OvershootOdds {
  uint32_t extra = 0;            // base mismatches beyond tolerance
  double p_event = 0.0;          // P(row carries tolerance+extra mismatches AND senses as match)
  double p_given_match = 0.0;    // same, conditioned on some beyond-tolerance row matching
};

/// Expected overshoot magnitude among rows accepted past the tolerance.
/// A row's mismatch count follows Binomial(bases_per_row, per_base_error_rate);
/// each per-k acceptance estimate from overshoot_distribution is weighted by
/// how often a row actually carries tolerance+k base mismatches. Rows far past
/// the tolerance are rare, so large overshoots are doubly suppressed: they must
/// both occur and slip past the threshold.
std::vector<OvershootOdds> overshoot_event_odds(const std::vector<OvershootBin>& bins,
                                                uint32_t tolerance,
                                                double per_base_error_rate,
                                                uint32_t bases_per_row);

std::string sensing_report(const ResistanceModel& model, const SenseThreshold& threshold,
                           const std::vector<OvershootBin>& bins);

}  // namespace biomap
