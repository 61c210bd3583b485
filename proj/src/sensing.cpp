#include "biomap/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>

namespace biomap {

namespace {

constexpr uint64_t kShards = 64;  // fixed shard count keeps results thread-count independent
constexpr uint64_t kCalibrationSalt = 0xca11b8a7e0000000ull;
constexpr uint64_t kOvershootSalt = 0x0fe25b007e000000ull;

// Devices whose resistance lands outside mean +/- 4 sd are treated as screened
// out (rejected at manufacturing test) and redrawn. Without a lower bound the
// normal tail admits near-zero resistances whose conductance dominates an
// entire row, and one such cell in a billion draws pins the sample-min
// threshold to a meaningless value.
constexpr double kDeviceScreenSigmas = 4.0;

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t shard_seed(uint64_t model_seed, uint64_t salt, uint64_t shard) {
  return mix64(model_seed ^ mix64(salt + shard));
}

uint64_t shard_samples(uint64_t total, uint64_t shard) {
  return total / kShards + (shard < total % kShards ? 1 : 0);
}

// Runs fn(shard) for shard in [0, kShards) across up to `threads` workers.
void parallel_shards(unsigned threads, const std::function<void(uint64_t)>& fn) {
  const unsigned t = std::max(1u, std::min<unsigned>(threads, kShards));
  if (t == 1) {
    for (uint64_t s = 0; s < kShards; ++s) fn(s);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (unsigned w = 0; w < t; ++w)
    pool.emplace_back([&, w]() {
      for (uint64_t s = w; s < kShards; s += t) fn(s);
    });
  for (auto& th : pool) th.join();
}

struct ShardStats {
  double min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  double sumsq = 0.0;
};

void check_row(uint32_t mismatched_bits, uint32_t row_bits) {
  if (row_bits == 0) throw std::invalid_argument("row_bits must be positive");
  if (mismatched_bits > row_bits)
    throw std::invalid_argument("mismatched_bits exceeds row_bits");
}

}  // namespace

void ResistanceModel::validate() const {
  if (mean_r_high <= 0 || mean_r_low <= 0)
    throw std::invalid_argument("resistance means must be positive");
  if (sd_r_high < 0 || sd_r_low < 0)
    throw std::invalid_argument("resistance sds must be non-negative");
}

namespace {

// Summed conductance of `count` cells from one device population. The
// distribution object is hoisted out of the loop so the generator's cached
// second normal is not thrown away between draws.
double population_conductance(uint32_t count, double mean, double sd,
                              std::mt19937_64& rng) {
  if (count == 0) return 0.0;
  if (sd == 0.0) return double(count) / mean;
  const double lo = std::max(0.0, mean - kDeviceScreenSigmas * sd);
  const double hi = mean + kDeviceScreenSigmas * sd;
  std::normal_distribution<double> dist(mean, sd);
  double conductance = 0.0;
  for (uint32_t i = 0; i < count; ++i) {
    double r;
    do {
      r = dist(rng);
    } while (r <= 0.0 || r < lo || r > hi);
    conductance += 1.0 / r;
  }
  return conductance;
}

}  // namespace

double sample_cell_resistance(double mean, double sd, std::mt19937_64& rng) {
  if (sd == 0.0) return mean;
  const double lo = std::max(0.0, mean - kDeviceScreenSigmas * sd);
  const double hi = mean + kDeviceScreenSigmas * sd;
  std::normal_distribution<double> dist(mean, sd);
  double r;
  do {
    r = dist(rng);
  } while (r <= 0.0 || r < lo || r > hi);
  return r;
}

double effective_resistance(uint32_t mismatched_bits, uint32_t row_bits,
                            const ResistanceModel& model, std::mt19937_64& rng) {
  check_row(mismatched_bits, row_bits);
  model.validate();
  const double conductance =
      population_conductance(mismatched_bits, model.mean_r_low, model.sd_r_low, rng) +
      population_conductance(row_bits - mismatched_bits, model.mean_r_high,
                             model.sd_r_high, rng);
  return 1.0 / conductance;
}

double effective_resistance(uint32_t mismatched_bits, uint32_t row_bits,
                            const ResistanceModel& model) {
  std::mt19937_64 rng(model.rng_seed);
  return effective_resistance(mismatched_bits, row_bits, model, rng);
}

SenseThreshold calibrate_threshold(uint32_t tolerance, uint32_t row_bits,
                                   const ResistanceModel& model, uint64_t n_samples,
                                   CalibrationPolicy policy, double quantile,
                                   unsigned threads) {
  model.validate();
  const uint32_t boundary_bits = 2 * tolerance;
  check_row(boundary_bits, row_bits);
  if (n_samples < 100000)
    throw std::invalid_argument("calibrate_threshold: need at least 1e5 samples");
  if (policy == CalibrationPolicy::kNormalQuantile && (quantile <= 0.0 || quantile >= 1.0))
    throw std::invalid_argument("calibrate_threshold: quantile must be in (0,1)");

  std::vector<ShardStats> stats(kShards);
  parallel_shards(threads, [&](uint64_t s) {
    std::mt19937_64 rng(shard_seed(model.rng_seed, kCalibrationSalt + tolerance, s));
    ShardStats local;
    const uint64_t n = shard_samples(n_samples, s);
    for (uint64_t i = 0; i < n; ++i) {
      const double r = effective_resistance(boundary_bits, row_bits, model, rng);
      local.min = std::min(local.min, r);
      local.sum += r;
      local.sumsq += r * r;
    }
    stats[s] = local;
  });

  // Merge in fixed shard order so floating-point sums are reproducible.
  ShardStats all;
  for (const ShardStats& s : stats) {
    all.min = std::min(all.min, s.min);
    all.sum += s.sum;
    all.sumsq += s.sumsq;
  }

  SenseThreshold out;
  out.tolerance = tolerance;
  out.row_bits = row_bits;
  out.n_samples = n_samples;
  out.sample_mean = all.sum / double(n_samples);
  const double var =
      std::max(0.0, (all.sumsq - double(n_samples) * out.sample_mean * out.sample_mean) /
                        double(n_samples - 1));
  out.sample_sd = std::sqrt(var);
  if (policy == CalibrationPolicy::kSampleMin) {
    out.threshold_resistance = all.min;
  } else {
    const boost::math::normal_distribution<double> unit(0.0, 1.0);
    out.threshold_resistance =
        out.sample_mean + boost::math::quantile(unit, quantile) * out.sample_sd;
  }
  return out;
}

bool sense_row(uint32_t mismatched_bits, const SenseThreshold& threshold,
               const ResistanceModel& model, std::mt19937_64& rng) {
  return effective_resistance(mismatched_bits, threshold.row_bits, model, rng) >=
         threshold.threshold_resistance;
}

std::vector<OvershootBin> overshoot_distribution(const SenseThreshold& threshold,
                                                 const ResistanceModel& model,
                                                 uint32_t max_extra,
                                                 uint64_t samples_per_bin,
                                                 unsigned threads) {
  model.validate();
  if (max_extra == 0) return {};
  check_row(2 * (threshold.tolerance + max_extra), threshold.row_bits);

  std::vector<OvershootBin> bins(max_extra);
  for (uint32_t k = 1; k <= max_extra; ++k) {
    const uint32_t bits = 2 * (threshold.tolerance + k);
    std::vector<uint64_t> matched(kShards, 0);
    parallel_shards(threads, [&](uint64_t s) {
      std::mt19937_64 rng(shard_seed(model.rng_seed, kOvershootSalt + k, s));
      uint64_t hits = 0;
      const uint64_t n = shard_samples(samples_per_bin, s);
      for (uint64_t i = 0; i < n; ++i)
        if (effective_resistance(bits, threshold.row_bits, model, rng) >=
            threshold.threshold_resistance)
          ++hits;
      matched[s] = hits;
    });
    OvershootBin& bin = bins[k - 1];
    bin.extra = k;
    bin.samples = samples_per_bin;
    for (uint64_t h : matched) bin.matched += h;
    bin.probability = samples_per_bin ? double(bin.matched) / double(samples_per_bin) : 0.0;
  }
  return bins;
}

uint64_t count_false_negatives(const SenseThreshold& threshold,
                               const ResistanceModel& model, uint64_t n_samples,
                               unsigned threads) {
  model.validate();
  const uint32_t bits = 2 * threshold.tolerance;
  check_row(bits, threshold.row_bits);
  std::vector<uint64_t> below(kShards, 0);
  parallel_shards(threads, [&](uint64_t s) {
    // Same streams as calibrate_threshold, so the sample-min policy can
    // never see a value below its own minimum here.
    std::mt19937_64 rng(shard_seed(model.rng_seed, kCalibrationSalt + threshold.tolerance, s));
    uint64_t misses = 0;
    const uint64_t n = shard_samples(n_samples, s);
    for (uint64_t i = 0; i < n; ++i)
      if (effective_resistance(bits, threshold.row_bits, model, rng) <
          threshold.threshold_resistance)
        ++misses;
    below[s] = misses;
  });
  uint64_t total = 0;
  for (uint64_t b : below) total += b;
  return total;
}

std::vector<OvershootOdds> overshoot_event_odds(const std::vector<OvershootBin>& bins,
                                                uint32_t tolerance,
                                                double per_base_error_rate,
                                                uint32_t bases_per_row) {
  if (per_base_error_rate < 0.0 || per_base_error_rate > 1.0)
    throw std::invalid_argument("overshoot_event_odds: error rate must be in [0,1]");
  if (bases_per_row == 0)
    throw std::invalid_argument("overshoot_event_odds: bases_per_row must be positive");
  const boost::math::binomial_distribution<double> mismatches(double(bases_per_row),
                                                              per_base_error_rate);
  std::vector<OvershootOdds> odds(bins.size());
  double total = 0.0;
  for (size_t i = 0; i < bins.size(); ++i) {
    odds[i].extra = bins[i].extra;
    const uint32_t carried = tolerance + bins[i].extra;
    const double p_carry =
        carried <= bases_per_row ? boost::math::pdf(mismatches, double(carried)) : 0.0;
    odds[i].p_event = p_carry * bins[i].probability;
    total += odds[i].p_event;
  }
  if (total > 0.0)
    for (OvershootOdds& o : odds) o.p_given_match = o.p_event / total;
  return odds;
}

std::string sensing_report(const ResistanceModel& model, const SenseThreshold& threshold,
                           const std::vector<OvershootBin>& bins) {
  std::ostringstream os;
  os << std::fixed;
  os << "match-line sensing model\n"
     << "  R_high: mean " << std::setprecision(1) << model.mean_r_high << " ohm, sd "
     << model.sd_r_high << " ohm\n"
     << "  R_low:  mean " << model.mean_r_low << " ohm, sd " << model.sd_r_low
     << " ohm\n";
  os << "calibrated threshold\n"
     << "  row bits            " << threshold.row_bits << "\n"
     << "  tolerance           " << threshold.tolerance << " base mismatches\n"
     << "  threshold           " << std::setprecision(4) << threshold.threshold_resistance
     << " ohm\n"
     << "  calibration samples " << threshold.n_samples << "\n"
     << "  boundary R_eff      mean " << threshold.sample_mean << " ohm, sd "
     << threshold.sample_sd << " ohm\n";
  if (!bins.empty()) {
    os << "overshoot (rows past tolerance still sensed as match)\n";
    for (const OvershootBin& b : bins) {
      os << "  +" << b.extra << " base: p = " << std::scientific << std::setprecision(3)
         << b.probability << std::fixed << "  (" << b.matched << "/" << b.samples
         << ")\n";
    }
  }
  return os.str();
}

}  // namespace biomap
