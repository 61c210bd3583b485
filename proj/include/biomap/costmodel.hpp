#pragma once

#include <cstdint>
#include <string>

namespace biomap {

/// Tally of pipeline activity, accumulated per worker and merged field-wise.
struct EventCounts {
  uint64_t searches = 0;             // anchored row searches issued
  uint64_t second_step_searches = 0; // extra searches for fragmented windows
  uint64_t pmitil_reads = 0;         // locator slot fetches
  uint64_t pmit_reads = 0;           // occurrence entry fetches
  uint64_t broadcasts = 0;           // query register broadcasts to the arrays
  uint64_t shifts = 0;               // query alignment shifts (one per search)
  uint64_t queue_ops = 0;            // staging queue pushes/pops

  EventCounts& operator+=(const EventCounts& o);
  friend EventCounts operator+(EventCounts a, const EventCounts& b) { return a += b; }
  friend bool operator==(const EventCounts&, const EventCounts&) = default;
};

/// Per-event physical constants. The search figures and hop power follow the
/// hardware configuration; the DRAM and hop timing figures are knobs of this
/// analytic model (documented defaults, not measured claims).
struct CostParams {
  double search_energy = 1e-9;        // J per row search
  double search_latency = 2e-9;       // s per row search
  double hop_power = 0.045;           // W per active network hop
  double dram_read_energy = 10e-9;    // J per table read (knob)
  double dram_read_latency = 50e-9;   // s per table read (knob)
  double hop_latency = 1.0 / 750e6;   // s per hop: one cycle of the 750 MHz tree
  unsigned chips = 16;
  unsigned network_hops_per_search = 4;

  void validate() const;  // throws std::invalid_argument on non-positive values
};

double energy_estimate(const EventCounts& counts, const CostParams& params);

/// Energy of the baseline that broadcasts every query to every array and
/// shifts it across each row instead of filtering first.
double naive_tcam_energy(double arrays, double shifts_per_query, double per_search);

double throughput_estimate(const EventCounts& counts, const CostParams& params,
                           uint64_t n_queries);

/// Fractions of modelled time spent in each pipeline stage; sums to 1.
struct TimeShares {
  double search = 0.0;
  double dram = 0.0;
  double network = 0.0;
};
TimeShares time_breakdown(const EventCounts& counts, const CostParams& params);

// Closed-form pipeline arithmetic.
double prob_prefix_mismatch(double p_mismatch, unsigned seed);
double prob_indels_in_query(double p_indel, unsigned length);
double prob_both_halves_fail(double per_half);
/// P(at most d of m bases deviate), each independently with probability p.
double seed_coverage(unsigned m, double p, unsigned d);
double meta_runtime(double n, double p_indel, double t_indel, double t_sub);

std::string cost_report(const EventCounts& counts, const CostParams& params,
                        uint64_t n_queries);

}  // namespace biomap
