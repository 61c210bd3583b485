#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "biomap/mapper.hpp"
#include "biomap/seqio.hpp"

namespace biomap {

/// Per-base corruption model for simulated reads. Platform substitutions and
/// SNPs mutate a base the same way; they are tracked separately in the truth
/// records only. Indels splice the read against the reference: an insertion
/// adds random bases, a deletion skips reference bases, and the read is then
/// refilled from the reference to its nominal length.
struct ErrorModel {
  double substitution_rate = 0.010;
  double snp_rate = 0.0009;
  double indel_rate = 0.00009;
  uint32_t indel_max_len = 3;
  double reverse_fraction = 0.5;
  uint64_t rng_seed = 1;

  void validate() const;
};

/// Ground truth for one simulated read: where its window starts in flat
/// coordinates, which strand was emitted and what was injected.
struct SimulatedTruth {
  std::string query_id;
  uint64_t flat_position = 0;
  Strand strand = Strand::kForward;
  uint32_t read_len = 0;
  uint32_t substitutions = 0;
  uint32_t snps = 0;
  uint32_t indels = 0;
};

struct SimulatedReads {
  std::vector<Query> queries;
  std::vector<SimulatedTruth> truths;
};

/// Samples n windows uniformly from all contig-interior positions and corrupts
/// them per the model. Deterministic for a fixed model seed: every read draws
/// from its own sub-seeded generator, so n and thread count do not reshuffle
/// the stream.
SimulatedReads simulate_reads(const Reference& ref, uint64_t n, uint32_t read_len,
                              const ErrorModel& model);

struct BruteForceHit {
  uint64_t flat_position = 0;
  Strand strand = Strand::kForward;
  uint32_t mismatches = 0;
};

/// Exhaustive scan of every offset on both strands with plain base counting.
/// Returns the global minimum if it is within tolerance; ties prefer the
/// lowest position, then the forward strand.
std::optional<BruteForceHit> brute_force_map(const EncodedSequence& query,
                                             const Reference& ref,
                                             uint32_t tolerance);

struct AccuracyReport {
  uint64_t n_queries = 0;
  uint64_t n_mapped = 0;
  uint64_t n_misaligned = 0;
  uint64_t n_failed = 0;
  double misalignment_rate = 0.0;
  double alignment_failure_rate = 0.0;
  double total_error_rate = 0.0;
  uint64_t phase_mapped[7] = {0, 0, 0, 0, 0, 0, 0};  // indexed by phase, 0 unused
};

/// Scores mapper output against simulation truth. A mapped record is correct
/// when its strand matches and its flat position lies inside
/// [truth - slack, truth + read_len + slack]; chunk matches land inside the
/// window without further adjustment. Record order does not matter.
AccuracyReport evaluate(const std::vector<MappingRecord>& records,
                        const std::vector<SimulatedTruth>& truths, uint64_t slack);

void accuracy_report(std::ostream& out, const AccuracyReport& report);

/// Uniform random single-contig reference, for desk-scale experiments.
Reference random_reference(uint64_t length, uint64_t rng_seed,
                           const std::string& name = "ref");

void write_truths_tsv(std::ostream& out, const std::vector<SimulatedTruth>& truths);
std::vector<SimulatedTruth> parse_truths_tsv(std::istream& in);

}  // namespace biomap
