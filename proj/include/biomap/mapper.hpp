#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "biomap/costmodel.hpp"
#include "biomap/index.hpp"
#include "biomap/seqio.hpp"
#include "biomap/tcam.hpp"

namespace biomap {

enum class Strand : uint8_t { kForward, kReverse };
enum class Segment : uint8_t { kWhole, kFirstHalf, kSecondHalf };
enum class MapStatus : uint8_t { kMapped, kFailed };

char strand_char(Strand s);          // '+' / '-'
const char* segment_tag(Segment s);  // "W" / "H1" / "H2"

struct MapperConfig {
  unsigned seed = 12;        // must match the loaded index
  unsigned tolerance = 5;    // max base mismatches for a mapped segment
  bool phases_enabled[6] = {true, true, true, true, true, true};
  // When set, a phase-1/2 match with more mismatches than this is held back
  // and only emitted if every later phase fails to produce anything better.
  std::optional<uint32_t> strict_accept_limit;
  bool use_seed_deviations = false;  // re-probe the filter at prefix distance 1
  uint64_t max_candidates_per_phase = 0;  // 0 = unlimited
  bool second_half_first = false;    // attempt H2 before H1 in phases 3-6

  void validate() const;
};

/// Final verdict for one query. A mapped record locates the *searched
/// segment* (the whole read or one half, possibly of the reverse
/// complement): flat_position/contig coordinates are of that segment's base
/// 0 in reference orientation. Failed records carry only the query id.
struct MappingRecord {
  std::string query_id;
  MapStatus status = MapStatus::kFailed;
  std::string contig;          // "*" when failed
  uint64_t contig_offset = 0;
  uint64_t flat_position = 0;
  Strand strand = Strand::kForward;
  Segment segment = Segment::kWhole;
  uint32_t mismatches = 0;
  int phase = 0;               // 1..6; 0 when failed
  bool fragmented = false;
};

struct MapperContext {
  const Reference* reference = nullptr;
  const PmiTables* tables = nullptr;
  const TcamLayout* layout = nullptr;

  void validate() const;  // non-null members, index geometry matches layout
};

struct AttemptOptions {
  bool use_deviations = false;
  uint64_t max_candidates = 0;  // 0 = unlimited
  bool counts_broadcast = true; // false when the phase reuses a loaded register
};

/// One filter-then-search pass for one sequence: probe the locator with the
/// sequence's seed prefix (optionally extended by all distance-1 deviations),
/// run an anchored search per candidate, and keep the best match. Absent when
/// the prefix contains N, has no occurrences, or no candidate matches.
std::optional<MatchOutcome> attempt_alignment(const EncodedSequence& sequence,
                                              const PmiTables& tables,
                                              const TcamLayout& layout,
                                              uint32_t tolerance,
                                              const AttemptOptions& options,
                                              EventCounts& counts);

/// Fewest mismatches wins; ties break toward the lowest reference position.
MatchOutcome select_best(const std::vector<MatchOutcome>& outcomes);

/// Escalates through the phase hierarchy until something matches:
///   1 whole forward            2 whole reverse complement
///   3 first half forward       4 second half forward
///   5 first half of the RC     6 second half of the RC
/// The reverse complement is computed once at ingress and reused. Halves are
/// only attempted when they are longer than the seed. Yields a failed record
/// when every enabled phase comes up empty.
MappingRecord map_query(const Query& query, const MapperContext& ctx,
                        const MapperConfig& config, EventCounts& counts);

/// Largest substitution count that still beats re-running an indel-capable
/// refiner, per the error-rate argument: floor(ln p_indel / ln p_sub), at
/// least 1.
uint32_t max_substitutions_no_loss(double p_indel, double p_sub);

struct BatchResult {
  std::vector<MappingRecord> records;  // one per query, input order
  EventCounts counts;
};

/// Maps a batch with a worker pool over contiguous blocks. Records and merged
/// counters are independent of the thread count.
BatchResult map_batch(const std::vector<Query>& queries, const MapperContext& ctx,
                      const MapperConfig& config, unsigned threads = 1);

// Record streams. The TSV carries one header line, then one row per record:
// query_id, status, contig, position, strand, segment, mismatches, phase,
// fragmented. Absent fields of failed rows are written as "*" / "." / 0.
void write_records_tsv(std::ostream& out, const std::vector<MappingRecord>& records);
std::vector<MappingRecord> parse_records_tsv(std::istream& in);

/// Re-emits every query whose record failed, verbatim, for an external
/// refiner to pick up.
void write_spillover_fastq(std::ostream& out, const std::vector<Query>& queries,
                           const std::vector<MappingRecord>& records);

}  // namespace biomap
