#include "biomap/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace biomap {

namespace {

struct PhasePlan {
  int phase = 0;
  const EncodedSequence* sequence = nullptr;
  Strand strand = Strand::kForward;
  Segment segment = Segment::kWhole;
  bool broadcast = true;  // phases on the RC register reuse the loaded query
};

MappingRecord make_mapped(const Query& q, const MatchOutcome& outcome,
                          const PhasePlan& plan, const Reference& ref) {
  MappingRecord r;
  r.query_id = q.id;
  r.status = MapStatus::kMapped;
  r.flat_position = outcome.flat_position;
  const auto [contig_idx, offset] = ref.locate(outcome.flat_position);
  r.contig = ref.contig(contig_idx).name;
  r.contig_offset = offset;
  r.strand = plan.strand;
  r.segment = plan.segment;
  r.mismatches = outcome.mismatches;
  r.phase = plan.phase;
  r.fragmented = outcome.fragmented;
  return r;
}

MappingRecord make_failed(const Query& q) {
  MappingRecord r;
  r.query_id = q.id;
  r.status = MapStatus::kFailed;
  r.contig = "*";
  return r;
}

// Runs the searches for every occurrence of one probed prefix, respecting the
// remaining candidate budget. Returns the number of searches performed.
uint64_t search_prefix_range(const EncodedSequence& sequence, const PmiTables& tables,
                             const TcamLayout& layout, uint32_t tolerance,
                             const PmitilEntry& range, uint64_t budget,
                             std::vector<MatchOutcome>& matched, EventCounts& counts) {
  const uint64_t n = budget == 0 ? range.count : std::min(range.count, budget);
  for (uint64_t i = 0; i < n; ++i) {
    const PmiEntry entry = unpack_entry(tables.pmit[range.start + i], tables.geometry);
    ++counts.pmit_reads;
    ++counts.queue_ops;  // staged for dispatch
    ++counts.searches;
    ++counts.shifts;
    const MatchOutcome outcome = search_at(layout, sequence, entry, tolerance);
    if (outcome.search_steps == 2) ++counts.second_step_searches;
    if (outcome.matched) matched.push_back(outcome);
  }
  return n;
}

}  // namespace

char strand_char(Strand s) { return s == Strand::kForward ? '+' : '-'; }

const char* segment_tag(Segment s) {
  switch (s) {
    case Segment::kWhole: return "W";
    case Segment::kFirstHalf: return "H1";
    default: return "H2";
  }
}

void MapperConfig::validate() const {
  if (seed < 1 || seed > 15)
    throw std::invalid_argument("mapper config: seed must be in 1..15");
  if (strict_accept_limit && *strict_accept_limit > tolerance)
    throw std::invalid_argument(
        "mapper config: strict_accept_limit must not exceed the tolerance");
}

void MapperContext::validate() const {
  if (!reference || !tables || !layout)
    throw std::invalid_argument("mapper context: missing reference, index or layout");
  if (!(tables->geometry == layout->geometry()))
    throw std::invalid_argument("mapper context: index geometry differs from the layout");
  if (tables->geometry.capacity_bases() < reference->flat_length())
    throw std::invalid_argument("mapper context: layout does not cover the reference");
}

std::optional<MatchOutcome> attempt_alignment(const EncodedSequence& sequence,
                                              const PmiTables& tables,
                                              const TcamLayout& layout,
                                              uint32_t tolerance,
                                              const AttemptOptions& options,
                                              EventCounts& counts) {
  if (sequence.size() <= tables.seed)
    throw std::invalid_argument("attempt_alignment: sequence not longer than the seed");
  if (!(tables.geometry == layout.geometry()))
    throw std::invalid_argument("attempt_alignment: index geometry differs from the layout");

  if (sequence.contains_n(0, tables.seed)) return std::nullopt;  // prefix cannot rank
  const EncodedSequence prefix = sequence.subseq(0, tables.seed);

  std::vector<MatchOutcome> matched;
  uint64_t searched = 0;
  const uint64_t budget = options.max_candidates;

  ++counts.pmitil_reads;
  searched += search_prefix_range(sequence, tables, layout, tolerance,
                                  lookup_range(tables, prefix),
                                  budget == 0 ? 0 : budget, matched, counts);
  if (options.use_deviations && (budget == 0 || searched < budget)) {
    for (const EncodedSequence& dev : seed_deviations(prefix)) {
      ++counts.pmitil_reads;
      const uint64_t remaining = budget == 0 ? 0 : budget - searched;
      searched += search_prefix_range(sequence, tables, layout, tolerance,
                                      lookup_range(tables, dev), remaining, matched,
                                      counts);
      if (budget != 0 && searched >= budget) break;
    }
  }

  if (options.counts_broadcast && searched > 0) ++counts.broadcasts;
  if (matched.empty()) return std::nullopt;
  return select_best(matched);
}

MatchOutcome select_best(const std::vector<MatchOutcome>& outcomes) {
  if (outcomes.empty())
    throw std::invalid_argument("select_best: no outcomes to choose from");
  const MatchOutcome* best = &outcomes[0];
  for (const MatchOutcome& o : outcomes) {
    if (o.mismatches < best->mismatches ||
        (o.mismatches == best->mismatches && o.flat_position < best->flat_position))
      best = &o;
  }
  return *best;
}

MappingRecord map_query(const Query& query, const MapperContext& ctx,
                        const MapperConfig& config, EventCounts& counts) {
  ctx.validate();
  config.validate();
  if (config.seed != ctx.tables->seed)
    throw std::invalid_argument("map_query: config seed differs from the index");
  const size_t len = query.sequence.size();
  if (len <= config.seed)
    throw std::invalid_argument("map_query: query too short for the configured seed");

  counts.queue_ops += 2;  // input queue in, output queue out

  // Reverse complement computed once at ingress; phases 2/5/6 reuse it.
  const EncodedSequence rc = reverse_complement(query.sequence);
  const size_t half = len / 2;
  const bool halves_usable = half > config.seed;

  EncodedSequence h1, h2, r1, r2;
  if (halves_usable) {
    h1 = query.sequence.subseq(0, half);
    h2 = query.sequence.subseq(half, len - half);
    r1 = rc.subseq(0, half);
    r2 = rc.subseq(half, len - half);
  }

  std::vector<PhasePlan> order;
  order.push_back({1, &query.sequence, Strand::kForward, Segment::kWhole, true});
  order.push_back({2, &rc, Strand::kReverse, Segment::kWhole, false});
  if (halves_usable) {
    PhasePlan p3{3, &h1, Strand::kForward, Segment::kFirstHalf, true};
    PhasePlan p4{4, &h2, Strand::kForward, Segment::kSecondHalf, true};
    PhasePlan p5{5, &r1, Strand::kReverse, Segment::kFirstHalf, false};
    PhasePlan p6{6, &r2, Strand::kReverse, Segment::kSecondHalf, false};
    if (config.second_half_first) {
      order.insert(order.end(), {p4, p3, p6, p5});
    } else {
      order.insert(order.end(), {p3, p4, p5, p6});
    }
  }

  AttemptOptions options;
  options.use_deviations = config.use_seed_deviations;
  options.max_candidates = config.max_candidates_per_phase;

  std::optional<MappingRecord> held;  // over-limit phase-1/2 match, kept as fallback
  for (const PhasePlan& plan : order) {
    if (!config.phases_enabled[plan.phase - 1]) continue;
    options.counts_broadcast = plan.broadcast;
    const std::optional<MatchOutcome> outcome = attempt_alignment(
        *plan.sequence, *ctx.tables, *ctx.layout, config.tolerance, options, counts);
    if (!outcome) continue;
    MappingRecord record = make_mapped(query, *outcome, plan, *ctx.reference);
    const bool whole_phase = plan.phase <= 2;
    if (whole_phase && config.strict_accept_limit &&
        record.mismatches > *config.strict_accept_limit) {
      if (!held) held = std::move(record);
      continue;
    }
    return record;
  }
  if (held) return *held;
  return make_failed(query);
}

uint32_t max_substitutions_no_loss(double p_indel, double p_sub) {
  if (!(p_indel > 0.0) || !(p_sub < 1.0) || p_indel > p_sub)
    throw std::invalid_argument(
        "max_substitutions_no_loss: need 0 < p_indel <= p_sub < 1");
  const double ratio = std::log(p_indel) / std::log(p_sub);
  return std::max<uint32_t>(1, static_cast<uint32_t>(std::floor(ratio)));
}

BatchResult map_batch(const std::vector<Query>& queries, const MapperContext& ctx,
                      const MapperConfig& config, unsigned threads) {
  ctx.validate();
  config.validate();
  BatchResult result;
  result.records.resize(queries.size());
  if (queries.empty()) return result;

  const unsigned t =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(queries.size())));
  std::vector<EventCounts> partial(t);
  auto run_block = [&](unsigned worker) {
    const size_t begin = queries.size() * worker / t;
    const size_t end = queries.size() * (worker + 1) / t;
    for (size_t i = begin; i < end; ++i)
      result.records[i] = map_query(queries[i], ctx, config, partial[worker]);
  };
  if (t == 1) {
    run_block(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned w = 0; w < t; ++w) pool.emplace_back(run_block, w);
    for (auto& th : pool) th.join();
  }
  // Merge in worker order: the totals do not depend on scheduling.
  for (const EventCounts& c : partial) result.counts += c;
  return result;
}

void write_records_tsv(std::ostream& out, const std::vector<MappingRecord>& records) {
  out << "query_id\tstatus\tcontig\tposition\tflat_position\tstrand\tsegment\t"
         "mismatches\tphase\tfragmented\n";
  for (const MappingRecord& r : records) {
    if (r.status == MapStatus::kMapped) {
      out << r.query_id << "\tmapped\t" << r.contig << '\t' << r.contig_offset << '\t'
          << r.flat_position << '\t' << strand_char(r.strand) << '\t'
          << segment_tag(r.segment) << '\t' << r.mismatches << '\t' << r.phase << '\t'
          << (r.fragmented ? 1 : 0) << '\n';
    } else {
      out << r.query_id << "\tfailed\t*\t0\t0\t.\t.\t0\t0\t0\n";
    }
  }
}

std::vector<MappingRecord> parse_records_tsv(std::istream& in) {
  std::vector<MappingRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("query_id\t", 0) == 0) continue;  // header

    std::istringstream fields(line);
    std::string id, status, contig, strand, segment;
    uint64_t position = 0, flat_position = 0;
    uint32_t mismatches = 0;
    int phase = 0, fragmented = 0;
    if (!(std::getline(fields, id, '\t') && std::getline(fields, status, '\t') &&
          std::getline(fields, contig, '\t') && (fields >> position) &&
          (fields >> flat_position) && fields.ignore(1) &&
          std::getline(fields, strand, '\t') && std::getline(fields, segment, '\t') &&
          (fields >> mismatches >> phase >> fragmented)))
      throw ParseError("records line " + std::to_string(lineno) + ": malformed row");

    MappingRecord r;
    r.query_id = id;
    r.contig = contig;
    r.contig_offset = position;
    r.flat_position = flat_position;
    r.mismatches = mismatches;
    r.phase = phase;
    r.fragmented = fragmented != 0;
    if (status == "mapped") {
      r.status = MapStatus::kMapped;
      if (strand != "+" && strand != "-")
        throw ParseError("records line " + std::to_string(lineno) + ": bad strand");
      r.strand = strand == "+" ? Strand::kForward : Strand::kReverse;
      if (segment == "W") r.segment = Segment::kWhole;
      else if (segment == "H1") r.segment = Segment::kFirstHalf;
      else if (segment == "H2") r.segment = Segment::kSecondHalf;
      else throw ParseError("records line " + std::to_string(lineno) + ": bad segment");
    } else if (status == "failed") {
      r.status = MapStatus::kFailed;
    } else {
      throw ParseError("records line " + std::to_string(lineno) + ": bad status");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_spillover_fastq(std::ostream& out, const std::vector<Query>& queries,
                           const std::vector<MappingRecord>& records) {
  if (queries.size() != records.size())
    throw std::invalid_argument("spillover: record list does not match the query list");
  for (size_t i = 0; i < queries.size(); ++i)
    if (records[i].status == MapStatus::kFailed) write_fastq(out, queries[i]);
}

}  // namespace biomap
