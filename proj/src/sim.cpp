#include "biomap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace biomap {

namespace {

constexpr uint64_t kReadSalt = 0x5eed0f0e57a7e5ULL;

// splitmix64 finalizer; decorrelates consecutive read indices into sub-seeds.
uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Base random_base(std::mt19937_64& rng) { return static_cast<Base>(rng() % 4); }

// Uniform over the three bases other than `b` (or all four if `b` is N).
Base mutated_base(Base b, std::mt19937_64& rng) {
  if (b == Base::N) return random_base(rng);
  const unsigned pick = rng() % 3;
  return static_cast<Base>(pick < static_cast<unsigned>(b) ? pick : pick + 1);
}

struct WindowSampler {
  std::vector<uint64_t> cumulative;  // cumulative valid-start counts per contig
  const Reference* ref = nullptr;
  uint32_t read_len = 0;

  WindowSampler(const Reference& r, uint32_t len) : ref(&r), read_len(len) {
    uint64_t total = 0;
    for (size_t i = 0; i < r.contig_count(); ++i) {
      const uint64_t clen = r.contig(i).sequence.size();
      if (clen >= len) total += clen - len + 1;
      cumulative.push_back(total);
    }
    if (total == 0)
      throw std::invalid_argument("simulate_reads: read_len exceeds every contig");
  }

  // (contig index, flat window start, flat contig end) for the k-th valid start.
  std::tuple<size_t, uint64_t, uint64_t> pick(std::mt19937_64& rng) const {
    std::uniform_int_distribution<uint64_t> dist(0, cumulative.back() - 1);
    const uint64_t k = dist(rng);
    const size_t idx = std::upper_bound(cumulative.begin(), cumulative.end(), k) -
                       cumulative.begin();
    const uint64_t before = idx == 0 ? 0 : cumulative[idx - 1];
    const uint64_t start = ref->flat_position(idx, k - before);
    const uint64_t end = ref->flat_position(idx, 0) + ref->contig(idx).sequence.size();
    return {idx, start, end};
  }
};

}  // namespace

void ErrorModel::validate() const {
  for (double rate : {substitution_rate, snp_rate, indel_rate, reverse_fraction})
    if (!(rate >= 0.0 && rate <= 1.0))
      throw std::invalid_argument("error model: rates must lie in [0,1]");
  if (substitution_rate + snp_rate + indel_rate > 1.0)
    throw std::invalid_argument("error model: per-base event rates sum past 1");
  if (indel_max_len < 1)
    throw std::invalid_argument("error model: indel_max_len must be at least 1");
}

SimulatedReads simulate_reads(const Reference& ref, uint64_t n, uint32_t read_len,
                              const ErrorModel& model) {
  model.validate();
  if (read_len == 0) throw std::invalid_argument("simulate_reads: read_len is zero");
  const WindowSampler sampler(ref, read_len);
  const EncodedSequence& flat = ref.flattened();

  SimulatedReads out;
  out.queries.resize(n);
  out.truths.resize(n);
  for (uint64_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(mix64(model.rng_seed ^ mix64(i + kReadSalt)));
    const auto [contig_idx, start, contig_end] = sampler.pick(rng);
    (void)contig_idx;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool reverse = unit(rng) < model.reverse_fraction;

    SimulatedTruth& truth = out.truths[i];
    truth.query_id = "r" + std::to_string(i);
    truth.flat_position = start;
    truth.strand = reverse ? Strand::kReverse : Strand::kForward;
    truth.read_len = read_len;

    EncodedSequence read;
    uint64_t pos = start;
    while (read.size() < read_len) {
      const double u = unit(rng);
      if (u < model.substitution_rate + model.snp_rate) {
        read.push_back(mutated_base(flat.base_at(pos), rng));
        ++pos;
        if (u < model.substitution_rate) ++truth.substitutions; else ++truth.snps;
      } else if (u < model.substitution_rate + model.snp_rate + model.indel_rate) {
        std::uniform_int_distribution<uint32_t> len_dist(1, model.indel_max_len);
        const uint32_t len = len_dist(rng);
        if (rng() & 1) {  // insertion: novel bases, no reference consumed
          for (uint32_t k = 0; k < len && read.size() < read_len; ++k)
            read.push_back(random_base(rng));
          ++truth.indels;
        } else {  // deletion: skip reference, unless the read would starve
          if (pos + len + (read_len - read.size()) <= contig_end) {
            pos += len;
            ++truth.indels;
          }
        }
      } else {
        read.push_back(flat.base_at(pos));
        ++pos;
      }
    }
    if (reverse) read = reverse_complement(read);

    Query& q = out.queries[i];
    q.id = truth.query_id;
    q.sequence = std::move(read);
    q.quality = std::string(read_len, 'I');
  }
  return out;
}

std::optional<BruteForceHit> brute_force_map(const EncodedSequence& query,
                                             const Reference& ref,
                                             uint32_t tolerance) {
  const size_t len = query.size();
  if (len == 0) throw std::invalid_argument("brute_force_map: empty query");
  if (len > ref.flat_length()) return std::nullopt;

  // Flatten to byte arrays once so the scan is a tight loop with early exit.
  const EncodedSequence& flat = ref.flattened();
  std::vector<uint8_t> target(flat.size());
  for (size_t i = 0; i < flat.size(); ++i)
    target[i] = static_cast<uint8_t>(flat.base_at(i));
  std::vector<uint8_t> fwd(len), rev(len);
  const EncodedSequence rc = reverse_complement(query);
  for (size_t i = 0; i < len; ++i) {
    fwd[i] = static_cast<uint8_t>(query.base_at(i));
    rev[i] = static_cast<uint8_t>(rc.base_at(i));
  }

  std::optional<BruteForceHit> best;
  uint32_t limit = tolerance;  // a candidate must count strictly below ties
  const size_t last = ref.flat_length() - len;
  for (size_t offset = 0; offset <= last; ++offset) {
    for (int pass = 0; pass < 2; ++pass) {
      const uint8_t* probe = pass == 0 ? fwd.data() : rev.data();
      uint32_t mism = 0;
      for (size_t i = 0; i < len; ++i) {
        mism += probe[i] != target[offset + i];
        if (mism > limit) break;
      }
      if (mism > limit) continue;
      // Scanning in priority order (offset, then forward first): any later
      // candidate must be strictly better to replace the incumbent.
      if (!best || mism < best->mismatches) {
        best = BruteForceHit{offset, pass == 0 ? Strand::kForward : Strand::kReverse,
                             mism};
        if (mism == 0) return best;
        limit = mism - 1;
      }
    }
  }
  return best;
}

AccuracyReport evaluate(const std::vector<MappingRecord>& records,
                        const std::vector<SimulatedTruth>& truths, uint64_t slack) {
  if (records.size() != truths.size())
    throw std::invalid_argument("evaluate: record and truth counts differ");
  std::unordered_map<std::string, const SimulatedTruth*> by_id;
  by_id.reserve(truths.size());
  for (const SimulatedTruth& t : truths) by_id.emplace(t.query_id, &t);
  if (by_id.size() != truths.size())
    throw std::invalid_argument("evaluate: duplicate truth query ids");

  AccuracyReport report;
  report.n_queries = records.size();
  for (const MappingRecord& r : records) {
    const auto it = by_id.find(r.query_id);
    if (it == by_id.end())
      throw std::invalid_argument("evaluate: record id missing from truths: " +
                                  r.query_id);
    const SimulatedTruth& truth = *it->second;
    if (r.status == MapStatus::kFailed) {
      ++report.n_failed;
      continue;
    }
    ++report.n_mapped;
    ++report.phase_mapped[std::min<uint32_t>(r.phase, 6)];
    const uint64_t lower = truth.flat_position > slack ? truth.flat_position - slack : 0;
    const uint64_t upper = truth.flat_position + truth.read_len + slack;
    const bool in_window = r.flat_position >= lower && r.flat_position <= upper;
    if (r.strand != truth.strand || !in_window) ++report.n_misaligned;
  }
  if (report.n_queries > 0) {
    report.misalignment_rate =
        static_cast<double>(report.n_misaligned) / report.n_queries;
    report.alignment_failure_rate =
        static_cast<double>(report.n_failed) / report.n_queries;
  }
  report.total_error_rate = report.misalignment_rate + report.alignment_failure_rate;
  return report;
}

void accuracy_report(std::ostream& out, const AccuracyReport& r) {
  out << "queries             " << r.n_queries << '\n'
      << "mapped              " << r.n_mapped << '\n'
      << "misaligned          " << r.n_misaligned << '\n'
      << "failed              " << r.n_failed << '\n';
  for (int phase = 1; phase <= 6; ++phase)
    out << "mapped in phase " << phase << "   " << r.phase_mapped[phase] << '\n';
  const auto rate = [&out](const char* label, double value) {
    out << label << value * 100.0 << "%\n";
  };
  rate("misalignment rate   ", r.misalignment_rate);
  rate("failure rate        ", r.alignment_failure_rate);
  rate("total error rate    ", r.total_error_rate);
}

Reference random_reference(uint64_t length, uint64_t rng_seed,
                           const std::string& name) {
  std::mt19937_64 rng(rng_seed);
  EncodedSequence seq;
  for (uint64_t i = 0; i < length; ++i) seq.push_back(random_base(rng));
  Reference ref;
  ref.add_contig(name, std::move(seq));
  return ref;
}

void write_truths_tsv(std::ostream& out, const std::vector<SimulatedTruth>& truths) {
  out << "query_id\tflat_position\tstrand\tread_len\tsubstitutions\tsnps\tindels\n";
  for (const SimulatedTruth& t : truths)
    out << t.query_id << '\t' << t.flat_position << '\t' << strand_char(t.strand)
        << '\t' << t.read_len << '\t' << t.substitutions << '\t' << t.snps << '\t'
        << t.indels << '\n';
}

std::vector<SimulatedTruth> parse_truths_tsv(std::istream& in) {
  std::vector<SimulatedTruth> truths;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("query_id\t", 0) == 0) continue;
    std::istringstream fields(line);
    SimulatedTruth t;
    char strand = 0;
    if (!(std::getline(fields, t.query_id, '\t') && fields >> t.flat_position &&
          fields >> strand && fields >> t.read_len && fields >> t.substitutions &&
          fields >> t.snps && fields >> t.indels) ||
        (strand != '+' && strand != '-'))
      throw ParseError("truth tsv line " + std::to_string(line_no) + ": bad record");
    t.strand = strand == '+' ? Strand::kForward : Strand::kReverse;
    truths.push_back(std::move(t));
  }
  return truths;
}

}  // namespace biomap
