#include "biomap/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace biomap {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument(std::string(what) + " must be in [0,1]");
}

struct StageTimes {
  double search = 0.0;
  double dram = 0.0;
  double network = 0.0;
  double total() const { return search + dram + network; }
};

StageTimes stage_times(const EventCounts& c, const CostParams& p) {
  StageTimes t;
  // Row searches run in parallel across chips; table reads and broadcast
  // traffic are serialized on the shared memory path and the tree.
  t.search = double(c.searches + c.second_step_searches) * p.search_latency / p.chips;
  t.dram = double(c.pmitil_reads + c.pmit_reads) * p.dram_read_latency;
  t.network = double(c.broadcasts) * p.network_hops_per_search * p.hop_latency;
  return t;
}

}  // namespace

EventCounts& EventCounts::operator+=(const EventCounts& o) {
  searches += o.searches;
  second_step_searches += o.second_step_searches;
  pmitil_reads += o.pmitil_reads;
  pmit_reads += o.pmit_reads;
  broadcasts += o.broadcasts;
  shifts += o.shifts;
  queue_ops += o.queue_ops;
  return *this;
}

void CostParams::validate() const {
  if (search_energy <= 0 || search_latency <= 0 || hop_power <= 0 ||
      dram_read_energy <= 0 || dram_read_latency <= 0 || hop_latency <= 0)
    throw std::invalid_argument("cost params: physical constants must be positive");
  if (chips < 1) throw std::invalid_argument("cost params: chips must be >= 1");
  if (network_hops_per_search < 1)
    throw std::invalid_argument("cost params: network_hops_per_search must be >= 1");
}

double energy_estimate(const EventCounts& c, const CostParams& p) {
  p.validate();
  return double(c.searches + c.second_step_searches) * p.search_energy +
         double(c.pmit_reads + c.pmitil_reads) * p.dram_read_energy +
         double(c.broadcasts) * p.network_hops_per_search * p.hop_power * p.search_latency;
}

double naive_tcam_energy(double arrays, double shifts_per_query, double per_search) {
  if (arrays <= 0 || shifts_per_query <= 0 || per_search <= 0)
    throw std::invalid_argument("naive_tcam_energy: inputs must be positive");
  return arrays * shifts_per_query * per_search;
}

double throughput_estimate(const EventCounts& c, const CostParams& p, uint64_t n_queries) {
  p.validate();
  if (n_queries == 0) throw std::invalid_argument("throughput_estimate: no queries");
  const double total = stage_times(c, p).total();
  if (total <= 0.0)
    throw std::invalid_argument("throughput_estimate: no timed events");
  return double(n_queries) / total;
}

TimeShares time_breakdown(const EventCounts& c, const CostParams& p) {
  p.validate();
  const StageTimes t = stage_times(c, p);
  const double total = t.total();
  TimeShares s;
  if (total > 0.0) {
    s.search = t.search / total;
    s.dram = t.dram / total;
    s.network = t.network / total;
  }
  return s;
}

double prob_prefix_mismatch(double p_mismatch, unsigned seed) {
  check_probability(p_mismatch, "p_mismatch");
  return 1.0 - std::pow(1.0 - p_mismatch, double(seed));
}

double prob_indels_in_query(double p_indel, unsigned length) {
  check_probability(p_indel, "p_indel");
  return 1.0 - std::pow(1.0 - p_indel, double(length));
}

double prob_both_halves_fail(double per_half) {
  check_probability(per_half, "per_half");
  return per_half * per_half;
}

double seed_coverage(unsigned m, double p, unsigned d) {
  check_probability(p, "p");
  if (d > m) throw std::invalid_argument("seed_coverage: d must not exceed m");
  double sum = 0.0;
  double coeff = 1.0;  // C(m, i), built multiplicatively
  for (unsigned i = 0; i <= d; ++i) {
    sum += coeff * std::pow(p, double(i)) * std::pow(1.0 - p, double(m - i));
    coeff = coeff * double(m - i) / double(i + 1);
  }
  return std::min(1.0, sum);
}

double meta_runtime(double n, double p_indel, double t_indel, double t_sub) {
  if (n < 0 || p_indel < 0 || t_indel < 0 || t_sub < 0)
    throw std::invalid_argument("meta_runtime: inputs must be non-negative");
  return std::max(n * p_indel * t_indel, n * t_sub);
}

std::string cost_report(const EventCounts& c, const CostParams& p, uint64_t n_queries) {
  p.validate();
  std::ostringstream os;
  os << "pipeline event counts (" << n_queries << " queries)\n"
     << "  searches             " << c.searches << "\n"
     << "  second-step searches " << c.second_step_searches << "\n"
     << "  locator reads        " << c.pmitil_reads << "\n"
     << "  occurrence reads     " << c.pmit_reads << "\n"
     << "  broadcasts           " << c.broadcasts << "\n"
     << "  shifts               " << c.shifts << "\n"
     << "  queue ops            " << c.queue_ops << "\n";

  const double joules = energy_estimate(c, p);
  os << std::scientific << std::setprecision(4);
  os << "energy\n"
     << "  total                " << joules << " J\n";
  if (joules > 0.0 && n_queries > 0)
    os << "  queries per mJ       " << std::fixed << std::setprecision(1)
       << double(n_queries) / (joules * 1e3) << "\n"
       << std::scientific << std::setprecision(4);

  const StageTimes t = stage_times(c, p);
  if (t.total() > 0.0 && n_queries > 0) {
    const TimeShares s = time_breakdown(c, p);
    os << "throughput model (" << p.chips << " chips)\n"
       << "  modelled time        " << t.total() << " s\n"
       << "  queries per second   " << std::fixed << std::setprecision(0)
       << throughput_estimate(c, p, n_queries) << "\n"
       << std::setprecision(1) << "  share: search " << 100.0 * s.search
       << "%, table reads " << 100.0 * s.dram << "%, network " << 100.0 * s.network
       << "%\n";
  }
  return os.str();
}

}  // namespace biomap
