// biomap: filter-then-search short-read mapper with an associative-array
// search model, match-line sensing studies and an analytic cost model.
//
// Subcommands:
//   index     build the prefix filter tables for a reference
//   map       map FASTQ reads against a built index
//   simulate  generate corrupted reads with known ground truth
//   eval      score mapper output against simulation truth
//   sa-sim    calibrate the sensing threshold and tabulate overshoot odds
//   cost      turn event counts into energy/throughput estimates

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "biomap/config.hpp"
#include "biomap/costmodel.hpp"
#include "biomap/index.hpp"
#include "biomap/mapper.hpp"
#include "biomap/sensing.hpp"
#include "biomap/sim.hpp"
#include "biomap/tcam.hpp"

namespace {

using namespace biomap;

struct GlobalOpts {
  uint64_t rng_seed = 1;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string config_path;

  RunConfig load() const {
    RunConfig cfg;
    if (!config_path.empty()) apply_config(cfg, load_config_file(config_path));
    cfg.errors.rng_seed = rng_seed;
    return cfg;
  }
};

Reference read_reference(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference: " + path);
  return parse_fasta(in);
}

std::vector<Query> read_fastq_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reads: " + path);
  return parse_fastq(in);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  return out;
}

void add_global_opts(CLI::App* sub, GlobalOpts& g) {
  sub->add_option("--rng-seed", g.rng_seed, "Seed for every stochastic component");
  sub->add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1u, 256u));
  sub->add_option("--config", g.config_path, "key=value file overriding defaults");
}

// ---------------------------------------------------------------- index ----

void run_index(const std::string& ref_path, unsigned seed, uint32_t rows,
               uint32_t cols, const std::string& arrays, unsigned chips,
               const std::string& out_path) {
  const Reference ref = read_reference(ref_path);
  TcamGeometry geom;
  if (arrays == "auto") {
    geom = fit_geometry(ref.flat_length(), rows, cols);
  } else {
    geom.arrays = static_cast<uint32_t>(std::stoul(arrays));
    geom.rows_per_array = rows;
    geom.cols_per_row = cols;
    geom.validate();
  }
  const TcamLayout layout(ref, geom);
  const PmiTables tables = build_pmi_tables(ref, seed, layout, chips);
  save_index(tables, out_path);
  std::cout << "reference bases     " << ref.flat_length() << '\n'
            << "contigs             " << ref.contig_count() << '\n'
            << "geometry            " << geom.arrays << " arrays x "
            << geom.rows_per_array << " rows x " << geom.cols_per_row << " cols\n"
            << "seed length         " << seed << '\n'
            << "locator slots       " << (1ULL << (2 * seed)) << '\n'
            << "occurrence entries  " << tables.pmit.size() << '\n'
            << "written             " << out_path << '\n';
}

// ------------------------------------------------------------------ map ----

void run_map(const GlobalOpts& g, const std::string& index_path,
             const std::string& ref_path, const std::string& reads_path,
             std::optional<uint32_t> tolerance, bool seed_deviations,
             std::optional<uint32_t> strict_limit, std::optional<uint64_t> max_cand,
             const std::string& phases, bool second_half_first,
             const std::string& out_path, const std::string& spill_path,
             const std::string& cost_path, const std::string& counts_path) {
  RunConfig cfg = g.load();
  const Reference ref = read_reference(ref_path);
  const PmiTables tables = load_index(index_path);
  const TcamLayout layout(ref, tables.geometry);
  std::vector<Query> queries = read_fastq_file(reads_path);

  cfg.mapper.seed = tables.seed;  // the index fixes the prefix length
  if (tolerance) cfg.mapper.tolerance = *tolerance;
  if (seed_deviations) cfg.mapper.use_seed_deviations = true;
  if (strict_limit) cfg.mapper.strict_accept_limit = *strict_limit;
  if (max_cand) cfg.mapper.max_candidates_per_phase = *max_cand;
  if (second_half_first) cfg.mapper.second_half_first = true;
  if (!phases.empty()) {
    std::istringstream text("phases = " + phases + "\n");
    apply_config(cfg, parse_config(text));
  }
  cfg.mapper.validate();

  MapperContext ctx;
  ctx.reference = &ref;
  ctx.tables = &tables;
  ctx.layout = &layout;
  const BatchResult batch = map_batch(queries, ctx, cfg.mapper, g.threads);

  if (out_path.empty() || out_path == "-") {
    write_records_tsv(std::cout, batch.records);
  } else {
    std::ofstream out = open_out(out_path);
    write_records_tsv(out, batch.records);
  }
  if (!spill_path.empty()) {
    std::ofstream spill = open_out(spill_path);
    write_spillover_fastq(spill, queries, batch.records);
  }
  if (!cost_path.empty()) {
    std::ofstream cost = open_out(cost_path);
    cost << cost_report(batch.counts, cfg.cost, queries.size());
  }
  if (!counts_path.empty()) {
    std::ofstream counts = open_out(counts_path);
    counts << "searches\t" << batch.counts.searches << '\n'
           << "second_step_searches\t" << batch.counts.second_step_searches << '\n'
           << "pmitil_reads\t" << batch.counts.pmitil_reads << '\n'
           << "pmit_reads\t" << batch.counts.pmit_reads << '\n'
           << "broadcasts\t" << batch.counts.broadcasts << '\n'
           << "shifts\t" << batch.counts.shifts << '\n'
           << "queue_ops\t" << batch.counts.queue_ops << '\n'
           << "queries\t" << queries.size() << '\n';
  }

  uint64_t mapped = 0;
  for (const MappingRecord& r : batch.records)
    mapped += r.status == MapStatus::kMapped;
  std::cerr << "mapped " << mapped << "/" << batch.records.size() << " reads\n";
}

// ------------------------------------------------------------- simulate ----

void run_simulate(const GlobalOpts& g, const std::string& ref_path,
                  uint64_t random_ref_len, const std::string& ref_out,
                  uint64_t n, uint32_t read_len, const std::string& reads_out,
                  const std::string& truth_out) {
  const RunConfig cfg = g.load();
  Reference ref;
  if (random_ref_len > 0) {
    ref = random_reference(random_ref_len, g.rng_seed);
    if (!ref_out.empty()) {
      std::ofstream out = open_out(ref_out);
      write_fasta(out, ref);
    }
  } else {
    ref = read_reference(ref_path);
  }
  const SimulatedReads sim = simulate_reads(ref, n, read_len, cfg.errors);
  std::ofstream reads = open_out(reads_out);
  for (const Query& q : sim.queries) write_fastq(reads, q);
  if (!truth_out.empty()) {
    std::ofstream truth = open_out(truth_out);
    write_truths_tsv(truth, sim.truths);
  }
  std::cerr << "simulated " << n << " reads of " << read_len << " bases\n";
}

// ----------------------------------------------------------------- eval ----

void run_eval(const std::string& records_path, const std::string& truth_path,
              uint64_t slack, bool classify, const std::string& ref_path,
              const std::string& reads_path, uint32_t tolerance) {
  std::ifstream records_in(records_path);
  if (!records_in) throw std::runtime_error("cannot open records: " + records_path);
  const std::vector<MappingRecord> records = parse_records_tsv(records_in);
  std::ifstream truth_in(truth_path);
  if (!truth_in) throw std::runtime_error("cannot open truths: " + truth_path);
  const std::vector<SimulatedTruth> truths = parse_truths_tsv(truth_in);

  const AccuracyReport report = evaluate(records, truths, slack);
  accuracy_report(std::cout, report);

  if (!classify) return;
  // Re-examine every imperfect record with the exhaustive scan: can it be
  // placed at all within tolerance, i.e. is the miss the pipeline's fault?
  const Reference ref = read_reference(ref_path);
  std::vector<Query> queries = read_fastq_file(reads_path);
  std::unordered_map<std::string, const Query*> by_id;
  for (const Query& q : queries) by_id.emplace(q.id, &q);
  std::unordered_map<std::string, const SimulatedTruth*> truth_by_id;
  for (const SimulatedTruth& t : truths) truth_by_id.emplace(t.query_id, &t);

  uint64_t oracle_mappable = 0, unmappable = 0, examined = 0;
  for (const MappingRecord& r : records) {
    const SimulatedTruth& t = *truth_by_id.at(r.query_id);
    bool imperfect = r.status == MapStatus::kFailed;
    if (!imperfect && r.status == MapStatus::kMapped) {
      const uint64_t lower = t.flat_position > slack ? t.flat_position - slack : 0;
      const uint64_t upper = t.flat_position + t.read_len + slack;
      imperfect = r.strand != t.strand || r.flat_position < lower ||
                  r.flat_position > upper;
    }
    if (!imperfect) continue;
    ++examined;
    const auto it = by_id.find(r.query_id);
    if (it == by_id.end())
      throw std::runtime_error("read absent from FASTQ: " + r.query_id);
    if (brute_force_map(it->second->sequence, ref, tolerance))
      ++oracle_mappable;
    else
      ++unmappable;
  }
  std::cout << "re-examined         " << examined << '\n'
            << "oracle-mappable     " << oracle_mappable << '\n'
            << "beyond tolerance    " << unmappable << '\n';
}

// --------------------------------------------------------------- sa-sim ----

void run_sa_sim(const GlobalOpts& g, uint32_t tolerance, uint32_t row_bits,
                uint64_t samples, const std::string& policy_name, double quantile,
                uint32_t max_extra, double error_rate, bool check_fn,
                const std::string& out_path) {
  ResistanceModel model;
  model.rng_seed = g.rng_seed;
  const CalibrationPolicy policy = policy_name == "normal-quantile"
                                       ? CalibrationPolicy::kNormalQuantile
                                       : CalibrationPolicy::kSampleMin;
  const SenseThreshold threshold =
      calibrate_threshold(tolerance, row_bits, model, samples, policy, quantile,
                          g.threads);
  const std::vector<OvershootBin> bins =
      overshoot_distribution(threshold, model, max_extra, samples, g.threads);
  std::string text = sensing_report(model, threshold, bins);
  if (error_rate > 0.0 && !bins.empty()) {
    const uint32_t bases = row_bits / 3;  // three bit-cells encode one base
    const auto odds = overshoot_event_odds(bins, tolerance, error_rate, bases);
    std::ostringstream os;
    os << "overshoot among accepted rows (per-base error rate " << error_rate << ", "
       << bases << " bases/row)\n"
       << std::scientific << std::setprecision(3);
    for (const OvershootOdds& o : odds)
      os << "  +" << o.extra << " base: p = " << o.p_given_match
         << "  (joint " << o.p_event << ")\n";
    text += os.str();
  }
  if (check_fn) {
    const uint64_t fn = count_false_negatives(threshold, model, samples, g.threads);
    text += "false negatives at tolerance: " + std::to_string(fn) + " / " +
            std::to_string(samples) + "\n";
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out = open_out(out_path);
    out << text;
  }
}

// ----------------------------------------------------------------- cost ----

EventCounts read_counts_file(const std::string& path, uint64_t& queries) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open counts: " + path);
  EventCounts c;
  std::string key;
  uint64_t value = 0;
  while (in >> key >> value) {
    if (key == "searches") c.searches = value;
    else if (key == "second_step_searches") c.second_step_searches = value;
    else if (key == "pmitil_reads") c.pmitil_reads = value;
    else if (key == "pmit_reads") c.pmit_reads = value;
    else if (key == "broadcasts") c.broadcasts = value;
    else if (key == "shifts") c.shifts = value;
    else if (key == "queue_ops") c.queue_ops = value;
    else if (key == "queries") queries = value;
    else throw std::runtime_error("unknown counts key: " + key);
  }
  return c;
}

void run_cost(const GlobalOpts& g, const std::string& counts_path,
              EventCounts flags, uint64_t queries, bool identities,
              unsigned seed, uint32_t read_len) {
  const RunConfig cfg = g.load();
  EventCounts counts = flags;
  if (!counts_path.empty()) counts = read_counts_file(counts_path, queries);
  std::cout << cost_report(counts, cfg.cost, queries);
  if (!identities) return;
  const double p_err = cfg.errors.substitution_rate + cfg.errors.snp_rate;
  const double p_prefix = prob_prefix_mismatch(p_err, seed);
  std::cout << "per-base error rate          " << p_err << '\n'
            << "seed prefix corrupted        " << p_prefix << '\n'
            << "both half prefixes corrupted " << prob_both_halves_fail(p_prefix)
            << '\n'
            << "indel within read            "
            << prob_indels_in_query(cfg.errors.indel_rate, read_len) << '\n'
            << "seed survives <=1 error      " << seed_coverage(seed, p_err, 1)
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filter-then-search short-read mapper and accelerator model"};
  app.require_subcommand(1);
  GlobalOpts g;

  // ---- index
  auto* index = app.add_subcommand("index", "Build filter tables for a reference");
  std::string idx_ref, idx_arrays = "auto", idx_out;
  unsigned idx_seed = 12, idx_chips = 16;
  uint32_t idx_rows = 64, idx_cols = 64;
  index->add_option("--ref", idx_ref, "Reference FASTA")->required();
  index->add_option("--seed", idx_seed, "Prefix length in bases (1-15)");
  index->add_option("--rows", idx_rows, "Rows per array (incl. duplicate row)");
  index->add_option("--cols", idx_cols, "Cells per row");
  index->add_option("--arrays", idx_arrays, "Array count or 'auto'");
  index->add_option("--chips", idx_chips, "Chip count for entry interleaving");
  index->add_option("-o,--out", idx_out, "Output index file")->required();
  add_global_opts(index, g);
  index->callback([&] { run_index(idx_ref, idx_seed, idx_rows, idx_cols, idx_arrays,
                                  idx_chips, idx_out); });

  // ---- map
  auto* map = app.add_subcommand("map", "Map FASTQ reads against an index");
  std::string map_index, map_ref, map_reads, map_out, map_spill, map_cost,
      map_counts, map_phases;
  std::optional<uint32_t> map_tol, map_strict;
  std::optional<uint64_t> map_maxcand;
  bool map_dev = false, map_second_first = false;
  map->add_option("--index", map_index, "Index file from 'biomap index'")->required();
  map->add_option("--ref", map_ref, "Reference FASTA (for array contents)")->required();
  map->add_option("--reads", map_reads, "Reads FASTQ")->required();
  map->add_option("--tolerance", map_tol, "Accepted mismatches per search");
  map->add_flag("--seed-deviations", map_dev, "Probe all 1-off prefix variants");
  map->add_option("--strict-limit", map_strict,
                  "Hold whole-read matches above this mismatch count");
  map->add_option("--max-candidates", map_maxcand, "Cap dispatched matches per phase");
  map->add_option("--phases", map_phases, "Subset of phases to run, e.g. 12 or 1,2,4");
  map->add_flag("--second-half-first", map_second_first,
                "Try the second half before the first");
  map->add_option("-o,--out", map_out, "Records TSV ('-' for stdout)");
  map->add_option("--spill", map_spill, "FASTQ of unmapped reads");
  map->add_option("--cost-report", map_cost, "Write energy/throughput estimates here");
  map->add_option("--counts-out", map_counts, "Write raw event counters here");
  add_global_opts(map, g);
  map->callback([&] {
    run_map(g, map_index, map_ref, map_reads, map_tol, map_dev, map_strict,
            map_maxcand, map_phases, map_second_first, map_out, map_spill, map_cost,
            map_counts);
  });

  // ---- simulate
  auto* sim = app.add_subcommand("simulate", "Generate reads with known truth");
  std::string sim_ref, sim_ref_out, sim_reads_out, sim_truth_out;
  uint64_t sim_random_len = 0, sim_n = 1000;
  uint32_t sim_read_len = 150;
  sim->add_option("--ref", sim_ref, "Reference FASTA to sample from");
  sim->add_option("--random-ref", sim_random_len,
                  "Generate a uniform random reference of this length instead");
  sim->add_option("--ref-out", sim_ref_out, "Write the generated reference here");
  sim->add_option("-n,--reads", sim_n, "Number of reads");
  sim->add_option("--read-len", sim_read_len, "Read length in bases");
  sim->add_option("-o,--out", sim_reads_out, "Output FASTQ")->required();
  sim->add_option("--truth", sim_truth_out, "Output truth TSV");
  add_global_opts(sim, g);
  sim->callback([&] {
    if (sim_ref.empty() && sim_random_len == 0)
      throw CLI::ValidationError("simulate", "need --ref or --random-ref");
    run_simulate(g, sim_ref, sim_random_len, sim_ref_out, sim_n, sim_read_len,
                 sim_reads_out, sim_truth_out);
  });

  // ---- eval
  auto* eval = app.add_subcommand("eval", "Score records against simulation truth");
  std::string eval_records, eval_truth, eval_ref, eval_reads;
  uint64_t eval_slack = 0;
  uint32_t eval_tol = 5;
  bool eval_classify = false;
  eval->add_option("--records", eval_records, "Records TSV from 'biomap map'")
      ->required();
  eval->add_option("--truth", eval_truth, "Truth TSV from 'biomap simulate'")
      ->required();
  eval->add_option("--slack", eval_slack, "Allowed positional slack in bases");
  eval->add_flag("--classify", eval_classify,
                 "Re-check missed reads with the exhaustive scan");
  eval->add_option("--ref", eval_ref, "Reference FASTA (needed by --classify)");
  eval->add_option("--reads", eval_reads, "Reads FASTQ (needed by --classify)");
  eval->add_option("--tolerance", eval_tol, "Tolerance for --classify");
  add_global_opts(eval, g);
  eval->callback([&] {
    if (eval_classify && (eval_ref.empty() || eval_reads.empty()))
      throw CLI::ValidationError("eval", "--classify needs --ref and --reads");
    run_eval(eval_records, eval_truth, eval_slack, eval_classify, eval_ref,
             eval_reads, eval_tol);
  });

  // ---- sa-sim
  auto* sa = app.add_subcommand("sa-sim",
                                "Calibrate match-line sensing and overshoot odds");
  uint32_t sa_tol = 4, sa_row_bits = 1024, sa_max_extra = 6;
  uint64_t sa_samples = 1000000;
  std::string sa_policy = "sample-min", sa_out;
  double sa_quantile = 1e-6;
  bool sa_check_fn = false;
  sa->add_option("--tolerance", sa_tol, "Base mismatches a row may carry");
  sa->add_option("--row-bits", sa_row_bits, "Bit cells per row");
  sa->add_option("--samples", sa_samples, "Monte Carlo samples per estimate")
      ->check(CLI::Range(uint64_t{100000}, uint64_t{1000000000}));
  sa->add_option("--policy", sa_policy, "sample-min or normal-quantile")
      ->check(CLI::IsMember({"sample-min", "normal-quantile"}));
  sa->add_option("--quantile", sa_quantile, "Tail mass for normal-quantile");
  sa->add_option("--max-extra", sa_max_extra, "Overshoot bins past tolerance");
  double sa_error_rate = 0.001;
  sa->add_option("--error-rate", sa_error_rate,
                 "Per-base error rate weighting overshoot events (0 disables)")
      ->check(CLI::Range(0.0, 1.0));
  sa->add_flag("--check-fn", sa_check_fn, "Recount false negatives at tolerance");
  sa->add_option("-o,--out", sa_out, "Report file ('-' for stdout)");
  add_global_opts(sa, g);
  sa->callback([&] {
    run_sa_sim(g, sa_tol, sa_row_bits, sa_samples, sa_policy, sa_quantile,
               sa_max_extra, sa_error_rate, sa_check_fn, sa_out);
  });

  // ---- cost
  auto* cost = app.add_subcommand("cost", "Energy/throughput from event counts");
  std::string cost_counts;
  EventCounts cost_flags;
  uint64_t cost_queries = 1;
  bool cost_identities = false;
  unsigned cost_seed = 12;
  uint32_t cost_read_len = 150;
  cost->add_option("--counts", cost_counts, "Counts file from 'map --counts-out'");
  cost->add_option("--searches", cost_flags.searches, "Row searches");
  cost->add_option("--second-step", cost_flags.second_step_searches,
                   "Second-step searches");
  cost->add_option("--pmitil-reads", cost_flags.pmitil_reads, "Locator reads");
  cost->add_option("--pmit-reads", cost_flags.pmit_reads, "Occurrence reads");
  cost->add_option("--broadcasts", cost_flags.broadcasts, "Query broadcasts");
  cost->add_option("--queries", cost_queries, "Query count for per-query figures");
  cost->add_flag("--identities", cost_identities,
                 "Also print closed-form pipeline probabilities");
  cost->add_option("--seed", cost_seed, "Prefix length for --identities");
  cost->add_option("--read-len", cost_read_len, "Read length for --identities");
  add_global_opts(cost, g);
  cost->callback([&] {
    run_cost(g, cost_counts, cost_flags, cost_queries, cost_identities, cost_seed,
             cost_read_len);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems -> 1, help/version -> 0
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
