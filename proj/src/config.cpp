#include "biomap/config.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "biomap/seqio.hpp"  // ParseError

namespace biomap {

namespace {

std::string trim(const std::string& s) {
  const size_t first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const size_t last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size())
    throw ParseError("config key '" + key + "': expected a number, got '" + value + "'");
  return parsed;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  size_t used = 0;
  uint64_t parsed = 0;
  try {
    if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
    parsed = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size())
    throw ParseError("config key '" + key + "': expected a non-negative integer, got '" +
                     value + "'");
  return parsed;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ParseError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

// "123456"-style subset, commas optional: enables exactly the listed phases.
void parse_phases(const std::string& value, bool (&enabled)[6]) {
  for (bool& on : enabled) on = false;
  bool any = false;
  for (char c : value) {
    if (c == ',' || c == ' ') continue;
    if (c < '1' || c > '6')
      throw ParseError("config key 'phases': expected digits 1-6, got '" + value + "'");
    enabled[c - '1'] = true;
    any = true;
  }
  if (!any) throw ParseError("config key 'phases': no phases listed");
}

}  // namespace

ConfigMap parse_config(std::istream& in) {
  ConfigMap values;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(line_no) +
                       ": expected key=value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ParseError("config line " + std::to_string(line_no) + ": empty key");
    if (!values.emplace(key, value).second)
      throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" +
                       key + "'");
  }
  return values;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  return parse_config(in);
}

void apply_config(RunConfig& cfg, const ConfigMap& values) {
  for (const auto& [key, value] : values) {
    if (key == "search_energy") cfg.cost.search_energy = parse_double(key, value);
    else if (key == "search_latency") cfg.cost.search_latency = parse_double(key, value);
    else if (key == "hop_power") cfg.cost.hop_power = parse_double(key, value);
    else if (key == "dram_read_energy")
      cfg.cost.dram_read_energy = parse_double(key, value);
    else if (key == "dram_read_latency")
      cfg.cost.dram_read_latency = parse_double(key, value);
    else if (key == "hop_latency") cfg.cost.hop_latency = parse_double(key, value);
    else if (key == "chips")
      cfg.cost.chips = static_cast<unsigned>(parse_u64(key, value));
    else if (key == "network_hops_per_search")
      cfg.cost.network_hops_per_search = static_cast<unsigned>(parse_u64(key, value));
    else if (key == "seed")
      cfg.mapper.seed = static_cast<unsigned>(parse_u64(key, value));
    else if (key == "tolerance")
      cfg.mapper.tolerance = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "strict_accept_limit") {
      if (value == "none" || value == "off")
        cfg.mapper.strict_accept_limit.reset();
      else
        cfg.mapper.strict_accept_limit = static_cast<uint32_t>(parse_u64(key, value));
    } else if (key == "use_seed_deviations")
      cfg.mapper.use_seed_deviations = parse_bool(key, value);
    else if (key == "max_candidates_per_phase")
      cfg.mapper.max_candidates_per_phase = parse_u64(key, value);
    else if (key == "second_half_first")
      cfg.mapper.second_half_first = parse_bool(key, value);
    else if (key == "phases")
      parse_phases(value, cfg.mapper.phases_enabled);
    else if (key == "substitution_rate")
      cfg.errors.substitution_rate = parse_double(key, value);
    else if (key == "snp_rate") cfg.errors.snp_rate = parse_double(key, value);
    else if (key == "indel_rate") cfg.errors.indel_rate = parse_double(key, value);
    else if (key == "indel_max_len")
      cfg.errors.indel_max_len = static_cast<uint32_t>(parse_u64(key, value));
    else if (key == "reverse_fraction")
      cfg.errors.reverse_fraction = parse_double(key, value);
    else
      throw ParseError("unknown config key '" + key + "'");
  }
  cfg.cost.validate();
  cfg.mapper.validate();
  cfg.errors.validate();
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  apply_config(cfg, load_config_file(path));
  return cfg;
}

}  // namespace biomap
