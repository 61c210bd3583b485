#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "biomap/costmodel.hpp"
#include "biomap/mapper.hpp"
#include "biomap/sim.hpp"

namespace biomap {

/// Parsed `key = value` pairs in file order. Lines may be blank or start with
/// '#'; keys must be unique.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::istream& in);
ConfigMap load_config_file(const std::string& path);

/// Every tunable the command line can override from one file.
struct RunConfig {
  CostParams cost;
  MapperConfig mapper;
  ErrorModel errors;
};

/// Applies recognized keys to the matching component and validates the result.
/// Unknown keys and malformed values raise ParseError, so a typo cannot fall
/// back to a default silently.
void apply_config(RunConfig& cfg, const ConfigMap& values);

RunConfig load_run_config(const std::string& path);

}  // namespace biomap
