#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "biomap/config.hpp"

using namespace biomap;

namespace {

RunConfig configured(const std::string& text) {
  std::istringstream in(text);
  RunConfig cfg;
  apply_config(cfg, parse_config(in));
  return cfg;
}

}  // namespace

TEST_CASE("key=value lines are parsed with comments and blanks ignored") {
  std::istringstream in(
      "# experiment knobs\n"
      "\n"
      "  tolerance = 3  \n"
      "chips=8\r\n"
      "substitution_rate = 0.02\n");
  const ConfigMap values = parse_config(in);
  REQUIRE(values.size() == 3);
  CHECK(values.at("tolerance") == "3");
  CHECK(values.at("chips") == "8");
  CHECK(values.at("substitution_rate") == "0.02");
}

TEST_CASE("malformed lines and duplicate keys are rejected") {
  std::istringstream no_eq("tolerance 3\n");
  CHECK_THROWS_AS(parse_config(no_eq), ParseError);
  std::istringstream empty_key("= 3\n");
  CHECK_THROWS_AS(parse_config(empty_key), ParseError);
  std::istringstream dup("chips=4\nchips=8\n");
  CHECK_THROWS_AS(parse_config(dup), ParseError);
}

TEST_CASE("overrides reach all three component configs") {
  const RunConfig cfg = configured(
      "search_energy = 2e-9\n"
      "hop_power = 0.05\n"
      "chips = 4\n"
      "network_hops_per_search = 2\n"
      "seed = 10\n"
      "tolerance = 4\n"
      "use_seed_deviations = true\n"
      "max_candidates_per_phase = 128\n"
      "second_half_first = yes\n"
      "substitution_rate = 0.02\n"
      "indel_max_len = 2\n"
      "reverse_fraction = 0.25\n");
  CHECK(cfg.cost.search_energy == 2e-9);
  CHECK(cfg.cost.hop_power == 0.05);
  CHECK(cfg.cost.chips == 4);
  CHECK(cfg.cost.network_hops_per_search == 2);
  CHECK(cfg.mapper.seed == 10);
  CHECK(cfg.mapper.tolerance == 4);
  CHECK(cfg.mapper.use_seed_deviations);
  CHECK(cfg.mapper.max_candidates_per_phase == 128);
  CHECK(cfg.mapper.second_half_first);
  CHECK(cfg.errors.substitution_rate == 0.02);
  CHECK(cfg.errors.indel_max_len == 2);
  CHECK(cfg.errors.reverse_fraction == 0.25);
}

TEST_CASE("untouched fields keep their defaults") {
  const RunConfig cfg = configured("tolerance = 9\n");
  CHECK(cfg.cost.search_energy == 1e-9);
  CHECK(cfg.cost.chips == 16);
  CHECK(cfg.mapper.seed == 12);
  CHECK(cfg.errors.substitution_rate == 0.010);
  CHECK(cfg.mapper.tolerance == 9);
}

TEST_CASE("phase subsets parse with or without commas") {
  const RunConfig plain = configured("phases = 12\n");
  CHECK(plain.mapper.phases_enabled[0]);
  CHECK(plain.mapper.phases_enabled[1]);
  for (int i = 2; i < 6; ++i) CHECK_FALSE(plain.mapper.phases_enabled[i]);
  const RunConfig commas = configured("phases = 1,3,5\n");
  CHECK(commas.mapper.phases_enabled[0]);
  CHECK_FALSE(commas.mapper.phases_enabled[1]);
  CHECK(commas.mapper.phases_enabled[2]);
  CHECK(commas.mapper.phases_enabled[4]);
  CHECK_THROWS_AS(configured("phases = 7\n"), ParseError);
  CHECK_THROWS_AS(configured("phases = ,\n"), ParseError);
}

TEST_CASE("strict_accept_limit toggles between a number and none") {
  const RunConfig on = configured("strict_accept_limit = 2\n");
  REQUIRE(on.mapper.strict_accept_limit.has_value());
  CHECK(*on.mapper.strict_accept_limit == 2);
  const RunConfig off = configured("strict_accept_limit = none\n");
  CHECK_FALSE(off.mapper.strict_accept_limit.has_value());
}

TEST_CASE("unknown keys and malformed values are loud") {
  CHECK_THROWS_AS(configured("tollerance = 3\n"), ParseError);
  CHECK_THROWS_AS(configured("chips = four\n"), ParseError);
  CHECK_THROWS_AS(configured("chips = -2\n"), ParseError);
  CHECK_THROWS_AS(configured("search_energy = 1e\n"), ParseError);
  CHECK_THROWS_AS(configured("use_seed_deviations = maybe\n"), ParseError);
}

TEST_CASE("component validation runs on the merged result") {
  CHECK_THROWS_AS(configured("seed = 22\n"), std::invalid_argument);
  CHECK_THROWS_AS(configured("chips = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(configured("substitution_rate = 1.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(configured("tolerance = 2\nstrict_accept_limit = 3\n"),
                  std::invalid_argument);
}

TEST_CASE("missing config files are reported by path") {
  CHECK_THROWS_WITH_AS(load_config_file("/nonexistent/biomap.conf"),
                       "cannot open config file: /nonexistent/biomap.conf",
                       ParseError);
}
