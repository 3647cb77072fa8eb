#include <catch2/catch.hpp>

#include "polychain/config.hpp"

using namespace polychain;

static const char* kSample = R"(
# experiment
kind = msd-scan

[model]
alpha = 1.5
beta = 1.0
h = 1.0 0.0

[grid]
n_list = 16 32 64   # inline comment

[mcmc]
sweeps = 22000
replicas = 4

[run]
seed = 42
traces = true
)";

TEST_CASE("config parses sections, scalars and lists") {
  const Config cfg = Config::parse_string(kSample);
  CHECK(cfg.get_string("", "kind") == "msd-scan");
  CHECK(cfg.get_real("model", "alpha") == 1.5);
  CHECK(cfg.get_vec2("model", "h").x == 1.0);
  CHECK(cfg.get_vec2("model", "h").y == 0.0);
  const auto n_list = cfg.get_int_list("grid", "n_list");
  REQUIRE(n_list.size() == 3);
  CHECK(n_list[2] == 64);
  CHECK(cfg.get_int("mcmc", "sweeps") == 22000);
  CHECK(cfg.get_u64_or("run", "seed", 0) == 42);
  CHECK(cfg.get_bool_or("run", "traces", false));
  CHECK(cfg.get_int_or("mcmc", "burn_in", 123) == 123);
}

TEST_CASE("coupling parsing: power law and explicit tables") {
  const Config power = Config::parse_string("[model]\nalpha = 2.0\n");
  CHECK(power.get_couplings("model").value(2) == Approx(0.25));

  const Config table = Config::parse_string("[model]\ncouplings = 1:1.0 2:0.25\n");
  const CouplingSpec spec = table.get_couplings("model");
  CHECK(spec.value(1) == 1.0);
  CHECK(spec.value(2) == 0.25);
  CHECK(spec.value(3) == 0.0);

  const Config both = Config::parse_string("[model]\nalpha = 2.0\ncouplings = 1:1.0\n");
  CHECK_THROWS_AS(both.get_couplings("model"), std::invalid_argument);
  const Config neither = Config::parse_string("[model]\nbeta = 1.0\n");
  CHECK_THROWS_AS(neither.get_couplings("model"), std::invalid_argument);
  const Config malformed = Config::parse_string("[model]\ncouplings = 1=1.0\n");
  CHECK_THROWS_AS(malformed.get_couplings("model"), std::invalid_argument);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_WITH(Config::parse_string("kind msd\n"),
                    Catch::Contains("line 1"));
  CHECK_THROWS_WITH(Config::parse_string("kind = x\n[grid\n"),
                    Catch::Contains("line 2"));
}

TEST_CASE("typed getter errors") {
  const Config cfg = Config::parse_string("[a]\nx = not-a-number\nv = 1.0\n");
  CHECK_THROWS_AS(cfg.get_real("a", "x"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.get_int("a", "x"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.get_vec2("a", "v"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.get_real("a", "missing"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.get_bool_or("a", "x", true), std::invalid_argument);
}

TEST_CASE("hash is stable on bytes and sensitive to changes") {
  const Config a = Config::parse_string(kSample);
  const Config b = Config::parse_string(kSample);
  CHECK(a.hash_hex() == b.hash_hex());
  CHECK(a.hash_hex().size() == 16);
  std::string changed(kSample);
  changed += "\n# trailing note\n";
  CHECK(Config::parse_string(changed).hash_hex() != a.hash_hex());
}
