#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bwplanner/scenario.hpp"

using namespace bwplanner;

namespace {

const char* kBasic = R"({
  "schema_version": 1,
  "model": {
    "arrival": {"family": "exponential", "rate": 1.0},
    "lambda": 1.0,
    "mu": 2.0,
    "quotas": [3],
    "max_arrivals": 1000
  },
  "seed": 9
})";

}  // namespace

TEST_CASE("basic scenario parses into a config") {
    Scenario sc = parse_scenario_text(kBasic);
    CHECK(sc.config.ell == 1);
    CHECK(sc.config.lambda == 1.0);
    CHECK(sc.config.mu == 2.0);
    CHECK(sc.config.quotas == std::vector<long long>{3});
    CHECK(sc.config.max_arrivals == 1000);
    CHECK(sc.config.seed == 9);
    CHECK(sc.config.buffer_mode == BufferMode::infinite);
    CHECK(!sc.optimize.has_value());
    CHECK(sc.simulate.replications == 1);
}

TEST_CASE("unknown keys are rejected at every level") {
    std::string top = kBasic;
    top.insert(top.rfind('}'), R"(, "extra": 1)");
    CHECK_THROWS_AS(parse_scenario_text(top), SchemaError);

    CHECK_THROWS_AS(parse_scenario_text(R"({
      "schema_version": 1,
      "model": {"arrival": {"family": "exponential", "rate": 1.0, "bogus": 2},
                "lambda": 1.0, "mu": 2.0}
    })"),
                    SchemaError);
}

TEST_CASE("schema version and structure are enforced") {
    CHECK_THROWS_AS(parse_scenario_text(R"({"schema_version": 2, "model": {}})"),
                    SchemaError);
    CHECK_THROWS_AS(parse_scenario_text("{not json"), SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(R"({"schema_version": 1})"),
                    SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(R"({
      "schema_version": 1,
      "model": {"arrival": {"family": "weibull", "rate": 1.0},
                "lambda": 1.0, "mu": 2.0}
    })"),
                    SchemaError);
}

TEST_CASE("semantic validation surfaces as schema errors") {
    CHECK_THROWS_AS(parse_scenario_text(R"({
      "schema_version": 1,
      "model": {"arrival": {"family": "exponential", "rate": 1.0},
                "lambda": 2.0, "mu": 2.0, "max_arrivals": 10}
    })"),
                    SchemaError);
    CHECK_THROWS_AS(parse_scenario_text(R"({
      "schema_version": 1,
      "model": {"arrival": {"family": "exponential", "rate": 1.0},
                "lambda": 1.0, "mu": 2.0, "ell": 2,
                "thinning": [0.5, 0.6], "max_arrivals": 10}
    })"),
                    SchemaError);
}

TEST_CASE("full document with all blocks") {
    Scenario sc = parse_scenario_text(R"({
      "schema_version": 1,
      "model": {
        "ell": 2,
        "arrival": {"family": "exponential", "rate": 1.0},
        "lambda": 1.0,
        "thinning": [0.4, 0.6],
        "mu": 1.0,
        "batch": 2,
        "buffer_mode": "finite_cumulative",
        "quotas": [4, 9],
        "costs": [1.0, 2.0],
        "unit_length": [[[1, 1.0]], [[1, 0.5], [2, 0.5]]],
        "max_events": 5000,
        "warmup_fraction": 0.2
      },
      "simulate": {"replications": 3, "trajectory_csv": true},
      "solve": {"heavy_load": {"delta": 0.05, "Delta": 1.0}},
      "optimize": {"decision": "quota_N1", "epsilon": 0.01,
                   "fixed_C": 2, "beta_class": [1.0]},
      "seed": 4
    })");
    CHECK(sc.config.ell == 2);
    CHECK(sc.config.batch == 2);
    CHECK(sc.config.buffer_mode == BufferMode::finite_cumulative);
    CHECK(sc.config.unit_length.size() == 2);
    CHECK(sc.config.unit_length[1].values == std::vector<long long>{1, 2});
    CHECK(sc.config.warmup_fraction == 0.2);
    CHECK(sc.simulate.replications == 3);
    CHECK(sc.simulate.trajectory_csv);
    REQUIRE(sc.heavy_load.has_value());
    CHECK(sc.heavy_load->delta == 0.05);
    REQUIRE(sc.optimize.has_value());
    CHECK(sc.optimize->decision == Decision::quota_N1);
    CHECK(sc.optimize->epsilon == 0.01);
    CHECK(sc.optimize->fixed_C == 2);
    CHECK(sc.optimize->alpha_class == std::vector<double>{1.0, 2.0});
}

TEST_CASE("erlang and hyperexponential arrival blocks") {
    Scenario sc = parse_scenario_text(R"({
      "schema_version": 1,
      "model": {"arrival": {"family": "erlang", "shape": 2, "rate": 1.0},
                "lambda": 0.5, "mu": 1.0, "max_arrivals": 10}
    })");
    CHECK(sc.config.arrival.family() == Family::erlang);
    Scenario sc2 = parse_scenario_text(R"({
      "schema_version": 1,
      "model": {"arrival": {"family": "hyperexp2", "p": 0.4,
                            "rate1": 2.0, "rate2": 0.75},
                "lambda": 1.0, "mu": 2.0, "max_arrivals": 10}
    })");
    CHECK(sc2.config.arrival.family() == Family::hyperexp2);
}
