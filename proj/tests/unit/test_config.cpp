#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "denguecast/config.hpp"
#include "denguecast/error.hpp"

using namespace denguecast;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::filesystem::path kSource = "/data/run/config.json";

RunConfig parse(const std::string& text, bool require_inputs = false) {
  return parse_config(text, kSource, require_inputs);
}

}  // namespace

TEST_CASE("an empty object yields defaults", "[config]") {
  const auto c = parse("{}");
  CHECK(c.store_dir == "/data/run/store");
  CHECK(c.output_dir == "/data/run/output");
  CHECK_FALSE(c.linelist);
  CHECK(c.model.correlated_count == 3);
  CHECK(c.model.reporting_lag == 6);
  CHECK(c.model.lags == std::vector<int>{1});
  CHECK(c.simulation.horizon == 10);
  CHECK(c.reduce.point == PointReduction::Median);
  CHECK(c.evaluation.baseline_window_years == 10);
  CHECK_FALSE(c.has_seed);
  CHECK_THROWS_AS(c.require_seed(), ValidationError);
  CHECK(c.text == "{}");
}

TEST_CASE("paths resolve against the config directory", "[config]") {
  const auto c = parse(R"({"store_dir": "../s", "output_dir": "/abs/out", "linelist": "in/cases.csv"})");
  CHECK(c.store_dir == "/data/s");
  CHECK(c.output_dir == "/abs/out");
  CHECK(*c.linelist == "/data/run/in/cases.csv");
  CHECK_THROWS_WITH(parse(R"({"linelist": "nope.csv"})", true), ContainsSubstring("does not exist"));
}

TEST_CASE("sections are parsed", "[config]") {
  const auto c = parse(R"({
    "aliases": {"BK": "NK"},
    "model": {"correlated_count": 2, "lags": [1, 2], "reporting_lag": 0},
    "series": {"first_year": 1990, "diagnosis": "all"},
    "schedule": {"first_year": 2014, "last_year": 2014, "exclusions": ["2014-B03"]},
    "simulation": {"horizon": 4, "n_sims": 500, "seed": 18446744073709551615,
                   "levels": [0.5, 0.95], "point": "mean"},
    "evaluation": {"baseline_window_years": 5},
    "experiment": {"delay": {"family": "lognormal", "median_weeks": 6, "p75_weeks": 10},
                   "delay_seed": 3}
  })");
  CHECK(c.model.aliases.at("BK") == "NK");
  CHECK(c.model.correlated_count == 2);
  CHECK(c.model.lags == std::vector<int>{1, 2});
  CHECK(c.model.reporting_lag == 0);
  CHECK(c.series.first_year == 1990);
  CHECK_FALSE(c.series.diagnosis);
  CHECK(c.analysis_dates().size() == 25);
  CHECK(c.simulation.horizon == 4);
  CHECK(c.simulation.seed == 18446744073709551615ull);
  CHECK(c.has_seed);
  CHECK_NOTHROW(c.require_seed());
  CHECK(c.reduce.point == PointReduction::Mean);
  CHECK(c.reduce.levels == std::vector<double>{0.5, 0.95});
  CHECK(c.evaluation.baseline_window_years == 5);
  CHECK(c.experiment.delay.family == DelayFamily::LogNormal);
  CHECK(c.experiment.delay_seed == 3);
}

TEST_CASE("explicit dates override the schedule", "[config]") {
  const auto c = parse(R"({"schedule": {"first_year": 2014, "last_year": 2014,
                                       "dates": ["2014-05-21", "2014-06-04"]}})");
  REQUIRE(c.analysis_dates().size() == 2);
  CHECK(c.analysis_dates()[1] == parse_date("2014-06-04"));
}

TEST_CASE("invalid configs are rejected", "[config]") {
  CHECK_THROWS_WITH(parse(R"({"modle": {}})"), ContainsSubstring("unknown key 'modle'"));
  CHECK_THROWS_WITH(parse(R"({"model": {"lag": 3}})"), ContainsSubstring("unknown key 'lag'"));
  CHECK_THROWS_WITH(parse(R"({"simulation": {"levels": [0.8]}})"), ContainsSubstring("0.95"));
  CHECK_THROWS_WITH(parse(R"({"simulation": {"point": "mode"}})"), ContainsSubstring("median or mean"));
  CHECK_THROWS_AS(parse(R"({"simulation": {"seed": -4}})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"simulation": {"horizon": 0}})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"model": {"correlated_count": "three"}})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"model": {"lags": [0]}})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"evaluation": {"baseline_window_years": 0}})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"experiment": {"delay": {"family": "gamma"}}})"), ValidationError);
  CHECK_THROWS_AS(parse(R"({"series": {"first_year": 2000, "linelist_first_year": 1999}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse(R"({"schedule": {"dates": ["2014-02-30"]}})"), ValidationError);
  CHECK_THROWS_AS(parse("{"), ParseError);
  CHECK_THROWS_AS(parse("[]"), ValidationError);
}

TEST_CASE("the hash follows the exact bytes", "[config]") {
  const auto a = parse("{}");
  const auto b = parse("{ }");
  CHECK(a.sha256().size() == 64);
  CHECK(a.sha256() != b.sha256());
  CHECK(a.sha256() == parse("{}").sha256());
}

TEST_CASE("load_config reads from disk", "[config]") {
  const auto dir = std::filesystem::temp_directory_path() / "denguecast_config_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "cases.csv") << "x\n";
    std::ofstream(dir / "c.json") << R"({"linelist": "cases.csv"})";
  }
  const auto c = load_config(dir / "c.json");
  CHECK(*c.linelist == (dir / "cases.csv").lexically_normal());
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ValidationError);
  std::filesystem::remove_all(dir);
}
