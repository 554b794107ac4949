#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "denguecast/pipeline.hpp"
#include "denguecast/text_io.hpp"

using namespace denguecast;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

class Workspace {
 public:
  Workspace() {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / fmt::format("denguecast-test-{:08x}{:08x}", rd(), rd());
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const fs::path& dir() const { return dir_; }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name, std::ios::binary) << text;
  }
  std::string read(const fs::path& p) const { return io::read_file(p.is_absolute() ? p : dir_ / p); }

  /// Runs the CLI; stdout and stderr are kept for inspection.
  int run(const std::string& args) {
    const auto cmd = fmt::format("\"{}\" {} > \"{}\" 2> \"{}\"", DENGUECAST_CLI, args,
                                 (dir_ / "stdout.txt").string(), (dir_ / "stderr.txt").string());
    const int status = std::system(cmd.c_str());
    out = read("stdout.txt");
    err = read("stderr.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out, err;

 private:
  fs::path dir_;
};

std::string record(int i, const std::string& onset) {
  return fmt::format("R{:05},P01,{},DHF,{}\n", i, onset, onset);
}

std::string config_json(const std::string& extra) {
  return fmt::format(R"({{
  "store_dir": "store",
  "output_dir": "out",
  "linelist": "cases.csv",
  "series": {{"first_year": 2002}},
  "synthetic": {{"provinces": 2, "start_year": 2002, "years": 12, "mean_level": 15, "seed": 7}}{}
}})",
                     extra);
}

/// Two synthetic provinces, 2002-2013, ingested.
void prepare_data(Workspace& w, const std::string& extra) {
  w.write("config.json", config_json(extra));
  w.write("cases.csv", std::string(kLinelistHeader) + "\n");
  REQUIRE(w.run(fmt::format("synthesize --config \"{}\" --out \"{}\"", (w / "config.json").string(),
                            (w / "cases.csv").string())) == 0);
  REQUIRE(w.run(fmt::format("ingest --config \"{}\"", (w / "config.json").string())) == 0);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    out.push_back(text.substr(pos, nl - pos));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

constexpr const char* kForecastSettings =
    R"(,
  "schedule": {"dates": ["2013-06-04", "2013-06-18"]},
  "simulation": {"horizon": 10, "n_sims": 200, "seed": 42})";

// Two provinces leave room for one correlated neighbour each.
constexpr const char* kModel = R"(,
  "model": {"correlated_count": 1})";

}  // namespace

TEST_CASE("ingest examples", "[pipeline][cli]") {
  Workspace w;
  w.write("config.json", R"({"linelist": "cases.csv", "store_dir": "store"})");
  const std::string cfg = fmt::format("ingest --config \"{}\"", (w / "config.json").string());

  SECTION("empty input with header") {
    w.write("cases.csv", std::string(kLinelistHeader) + "\n");
    CHECK(w.run(cfg) == 0);
    CHECK_THAT(w.out, ContainsSubstring("ingested 0 records"));
    CHECK_THAT(w.out, ContainsSubstring("store total: 0 records"));
  }
  SECTION("malformed date on line 17") {
    std::string text = std::string(kLinelistHeader) + "\n";
    for (int i = 0; i < 15; ++i) text += record(i, "2010-03-01");
    text += "R99999,P01,2010-13-01,DHF,2010-03-01\n";
    w.write("cases.csv", text);
    CHECK(w.run(cfg) == 1);
    CHECK_THAT(w.err, ContainsSubstring("line 17"));
    CHECK_FALSE(fs::exists(w / "store/records.log"));
  }
  SECTION("100 valid records") {
    std::string text = std::string(kLinelistHeader) + "\n";
    for (int i = 0; i < 100; ++i) text += record(i, fmt::format("2010-{:02}-{:02}", 1 + i % 12, 1 + i % 28));
    w.write("cases.csv", text);
    CHECK(w.run(cfg) == 0);
    CHECK_THAT(w.out, ContainsSubstring("store total: 100 records"));
    CHECK_THAT(w.out, ContainsSubstring("P01,2010,100"));
    // A second ingest of the same file adds nothing.
    CHECK(w.run(cfg) == 0);
    CHECK_THAT(w.out, ContainsSubstring("ingested 0 records (100 rejected)"));
    CHECK_THAT(w.out, ContainsSubstring("store total: 100 records"));
  }
  SECTION("usage errors exit with 1") {
    CHECK(w.run("forecast --config missing.json --analysis-date 2014-01-01") == 1);
    CHECK(w.run("") == 1);
  }
}

TEST_CASE("forecast, evaluate and reproduce", "[pipeline][cli]") {
  Workspace w;
  prepare_data(w, std::string(kForecastSettings) + kModel);
  const std::string cfg = fmt::format("--config \"{}\"", (w / "config.json").string());

  REQUIRE(w.run("forecast " + cfg + " --analysis-date 2013-06-04") == 0);
  const fs::path dir = w / "out/forecast-2013-06-04";
  const auto first = w.read(dir / "forecasts.csv");
  const auto rows = lines_of(first);
  CHECK(rows.size() == 21);
  CHECK(rows[0] ==
        "province,analysis_date,origin,step,target_biweek,point,lo95,hi95,n_sims,seed,explosive_fraction");
  CHECK(fs::exists(dir / "manifest.json"));
  const auto manifest = nlohmann::json::parse(w.read(dir / "manifest.json"));
  CHECK(manifest.at("seed") == 42);
  CHECK(manifest.at("origin") == "2013-B05");
  CHECK(manifest.at("outputs").at("forecasts.csv") == io::sha256_hex(first));
  CHECK(manifest.at("config").at("sha256") == io::sha256_hex(w.read("config.json")));

  // Same config and seed: byte-identical.
  REQUIRE(w.run("forecast " + cfg + " --analysis-date 2013-06-04 --out \"" + (w / "again").string() + "\"") == 0);
  for (const char* f : {"forecasts.csv", "fits.json", "skipped.csv"}) {
    CHECK(w.read(w / "again" / f) == w.read(dir / f));
  }
  // A different seed changes the draws.
  REQUIRE(w.run("forecast " + cfg + " --analysis-date 2013-06-04 --seed 43 --out \"" + (w / "other").string() + "\"") == 0);
  CHECK(w.read(w / "other/forecasts.csv") != first);

  REQUIRE(w.run("reproduce --manifest \"" + (dir / "manifest.json").string() + "\"") == 0);
  CHECK_THAT(w.out, ContainsSubstring("identical forecasts.csv"));
  CHECK_THAT(w.out, ContainsSubstring("identical manifest.json"));

  SECTION("evaluate enumerates missing forecasts") {
    CHECK(w.run("evaluate " + cfg) == 1);
    CHECK_THAT(w.err, ContainsSubstring("1 forecast file(s) missing"));
    CHECK_THAT(w.err, ContainsSubstring("forecast-2013-06-18"));
    CHECK_FALSE(fs::exists(w / "out/evaluation"));
  }

  SECTION("evaluate scores and reproduces") {
    REQUIRE(w.run("forecast " + cfg + " --analysis-date 2013-06-18") == 0);
    REQUIRE(w.run("evaluate " + cfg) == 0);
    const auto table = lines_of(w.read("out/evaluation/table1.csv"));
    CHECK(table.size() == 11);
    CHECK(table[0].rfind("horizon,n,spearman_rho,coverage_95,mae,", 0) == 0);
    CHECK(lines_of(w.read("out/evaluation/scores.csv")).size() == 41);
    REQUIRE(w.run("reproduce --manifest \"" + (w / "out/evaluation/manifest.json").string() + "\"") == 0);
    CHECK_THAT(w.out, ContainsSubstring("identical table1.csv"));

    // A forecast file that no longer matches its manifest is refused.
    std::ofstream(dir / "forecasts.csv", std::ios::app) << "\n";
    CHECK(w.run("evaluate " + cfg + " --out \"" + (w / "eval2").string() + "\"") == 1);
    CHECK_THAT(w.err, ContainsSubstring("does not match its manifest"));
  }

  SECTION("forecasts equal to the truth score zero MAE") {
    REQUIRE(w.run("forecast " + cfg + " --analysis-date 2013-06-18") == 0);
    const RunConfig config = load_config(w / "config.json");
    const auto store = VersionedStore::open(config.store_dir);
    const auto snap = store.everything();
    const auto truth = build_series(snap, store.monthly(), config, last_complete_biweek(snap));
    for (const auto& date : config.analysis_dates()) {
      const fs::path d = forecast_directory(config, date);
      auto records = read_forecasts(d / "forecasts.csv");
      for (auto& r : records) {
        r.point = truth.at(r.province).at(r.target);
        for (auto& iv : r.intervals) iv.lower = iv.upper = r.point;
      }
      const auto text = write_forecasts(records);
      io::write_file_atomic(d / "forecasts.csv", text);
      auto m = nlohmann::json::parse(w.read(d / "manifest.json"));
      m["outputs"]["forecasts.csv"] = io::sha256_hex(text);
      io::write_file_atomic(d / "manifest.json", m.dump(2));
    }
    REQUIRE(w.run("evaluate " + cfg) == 0);
    const auto table = lines_of(w.read("out/evaluation/table1.csv"));
    REQUIRE(table.size() == 11);
    for (std::size_t i = 1; i < table.size(); ++i) {
      const auto f = io::split_fields(table[i]);
      CHECK(f[4] == "0");
      CHECK(f[3] == "1");
    }
  }
}

TEST_CASE("forecast before any data fails without output", "[pipeline][cli]") {
  Workspace w;
  prepare_data(w, std::string(kForecastSettings) + kModel);
  CHECK(w.run(fmt::format("forecast --config \"{}\" --analysis-date 1999-01-01",
                          (w / "config.json").string())) == 1);
  CHECK_FALSE(fs::exists(w / "out/forecast-1999-01-01"));
  CHECK(w.run(fmt::format("forecast --config \"{}\" --analysis-date 2003-01-01",
                          (w / "config.json").string())) != 0);
  CHECK_FALSE(fs::exists(w / "out/forecast-2003-01-01"));
  CHECK(w.run(fmt::format("forecast --config \"{}\" --analysis-date 2013-02-30",
                          (w / "config.json").string())) == 1);
}

TEST_CASE("zero-delay experiment gives relative MAE of one", "[pipeline][cli]") {
  Workspace w;
  prepare_data(w, std::string(kForecastSettings) + R"(,
  "model": {"correlated_count": 1, "reporting_lag": 0},
  "experiment": {"delay": {"family": "none"}, "delay_seed": 1})");
  REQUIRE(w.run(fmt::format("delay-experiment --config \"{}\"", (w / "config.json").string())) == 0);
  const fs::path dir = w / "out/delay-experiment";
  for (const char* name : {"table2_same_origin.csv", "table3_absolute_horizon.csv"}) {
    const auto table = lines_of(w.read(dir / name));
    REQUIRE(table.size() == 11);
    for (std::size_t i = 1; i < table.size(); ++i) {
      const auto f = io::split_fields(table[i]);
      REQUIRE(f.size() == 10);
      for (std::size_t q = 3; q < 8; ++q) CHECK(f[q] == "1");
      CHECK(f[9] == "0");
    }
  }
  CHECK(w.read(dir / "forecasts_realtime.csv") == w.read(dir / "forecasts_fulldata_absolute.csv"));
  REQUIRE(w.run("reproduce --manifest \"" + (dir / "manifest.json").string() + "\"") == 0);
  CHECK_THAT(w.out, ContainsSubstring("identical table3_absolute_horizon.csv"));
}
