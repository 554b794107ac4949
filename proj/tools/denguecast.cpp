// Command-line driver for the forecasting pipeline.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "denguecast/error.hpp"
#include "denguecast/pipeline.hpp"

namespace dc = denguecast;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string analysis_date;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string input;
  std::string manifest;
};

std::optional<fs::path> out_path(const Options& o) {
  if (o.out.empty()) return std::nullopt;
  return fs::path(o.out);
}

dc::Date required_date(const Options& o) {
  if (o.analysis_date.empty()) throw dc::ValidationError("--analysis-date is required");
  return dc::parse_date(o.analysis_date);
}

void print_ingest(const dc::IngestSummary& s) {
  fmt::print("ingested {} records ({} rejected), {} monthly counts ({} rejected)\n", s.ingested,
             s.rejections.size(), s.monthly_ingested, s.monthly_rejections.size());
  for (const auto& r : s.rejections) {
    // Record i of the batch sits on line i + 2 of the input (after the header).
    fmt::print("  line {}: {}: {}\n", r.position + 2, r.record_id, r.reason);
  }
  for (const auto& r : s.monthly_rejections) {
    fmt::print("  monthly line {}: {}\n", r.position + 2, r.reason);
  }
  fmt::print("store total: {} records\n", s.store_total);
  fmt::print("province,year,records\n");
  for (const auto& [key, n] : s.by_province_year) fmt::print("{},{},{}\n", key.first, key.second, n);
}

void print_summary(const std::vector<dc::HorizonSummary>& rows) {
  fmt::print("{}", dc::write_horizon_summary(rows));
}

int run(const std::string& command, const Options& o) {
  if (command == "reproduce") {
    const auto report = dc::cmd_reproduce(o.manifest);
    for (const auto& [name, same] : report.files) {
      fmt::print("{} {}\n", same ? "identical" : "DIFFERS  ", name);
    }
    if (!report.identical()) throw dc::RuntimeFailure("regenerated outputs differ from the manifest");
    return 0;
  }

  const bool needs_inputs = command == "ingest";
  const dc::RunConfig config = dc::load_config(o.config, needs_inputs);

  if (command == "ingest") {
    print_ingest(dc::cmd_ingest(config));
  } else if (command == "build-series") {
    std::optional<dc::Date> date;
    if (!o.analysis_date.empty()) date = dc::parse_date(o.analysis_date);
    fmt::print("{}\n", dc::cmd_build_series(config, date, out_path(o)).string());
  } else if (command == "fit") {
    const auto batch = dc::cmd_fit(config, required_date(o), out_path(o));
    fmt::print("fitted {} provinces, skipped {}\n", batch.fits.size(), batch.skipped.size());
  } else if (command == "forecast") {
    const auto run = dc::cmd_forecast(config, required_date(o), o.seed, out_path(o));
    fmt::print("{} forecast rows, {} provinces skipped -> {}\n", run.forecasts.size(),
               run.skipped.size(), run.directory.string());
  } else if (command == "evaluate") {
    const auto run = dc::cmd_evaluate(config, out_path(o));
    print_summary(run.summary);
    fmt::print("-> {}\n", run.directory.string());
  } else if (command == "delay-experiment") {
    dc::RunConfig c = config;
    if (o.seed) {
      c.simulation.seed = *o.seed;
      c.has_seed = true;
    }
    const auto run = dc::cmd_delay_experiment(c, out_path(o));
    fmt::print("real-time accuracy\n");
    print_summary(run.table1);
    fmt::print("real-time vs full data, same origin\n{}", dc::write_comparison(run.table2));
    fmt::print("real-time vs full data, absolute horizon\n{}", dc::write_comparison(run.table3));
    fmt::print("-> {}\n", run.directory.string());
  } else if (command == "inject-delays") {
    if (o.input.empty() || o.out.empty()) {
      throw dc::ValidationError("inject-delays needs --input and --out");
    }
    fmt::print("{} records\n", dc::cmd_inject_delays(config, o.input, o.out, o.seed));
  } else if (command == "synthesize") {
    if (o.out.empty()) throw dc::ValidationError("synthesize needs --out");
    fmt::print("{} records\n", dc::cmd_synthesize(config, o.out));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Province-level dengue forecasting"};
  app.require_subcommand(1);
  Options o;
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    return sub;
  };
  add("ingest", "Load line-list and monthly inputs into the store");
  add("build-series", "Write biweekly series as of a date (or from the complete data)")
      ->add_option("--analysis-date", o.analysis_date, "YYYY-MM-DD");
  for (auto* sub : {add("fit", "Fit every province at an analysis date"),
                    add("forecast", "Fit, simulate and write forecasts for an analysis date")}) {
    sub->add_option("--analysis-date", o.analysis_date, "YYYY-MM-DD")->required();
  }
  for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    if (sub->get_name() != "ingest") sub->add_option("--out", o.out, "Output path");
  }
  app.get_subcommand("forecast")->add_option("--seed", o.seed, "Override the configured seed");
  add("evaluate", "Score the scheduled forecasts")->add_option("--out", o.out, "Output directory");
  auto* exp = add("delay-experiment", "Real-time vs full-data comparison over the schedule");
  exp->add_option("--out", o.out, "Output directory");
  exp->add_option("--seed", o.seed, "Override the configured seed");
  auto* inject = add("inject-delays", "Assign synthetic arrival dates to a line list");
  inject->add_option("--input", o.input, "Line list to read")->required()->check(CLI::ExistingFile);
  inject->add_option("--out", o.out, "Line list to write")->required();
  inject->add_option("--seed", o.seed, "Override the configured delay seed");
  add("synthesize", "Write a synthetic outbreak line list")
      ->add_option("--out", o.out, "Line list to write")->required();
  app.add_subcommand("reproduce", "Regenerate a manifest's outputs and compare them")
      ->add_option("--manifest", o.manifest, "manifest.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto logger = spdlog::stderr_color_mt("denguecast");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const dc::ValidationError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const dc::RuntimeFailure& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
}
