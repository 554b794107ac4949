#include "denguecast/pipeline.hpp"

#include <algorithm>
#include <random>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "denguecast/error.hpp"
#include "denguecast/text_io.hpp"

namespace denguecast {

namespace fs = std::filesystem;

// --- series -----------------------------------------------------------------

SeriesMap build_series(const Snapshot& snapshot, std::span<const MonthlyCount> monthly,
                       const RunConfig& config, AbsoluteBiweek last) {
  const AbsoluteBiweek first = to_absolute({config.series.first_year, 1});
  if (last < first) {
    throw ValidationError(fmt::format("biweek {} precedes the configured series start {}",
                                      format_biweek(last), format_biweek(first)));
  }
  const AbsoluteBiweek ll_first = config.series.linelist_first_year
                                      ? to_absolute({*config.series.linelist_first_year, 1})
                                      : first;
  const auto& aliases = config.model.aliases;

  std::set<std::string> known;
  for (const auto& p : snapshot.provinces()) known.insert(resolve_alias(aliases, p));
  SeriesMap linelist;
  if (ll_first <= last && !known.empty()) {
    const std::vector<std::string> codes(known.begin(), known.end());
    linelist = aggregate_linelist(snapshot, codes, ll_first, last, config.series.diagnosis, aliases);
  }

  // Monthly counts of merged provinces are summed under the surviving code.
  std::map<std::string, std::map<std::pair<int, int>, long long>> grouped;
  for (const auto& m : monthly) {
    grouped[resolve_alias(aliases, m.province)][{m.year, m.month}] += m.count;
  }

  SeriesMap out;
  for (const auto& [code, months] : grouped) {
    if (ll_first <= first) break;
    std::vector<MonthlyCount> rows;
    for (const auto& [ym, count] : months) rows.push_back({code, ym.first, ym.second, count});
    BiweekSeries m = interpolate_monthly(rows);
    if (m.empty()) continue;
    const AbsoluteBiweek lo = std::max(m.start, first);
    const AbsoluteBiweek hi = std::min({m.last(), ll_first - 1, last});
    if (hi < lo) continue;
    m = m.slice(lo, hi);
    auto it = linelist.find(code);
    out.emplace(code, it == linelist.end() ? m : merge_sources(m, it->second));
  }
  for (auto& [code, s] : linelist) out.emplace(code, std::move(s));
  return out;
}

AbsoluteBiweek last_complete_biweek(const Snapshot& snapshot) {
  if (snapshot.empty()) throw ValidationError("no case records available");
  Date latest = snapshot.records().front().onset;
  for (const auto& r : snapshot.records()) {
    if (std::chrono::sys_days(r.onset) > std::chrono::sys_days(latest)) latest = r.onset;
  }
  const AbsoluteBiweek b = absolute_biweek(latest);
  return biweek_to_interval(from_absolute(b)).last == latest ? b : b - 1;
}

// --- shared helpers ---------------------------------------------------------

namespace {

struct Artifact {
  std::string name;
  std::string content;
};

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Writes every artifact plus manifest.json into a staging directory and
/// renames it into place, so `dir` is either complete or absent.
void publish(const fs::path& dir, const std::vector<Artifact>& files, nlohmann::json manifest) {
  const fs::path staging = dir.parent_path() / (dir.filename().string() + ".partial");
  fs::remove_all(staging);
  fs::create_directories(staging);
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& f : files) {
    io::write_file_atomic(staging / f.name, f.content);
    outputs[f.name] = io::sha256_hex(f.content);
  }
  manifest["outputs"] = outputs;
  io::write_file_atomic(staging / "manifest.json", dump(manifest));
  fs::remove_all(dir);
  fs::rename(staging, dir);
}

nlohmann::json manifest_base(const RunConfig& config, std::string_view command) {
  return {{"command", command},
          {"software", {{"name", "denguecast"}, {"version", kVersion}}},
          {"config", {{"path", config.source.string()}, {"sha256", config.sha256()}}}};
}

nlohmann::json snapshot_json(const Snapshot& s) {
  return {{"as_of", format_date(s.as_of())}, {"records", s.size()}, {"content_sha256", s.content_hash()}};
}

VersionedStore open_existing_store(const RunConfig& config) {
  if (!fs::exists(config.store_dir / "records.log")) {
    throw ValidationError(fmt::format("store '{}' is empty or missing; run ingest first",
                                      config.store_dir.string()));
  }
  return VersionedStore::open(config.store_dir);
}

std::string write_skipped(std::span<const SkippedProvince> skipped, std::string_view arm = {}) {
  std::string out = arm.empty() ? "province,reason\n" : "";
  for (const auto& s : skipped) {
    std::string reason = s.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    out += arm.empty() ? fmt::format("{},{}\n", s.province, reason)
                       : fmt::format("{},{},{}\n", arm, s.province, reason);
  }
  return out;
}

std::string write_fits(std::span<const ProvinceFit> fits) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : fits) arr.push_back(to_json(f));
  return dump(arr);
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  return p.lexically_relative(base).generic_string();
}

}  // namespace

ArmResult forecast_snapshot(const Snapshot& snapshot, std::span<const MonthlyCount> monthly,
                            const RunConfig& config, const ModelConfig& model, const Date& date,
                            std::uint64_t seed) {
  if (snapshot.empty() && monthly.empty()) {
    throw ValidationError(fmt::format("no data had arrived by {}", format_date(date)));
  }
  const SeriesMap series = build_series(snapshot, monthly, config, analysis_biweek(date));
  FitBatch batch = fit_provinces(series, date, model);
  for (const auto& s : batch.skipped) {
    spdlog::warn("{}: skipping {}: {}", format_date(date), s.province, s.reason);
  }
  if (batch.fits.empty()) {
    throw RuntimeFailure(fmt::format("no province could be fitted for {} ({} skipped)",
                                     format_date(date), batch.skipped.size()));
  }
  SimulationSettings settings = config.simulation;
  settings.seed = seed;
  const TrajectorySet traj = simulate_paths(batch.fits, series, settings);
  ArmResult out;
  out.forecasts = reduce_to_forecast(traj, config.reduce);
  out.skipped = std::move(batch.skipped);
  out.fits = std::move(batch.fits);
  return out;
}

// --- commands ---------------------------------------------------------------

IngestSummary cmd_ingest(const RunConfig& config) {
  if (!config.linelist && !config.monthly) {
    throw ValidationError("config names no linelist or monthly input to ingest");
  }
  std::vector<CaseRecord> records;
  std::vector<MonthlyCount> months;
  if (config.linelist) records = read_linelist(*config.linelist);
  if (config.monthly) months = read_monthly(*config.monthly);

  VersionedStore store = VersionedStore::open(config.store_dir);
  IngestSummary s;
  auto report = store.ingest(records);
  s.ingested = report.ingested;
  s.rejections = std::move(report.rejections);
  auto mreport = store.ingest_monthly(months);
  s.monthly_ingested = mreport.ingested;
  s.monthly_rejections = std::move(mreport.rejections);
  s.store_total = store.size();
  const Snapshot all = store.everything();
  for (const auto& r : all.records()) {
    ++s.by_province_year[{r.province, static_cast<int>(r.onset.year())}];
  }
  return s;
}

fs::path cmd_build_series(const RunConfig& config, std::optional<Date> date,
                          std::optional<fs::path> out) {
  const VersionedStore store = open_existing_store(config);
  const Snapshot snap = date ? store.as_of(*date) : store.everything();
  const AbsoluteBiweek last = date ? analysis_biweek(*date) : last_complete_biweek(snap);
  const auto monthly = store.monthly();
  const SeriesMap series = build_series(snap, monthly, config, last);
  const fs::path path =
      out.value_or(config.output_dir /
                   fmt::format("series-{}.csv", date ? format_date(*date) : std::string("final")));
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_file_atomic(path, write_series(series));
  return path;
}

FitBatch cmd_fit(const RunConfig& config, const Date& date, std::optional<fs::path> out_dir) {
  const VersionedStore store = open_existing_store(config);
  const Snapshot snap = store.as_of(date);
  if (snap.empty()) throw ValidationError(fmt::format("no data had arrived by {}", format_date(date)));
  const auto monthly = store.monthly();
  const SeriesMap series = build_series(snap, monthly, config, analysis_biweek(date));
  FitBatch batch = fit_provinces(series, date, config.model);
  const fs::path dir = out_dir.value_or(config.output_dir / fmt::format("fit-{}", format_date(date)));
  fs::create_directories(dir);
  io::write_file_atomic(dir / "fits.json", write_fits(batch.fits));
  io::write_file_atomic(dir / "skipped.csv", write_skipped(batch.skipped));
  return batch;
}

fs::path forecast_directory(const RunConfig& config, const Date& date) {
  return config.output_dir / fmt::format("forecast-{}", format_date(date));
}

ForecastRun cmd_forecast(const RunConfig& config, const Date& date, std::optional<std::uint64_t> seed,
                         std::optional<fs::path> out_dir) {
  if (!seed) config.require_seed();
  const std::uint64_t used_seed = seed.value_or(config.simulation.seed);
  const VersionedStore store = open_existing_store(config);
  const Snapshot snap = store.as_of(date);
  const auto monthly = store.monthly();
  ArmResult arm = forecast_snapshot(snap, monthly, config, config.model, date, used_seed);

  ForecastRun run;
  run.directory = out_dir.value_or(forecast_directory(config, date));
  nlohmann::json manifest = manifest_base(config, "forecast");
  manifest["analysis_date"] = format_date(date);
  manifest["origin"] = format_biweek(analysis_biweek(date) - config.model.reporting_lag);
  manifest["seed"] = used_seed;
  manifest["snapshot"] = snapshot_json(snap);
  publish(run.directory,
          {{"forecasts.csv", write_forecasts(arm.forecasts)},
           {"fits.json", write_fits(arm.fits)},
           {"skipped.csv", write_skipped(arm.skipped)}},
          manifest);
  run.forecasts = std::move(arm.forecasts);
  run.skipped = std::move(arm.skipped);
  return run;
}

EvaluationRun cmd_evaluate(const RunConfig& config, std::optional<fs::path> out_dir) {
  const auto dates = config.analysis_dates();
  if (dates.empty()) throw ValidationError("schedule contains no analysis dates");

  std::vector<std::string> missing;
  std::vector<ForecastRecord> forecasts;
  std::vector<ForecastRecord> latest;
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& d : dates) {
    const fs::path dir = forecast_directory(config, d);
    const fs::path mpath = dir / "manifest.json";
    if (!fs::exists(mpath)) {
      missing.push_back(mpath.string());
      continue;
    }
    const std::string mtext = io::read_file(mpath);
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(mtext);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(fmt::format("{}: {}", mpath.string(), e.what()));
    }
    if (m.value("command", "") != "forecast" || !m.contains("outputs") ||
        !m.at("outputs").contains("forecasts.csv")) {
      throw ValidationError(fmt::format("{} does not declare forecasts.csv", mpath.string()));
    }
    const fs::path fpath = dir / "forecasts.csv";
    if (!fs::exists(fpath)) {
      missing.push_back(fpath.string());
      continue;
    }
    const std::string ftext = io::read_file(fpath);
    if (io::sha256_hex(ftext) != m.at("outputs").at("forecasts.csv").get<std::string>()) {
      throw ValidationError(fmt::format("{} does not match its manifest", fpath.string()));
    }
    inputs[relative_to(mpath, config.output_dir)] = io::sha256_hex(mtext);
    auto f = read_forecasts(fpath);
    latest = f;
    forecasts.insert(forecasts.end(), f.begin(), f.end());
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  " + m;
    throw ValidationError(fmt::format("{} forecast file(s) missing:{}", missing.size(), list));
  }

  const VersionedStore store = open_existing_store(config);
  const Snapshot truth_snap = store.everything();
  const auto monthly = store.monthly();
  const SeriesMap truth =
      build_series(truth_snap, monthly, config, last_complete_biweek(truth_snap));
  auto scored = score_forecasts(forecasts, truth, config.model.reporting_lag,
                                config.evaluation.baseline_window_years);
  if (scored.rows.empty()) throw ValidationError("no forecast could be scored against the data");

  EvaluationRun run;
  run.directory = out_dir.value_or(config.output_dir / "evaluation");
  run.summary = horizon_summary(scored.rows);
  const auto grid = province_relmae_grid(scored.rows);
  std::string unscored;
  for (const auto& u : scored.unscored) unscored += u + "\n";

  nlohmann::json manifest = manifest_base(config, "evaluate");
  manifest["inputs"] = inputs;
  manifest["truth"] = snapshot_json(truth_snap);
  manifest["scored"] = scored.rows.size();
  manifest["unscored"] = scored.unscored.size();
  publish(run.directory,
          {{"scores.csv", write_scores(scored.rows)},
           {"table1.csv", write_horizon_summary(run.summary)},
           {"fig2_steps.csv", write_step_series(scored.rows, config.evaluation.figure_steps)},
           {"fig3_fan.csv", write_fan_chart(latest, truth, config.evaluation.fan_history_biweeks)},
           {"fig4_relmae.csv", write_relmae_grid(grid)},
           {"unscored.txt", unscored}},
          manifest);
  run.scores = std::move(scored.rows);
  run.unscored = std::move(scored.unscored);
  return run;
}

ExperimentRun cmd_delay_experiment(const RunConfig& config, std::optional<fs::path> out_dir) {
  config.require_seed();
  const auto dates = config.analysis_dates();
  if (dates.empty()) throw ValidationError("schedule contains no analysis dates");
  const int lag = config.model.reporting_lag;

  const VersionedStore store = open_existing_store(config);
  const Snapshot complete = store.everything();
  const auto monthly = store.monthly();
  const auto delayed_records =
      inject_delays(complete.records(), config.experiment.delay, config.experiment.delay_seed);
  VersionedStore delayed;
  const auto report = delayed.ingest(delayed_records);
  if (!report.rejections.empty()) {
    throw RuntimeFailure("delay injection produced records the store rejected");
  }

  ModelConfig full_abs = config.model;
  full_abs.reporting_lag = 0;

  std::vector<ForecastRecord> rt, fd_same, fd_abs;
  std::string skipped = "arm,province,reason\n";
  ExperimentRun run;
  auto append = [](std::vector<ForecastRecord>& to, ArmResult&& arm) {
    to.insert(to.end(), std::make_move_iterator(arm.forecasts.begin()),
              std::make_move_iterator(arm.forecasts.end()));
  };
  std::vector<ForecastRecord> latest_rt;
  for (const auto& d : dates) {
    spdlog::info("delay experiment: {}", format_date(d));
    const std::uint64_t seed = config.simulation.seed;
    auto a = forecast_snapshot(delayed.as_of(d), monthly, config, config.model, d, seed);
    auto b = forecast_snapshot(complete, monthly, config, config.model, d, seed);
    auto c = forecast_snapshot(complete, monthly, config, full_abs, d, seed);
    skipped += write_skipped(a.skipped, "realtime") + write_skipped(b.skipped, "fulldata_same_origin") +
               write_skipped(c.skipped, "fulldata_absolute");
    for (auto* arm : {&a, &b, &c}) {
      run.skipped.insert(run.skipped.end(), arm->skipped.begin(), arm->skipped.end());
    }
    latest_rt = a.forecasts;
    append(rt, std::move(a));
    append(fd_same, std::move(b));
    append(fd_abs, std::move(c));
  }

  const SeriesMap truth = build_series(complete, monthly, config, last_complete_biweek(complete));
  const int window = config.evaluation.baseline_window_years;
  auto s_rt = score_forecasts(rt, truth, lag, window);
  auto s_same = score_forecasts(fd_same, truth, lag, window);
  auto s_abs = score_forecasts(fd_abs, truth, 0, window);
  if (s_rt.rows.empty()) throw ValidationError("no real-time forecast could be scored");

  run.directory = out_dir.value_or(config.output_dir / "delay-experiment");
  run.table1 = horizon_summary(s_rt.rows);
  run.table2 = compare_realtime_fulldata(s_rt.rows, s_same.rows, ComparisonMode::SameOrigin, lag);
  run.table3 = compare_realtime_fulldata(s_rt.rows, s_abs.rows, ComparisonMode::AbsoluteHorizon, lag);

  std::string unpaired;
  for (const auto* t : {&run.table2, &run.table3}) {
    for (const auto& k : t->unpaired_keys) unpaired += fmt::format("{}: {}\n", to_string(t->mode), k);
  }

  nlohmann::json manifest = manifest_base(config, "delay-experiment");
  manifest["seed"] = config.simulation.seed;
  manifest["delay"] = to_json(config.experiment.delay);
  manifest["delay_seed"] = config.experiment.delay_seed;
  manifest["reporting_lag"] = lag;
  manifest["analysis_dates"] = dates.size();
  manifest["complete"] = snapshot_json(complete);
  manifest["unpaired"] = {{"same_origin", {{"realtime", run.table2.unpaired_realtime},
                                           {"fulldata", run.table2.unpaired_fulldata}}},
                          {"absolute_horizon", {{"realtime", run.table3.unpaired_realtime},
                                                {"fulldata", run.table3.unpaired_fulldata}}}};
  publish(run.directory,
          {{"forecasts_realtime.csv", write_forecasts(rt)},
           {"forecasts_fulldata_same_origin.csv", write_forecasts(fd_same)},
           {"forecasts_fulldata_absolute.csv", write_forecasts(fd_abs)},
           {"scores_realtime.csv", write_scores(s_rt.rows)},
           {"scores_fulldata_same_origin.csv", write_scores(s_same.rows)},
           {"scores_fulldata_absolute.csv", write_scores(s_abs.rows)},
           {"table1_realtime.csv", write_horizon_summary(run.table1)},
           {"table2_same_origin.csv", write_comparison(run.table2)},
           {"table3_absolute_horizon.csv", write_comparison(run.table3)},
           {"fig2_steps.csv", write_step_series(s_rt.rows, config.evaluation.figure_steps)},
           {"fig3_fan.csv", write_fan_chart(latest_rt, truth, config.evaluation.fan_history_biweeks)},
           {"fig4_relmae.csv", write_relmae_grid(run.table3.cells)},
           {"skipped.csv", skipped},
           {"unpaired.txt", unpaired}},
          manifest);
  return run;
}

std::size_t cmd_inject_delays(const RunConfig& config, const fs::path& input, const fs::path& output,
                              std::optional<std::uint64_t> seed) {
  const auto records = read_linelist(input);
  const auto delayed =
      inject_delays(records, config.experiment.delay, seed.value_or(config.experiment.delay_seed));
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  io::write_file_atomic(output, write_linelist(delayed));
  return delayed.size();
}

std::size_t cmd_synthesize(const RunConfig& config, const fs::path& output) {
  const auto records = synthesize_outbreaks(config.synthetic);
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  io::write_file_atomic(output, write_linelist(records));
  return records.size();
}

bool ReproduceReport::identical() const {
  return !files.empty() &&
         std::all_of(files.begin(), files.end(), [](const auto& f) { return f.second; });
}

ReproduceReport cmd_reproduce(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) {
    throw ValidationError(fmt::format("manifest '{}' does not exist", manifest_path.string()));
  }
  const std::string original = io::read_file(manifest_path);
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(original);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", manifest_path.string(), e.what()));
  }
  ReproduceReport report;
  report.command = m.at("command").get<std::string>();
  const RunConfig config = load_config(m.at("config").at("path").get<std::string>());
  if (config.sha256() != m.at("config").at("sha256").get<std::string>()) {
    throw ValidationError("the config file has changed since the manifest was written");
  }

  std::random_device entropy;
  const fs::path scratch =
      fs::temp_directory_path() / fmt::format("denguecast-reproduce-{:016x}",
                                              (static_cast<std::uint64_t>(entropy()) << 32) | entropy());
  const fs::path dir = scratch / "run";
  fs::create_directories(scratch);
  try {
    if (report.command == "forecast") {
      cmd_forecast(config, parse_date(m.at("analysis_date").get<std::string>()),
                   m.at("seed").get<std::uint64_t>(), dir);
    } else if (report.command == "evaluate") {
      cmd_evaluate(config, dir);
    } else if (report.command == "delay-experiment") {
      cmd_delay_experiment(config, dir);
    } else {
      throw ValidationError(fmt::format("cannot reproduce command '{}'", report.command));
    }
    for (const auto& [name, sha] : m.at("outputs").items()) {
      const fs::path p = dir / name;
      const bool same = fs::exists(p) && io::sha256_hex(io::read_file(p)) == sha.get<std::string>();
      report.files.emplace_back(name, same);
    }
    report.files.emplace_back("manifest.json", io::read_file(dir / "manifest.json") == original);
  } catch (...) {
    fs::remove_all(scratch);
    throw;
  }
  fs::remove_all(scratch);
  return report;
}

}  // namespace denguecast
