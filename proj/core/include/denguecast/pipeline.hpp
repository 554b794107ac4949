#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "denguecast/config.hpp"
#include "denguecast/evaluation.hpp"
#include "denguecast/province_model.hpp"
#include "denguecast/series.hpp"
#include "denguecast/simulator.hpp"
#include "denguecast/store.hpp"

namespace denguecast {

inline constexpr std::string_view kVersion = "0.1.0";

/// Biweekly series for every province known to `snapshot`, ending at `last`.
/// Monthly counts fill the years before the line list starts.
SeriesMap build_series(const Snapshot& snapshot, std::span<const MonthlyCount> monthly,
                       const RunConfig& config, AbsoluteBiweek last);

/// Last biweek whose days are all on or before the latest onset.
AbsoluteBiweek last_complete_biweek(const Snapshot& snapshot);

struct ArmResult {
  std::vector<ForecastRecord> forecasts;
  std::vector<SkippedProvince> skipped;
  std::vector<ProvinceFit> fits;
};

/// Series, fits, joint simulation and reduction for one analysis date.
ArmResult forecast_snapshot(const Snapshot& snapshot, std::span<const MonthlyCount> monthly,
                            const RunConfig& config, const ModelConfig& model, const Date& date,
                            std::uint64_t seed);

struct IngestSummary {
  std::size_t ingested = 0;
  std::vector<Rejection> rejections;
  std::size_t monthly_ingested = 0;
  std::vector<Rejection> monthly_rejections;
  std::size_t store_total = 0;
  std::map<std::pair<std::string, int>, std::size_t> by_province_year;  // (province, onset year)
};

IngestSummary cmd_ingest(const RunConfig& config);

/// Writes the series available on `date` (or the complete data) as delimited text.
std::filesystem::path cmd_build_series(const RunConfig& config, std::optional<Date> date,
                                       std::optional<std::filesystem::path> out);

/// Writes fits.json and skipped.csv for one analysis date.
FitBatch cmd_fit(const RunConfig& config, const Date& date,
                 std::optional<std::filesystem::path> out_dir);

struct ForecastRun {
  std::filesystem::path directory;
  std::vector<ForecastRecord> forecasts;
  std::vector<SkippedProvince> skipped;
};

/// Default output directory of a forecast: <output_dir>/forecast-<date>.
std::filesystem::path forecast_directory(const RunConfig& config, const Date& date);

/// Forecasts one analysis date into a directory holding forecasts.csv,
/// fits.json, skipped.csv and manifest.json. The directory appears only once
/// every file is complete.
ForecastRun cmd_forecast(const RunConfig& config, const Date& date,
                         std::optional<std::uint64_t> seed = std::nullopt,
                         std::optional<std::filesystem::path> out_dir = std::nullopt);

struct EvaluationRun {
  std::filesystem::path directory;
  std::vector<ScoreRow> scores;
  std::vector<HorizonSummary> summary;
  std::vector<std::string> unscored;
};

/// Scores the forecasts declared by each scheduled date's manifest against
/// the complete data. Missing or altered forecast files are errors.
EvaluationRun cmd_evaluate(const RunConfig& config,
                           std::optional<std::filesystem::path> out_dir = std::nullopt);

struct ExperimentRun {
  std::filesystem::path directory;
  std::vector<HorizonSummary> table1;
  ComparisonTable table2;  // same origin
  ComparisonTable table3;  // absolute horizon
  std::vector<SkippedProvince> skipped;
};

/// Real-time arm (delays injected, reporting lag l) against full-data arms at
/// the same origin (lag l) and at the analysis date (lag 0). All arms at one
/// analysis date share the simulation seed.
ExperimentRun cmd_delay_experiment(const RunConfig& config,
                                   std::optional<std::filesystem::path> out_dir = std::nullopt);

/// Rewrites a line list with arrival dates drawn from the configured delay model.
std::size_t cmd_inject_delays(const RunConfig& config, const std::filesystem::path& input,
                              const std::filesystem::path& output,
                              std::optional<std::uint64_t> seed = std::nullopt);

/// Writes a synthetic outbreak line list.
std::size_t cmd_synthesize(const RunConfig& config, const std::filesystem::path& output);

struct ReproduceReport {
  std::string command;
  std::vector<std::pair<std::string, bool>> files;  // output name, identical
  bool identical() const;
};

/// Re-runs the command recorded in a manifest into a scratch directory and
/// compares every declared output byte for byte.
ReproduceReport cmd_reproduce(const std::filesystem::path& manifest);

}  // namespace denguecast
