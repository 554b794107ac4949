#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "denguecast/calendar.hpp"
#include "denguecast/province_model.hpp"
#include "denguecast/simulator.hpp"
#include "denguecast/store.hpp"
#include "denguecast/synthetic.hpp"

namespace denguecast {

struct SeriesSettings {
  int first_year = 1968;                  // first biweek of every series
  std::optional<int> linelist_first_year;  // earlier biweeks come from monthly counts
  std::optional<Diagnosis> diagnosis = Diagnosis::DHF;  // nullopt counts every record
};

struct EvaluationSettings {
  int baseline_window_years = 10;
  std::vector<int> figure_steps{1, 2, 4, 6};
  int fan_history_biweeks = 26;
};

struct ExperimentSettings {
  DelayModel delay;
  std::uint64_t delay_seed = 0;
};

/// Everything a run needs, from one JSON file. Relative paths resolve
/// against the directory holding the file.
struct RunConfig {
  std::filesystem::path source;  // the config file itself
  std::string text;              // its exact bytes, for hashing
  std::filesystem::path store_dir;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> linelist;
  std::optional<std::filesystem::path> monthly;
  SeriesSettings series;
  ModelConfig model;  // carries the province alias map
  AnalysisSchedule schedule;
  std::vector<Date> explicit_dates;  // overrides the schedule when non-empty
  SimulationSettings simulation;
  bool has_seed = false;
  ReduceOptions reduce;
  EvaluationSettings evaluation;
  ExperimentSettings experiment;
  OutbreakSpec synthetic;

  std::vector<Date> analysis_dates() const;
  std::string sha256() const;
  /// Throws ValidationError unless a seed was configured.
  void require_seed() const;
};

/// Parses and validates a config file. With `require_inputs`, every
/// configured input file must already exist.
RunConfig load_config(const std::filesystem::path& path, bool require_inputs = true);
RunConfig parse_config(const std::string& text, const std::filesystem::path& source,
                       bool require_inputs = true);

nlohmann::json to_json(const DelayModel& m);
DelayModel delay_model_from_json(const nlohmann::json& j);

}  // namespace denguecast
