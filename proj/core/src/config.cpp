#include "denguecast/config.hpp"

#include <set>

#include <fmt/format.h>

#include "denguecast/error.hpp"
#include "denguecast/text_io.hpp"

namespace denguecast {

namespace {

void check_keys(const nlohmann::json& j, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(fmt::format("config: '{}' must be an object", section));
  const std::set<std::string_view> ok(allowed);
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) {
      throw ValidationError(fmt::format("config: unknown key '{}' in '{}'", key, section));
    }
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

template <typename T>
T get(const nlohmann::json& j, std::string_view key, std::string_view section) {
  try {
    return j.at(std::string(key)).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("config: '{}.{}': {}", section, key, e.what()));
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, std::string_view key, std::string_view section, T& out) {
  if (j.contains(std::string(key))) out = get<T>(j, key, section);
}

}  // namespace

nlohmann::json to_json(const DelayModel& m) {
  return {{"family", to_string(m.family)},     {"median_weeks", m.median_weeks},
          {"p75_weeks", m.p75_weeks},          {"point_weeks", m.point_weeks},
          {"sample_weeks", m.sample_weeks},    {"min_weeks", m.min_weeks},
          {"max_weeks", m.max_weeks}};
}

DelayModel delay_model_from_json(const nlohmann::json& j) {
  check_keys(j, "experiment.delay",
             {"family", "median_weeks", "p75_weeks", "point_weeks", "sample_weeks", "min_weeks",
              "max_weeks"});
  DelayModel m;
  if (j.contains("family")) m.family = parse_delay_family(get<std::string>(j, "family", "delay"));
  read_opt(j, "median_weeks", "delay", m.median_weeks);
  read_opt(j, "p75_weeks", "delay", m.p75_weeks);
  read_opt(j, "point_weeks", "delay", m.point_weeks);
  read_opt(j, "sample_weeks", "delay", m.sample_weeks);
  read_opt(j, "min_weeks", "delay", m.min_weeks);
  read_opt(j, "max_weeks", "delay", m.max_weeks);
  m.validate();
  return m;
}

std::vector<Date> RunConfig::analysis_dates() const {
  return explicit_dates.empty() ? denguecast::analysis_dates(schedule) : explicit_dates;
}

std::string RunConfig::sha256() const { return io::sha256_hex(text); }

void RunConfig::require_seed() const {
  if (!has_seed) throw ValidationError("config: simulation.seed is required for this command");
}

RunConfig load_config(const std::filesystem::path& path, bool require_inputs) {
  if (!std::filesystem::exists(path)) {
    throw ValidationError(fmt::format("config file '{}' does not exist", path.string()));
  }
  return parse_config(io::read_file(path), std::filesystem::absolute(path), require_inputs);
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& source,
                       bool require_inputs) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", source.string(), e.what()));
  }
  check_keys(j, "config",
             {"store_dir", "output_dir", "linelist", "monthly", "aliases", "series", "model",
              "schedule", "simulation", "evaluation", "experiment", "synthetic"});

  RunConfig c;
  c.source = source;
  c.text = text;
  const auto base = source.parent_path();
  c.store_dir = resolve(base, j.value("store_dir", std::string("store")));
  c.output_dir = resolve(base, j.value("output_dir", std::string("output")));
  if (j.contains("linelist")) c.linelist = resolve(base, get<std::string>(j, "linelist", "config"));
  if (j.contains("monthly")) c.monthly = resolve(base, get<std::string>(j, "monthly", "config"));

  if (j.contains("model")) {
    check_keys(j.at("model"), "model",
               {"correlated_count", "lags", "reporting_lag", "include_self", "smoothing_window",
                "smooth_covariate_series", "cyclic_knots", "trend_knots", "offset_floor",
                "min_history_years", "min_overlap_years", "lambda_grid", "reselect_lambda"});
    try {
      c.model = model_config_from_json(j.at("model"));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("config: model: {}", e.what()));
    }
  }
  c.model.aliases = j.value("aliases", AliasMap{});

  if (j.contains("series")) {
    const auto& s = j.at("series");
    check_keys(s, "series", {"first_year", "linelist_first_year", "diagnosis"});
    read_opt(s, "first_year", "series", c.series.first_year);
    if (s.contains("linelist_first_year")) {
      c.series.linelist_first_year = get<int>(s, "linelist_first_year", "series");
    }
    if (s.contains("diagnosis")) {
      const auto d = get<std::string>(s, "diagnosis", "series");
      c.series.diagnosis = d == "all" ? std::nullopt : std::optional(parse_diagnosis(d));
    }
    if (c.series.linelist_first_year && *c.series.linelist_first_year < c.series.first_year) {
      throw ValidationError("config: series.linelist_first_year precedes series.first_year");
    }
  }

  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    check_keys(s, "schedule", {"first_year", "last_year", "exclusions", "dates"});
    read_opt(s, "first_year", "schedule", c.schedule.first_year);
    read_opt(s, "last_year", "schedule", c.schedule.last_year);
    for (const auto& e : s.value("exclusions", std::vector<std::string>{})) {
      c.schedule.exclusions.insert(from_absolute(parse_biweek(e)));
    }
    for (const auto& d : s.value("dates", std::vector<std::string>{})) {
      c.explicit_dates.push_back(parse_date(d));
    }
  }

  if (j.contains("simulation")) {
    const auto& s = j.at("simulation");
    check_keys(s, "simulation", {"horizon", "n_sims", "seed", "explosive_cap", "levels", "point"});
    read_opt(s, "horizon", "simulation", c.simulation.horizon);
    read_opt(s, "n_sims", "simulation", c.simulation.n_sims);
    read_opt(s, "explosive_cap", "simulation", c.simulation.explosive_cap);
    if (s.contains("seed")) {
      if (!s.at("seed").is_number_unsigned()) {
        throw ValidationError("config: simulation.seed must be an unsigned 64-bit integer");
      }
      c.simulation.seed = get<std::uint64_t>(s, "seed", "simulation");
      c.has_seed = true;
    }
    read_opt(s, "levels", "simulation", c.reduce.levels);
    if (s.contains("point")) {
      const auto p = get<std::string>(s, "point", "simulation");
      if (p == "median") {
        c.reduce.point = PointReduction::Median;
      } else if (p == "mean") {
        c.reduce.point = PointReduction::Mean;
      } else {
        throw ValidationError(fmt::format("config: simulation.point must be median or mean, got '{}'", p));
      }
    }
    c.simulation.validate();
    if (std::find_if(c.reduce.levels.begin(), c.reduce.levels.end(),
                     [](double l) { return std::abs(l - 0.95) < 1e-12; }) == c.reduce.levels.end()) {
      throw ValidationError("config: simulation.levels must include 0.95");
    }
  }

  if (j.contains("evaluation")) {
    const auto& e = j.at("evaluation");
    check_keys(e, "evaluation", {"baseline_window_years", "figure_steps", "fan_history_biweeks"});
    read_opt(e, "baseline_window_years", "evaluation", c.evaluation.baseline_window_years);
    read_opt(e, "figure_steps", "evaluation", c.evaluation.figure_steps);
    read_opt(e, "fan_history_biweeks", "evaluation", c.evaluation.fan_history_biweeks);
    if (c.evaluation.baseline_window_years < 1) {
      throw ValidationError("config: evaluation.baseline_window_years must be >= 1");
    }
  }

  if (j.contains("experiment")) {
    const auto& e = j.at("experiment");
    check_keys(e, "experiment", {"delay", "delay_seed"});
    if (e.contains("delay")) c.experiment.delay = delay_model_from_json(e.at("delay"));
    if (e.contains("delay_seed") && !e.at("delay_seed").is_number_unsigned()) {
      throw ValidationError("config: experiment.delay_seed must be an unsigned 64-bit integer");
    }
    read_opt(e, "delay_seed", "experiment", c.experiment.delay_seed);
  }

  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    check_keys(s, "synthetic",
               {"provinces", "start_year", "years", "mean_level", "seasonal_amplitude", "year_sd",
                "dhf_fraction", "seed"});
    read_opt(s, "provinces", "synthetic", c.synthetic.provinces);
    read_opt(s, "start_year", "synthetic", c.synthetic.start_year);
    read_opt(s, "years", "synthetic", c.synthetic.years);
    read_opt(s, "mean_level", "synthetic", c.synthetic.mean_level);
    read_opt(s, "seasonal_amplitude", "synthetic", c.synthetic.seasonal_amplitude);
    read_opt(s, "year_sd", "synthetic", c.synthetic.year_sd);
    read_opt(s, "dhf_fraction", "synthetic", c.synthetic.dhf_fraction);
    read_opt(s, "seed", "synthetic", c.synthetic.seed);
  }

  if (require_inputs) {
    for (const auto& p : {c.linelist, c.monthly}) {
      if (p && !std::filesystem::exists(*p)) {
        throw ValidationError(fmt::format("config: input file '{}' does not exist", p->string()));
      }
    }
  }
  return c;
}

}  // namespace denguecast
