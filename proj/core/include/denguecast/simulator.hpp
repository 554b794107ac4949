#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "denguecast/calendar.hpp"
#include "denguecast/province_model.hpp"
#include "denguecast/series.hpp"

namespace denguecast {

struct SimulationSettings {
  int horizon = 10;
  int n_sims = 2000;
  std::uint64_t seed = 0;
  double explosive_cap = 1e7;  // expected count above which a trajectory is flagged

  void validate() const;
};

/// Simulated counts indexed (sim, province, step). Steps are 1-based in the
/// accessors; step h targets origin + h.
struct TrajectorySet {
  Date analysis_date;
  AbsoluteBiweek origin;
  int horizon = 0;
  int n_sims = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> provinces;
  std::vector<double> counts;           // flat, sim-major
  std::vector<unsigned char> explosive;  // (sim, province)

  std::size_t province_count() const { return provinces.size(); }
  std::size_t index(int sim, std::size_t province, int step) const {
    return (static_cast<std::size_t>(sim) * provinces.size() + province) *
               static_cast<std::size_t>(horizon) +
           static_cast<std::size_t>(step - 1);
  }
  double count(int sim, std::size_t province, int step) const {
    return counts[index(sim, province, step)];
  }
  bool is_explosive(int sim, std::size_t province) const {
    return explosive[static_cast<std::size_t>(sim) * provinces.size() + province] != 0;
  }
  /// All simulated values of one (province, step) cell.
  std::vector<double> cell(std::size_t province, int step) const;
  double explosive_fraction(std::size_t province) const;
};

/// Jointly simulates every fitted province forward from the common origin.
///
/// At each step all provinces compute their expected count from the state
/// after the previous step, then all draw. Inside the training window the
/// offset and covariates use the series the model was fitted on; past the
/// origin they use a trailing moving average (window = the model's smoothing
/// window) over observed and simulated counts. Simulation s uses its own
/// generator seeded from (seed, s), so results do not depend on how
/// simulations are scheduled.
TrajectorySet simulate_paths(std::span<const ProvinceFit> fits, const SeriesMap& raw,
                             const SimulationSettings& settings);

/// One Poisson draw; means above 1e9 use the normal approximation and a
/// non-finite mean yields +infinity.
double draw_poisson(double mean, std::mt19937_64& rng);

enum class PointReduction { Median, Mean };

struct ReduceOptions {
  std::vector<double> levels{0.95};
  PointReduction point = PointReduction::Median;
};

struct Interval {
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
};

struct ForecastRecord {
  std::string province;
  Date analysis_date;
  AbsoluteBiweek origin;
  int step = 1;
  AbsoluteBiweek target;
  double point = 0.0;
  std::vector<Interval> intervals;
  int n_sims = 0;
  std::uint64_t seed = 0;
  double explosive_fraction = 0.0;

  const Interval& interval(double level) const;
};

/// Point forecast and type-7 quantile intervals per (province, step).
/// Explosive trajectories are included.
std::vector<ForecastRecord> reduce_to_forecast(const TrajectorySet& traj,
                                               const ReduceOptions& options = {});

/// Unsigned 64-bit seed from decimal text. Throws ParseError.
std::uint64_t parse_seed(std::string_view text);

/// Column name for a level, e.g. 0.95 -> "95".
std::string level_label(double level);

/// Delimited text with one column pair per interval level; the default
/// 95% set yields
/// province,analysis_date,origin,step,target_biweek,point,lo95,hi95,n_sims,seed,explosive_fraction
std::string write_forecasts(std::span<const ForecastRecord> records);
std::vector<ForecastRecord> parse_forecasts(std::span<const std::string> lines,
                                            std::string_view source = "<input>");
std::vector<ForecastRecord> read_forecasts(const std::filesystem::path& path);

}  // namespace denguecast
