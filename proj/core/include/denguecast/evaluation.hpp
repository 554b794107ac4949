#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "denguecast/calendar.hpp"
#include "denguecast/series.hpp"
#include "denguecast/simulator.hpp"

namespace denguecast {

/// One forecast matched with the observed count and the seasonal baseline.
struct ScoreRow {
  std::string province;
  Date analysis_date;
  AbsoluteBiweek origin;
  int horizon = 1;           // biweeks after the origin
  int absolute_horizon = 1;  // biweeks after the analysis biweek: horizon - lag
  AbsoluteBiweek target;
  double predicted = 0.0;
  double observed = 0.0;
  double baseline = 0.0;
  double lower = 0.0;  // 95% interval
  double upper = 0.0;
};

/// Median of the same-biweek values in up to `window_years` preceding years.
/// Throws ValidationError if none of those years is covered.
double seasonal_baseline(const BiweekSeries& history, AbsoluteBiweek target,
                         int window_years = 10);

struct ScoringResult {
  std::vector<ScoreRow> rows;
  std::vector<std::string> unscored;  // forecasts with no truth or baseline, with the reason
};

/// Scores forecasts against `truth`; the baseline is computed from the same
/// series. `lag` converts horizons to absolute horizons.
ScoringResult score_forecasts(std::span<const ForecastRecord> forecasts, const SeriesMap& truth,
                              int lag, int baseline_window_years = 10, double level = 0.95);

double mae(std::span<const double> predicted, std::span<const double> observed);
/// Mean |predicted - observed|.
double mae(std::span<const ScoreRow> rows);
/// Mean |baseline - observed|.
double baseline_mae(std::span<const ScoreRow> rows);

/// Ratio of two MAEs. A zero denominator leaves the ratio undefined; such
/// values are flagged and kept out of quantile summaries.
struct RelativeMae {
  double value = 0.0;
  bool defined = true;
};

RelativeMae rel_mae(double model_mae, double reference_mae);
/// Model MAE over baseline MAE for the same rows.
RelativeMae rel_mae(std::span<const ScoreRow> rows);

/// Fraction of rows with lower <= observed <= upper. Throws on empty input.
double coverage(std::span<const ScoreRow> rows);
/// Spearman correlation of predicted and observed. Throws on empty input.
double rank_correlation(std::span<const ScoreRow> rows);

inline constexpr double kSummaryProbs[] = {0.05, 0.25, 0.50, 0.75, 0.95};

struct HorizonSummary {
  int horizon = 1;
  std::size_t n = 0;
  double spearman_rho = 0.0;
  double coverage_95 = 0.0;
  double mae = 0.0;                       // pooled model MAE
  std::vector<double> relmae_quantiles;  // province-level relative MAE, one per prob
  std::size_t provinces = 0;              // provinces in the quantiles
  std::size_t excluded = 0;               // provinces with an undefined relative MAE
};

/// One row per horizon: pooled Spearman, pooled coverage and quantiles of the
/// province-level relative MAE against the seasonal baseline.
std::vector<HorizonSummary> horizon_summary(std::span<const ScoreRow> rows,
                                            std::span<const double> probs = kSummaryProbs);

enum class ComparisonMode { SameOrigin, AbsoluteHorizon };

std::string_view to_string(ComparisonMode m);
ComparisonMode parse_comparison_mode(std::string_view text);

struct ComparisonRow {
  int horizon = 1;  // step for same-origin, absolute horizon otherwise
  std::size_t pairs = 0;
  std::vector<double> relmae_quantiles;
  std::size_t provinces = 0;
  std::size_t excluded = 0;
};

struct ComparisonTable {
  ComparisonMode mode = ComparisonMode::SameOrigin;
  std::vector<ComparisonRow> rows;
  std::vector<double> probs;
  std::size_t unpaired_realtime = 0;
  std::size_t unpaired_fulldata = 0;
  std::vector<std::string> unpaired_keys;
  /// Province-level relative MAEs, (province, horizon, value, defined).
  struct Cell {
    std::string province;
    int horizon = 1;
    RelativeMae rel;
  };
  std::vector<Cell> cells;
};

/// Pairs real-time and full-data scores and reports quantiles of the
/// province-level relative MAE (real-time over full-data).
///   same_origin:      keys (province, origin, horizon)
///   absolute_horizon: real-time horizon h + lag with full-data horizon h at
///                     the same (province, analysis date, target)
ComparisonTable compare_realtime_fulldata(std::span<const ScoreRow> realtime,
                                          std::span<const ScoreRow> fulldata, ComparisonMode mode,
                                          int lag, std::span<const double> probs = kSummaryProbs);

/// Province-level relative MAE against the baseline, for every (province,
/// horizon) cell.
std::vector<ComparisonTable::Cell> province_relmae_grid(std::span<const ScoreRow> rows);

// Delimited text outputs.
std::string write_scores(std::span<const ScoreRow> rows);
std::vector<ScoreRow> parse_scores(std::span<const std::string> lines,
                                   std::string_view source = "<input>");
std::string write_horizon_summary(std::span<const HorizonSummary> rows,
                                  std::span<const double> probs = kSummaryProbs);
std::string write_comparison(const ComparisonTable& table);
/// Step-h observed and predicted series per province.
std::string write_step_series(std::span<const ScoreRow> rows, std::span<const int> steps);
/// Fan chart: observed history plus every forecast interval.
std::string write_fan_chart(std::span<const ForecastRecord> forecasts, const SeriesMap& truth,
                            int history_biweeks = 26);
std::string write_relmae_grid(std::span<const ComparisonTable::Cell> cells);

}  // namespace denguecast
