#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "denguecast/calendar.hpp"
#include "denguecast/pgam.hpp"
#include "denguecast/series.hpp"
#include "denguecast/spline_basis.hpp"

namespace denguecast {

struct ModelConfig {
  int correlated_count = 3;          // J
  std::vector<int> lags{1};          // growth-ratio lags, each >= 1
  int reporting_lag = 6;             // biweeks dropped before the analysis biweek
  bool include_self = false;         // let province i occupy one of the J slots
  int smoothing_window = 3;          // 1 disables pre-fit smoothing
  bool smooth_covariate_series = true;
  int cyclic_knots = 8;
  int trend_knots = 5;
  double offset_floor = 0.5;
  int min_history_years = 5;         // response rows after truncation
  int min_overlap_years = 3;         // common window for correlation ranking
  LambdaGrid lambda_grid;
  bool reselect_lambda = true;
  AliasMap aliases;

  void validate() const;
  int max_lag() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// A smooth term as it was fitted: its basis, the centering constraint and
/// the scale applied to its penalty before smoothing-parameter selection.
struct SmoothTerm {
  BasisSpec spec;
  Eigen::MatrixXd constraint;
  double penalty_scale = 1.0;

  SmoothTerm() = default;
  SmoothTerm(BasisSpec s, Eigen::MatrixXd z, double scale);
  Eigen::RowVectorXd row(double x) const;

 private:
  std::optional<CubicSplineBasis> basis_;
};

/// log((current + 1) / (previous + 1)); the +1 keeps the ratio defined when
/// counts are zero. Computed as a difference of logs so that swapping the
/// arguments negates the result exactly.
inline double growth_ratio(double current, double previous) {
  return std::log(current + 1.0) - std::log(previous + 1.0);
}

/// Ranks provinces j != i by Spearman correlation with i over their common
/// window and returns the top `count`; ties go to the lower province code.
/// With `include_self`, i is ranked too (and comes first).
std::vector<std::string> select_correlated(const SeriesMap& series, const std::string& province,
                                           int count, int min_overlap_biweeks = 78,
                                           bool include_self = false);

/// Growth-ratio covariates at time t, ordered province-major then lag:
/// for each j in `correlated`, for each k in `lags`:
///   log((y[t-k, j] + 1) / (y[t-k-1, j] + 1)).
std::vector<double> build_covariates(const SeriesMap& series,
                                     std::span<const std::string> correlated,
                                     AbsoluteBiweek t, std::span<const int> lags);

/// Series as the model sees them at one analysis date: truncated for the
/// reporting lag, then smoothed.
struct ModelInputs {
  AbsoluteBiweek origin;  // last retained biweek
  SeriesMap truncated;    // raw counts
  SeriesMap response;     // smoothed (or raw when smoothing is off)
  SeriesMap covariate;    // series feeding the growth ratios
};

ModelInputs prepare_inputs(const SeriesMap& raw, const Date& analysis_date, const ModelConfig& config);

struct ProvinceFit {
  std::string province;
  Date analysis_date;
  std::vector<std::string> correlated;
  AbsoluteBiweek train_first;  // first response row
  AbsoluteBiweek train_last;   // last response row == forecast origin
  FitResult fit;
  ModelConfig config;
  SmoothTerm seasonal;
  SmoothTerm trend;

  bool usable() const { return fit.converged; }
  std::size_t covariate_count() const { return correlated.size() * config.lags.size(); }

  Eigen::RowVectorXd design_row(AbsoluteBiweek t, std::span<const double> covariates) const;
  /// log rate without covariates: intercept + seasonal + trend.
  double baseline_log_rate(AbsoluteBiweek t) const;
  double log_rate(AbsoluteBiweek t, std::span<const double> covariates) const;
  /// Centered seasonal effect at a position in [0, 26).
  double seasonal_effect(double position) const;
  Eigen::VectorXd covariate_coefficients() const;
};

nlohmann::json to_json(const ProvinceFit& f);
ProvinceFit province_fit_from_json(const nlohmann::json& j);

/// Builds the penalized Poisson problem for province i from prepared inputs.
struct ProvinceProblem {
  FitProblem problem;
  std::vector<std::string> correlated;
  AbsoluteBiweek train_first;
  AbsoluteBiweek train_last;
  SmoothTerm seasonal;
  SmoothTerm trend;
};

ProvinceProblem build_province_problem(const std::string& province, const ModelInputs& inputs,
                                       const ModelConfig& config);

/// Truncate, smooth, select correlated provinces, build the spline and
/// covariate blocks, choose smoothing parameters by GCV and fit.
/// `fixed_lambdas` skips selection when `config.reselect_lambda` is false.
ProvinceFit fit_province(const std::string& province, const SeriesMap& raw,
                         const Date& analysis_date, const ModelConfig& config,
                         const std::vector<double>* fixed_lambdas = nullptr);

struct SkippedProvince {
  std::string province;
  std::string reason;
};

struct FitBatch {
  std::vector<ProvinceFit> fits;
  std::vector<SkippedProvince> skipped;
};

/// Fits every province with enough history. Provinces whose fit is unusable
/// are dropped and the remaining fits that relied on them are redone, so the
/// batch is closed under the correlated-province relation.
FitBatch fit_provinces(const SeriesMap& raw, const Date& analysis_date, const ModelConfig& config);

}  // namespace denguecast
