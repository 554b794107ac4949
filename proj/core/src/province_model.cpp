#include "denguecast/province_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "denguecast/error.hpp"
#include "denguecast/stats.hpp"

namespace denguecast {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ParseError("ragged matrix in fit record");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

nlohmann::json to_json(const SmoothTerm& s) {
  return {{"kind", to_string(s.spec.kind)},
          {"knots", s.spec.knots},
          {"period", s.spec.period},
          {"penalty_scale", s.penalty_scale},
          {"constraint", matrix_to_json(s.constraint)}};
}

SmoothTerm smooth_term_from_json(const nlohmann::json& j) {
  BasisSpec spec{parse_basis_kind(j.at("kind").get<std::string>()),
                 j.at("knots").get<std::vector<double>>(), j.at("period").get<double>()};
  return SmoothTerm(std::move(spec), matrix_from_json(j.at("constraint")),
                    j.at("penalty_scale").get<double>());
}

/// Scales a penalty so that its size is comparable to the block's X'X; the
/// smoothing-parameter grid is then meaningful irrespective of knot spacing.
double penalty_scale_for(const Eigen::MatrixXd& design, const Eigen::MatrixXd& penalty) {
  const double s = penalty.norm();
  if (s == 0.0) return 1.0;
  return (design.transpose() * design).norm() / s;
}

}  // namespace

// --- ModelConfig ------------------------------------------------------------

void ModelConfig::validate() const {
  if (correlated_count < 0) throw ValidationError("model: correlated_count must be >= 0");
  if (lags.empty() && correlated_count > 0) {
    throw ValidationError("model: lag set must be non-empty when correlated_count > 0");
  }
  for (int k : lags) {
    if (k < 1) throw ValidationError("model: every lag must be >= 1");
  }
  if (reporting_lag < 0) throw ValidationError("model: reporting_lag must be >= 0");
  if (smoothing_window < 1 || smoothing_window % 2 == 0) {
    throw ValidationError("model: smoothing_window must be odd and >= 1");
  }
  if (cyclic_knots < 4) throw ValidationError("model: cyclic_knots must be >= 4");
  if (trend_knots < 3) throw ValidationError("model: trend_knots must be >= 3");
  if (!(offset_floor > 0.0)) throw ValidationError("model: offset_floor must be positive");
  if (min_history_years < 1) throw ValidationError("model: min_history_years must be >= 1");
  if (min_overlap_years < 1) throw ValidationError("model: min_overlap_years must be >= 1");
  lambda_grid.values();
}

int ModelConfig::max_lag() const {
  return lags.empty() ? 0 : *std::max_element(lags.begin(), lags.end());
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"correlated_count", c.correlated_count},
          {"lags", c.lags},
          {"reporting_lag", c.reporting_lag},
          {"include_self", c.include_self},
          {"smoothing_window", c.smoothing_window},
          {"smooth_covariate_series", c.smooth_covariate_series},
          {"cyclic_knots", c.cyclic_knots},
          {"trend_knots", c.trend_knots},
          {"offset_floor", c.offset_floor},
          {"min_history_years", c.min_history_years},
          {"min_overlap_years", c.min_overlap_years},
          {"lambda_grid",
           {{"min", c.lambda_grid.min},
            {"max", c.lambda_grid.max},
            {"points", c.lambda_grid.points},
            {"max_sweeps", c.lambda_grid.max_sweeps}}},
          {"reselect_lambda", c.reselect_lambda},
          {"aliases", c.aliases}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.correlated_count = j.value("correlated_count", c.correlated_count);
  c.lags = j.value("lags", c.lags);
  c.reporting_lag = j.value("reporting_lag", c.reporting_lag);
  c.include_self = j.value("include_self", c.include_self);
  c.smoothing_window = j.value("smoothing_window", c.smoothing_window);
  c.smooth_covariate_series = j.value("smooth_covariate_series", c.smooth_covariate_series);
  c.cyclic_knots = j.value("cyclic_knots", c.cyclic_knots);
  c.trend_knots = j.value("trend_knots", c.trend_knots);
  c.offset_floor = j.value("offset_floor", c.offset_floor);
  c.min_history_years = j.value("min_history_years", c.min_history_years);
  c.min_overlap_years = j.value("min_overlap_years", c.min_overlap_years);
  if (j.contains("lambda_grid")) {
    const auto& g = j.at("lambda_grid");
    c.lambda_grid.min = g.value("min", c.lambda_grid.min);
    c.lambda_grid.max = g.value("max", c.lambda_grid.max);
    c.lambda_grid.points = g.value("points", c.lambda_grid.points);
    c.lambda_grid.max_sweeps = g.value("max_sweeps", c.lambda_grid.max_sweeps);
  }
  c.reselect_lambda = j.value("reselect_lambda", c.reselect_lambda);
  c.aliases = j.value("aliases", c.aliases);
  c.validate();
  return c;
}

// --- SmoothTerm -------------------------------------------------------------

SmoothTerm::SmoothTerm(BasisSpec s, Eigen::MatrixXd z, double scale)
    : spec(std::move(s)), constraint(std::move(z)), penalty_scale(scale), basis_(spec) {
  if (constraint.rows() != basis_->dimension()) {
    throw ValidationError("smooth term: constraint does not match basis dimension");
  }
}

Eigen::RowVectorXd SmoothTerm::row(double x) const {
  if (!basis_) throw ValidationError("smooth term is not initialized");
  return basis_->row(x) * constraint;
}

// --- correlated provinces and covariates ------------------------------------

std::vector<std::string> select_correlated(const SeriesMap& series, const std::string& province,
                                           int count, int min_overlap_biweeks, bool include_self) {
  if (count <= 0) return {};
  auto self_it = series.find(province);
  if (self_it == series.end() || self_it->second.empty()) {
    throw ValidationError(fmt::format("select_correlated: no series for province '{}'", province));
  }
  const auto& self = self_it->second;

  struct Candidate {
    std::string code;
    double rho;
  };
  std::vector<Candidate> ranked;
  std::vector<std::string> usable;
  for (const auto& [code, other] : series) {
    if (code == province && !include_self) continue;
    if (other.empty()) continue;
    const AbsoluteBiweek first = std::max(self.start, other.start);
    const AbsoluteBiweek last = std::min(self.last(), other.last());
    if (last - first + 1 < min_overlap_biweeks) continue;
    const auto a = self.slice(first, last);
    const auto b = other.slice(first, last);
    ranked.push_back({code, code == province ? 1.0 : stats::spearman(a.values, b.values)});
    usable.push_back(code);
  }
  if (static_cast<int>(ranked.size()) < count) {
    std::string list;
    for (const auto& u : usable) list += (list.empty() ? "" : ", ") + u;
    throw ValidationError(fmt::format(
        "select_correlated: province '{}' needs {} correlated provinces with >= {} biweeks of "
        "overlap; usable: [{}]",
        province, count, min_overlap_biweeks, list));
  }
  std::stable_sort(ranked.begin(), ranked.end(), [&](const Candidate& a, const Candidate& b) {
    const bool a_self = include_self && a.code == province;
    const bool b_self = include_self && b.code == province;
    if (a_self != b_self) return a_self;
    if (a.rho != b.rho) return a.rho > b.rho;
    return a.code < b.code;
  });
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) out.push_back(ranked[static_cast<std::size_t>(i)].code);
  return out;
}

std::vector<double> build_covariates(const SeriesMap& series,
                                     std::span<const std::string> correlated, AbsoluteBiweek t,
                                     std::span<const int> lags) {
  std::vector<double> row;
  row.reserve(correlated.size() * lags.size());
  for (const auto& code : correlated) {
    auto it = series.find(code);
    if (it == series.end()) {
      throw ValidationError(fmt::format("build_covariates: no series for '{}'", code));
    }
    for (int k : lags) {
      const AbsoluteBiweek now = t - k;
      const AbsoluteBiweek before = t - k - 1;
      if (!it->second.contains(now) || !it->second.contains(before)) {
        throw ValidationError(fmt::format("build_covariates: '{}' lacks history at {} for lag {}",
                                          code, format_biweek(before), k));
      }
      row.push_back(growth_ratio(it->second.at(now), it->second.at(before)));
    }
  }
  return row;
}

ModelInputs prepare_inputs(const SeriesMap& raw, const Date& analysis_date,
                           const ModelConfig& config) {
  config.validate();
  ModelInputs in;
  in.origin = analysis_biweek(analysis_date) - config.reporting_lag;
  for (const auto& [code, s] : raw) {
    auto truncated = truncate_for_delay(s, analysis_date, config.reporting_lag);
    auto smoothed = smooth(truncated, config.smoothing_window);
    in.covariate.emplace(code, config.smooth_covariate_series ? smoothed : truncated);
    in.response.emplace(code, std::move(smoothed));
    in.truncated.emplace(code, std::move(truncated));
  }
  return in;
}

// --- ProvinceFit ------------------------------------------------------------

Eigen::RowVectorXd ProvinceFit::design_row(AbsoluteBiweek t,
                                           std::span<const double> covariates) const {
  if (covariates.size() != covariate_count()) {
    throw ValidationError(fmt::format("design_row: expected {} covariates, got {}",
                                      covariate_count(), covariates.size()));
  }
  const Eigen::RowVectorXd s = seasonal.row(seasonal_position(t));
  const Eigen::RowVectorXd g = trend.row(static_cast<double>(t.ordinal));
  Eigen::RowVectorXd r(1 + s.size() + g.size() + static_cast<Eigen::Index>(covariates.size()));
  r(0) = 1.0;
  r.segment(1, s.size()) = s;
  r.segment(1 + s.size(), g.size()) = g;
  for (std::size_t k = 0; k < covariates.size(); ++k) {
    r(1 + s.size() + g.size() + static_cast<Eigen::Index>(k)) = covariates[k];
  }
  return r;
}

double ProvinceFit::baseline_log_rate(AbsoluteBiweek t) const {
  const auto& icpt = fit.block("intercept");
  const auto& sb = fit.block("seasonal");
  const auto& tb = fit.block("trend");
  return fit.beta(icpt.first) +
         seasonal.row(seasonal_position(t)).dot(fit.beta.segment(sb.first, sb.size)) +
         trend.row(static_cast<double>(t.ordinal)).dot(fit.beta.segment(tb.first, tb.size));
}

double ProvinceFit::log_rate(AbsoluteBiweek t, std::span<const double> covariates) const {
  return design_row(t, covariates).dot(fit.beta);
}

double ProvinceFit::seasonal_effect(double position) const {
  const auto& sb = fit.block("seasonal");
  return seasonal.row(position).dot(fit.beta.segment(sb.first, sb.size));
}

Eigen::VectorXd ProvinceFit::covariate_coefficients() const {
  if (covariate_count() == 0) return Eigen::VectorXd(0);
  return fit.coefficients("covariates");
}

nlohmann::json to_json(const ProvinceFit& f) {
  return {{"province", f.province},
          {"analysis_date", format_date(f.analysis_date)},
          {"correlated", f.correlated},
          {"train_first", format_biweek(f.train_first)},
          {"train_last", format_biweek(f.train_last)},
          {"fit", to_json(f.fit)},
          {"config", to_json(f.config)},
          {"seasonal", to_json(f.seasonal)},
          {"trend", to_json(f.trend)}};
}

ProvinceFit province_fit_from_json(const nlohmann::json& j) {
  ProvinceFit f;
  f.province = j.at("province").get<std::string>();
  f.analysis_date = parse_date(j.at("analysis_date").get<std::string>());
  f.correlated = j.at("correlated").get<std::vector<std::string>>();
  f.train_first = parse_biweek(j.at("train_first").get<std::string>());
  f.train_last = parse_biweek(j.at("train_last").get<std::string>());
  f.fit = fit_result_from_json(j.at("fit"));
  f.config = model_config_from_json(j.at("config"));
  f.seasonal = smooth_term_from_json(j.at("seasonal"));
  f.trend = smooth_term_from_json(j.at("trend"));
  return f;
}

// --- assembly ---------------------------------------------------------------

ProvinceProblem build_province_problem(const std::string& province, const ModelInputs& inputs,
                                       const ModelConfig& config) {
  auto rit = inputs.response.find(province);
  if (rit == inputs.response.end()) {
    throw ValidationError(fmt::format("no series for province '{}'", province));
  }
  const BiweekSeries& response = rit->second;

  ProvinceProblem out;
  out.correlated = select_correlated(inputs.truncated, province, config.correlated_count,
                                     config.min_overlap_years * kBiweeksPerYear,
                                     config.include_self);

  AbsoluteBiweek first = response.start + 1;
  for (const auto& code : out.correlated) {
    first = std::max(first, inputs.covariate.at(code).start + config.max_lag() + 1);
  }
  const AbsoluteBiweek last = inputs.origin;
  const int rows = last - first + 1;
  if (rows < config.min_history_years * kBiweeksPerYear) {
    throw InsufficientHistoryError(fmt::format(
        "province '{}' has {} usable biweeks after truncation; {} required", province,
        std::max(rows, 0), config.min_history_years * kBiweeksPerYear));
  }
  out.train_first = first;
  out.train_last = last;

  const auto n = static_cast<Eigen::Index>(rows);
  Eigen::VectorXd y(n), offset(n);
  std::vector<double> season_pos(static_cast<std::size_t>(rows));
  std::vector<double> ordinals(static_cast<std::size_t>(rows));
  Eigen::MatrixXd cov(n, static_cast<Eigen::Index>(out.correlated.size() * config.lags.size()));
  for (int r = 0; r < rows; ++r) {
    const AbsoluteBiweek t = first + r;
    y(r) = response.at(t);
    offset(r) = floored_offset(response.at(t - 1), config.offset_floor);
    season_pos[static_cast<std::size_t>(r)] = seasonal_position(t);
    ordinals[static_cast<std::size_t>(r)] = static_cast<double>(t.ordinal);
    if (cov.cols() > 0) {
      const auto c = build_covariates(inputs.covariate, out.correlated, t, config.lags);
      for (std::size_t k = 0; k < c.size(); ++k) cov(r, static_cast<Eigen::Index>(k)) = c[k];
    }
  }

  const BasisSpec season_spec = cyclic_spec(config.cyclic_knots);
  auto season = absorb_centering(build_cyclic_basis(season_pos, season_spec));
  const double season_scale = penalty_scale_for(season.design, season.penalty);
  season.penalty *= season_scale;

  const BasisSpec trend_spec =
      regression_spec(static_cast<double>(first.ordinal), static_cast<double>(last.ordinal),
                      config.trend_knots);
  const CubicSplineBasis trend_basis(trend_spec);
  auto trend = absorb_centering({trend_basis.design(ordinals), trend_basis.penalty()});
  const double trend_scale = penalty_scale_for(trend.design, trend.penalty);
  trend.penalty *= trend_scale;

  out.seasonal = SmoothTerm(season_spec, season.constraint, season_scale);
  out.trend = SmoothTerm(trend_spec, trend.constraint, trend_scale);

  auto& p = out.problem;
  p.y = std::move(y);
  p.offset = std::move(offset);
  p.blocks.push_back({"intercept", Eigen::MatrixXd::Ones(n, 1), std::nullopt, true});
  p.blocks.push_back({"seasonal", std::move(season.design), std::move(season.penalty), false});
  p.blocks.push_back({"trend", std::move(trend.design), std::move(trend.penalty), false});
  if (cov.cols() > 0) p.blocks.push_back({"covariates", std::move(cov), std::nullopt, false});
  p.lambdas.assign(2, config.lambda_grid.values()[static_cast<std::size_t>(
                          config.lambda_grid.values().size() / 2)]);
  return out;
}

ProvinceFit fit_province(const std::string& province, const SeriesMap& raw,
                         const Date& analysis_date, const ModelConfig& config,
                         const std::vector<double>* fixed_lambdas) {
  const ModelInputs inputs = prepare_inputs(raw, analysis_date, config);
  ProvinceProblem pp = build_province_problem(province, inputs, config);

  ProvinceFit out;
  out.province = province;
  out.analysis_date = analysis_date;
  out.correlated = pp.correlated;
  out.train_first = pp.train_first;
  out.train_last = pp.train_last;
  out.config = config;
  out.seasonal = std::move(pp.seasonal);
  out.trend = std::move(pp.trend);

  if (!config.reselect_lambda && fixed_lambdas != nullptr) {
    pp.problem.lambdas = *fixed_lambdas;
    out.fit = fit_pirls(pp.problem);
  } else {
    out.fit = select_lambda(pp.problem, config.lambda_grid).fit;
  }
  return out;
}

FitBatch fit_provinces(const SeriesMap& raw, const Date& analysis_date, const ModelConfig& config) {
  config.validate();
  FitBatch batch;
  const AbsoluteBiweek t = analysis_biweek(analysis_date);
  SeriesMap candidates;
  for (const auto& [code, s] : raw) {
    if (s.empty() || s.last() < t) {
      batch.skipped.push_back({code, "series does not reach the analysis biweek"});
    } else if (t - config.reporting_lag - s.start + 1 <
               config.min_history_years * kBiweeksPerYear) {
      batch.skipped.push_back({code, "insufficient history after reporting-lag truncation"});
    } else {
      candidates.emplace(code, s);
    }
  }

  std::map<std::string, ProvinceFit> fitted;
  while (!candidates.empty()) {
    const ModelInputs inputs = prepare_inputs(candidates, analysis_date, config);
    std::set<std::string> removed;
    for (const auto& [code, s] : candidates) {
      if (fitted.contains(code)) continue;
      try {
        ProvinceProblem pp = build_province_problem(code, inputs, config);
        ProvinceFit f;
        f.province = code;
        f.analysis_date = analysis_date;
        f.correlated = pp.correlated;
        f.train_first = pp.train_first;
        f.train_last = pp.train_last;
        f.config = config;
        f.seasonal = std::move(pp.seasonal);
        f.trend = std::move(pp.trend);
        f.fit = select_lambda(pp.problem, config.lambda_grid).fit;
        if (!f.usable()) {
          batch.skipped.push_back({code, "fit did not converge"});
          removed.insert(code);
          continue;
        }
        fitted.emplace(code, std::move(f));
      } catch (const std::exception& e) {
        batch.skipped.push_back({code, e.what()});
        removed.insert(code);
      }
    }
    if (removed.empty()) break;
    for (const auto& code : removed) candidates.erase(code);
    for (auto it = fitted.begin(); it != fitted.end();) {
      const auto& corr = it->second.correlated;
      const bool depends = std::any_of(corr.begin(), corr.end(),
                                       [&](const std::string& c) { return removed.contains(c); });
      it = depends ? fitted.erase(it) : std::next(it);
    }
  }
  for (auto& [code, f] : fitted) batch.fits.push_back(std::move(f));
  return batch;
}

}  // namespace denguecast
