#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace denguecast {

/// One group of design columns, optionally with a quadratic roughness
/// penalty scaled by its own smoothing parameter.
struct TermBlock {
  std::string name;
  Eigen::MatrixXd design;
  std::optional<Eigen::MatrixXd> penalty;
  bool intercept = false;  // single column of ones; initialized from the data mean
};

struct PirlsOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-8;  // times max(1, max y); never below the score's rounding error
  double deviance_tolerance = 1e-10;
  int max_step_halvings = 40;
};

/// Penalized Poisson regression with log link and multiplicative offset:
///   y_i ~ Poisson(offset_i * exp(x_i' beta)).
struct FitProblem {
  Eigen::VectorXd y;
  Eigen::VectorXd offset;
  std::vector<TermBlock> blocks;
  std::vector<double> lambdas;  // one per penalized block, in block order
  PirlsOptions options;

  Eigen::Index columns() const;
  std::size_t penalized_count() const;
  /// Throws ValidationError on shape/sign violations.
  void validate() const;
  /// Throws RankDeficiencyError naming the first block that adds a linearly
  /// dependent column to the design built so far.
  void check_rank() const;
  Eigen::MatrixXd combined_design() const;
  /// Block-diagonal sum of lambda_b * S_b.
  Eigen::MatrixXd combined_penalty(const std::vector<double>& lambdas) const;
};

struct BlockLayout {
  std::string name;
  Eigen::Index first = 0;
  Eigen::Index size = 0;
  bool penalized = false;
};

struct FitResult {
  Eigen::VectorXd beta;
  std::vector<BlockLayout> layout;
  std::vector<double> lambdas;
  std::vector<double> edf;  // per block
  double total_edf = 0.0;
  double deviance = 0.0;
  double penalized_deviance = 0.0;
  double gcv = 0.0;
  double score_norm = 0.0;  // max |X'(y - mu) - S beta| at the returned beta
  Eigen::Index n = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;  // penalized deviance at the start and after each accepted step; not serialized

  Eigen::Index columns() const { return beta.size(); }
  const BlockLayout& block(const std::string& name) const;
  Eigen::VectorXd coefficients(const std::string& name) const;
};

/// Poisson deviance with the continuous extension y log y (0 log 0 = 0).
double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu);

/// Penalized Poisson log-likelihood sum(y log mu - mu) - 0.5 beta' S beta,
/// dropping the log y! constant.
double penalized_loglik(const FitProblem& problem, const Eigen::VectorXd& beta);

/// Fits by penalized iteratively reweighted least squares (Newton steps on
/// the penalized likelihood with step halving). Non-convergence is reported
/// through `converged`, never hidden.
FitResult fit_pirls(const FitProblem& problem, const Eigen::VectorXd* start = nullptr);

struct LambdaGrid {
  double min = 1e-4;
  double max = 1e6;
  int points = 21;
  int max_sweeps = 3;

  std::vector<double> values() const;
};

struct LambdaSelection {
  std::vector<double> lambdas;
  FitResult fit;
  std::vector<std::string> failures;
  int fits_evaluated = 0;
};

/// Chooses smoothing parameters minimizing GCV = n D / (n - edf)^2 by
/// coordinate-wise search over the log-spaced grid, then returns the fit at
/// the chosen values. Throws RuntimeFailure if every candidate fails.
LambdaSelection select_lambda(const FitProblem& problem, const LambdaGrid& grid = {});

struct RatePrediction {
  Eigen::VectorXd rate;      // exp(x' beta)
  Eigen::VectorXd expected;  // offset * rate
};

RatePrediction predict_rate(const FitResult& fit, const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& offsets);

nlohmann::json to_json(const FitResult& fit);
FitResult fit_result_from_json(const nlohmann::json& j);

}  // namespace denguecast
