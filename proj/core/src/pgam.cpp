#include "denguecast/pgam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "denguecast/error.hpp"

namespace denguecast {

namespace {

double xlogx_ratio(double y, double mu) { return y > 0.0 ? y * std::log(y / mu) : 0.0; }

/// Precomputed pieces shared by every fit of one problem.
class PirlsEngine {
 public:
  explicit PirlsEngine(const FitProblem& problem)
      : problem_(problem),
        x_(problem.combined_design()),
        log_offset_(problem.offset.array().log().matrix()) {
    Eigen::Index col = 0;
    for (const auto& b : problem.blocks) {
      layout_.push_back({b.name, col, b.design.cols(), b.penalty.has_value()});
      col += b.design.cols();
    }
    scale_ = std::max(1.0, problem.y.maxCoeff());
  }

  FitResult fit(const std::vector<double>& lambdas, const Eigen::VectorXd* start) const {
    const auto& y = problem_.y;
    const auto& opt = problem_.options;
    const Eigen::Index p = x_.cols();
    const Eigen::MatrixXd s = problem_.combined_penalty(lambdas);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (start != nullptr && start->size() == p && start->allFinite()) {
      beta = *start;
    } else {
      for (std::size_t b = 0; b < problem_.blocks.size(); ++b) {
        if (problem_.blocks[b].intercept) {
          beta(layout_[b].first) = std::log((y.sum() + 0.1) / problem_.offset.sum());
        }
      }
    }

    auto mean_of = [&](const Eigen::VectorXd& bt) -> Eigen::VectorXd {
      return (x_ * bt + log_offset_).array().exp().matrix();
    };
    auto objective = [&](const Eigen::VectorXd& bt, const Eigen::VectorXd& mu) {
      return poisson_deviance(y, mu) + bt.dot(s * bt);
    };

    Eigen::VectorXd mu = mean_of(beta);
    double pdev = objective(beta, mu);
    if (!std::isfinite(pdev)) {
      beta.setZero();
      mu = mean_of(beta);
      pdev = objective(beta, mu);
    }

    FitResult out;
    out.layout = layout_;
    out.lambdas = lambdas;
    out.n = y.size();

    out.trace.push_back(pdev);
    int it = 0;
    bool converged = false;
    for (it = 1; it <= opt.max_iterations; ++it) {
      const Eigen::MatrixXd info = x_.transpose() * mu.asDiagonal() * x_;
      const Eigen::VectorXd score = x_.transpose() * (y - mu) - s * beta;
      const Eigen::LDLT<Eigen::MatrixXd> solver(info + s);
      if (solver.info() != Eigen::Success) break;
      Eigen::VectorXd step = solver.solve(score);

      Eigen::VectorXd trial = beta + step;
      Eigen::VectorXd trial_mu = mean_of(trial);
      double trial_pdev = objective(trial, trial_mu);
      int halvings = 0;
      const double slack = 1e-12 * std::max(1.0, std::abs(pdev));
      while (!(std::isfinite(trial_pdev) && trial_pdev <= pdev + slack) &&
             halvings < opt.max_step_halvings) {
        step *= 0.5;
        trial = beta + step;
        trial_mu = mean_of(trial);
        trial_pdev = objective(trial, trial_mu);
        ++halvings;
      }
      if (!(std::isfinite(trial_pdev) && trial_pdev <= pdev + slack)) break;

      const double change = std::abs(pdev - trial_pdev) / (std::abs(trial_pdev) + 0.1);
      beta = std::move(trial);
      mu = std::move(trial_mu);
      pdev = trial_pdev;
      out.trace.push_back(pdev);

      const Eigen::VectorXd new_score = x_.transpose() * (y - mu) - s * beta;
      const double score_norm = new_score.cwiseAbs().maxCoeff();
      // The score cannot be resolved below the rounding error of its terms,
      // which dominates when a smoothing parameter is very large.
      const Eigen::VectorXd magnitude =
          x_.cwiseAbs().transpose() * (y + mu) + s.cwiseAbs() * beta.cwiseAbs();
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() * magnitude.maxCoeff();
      const double tolerance = std::max(opt.score_tolerance * scale_, floor);
      if (score_norm < tolerance && change < opt.deviance_tolerance) {
        converged = true;
        break;
      }
    }

    out.beta = beta;
    out.iterations = std::min(it, opt.max_iterations);
    out.converged = converged;
    out.deviance = poisson_deviance(y, mu);
    out.penalized_deviance = pdev;
    out.score_norm = (x_.transpose() * (y - mu) - s * beta).cwiseAbs().maxCoeff();

    const Eigen::MatrixXd info = x_.transpose() * mu.asDiagonal() * x_;
    const Eigen::MatrixXd influence = (info + s).ldlt().solve(info);
    out.edf.assign(layout_.size(), 0.0);
    for (std::size_t b = 0; b < layout_.size(); ++b) {
      out.edf[b] = influence.diagonal().segment(layout_[b].first, layout_[b].size).sum();
    }
    out.total_edf = std::accumulate(out.edf.begin(), out.edf.end(), 0.0);
    const double n = static_cast<double>(out.n);
    const double denom = n - out.total_edf;
    out.gcv = denom > 0.0 ? n * out.deviance / (denom * denom)
                          : std::numeric_limits<double>::infinity();
    return out;
  }

 private:
  const FitProblem& problem_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd log_offset_;
  std::vector<BlockLayout> layout_;
  double scale_ = 1.0;
};

}  // namespace

// --- FitProblem -------------------------------------------------------------

Eigen::Index FitProblem::columns() const {
  Eigen::Index c = 0;
  for (const auto& b : blocks) c += b.design.cols();
  return c;
}

std::size_t FitProblem::penalized_count() const {
  return static_cast<std::size_t>(std::count_if(
      blocks.begin(), blocks.end(), [](const TermBlock& b) { return b.penalty.has_value(); }));
}

void FitProblem::validate() const {
  const Eigen::Index n = y.size();
  if (n == 0) throw ValidationError("fit problem: no observations");
  if (offset.size() != n) throw ValidationError("fit problem: offset length differs from y");
  if (blocks.empty()) throw ValidationError("fit problem: no design blocks");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(y(i) >= 0.0) || !std::isfinite(y(i))) {
      throw ValidationError(fmt::format("fit problem: response {} is negative or non-finite", i));
    }
    if (!(offset(i) > 0.0) || !std::isfinite(offset(i))) {
      throw ValidationError(fmt::format("fit problem: offset {} must be positive", i));
    }
  }
  for (const auto& b : blocks) {
    if (b.design.rows() != n) {
      throw ValidationError(fmt::format("fit problem: block '{}' has {} rows, expected {}",
                                        b.name, b.design.rows(), n));
    }
    if (!b.design.allFinite()) {
      throw ValidationError(fmt::format("fit problem: block '{}' has non-finite entries", b.name));
    }
    if (b.penalty) {
      const auto& s = *b.penalty;
      if (s.rows() != b.design.cols() || s.cols() != b.design.cols()) {
        throw ValidationError(fmt::format("fit problem: penalty of '{}' is not conformable", b.name));
      }
      if (!s.isApprox(s.transpose(), 1e-8)) {
        throw ValidationError(fmt::format("fit problem: penalty of '{}' is not symmetric", b.name));
      }
    }
  }
  if (lambdas.size() != penalized_count()) {
    throw ValidationError(fmt::format("fit problem: {} smoothing parameters for {} penalized blocks",
                                      lambdas.size(), penalized_count()));
  }
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw ValidationError("fit problem: smoothing parameters must be finite and >= 0");
    }
  }
}

void FitProblem::check_rank() const {
  const Eigen::Index n = y.size();
  Eigen::MatrixXd acc(n, 0);
  for (const auto& b : blocks) {
    Eigen::MatrixXd next(n, acc.cols() + b.design.cols());
    next << acc, b.design;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(next);
    qr.setThreshold(1e-10);
    if (qr.rank() < next.cols()) {
      throw RankDeficiencyError(
          b.name, fmt::format("design is rank deficient at block '{}' (rank {} < {} columns)",
                              b.name, qr.rank(), next.cols()));
    }
    acc = std::move(next);
  }
}

Eigen::MatrixXd FitProblem::combined_design() const {
  Eigen::MatrixXd x(y.size(), columns());
  Eigen::Index col = 0;
  for (const auto& b : blocks) {
    x.middleCols(col, b.design.cols()) = b.design;
    col += b.design.cols();
  }
  return x;
}

Eigen::MatrixXd FitProblem::combined_penalty(const std::vector<double>& lam) const {
  const Eigen::Index p = columns();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  Eigen::Index col = 0;
  std::size_t k = 0;
  for (const auto& b : blocks) {
    const Eigen::Index c = b.design.cols();
    if (b.penalty) {
      s.block(col, col, c, c) = lam.at(k) * *b.penalty;
      ++k;
    }
    col += c;
  }
  return s;
}

// --- FitResult --------------------------------------------------------------

const BlockLayout& FitResult::block(const std::string& name) const {
  for (const auto& b : layout) {
    if (b.name == name) return b;
  }
  throw ValidationError(fmt::format("fit has no block named '{}'", name));
}

Eigen::VectorXd FitResult::coefficients(const std::string& name) const {
  const auto& b = block(name);
  return beta.segment(b.first, b.size);
}

double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) d += xlogx_ratio(y(i), mu(i)) - (y(i) - mu(i));
  return 2.0 * d;
}

double penalized_loglik(const FitProblem& problem, const Eigen::VectorXd& beta) {
  const Eigen::MatrixXd x = problem.combined_design();
  const Eigen::VectorXd eta = x * beta + problem.offset.array().log().matrix();
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += problem.y(i) * eta(i) - std::exp(eta(i));
  const Eigen::MatrixXd s = problem.combined_penalty(problem.lambdas);
  return ll - 0.5 * beta.dot(s * beta);
}

FitResult fit_pirls(const FitProblem& problem, const Eigen::VectorXd* start) {
  problem.validate();
  problem.check_rank();
  const PirlsEngine engine(problem);
  return engine.fit(problem.lambdas, start);
}

std::vector<double> LambdaGrid::values() const {
  if (points < 1) throw ValidationError("lambda grid needs at least one point");
  if (!(min > 0.0) || !(max >= min)) throw ValidationError("lambda grid needs 0 < min <= max");
  std::vector<double> out;
  if (points == 1) return {min};
  const double lo = std::log10(min);
  const double hi = std::log10(max);
  for (int i = 0; i < points; ++i) {
    out.push_back(std::pow(10.0, lo + (hi - lo) * i / (points - 1)));
  }
  return out;
}

LambdaSelection select_lambda(const FitProblem& problem, const LambdaGrid& grid) {
  FitProblem base = problem;
  const std::size_t m = base.penalized_count();
  base.lambdas.assign(m, grid.values().front());
  base.validate();
  base.check_rank();
  const PirlsEngine engine(base);

  LambdaSelection sel;
  if (m == 0) {
    sel.fit = engine.fit({}, nullptr);
    sel.fits_evaluated = 1;
    if (!sel.fit.converged) sel.failures.push_back("unpenalized fit did not converge");
    return sel;
  }

  const auto values = grid.values();
  const int mid = static_cast<int>(values.size()) / 2;
  std::vector<int> current(m, mid);
  std::map<std::vector<int>, FitResult> cache;
  std::optional<std::vector<int>> best_key;
  double best_gcv = std::numeric_limits<double>::infinity();

  auto to_lambdas = [&](const std::vector<int>& idx) {
    std::vector<double> l(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) l[i] = values[static_cast<std::size_t>(idx[i])];
    return l;
  };
  auto evaluate = [&](const std::vector<int>& idx) -> const FitResult* {
    auto it = cache.find(idx);
    if (it == cache.end()) {
      const Eigen::VectorXd* warm = best_key ? &cache.at(*best_key).beta : nullptr;
      FitResult r = engine.fit(to_lambdas(idx), warm);
      ++sel.fits_evaluated;
      if (!r.converged || !std::isfinite(r.gcv)) {
        std::string label;
        for (double l : r.lambdas) label += fmt::format("{}{:g}", label.empty() ? "" : ",", l);
        sel.failures.push_back(fmt::format("lambda=({}) did not converge after {} iterations",
                                           label, r.iterations));
      }
      it = cache.emplace(idx, std::move(r)).first;
    }
    const FitResult& r = it->second;
    if (!r.converged || !std::isfinite(r.gcv)) return nullptr;
    if (r.gcv < best_gcv) {
      best_gcv = r.gcv;
      best_key = idx;
    }
    return &r;
  };

  evaluate(current);
  for (int sweep = 0; sweep < std::max(1, grid.max_sweeps); ++sweep) {
    bool changed = false;
    for (std::size_t b = 0; b < m; ++b) {
      int best_index = current[b];
      double best_here = std::numeric_limits<double>::infinity();
      for (int g = 0; g < static_cast<int>(values.size()); ++g) {
        auto trial = current;
        trial[b] = g;
        const FitResult* r = evaluate(trial);
        if (r != nullptr && r->gcv < best_here) {
          best_here = r->gcv;
          best_index = g;
        }
      }
      if (best_index != current[b]) {
        current[b] = best_index;
        changed = true;
      }
    }
    if (!changed) break;
  }

  if (!best_key) {
    std::string all;
    for (const auto& f : sel.failures) all += "\n  " + f;
    throw RuntimeFailure("select_lambda: every candidate fit failed:" + all);
  }
  sel.fit = cache.at(*best_key);
  sel.lambdas = sel.fit.lambdas;
  return sel;
}

RatePrediction predict_rate(const FitResult& fit, const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& offsets) {
  if (design.cols() != fit.columns()) {
    throw ValidationError(fmt::format("predict_rate: design has {} columns, fit has {}",
                                      design.cols(), fit.columns()));
  }
  if (offsets.size() != design.rows()) {
    throw ValidationError("predict_rate: offsets length differs from design rows");
  }
  RatePrediction out;
  out.rate = (design * fit.beta).array().exp().matrix();
  out.expected = offsets.cwiseProduct(out.rate);
  return out;
}

nlohmann::json to_json(const FitResult& fit) {
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& b : fit.layout) {
    layout.push_back({{"name", b.name}, {"first", b.first}, {"size", b.size},
                      {"penalized", b.penalized}});
  }
  return {{"beta", std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size())},
          {"layout", layout},
          {"lambdas", fit.lambdas},
          {"edf", fit.edf},
          {"total_edf", fit.total_edf},
          {"deviance", fit.deviance},
          {"penalized_deviance", fit.penalized_deviance},
          {"gcv", fit.gcv},
          {"score_norm", fit.score_norm},
          {"n", fit.n},
          {"converged", fit.converged},
          {"iterations", fit.iterations}};
}

FitResult fit_result_from_json(const nlohmann::json& j) {
  FitResult fit;
  const auto beta = j.at("beta").get<std::vector<double>>();
  fit.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  for (const auto& b : j.at("layout")) {
    fit.layout.push_back({b.at("name").get<std::string>(), b.at("first").get<Eigen::Index>(),
                          b.at("size").get<Eigen::Index>(), b.at("penalized").get<bool>()});
  }
  fit.lambdas = j.at("lambdas").get<std::vector<double>>();
  fit.edf = j.at("edf").get<std::vector<double>>();
  fit.total_edf = j.at("total_edf").get<double>();
  fit.deviance = j.at("deviance").get<double>();
  fit.penalized_deviance = j.at("penalized_deviance").get<double>();
  fit.gcv = j.at("gcv").get<double>();
  fit.score_norm = j.at("score_norm").get<double>();
  fit.n = j.at("n").get<Eigen::Index>();
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  return fit;
}

}  // namespace denguecast
