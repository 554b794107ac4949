#include "denguecast/spline_basis.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "denguecast/error.hpp"

namespace denguecast {

std::string_view to_string(BasisKind k) {
  return k == BasisKind::CyclicCubic ? "cyclic_cubic" : "cubic_regression";
}

BasisKind parse_basis_kind(std::string_view text) {
  if (text == "cyclic_cubic") return BasisKind::CyclicCubic;
  if (text == "cubic_regression") return BasisKind::CubicRegression;
  throw ValidationError(fmt::format("unknown basis kind '{}'", text));
}

void BasisSpec::validate() const {
  const std::size_t min_knots = kind == BasisKind::CyclicCubic ? 4 : 3;
  if (knots.size() < min_knots) {
    throw ValidationError(fmt::format("{} basis needs at least {} knots", to_string(kind), min_knots));
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) throw ValidationError("basis knots must be strictly increasing");
  }
  if (kind == BasisKind::CyclicCubic) {
    if (!(period > 0.0)) throw ValidationError("cyclic basis period must be positive");
    if (knots.front() < 0.0 || knots.back() >= period) {
      throw ValidationError("cyclic basis knots must lie in [0, period)");
    }
  }
}

BasisSpec cyclic_spec(int n_knots, double period) {
  BasisSpec spec{BasisKind::CyclicCubic, {}, period};
  for (int i = 0; i < n_knots; ++i) spec.knots.push_back(period * i / n_knots);
  spec.validate();
  return spec;
}

BasisSpec regression_spec(double lo, double hi, int n_knots) {
  if (n_knots < 3) throw ValidationError("regression basis needs at least 3 knots");
  if (!(hi > lo)) throw ValidationError("regression basis needs a non-degenerate range");
  BasisSpec spec{BasisKind::CubicRegression, {}, 0.0};
  const double step = (hi - lo) / (n_knots - 1);
  for (int i = 0; i < n_knots; ++i) spec.knots.push_back(i + 1 == n_knots ? hi : lo + step * i);
  spec.validate();
  return spec;
}

double CubicSplineBasis::interval_width(std::size_t j) const {
  const auto& x = spec_.knots;
  if (j + 1 < x.size()) return x[j + 1] - x[j];
  return spec_.period + x.front() - x.back();  // cyclic wrap interval
}

CubicSplineBasis::CubicSplineBasis(BasisSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const auto k = spec_.knots.size();
  const bool cyclic = spec_.kind == BasisKind::CyclicCubic;

  // Slope continuity at knot j:
  //   h[j-1]/6 g[j-1] + (h[j-1]+h[j])/3 g[j] + h[j]/6 g[j+1]
  //     = (b[j+1]-b[j])/h[j] - (b[j]-b[j-1])/h[j-1]
  // for every knot (cyclic) or every interior knot with g = 0 at the ends.
  const std::size_t rows = cyclic ? k : k - 2;
  Eigen::MatrixXd band = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows),
                                               static_cast<Eigen::Index>(rows));
  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows),
                                               static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t j = cyclic ? r : r + 1;
    const std::size_t prev = (j + k - 1) % k;
    const std::size_t next = (j + 1) % k;
    const double hp = interval_width(prev);
    const double hn = interval_width(j);
    const auto ri = static_cast<Eigen::Index>(r);
    band(ri, ri) += (hp + hn) / 3.0;
    if (cyclic) {
      band(ri, static_cast<Eigen::Index>(prev)) += hp / 6.0;
      band(ri, static_cast<Eigen::Index>(next)) += hn / 6.0;
    } else {
      if (r > 0) band(ri, ri - 1) += hp / 6.0;
      if (r + 1 < rows) band(ri, ri + 1) += hn / 6.0;
    }
    diff(ri, static_cast<Eigen::Index>(prev)) += 1.0 / hp;
    diff(ri, static_cast<Eigen::Index>(j)) += -1.0 / hp - 1.0 / hn;
    diff(ri, static_cast<Eigen::Index>(next)) += 1.0 / hn;
  }

  const Eigen::LDLT<Eigen::MatrixXd> band_solver(band);
  const Eigen::MatrixXd inner = band_solver.solve(diff);
  curvature_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  if (cyclic) {
    curvature_ = inner;
  } else {
    curvature_.middleRows(1, static_cast<Eigen::Index>(rows)) = inner;
  }
  penalty_ = diff.transpose() * inner;
  penalty_ = 0.5 * (penalty_ + penalty_.transpose());
}

Eigen::RowVectorXd CubicSplineBasis::interior_row(std::size_t j, double x, int derivative) const {
  const auto& knots = spec_.knots;
  const auto k = knots.size();
  const std::size_t next = (j + 1) % k;
  const double h = interval_width(j);
  const double left = knots[j];
  const double right = left + h;
  const double u = right - x;  // distance to the right knot
  const double v = x - left;   // distance from the left knot

  double am = 0, ap = 0, cm = 0, cp = 0;
  switch (derivative) {
    case 0:
      am = u / h;
      ap = v / h;
      cm = (u * u * u / h - h * u) / 6.0;
      cp = (v * v * v / h - h * v) / 6.0;
      break;
    case 1:
      am = -1.0 / h;
      ap = 1.0 / h;
      cm = (-3.0 * u * u / h + h) / 6.0;
      cp = (3.0 * v * v / h - h) / 6.0;
      break;
    case 2:
      cm = u / h;
      cp = v / h;
      break;
    default:
      throw ValidationError("basis derivative order must be 0, 1 or 2");
  }
  Eigen::RowVectorXd r = cm * curvature_.row(static_cast<Eigen::Index>(j)) +
                         cp * curvature_.row(static_cast<Eigen::Index>(next));
  r(static_cast<Eigen::Index>(j)) += am;
  r(static_cast<Eigen::Index>(next)) += ap;
  return r;
}

Eigen::RowVectorXd CubicSplineBasis::row(double x, int derivative) const {
  const auto& knots = spec_.knots;
  const auto k = knots.size();
  if (spec_.kind == BasisKind::CyclicCubic) {
    double w = std::fmod(x, spec_.period);
    if (w < 0.0) w += spec_.period;
    if (w < knots.front()) w += spec_.period;  // falls in the wrap interval
    auto it = std::upper_bound(knots.begin(), knots.end(), w);
    const auto j = static_cast<std::size_t>(std::distance(knots.begin(), it)) - 1;
    return interior_row(j, w, derivative);
  }

  // Regression spline: linear extrapolation beyond the end knots.
  if (x < knots.front() || x > knots.back()) {
    const bool below = x < knots.front();
    const std::size_t j = below ? 0 : k - 2;
    const double edge = below ? knots.front() : knots.back();
    if (derivative == 2) return Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(k));
    const Eigen::RowVectorXd slope = interior_row(j, edge, 1);
    if (derivative == 1) return slope;
    return interior_row(j, edge, 0) + (x - edge) * slope;
  }
  auto it = std::upper_bound(knots.begin(), knots.end(), x);
  std::size_t j = static_cast<std::size_t>(std::distance(knots.begin(), it));
  j = j == 0 ? 0 : std::min(j - 1, k - 2);
  return interior_row(j, x, derivative);
}

Eigen::MatrixXd CubicSplineBasis::design(std::span<const double> points, int derivative) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), dimension());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = row(points[i], derivative);
  }
  return out;
}

BasisMatrices build_cyclic_basis(std::span<const double> points, const BasisSpec& spec) {
  if (spec.kind != BasisKind::CyclicCubic) {
    throw ValidationError("build_cyclic_basis requires a cyclic_cubic spec");
  }
  const CubicSplineBasis basis(spec);
  return {basis.design(points), basis.penalty()};
}

BasisMatrices build_trend_basis(std::span<const double> points, int n_knots) {
  if (points.size() < 2) throw ValidationError("trend basis needs at least two points");
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end());
  if (!(*hi > *lo)) throw ValidationError("trend basis: all points identical");
  const CubicSplineBasis basis(regression_spec(*lo, *hi, n_knots));
  return {basis.design(points), basis.penalty()};
}

Eigen::MatrixXd sum_to_zero_basis(const Eigen::RowVectorXd& constraint) {
  const Eigen::Index k = constraint.size();
  if (k < 2) throw ValidationError("sum_to_zero_basis: need at least two coefficients");
  if (constraint.norm() == 0.0) throw ValidationError("sum_to_zero_basis: zero constraint");
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(constraint.transpose());
  const Eigen::MatrixXd q = qr.householderQ();
  return q.rightCols(k - 1);
}

ConstrainedSmooth absorb_centering(const BasisMatrices& basis) {
  const Eigen::RowVectorXd sums = basis.design.colwise().sum();
  ConstrainedSmooth out;
  out.constraint = sum_to_zero_basis(sums);
  out.design = basis.design * out.constraint;
  out.penalty = out.constraint.transpose() * basis.penalty * out.constraint;
  out.penalty = 0.5 * (out.penalty + out.penalty.transpose());
  return out;
}

}  // namespace denguecast
