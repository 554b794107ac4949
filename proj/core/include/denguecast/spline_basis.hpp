#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace denguecast {

enum class BasisKind { CyclicCubic, CubicRegression };

std::string_view to_string(BasisKind k);
BasisKind parse_basis_kind(std::string_view text);

/// Knot layout of a penalized cubic spline.
///
/// Both kinds are parameterized by the curve's values at the knots. The
/// cyclic kind joins the last knot back to the first across `period` with
/// matching value, slope and curvature; the regression kind has zero
/// curvature at its end knots and extrapolates linearly.
struct BasisSpec {
  BasisKind kind = BasisKind::CyclicCubic;
  std::vector<double> knots;
  double period = 26.0;  // cyclic only

  void validate() const;
};

/// `n_knots` equally spaced on [0, period).
BasisSpec cyclic_spec(int n_knots = 8, double period = 26.0);
/// `n_knots` equally spaced on [lo, hi].
BasisSpec regression_spec(double lo, double hi, int n_knots = 5);

struct BasisMatrices {
  Eigen::MatrixXd design;   // n x k
  Eigen::MatrixXd penalty;  // k x k, integrated squared second derivative
};

/// Evaluates a cubic spline basis and its roughness penalty in closed form.
class CubicSplineBasis {
 public:
  explicit CubicSplineBasis(BasisSpec spec);

  const BasisSpec& spec() const noexcept { return spec_; }
  int dimension() const noexcept { return static_cast<int>(spec_.knots.size()); }

  /// Row of basis values (or their `derivative`-th derivative, 0..2) at x.
  Eigen::RowVectorXd row(double x, int derivative = 0) const;
  Eigen::MatrixXd design(std::span<const double> points, int derivative = 0) const;

  /// S with beta' S beta = integral of f''(x)^2 over one period (cyclic) or
  /// over the knot range (regression).
  const Eigen::MatrixXd& penalty() const noexcept { return penalty_; }

  /// Maps knot values to knot second derivatives.
  const Eigen::MatrixXd& curvature_map() const noexcept { return curvature_; }

 private:
  Eigen::RowVectorXd interior_row(std::size_t j, double x, int derivative) const;
  double interval_width(std::size_t j) const;

  BasisSpec spec_;
  Eigen::MatrixXd curvature_;
  Eigen::MatrixXd penalty_;
};

/// Cyclic seasonal basis; points are wrapped into [0, period).
BasisMatrices build_cyclic_basis(std::span<const double> points, const BasisSpec& spec);

/// Secular-trend basis with `n_knots` knots spread evenly over the range of
/// `points`.
BasisMatrices build_trend_basis(std::span<const double> points, int n_knots = 5);

/// Orthonormal k x (k-1) basis Z of the null space of `constraint` (a 1 x k
/// row). Reparameterizing beta = Z theta imposes constraint * beta = 0.
Eigen::MatrixXd sum_to_zero_basis(const Eigen::RowVectorXd& constraint);

/// A smooth with the sum-to-zero identifiability constraint absorbed: its
/// design columns sum to zero over the fitting points, so the model
/// intercept is unique.
struct ConstrainedSmooth {
  Eigen::MatrixXd design;      // n x (k-1)
  Eigen::MatrixXd penalty;     // (k-1) x (k-1)
  Eigen::MatrixXd constraint;  // Z, k x (k-1)
};

ConstrainedSmooth absorb_centering(const BasisMatrices& basis);

}  // namespace denguecast
