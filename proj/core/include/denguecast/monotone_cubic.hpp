#pragma once

#include <span>
#include <vector>

namespace denguecast {

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson tangents.
///
/// Between two knots the curve stays within the rectangle spanned by them,
/// so non-decreasing data yields a non-decreasing interpolant. Outside the
/// knot range the end values are held constant.
class MonotoneCubic {
 public:
  /// `x` strictly increasing, at least two knots.
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double t) const;
  double derivative(double t) const;

  std::span<const double> knots() const noexcept { return x_; }
  std::span<const double> values() const noexcept { return y_; }
  std::span<const double> tangents() const noexcept { return m_; }

 private:
  std::size_t segment(double t) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;
};

}  // namespace denguecast
