#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include <Eigen/Dense>

namespace abcnet {

using Stat = std::optional<double>;

/// Weighted least-squares slope of y on t. Points with non-positive weight
/// are ignored; empty when fewer than two usable points remain or t is
/// constant among them.
Stat weighted_slope(std::span<const double> t, std::span<const double> y,
                    std::span<const double> w);

/// Ordinary least-squares slope (unit weights).
Stat ols_slope(std::span<const double> t, std::span<const double> y);

struct BinomialPoint {
  double t;
  int successes;
  int trials;
};

/// Slope of a logistic regression of successes/trials on t, fitted by
/// iteratively reweighted least squares. Empty without both a success and a
/// failure, with constant t, or when a coefficient exceeds 30 in magnitude
/// (separation).
Stat log_odds_slope(std::span<const BinomialPoint> points);

/// Least-squares fit y ~ b0 + b1 x + b2 x^2 + b3 x^3.
class CubicFit {
 public:
  /// Empty when x is constant or there are fewer than five points.
  static std::optional<CubicFit> fit(std::span<const double> x,
                                     std::span<const double> y);

  std::size_t n() const { return n_; }
  double r_squared() const { return r_squared_; }
  /// Model against the intercept-only null on (3, n - 4) degrees of freedom.
  double f_statistic() const { return f_statistic_; }
  double residual_variance() const { return sigma2_; }
  double predict(double x) const;
  /// Two-sided prediction interval for a new response at `x`.
  std::pair<double, double> prediction_interval(double x, double level) const;

 private:
  Eigen::Vector4d basis(double x) const;

  std::size_t n_ = 0;
  double center_ = 0.0;
  double scale_ = 1.0;
  Eigen::Vector4d coef_ = Eigen::Vector4d::Zero();
  Eigen::Matrix4d xtx_inv_ = Eigen::Matrix4d::Zero();
  double r_squared_ = 0.0;
  double f_statistic_ = 0.0;
  double sigma2_ = 0.0;
};

}  // namespace abcnet
