#include "abcnet/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace abcnet {

Stat weighted_slope(std::span<const double> t, std::span<const double> y,
                    std::span<const double> w) {
  if (t.size() != y.size() || t.size() != w.size()) {
    throw std::invalid_argument("weighted_slope: length mismatch");
  }
  double sw = 0.0, st = 0.0, sy = 0.0;
  std::size_t usable = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    ++usable;
    sw += w[i];
    st += w[i] * t[i];
    sy += w[i] * y[i];
  }
  if (usable < 2) return std::nullopt;
  const double tbar = st / sw;
  const double ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    const double dt = t[i] - tbar;
    sxx += w[i] * dt * dt;
    sxy += w[i] * dt * (y[i] - ybar);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  return sxy / sxx;
}

Stat ols_slope(std::span<const double> t, std::span<const double> y) {
  std::vector<double> ones(t.size(), 1.0);
  return weighted_slope(t, y, ones);
}

Stat log_odds_slope(std::span<const BinomialPoint> points) {
  long successes = 0, trials = 0;
  double tmin = std::numeric_limits<double>::infinity();
  double tmax = -tmin;
  for (const auto& p : points) {
    if (p.trials <= 0) continue;
    successes += p.successes;
    trials += p.trials;
    tmin = std::min(tmin, p.t);
    tmax = std::max(tmax, p.t);
  }
  if (successes == 0 || successes == trials || !(tmax > tmin)) return std::nullopt;

  constexpr double kSeparation = 30.0;
  const double pbar = static_cast<double>(successes) / static_cast<double>(trials);
  Eigen::Vector2d beta(std::log(pbar / (1.0 - pbar)), 0.0);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::Matrix2d info = Eigen::Matrix2d::Zero();
    Eigen::Vector2d score = Eigen::Vector2d::Zero();
    for (const auto& p : points) {
      if (p.trials <= 0) continue;
      const double eta = beta(0) + beta(1) * p.t;
      const double mu = 1.0 / (1.0 + std::exp(-eta));
      const double var = p.trials * mu * (1.0 - mu);
      const Eigen::Vector2d x(1.0, p.t);
      info += var * x * x.transpose();
      score += (p.successes - p.trials * mu) * x;
    }
    const Eigen::Vector2d step = info.ldlt().solve(score);
    if (!step.allFinite()) return std::nullopt;
    beta += step;
    if (beta.cwiseAbs().maxCoeff() > kSeparation) return std::nullopt;
    if (step.cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + beta.cwiseAbs().maxCoeff())) {
      return beta(1);
    }
  }
  return std::nullopt;
}

std::optional<CubicFit> CubicFit::fit(std::span<const double> x,
                                      std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("CubicFit: length mismatch");
  const std::size_t n = x.size();
  if (n < 5) return std::nullopt;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) return std::nullopt;

  CubicFit out;
  out.n_ = n;
  // Powers of a centred, unit-range regressor keep the design well conditioned.
  out.center_ = 0.5 * (*lo + *hi);
  out.scale_ = 0.5 * (*hi - *lo);
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd response(n);
  for (std::size_t i = 0; i < n; ++i) {
    design.row(static_cast<Eigen::Index>(i)) = out.basis(x[i]).transpose();
    response(static_cast<Eigen::Index>(i)) = y[i];
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 4) return std::nullopt;
  out.coef_ = qr.solve(response);
  out.xtx_inv_ = (design.transpose() * design).inverse();

  const double mean = response.mean();
  const double sst = (response.array() - mean).square().sum();
  const double sse = (response - design * out.coef_).squaredNorm();
  out.r_squared_ = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 1.0;
  const double df_resid = static_cast<double>(n) - 4.0;
  out.sigma2_ = df_resid > 0.0 ? sse / df_resid : 0.0;
  const double ssr = std::max(sst - sse, 0.0);
  if (df_resid <= 0.0) {
    out.f_statistic_ = 0.0;
  } else if (sse > 0.0) {
    out.f_statistic_ = (ssr / 3.0) / (sse / df_resid);
  } else {
    out.f_statistic_ = ssr > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return out;
}

Eigen::Vector4d CubicFit::basis(double x) const {
  const double z = (x - center_) / scale_;
  return {1.0, z, z * z, z * z * z};
}

double CubicFit::predict(double x) const { return basis(x).dot(coef_); }

std::pair<double, double> CubicFit::prediction_interval(double x,
                                                        double level) const {
  const double fit = predict(x);
  if (n_ <= 4) {
    const double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf};
  }
  const boost::math::students_t dist(static_cast<double>(n_) - 4.0);
  const double tq = boost::math::quantile(dist, 0.5 + 0.5 * level);
  const Eigen::Vector4d b = basis(x);
  const double se = std::sqrt(sigma2_ * (1.0 + b.dot(xtx_inv_ * b)));
  return {fit - tq * se, fit + tq * se};
}

}  // namespace abcnet
