#include "abcnet/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "abcnet/csv.hpp"
#include "abcnet/parallel.hpp"

namespace abcnet {
namespace {

// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

// Trapezoid weights for an evenly spaced axis.
std::vector<double> trapezoid_weights(const std::vector<double>& axis) {
  const std::size_t n = axis.size();
  std::vector<double> w(n, 0.0);
  if (n < 2) {
    if (n == 1) w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = 0.5 * (axis[i + 1] - axis[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

double integrate_values(const std::vector<DensityAxis>& axes,
                        const std::vector<double>& values) {
  if (axes.size() == 1) {
    const auto w = trapezoid_weights(axes[0].values);
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * values[i];
    return s;
  }
  const auto wa = trapezoid_weights(axes[0].values);
  const auto wb = trapezoid_weights(axes[1].values);
  double s = 0.0;
  for (std::size_t i = 0; i < wa.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < wb.size(); ++j) row += wb[j] * values[i * wb.size() + j];
    s += wa[i] * row;
  }
  return s;
}

}  // namespace

std::pair<double, double> stat_scaling_bounds(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("no values to scale");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) {
    throw std::invalid_argument("statistic is constant across runs");
  }
  const double pad = range / (static_cast<double>(values.size()) + 1.0);
  return {*lo - pad, *hi + pad};
}

std::vector<double> kde_bandwidths(std::span<const double> points, std::size_t n,
                                   std::size_t d) {
  std::vector<double> sigma(d, kMinBandwidth);
  if (n < 2) return sigma;
  const double factor =
      std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += points[i * d + j];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = points[i * d + j] - mean;
      ss += dx * dx;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    sigma[j] = std::max(factor * sd, kMinBandwidth);
  }
  return sigma;
}

KdeModel::KdeModel(const SimTable& table,
                   const std::vector<std::string>& conditioned,
                   Weighting weighting)
    : param_names_(table.param_names),
      stat_names_(conditioned),
      param_bounds_(table.param_bounds) {
  table.validate();
  std::vector<std::size_t> stat_cols;
  for (const auto& name : conditioned) {
    const auto col = table.stat_index(name);
    if (!col) throw std::invalid_argument("unknown statistic '" + name + "'");
    stat_cols.push_back(*col);
  }
  for (const auto& b : param_bounds_) {
    if (!(b.pmin < b.pmax)) throw std::invalid_argument("parameter bounds need pmin < pmax");
  }

  std::vector<const SimRun*> kept;
  for (const auto& run : table.runs) {
    const bool complete = std::all_of(stat_cols.begin(), stat_cols.end(),
                                      [&](std::size_t c) { return run.stats[c].has_value(); });
    if (complete) {
      kept.push_back(&run);
    } else {
      ++dropped_;
    }
  }
  if (kept.size() < 2) {
    throw std::invalid_argument("kernel density needs at least two complete runs");
  }

  for (std::size_t s = 0; s < stat_cols.size(); ++s) {
    std::vector<double> col;
    col.reserve(kept.size());
    for (const SimRun* run : kept) col.push_back(*run->stats[stat_cols[s]]);
    try {
      stat_bounds_.push_back(stat_scaling_bounds(col));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("statistic '" + conditioned[s] +
                                  "' is constant across runs");
    }
  }

  const std::size_t d = dims();
  points_.reserve(kept.size() * d);
  for (const SimRun* run : kept) {
    for (std::size_t j = 0; j < param_dims(); ++j) {
      points_.push_back(scale_param(j, run->params[j]));
    }
    for (std::size_t s = 0; s < stat_cols.size(); ++s) {
      points_.push_back(scale_stat(s, *run->stats[stat_cols[s]]));
    }
    double w = 1.0;
    if (weighting == Weighting::prior_inverse) {
      if (!(run->prior_density > 0.0) || !std::isfinite(run->prior_density)) {
        throw std::invalid_argument("run " + std::to_string(run->run_id) +
                                    " has a non-positive prior density");
      }
      w = 1.0 / run->prior_density;
    }
    weights_.push_back(w);
  }
  bandwidths_ = kde_bandwidths(points_, kept.size(), d);
}

double KdeModel::scale_param(std::size_t j, double value) const {
  const auto& b = param_bounds_[j];
  return (value - b.pmin) / (b.pmax - b.pmin);
}

double KdeModel::unscale_param(std::size_t j, double scaled) const {
  const auto& b = param_bounds_[j];
  return b.pmin + scaled * (b.pmax - b.pmin);
}

double KdeModel::scale_stat(std::size_t j, double value) const {
  const auto& [lo, hi] = stat_bounds_[j];
  return (value - lo) / (hi - lo);
}

double KdeModel::density(std::span<const double> q) const {
  const std::size_t d = dims();
  if (q.size() != d) throw std::invalid_argument("query has the wrong dimension");
  double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(d));
  for (double s : bandwidths_) norm /= s;
  double sum = 0.0;
  for (std::size_t i = 0; i < runs(); ++i) {
    const auto x = point(i);
    double e = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = (q[j] - x[j]) / bandwidths_[j];
      e += z * z;
    }
    sum += weights_[i] * std::exp(-0.5 * e);
  }
  return norm * sum;
}

double integrate(const DensityGrid& grid) {
  return integrate_values(grid.axes, grid.density);
}

ConditionalDensity::ConditionalDensity(const KdeModel& model,
                                       const StatVector& observed)
    : model_(&model) {
  const std::size_t np = model.param_dims();
  for (std::size_t s = 0; s < model.stat_dims(); ++s) {
    const auto& name = model.stat_names()[s];
    const auto idx = observed.index_of(name);
    if (!idx || !observed.values[*idx]) {
      throw std::invalid_argument("observed value for '" + name + "' is missing");
    }
    const double y = model.scale_stat(s, *observed.values[*idx]);
    const double sigma = model.bandwidths()[np + s];
    const double excess = std::max(-y, y - 1.0);
    if (excess > 3.0 * sigma) {
      throw std::domain_error("observed '" + name +
                              "' lies beyond every simulated value by more "
                              "than three bandwidths");
    }
    if (excess > 0.0) {
      warnings_.push_back("observed '" + name +
                          "' lies outside the simulated range");
    }
    observed_scaled_.push_back(y);
  }

  log_base_.resize(model.runs());
  for (std::size_t i = 0; i < model.runs(); ++i) {
    const auto x = model.point(i);
    double e = 0.0;
    for (std::size_t s = 0; s < model.stat_dims(); ++s) {
      const double z = (observed_scaled_[s] - x[np + s]) / model.bandwidths()[np + s];
      e += z * z;
    }
    log_base_[i] = std::log(model.weights()[i]) - 0.5 * e;
  }
}

double ConditionalDensity::joint_density(std::span<const double> scaled_params) const {
  const KdeModel& m = *model_;
  const std::size_t np = m.param_dims();
  if (scaled_params.size() != np) {
    throw std::invalid_argument("parameter point has the wrong dimension");
  }
  double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(m.dims()));
  for (double s : m.bandwidths()) norm /= s;
  double sum = 0.0;
  for (std::size_t i = 0; i < m.runs(); ++i) {
    const auto x = m.point(i);
    double e = 0.0;
    for (std::size_t j = 0; j < np; ++j) {
      const double z = (scaled_params[j] - x[j]) / m.bandwidths()[j];
      e += z * z;
    }
    sum += std::exp(log_base_[i] - 0.5 * e);
  }
  return norm * sum;
}

std::vector<double> ConditionalDensity::slice_log_factors(
    std::span<const std::size_t> plot_dims, std::size_t resolution,
    SliceMode mode) const {
  const KdeModel& m = *model_;
  const std::size_t np = m.param_dims();
  std::vector<double> factors(m.runs(), 0.0);
  for (std::size_t k = 0; k < np; ++k) {
    if (std::find(plot_dims.begin(), plot_dims.end(), k) != plot_dims.end()) continue;
    const double sigma = m.bandwidths()[k];
    if (mode == SliceMode::marginalize) {
      // Mean of the kernel over lattice midpoints (l + 1/2) / L; the product
      // kernel factorizes, so the lattice average over all non-plotted
      // parameters is the product of these per-dimension means.
      std::vector<double> lattice(resolution);
      for (std::size_t l = 0; l < resolution; ++l) {
        lattice[l] = (static_cast<double>(l) + 0.5) / static_cast<double>(resolution);
      }
      std::vector<double> expo(resolution);
      for (std::size_t i = 0; i < m.runs(); ++i) {
        const double xk = m.point(i)[k];
        for (std::size_t l = 0; l < resolution; ++l) {
          const double z = (lattice[l] - xk) / sigma;
          expo[l] = -0.5 * z * z;
        }
        factors[i] += log_sum_exp(expo) - std::log(static_cast<double>(resolution));
      }
    } else {
      const std::size_t one[] = {k};
      const DensityGrid marginal = grid(one, resolution, SliceMode::marginalize);
      const auto peak = std::max_element(marginal.density.begin(), marginal.density.end());
      const double at = m.scale_param(
          k, marginal.axes[0].values[static_cast<std::size_t>(peak - marginal.density.begin())]);
      for (std::size_t i = 0; i < m.runs(); ++i) {
        const double z = (at - m.point(i)[k]) / sigma;
        factors[i] += -0.5 * z * z;
      }
    }
  }
  return factors;
}

DensityGrid ConditionalDensity::grid(std::span<const std::size_t> plot_dims,
                                     std::size_t resolution, SliceMode mode,
                                     unsigned threads) const {
  const KdeModel& m = *model_;
  if (plot_dims.empty() || plot_dims.size() > 2) {
    throw std::invalid_argument("plot one or two parameter dimensions");
  }
  if (plot_dims.size() == 2 && plot_dims[0] == plot_dims[1]) {
    throw std::invalid_argument("plot dimensions must differ");
  }
  for (std::size_t k : plot_dims) {
    if (k >= m.param_dims()) throw std::invalid_argument("plot dimension is not a parameter");
  }
  if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");

  // Per-run coefficient, shifted so the largest is 1.
  std::vector<double> coef = slice_log_factors(plot_dims, resolution, mode);
  for (std::size_t i = 0; i < coef.size(); ++i) coef[i] += log_base_[i];
  const double shift = *std::max_element(coef.begin(), coef.end());
  if (!std::isfinite(shift)) throw std::runtime_error("conditional density vanishes");
  for (double& c : coef) c = std::exp(c - shift);

  DensityGrid out;
  std::vector<double> scaled(resolution);
  for (std::size_t r = 0; r < resolution; ++r) {
    scaled[r] = static_cast<double>(r) / static_cast<double>(resolution - 1);
  }
  // Kernel factor per (run, grid point) along each plotted axis.
  std::vector<std::vector<double>> kernel(plot_dims.size());
  for (std::size_t a = 0; a < plot_dims.size(); ++a) {
    const std::size_t k = plot_dims[a];
    DensityAxis axis{m.param_names()[k], {}};
    for (double u : scaled) axis.values.push_back(m.unscale_param(k, u));
    out.axes.push_back(std::move(axis));
    auto& kv = kernel[a];
    kv.resize(m.runs() * resolution);
    const double sigma = m.bandwidths()[k];
    for (std::size_t i = 0; i < m.runs(); ++i) {
      const double xk = m.point(i)[k];
      for (std::size_t r = 0; r < resolution; ++r) {
        const double z = (scaled[r] - xk) / sigma;
        kv[i * resolution + r] = std::exp(-0.5 * z * z);
      }
    }
  }

  const std::size_t cols = plot_dims.size() == 2 ? resolution : 1;
  std::vector<double> raw(resolution * cols, 0.0);
  // Each cell sums runs in index order, so the result does not depend on
  // how rows are spread over threads.
  parallel_for(resolution, threads, [&](std::size_t r) {
    double* row = raw.data() + r * cols;
    for (std::size_t i = 0; i < m.runs(); ++i) {
      const double ca = coef[i] * kernel[0][i * resolution + r];
      if (ca == 0.0) continue;
      if (cols == 1) {
        row[0] += ca;
      } else {
        const double* kb = kernel[1].data() + i * resolution;
        for (std::size_t c = 0; c < cols; ++c) row[c] += ca * kb[c];
      }
    }
  });

  const double z = integrate_values(out.axes, raw);
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw std::runtime_error("conditional density vanishes on the grid");
  }
  double norm = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(m.dims()));
  for (double s : m.bandwidths()) norm /= s;
  out.normalization = norm * std::exp(shift) * z;
  out.density.resize(raw.size());
  for (std::size_t c = 0; c < raw.size(); ++c) out.density[c] = raw[c] / z;
  return out;
}

PosteriorSummary ConditionalDensity::summarize(std::size_t param, double level,
                                               std::size_t resolution) const {
  if (!(level > 0.0 && level <= 1.0)) {
    throw std::invalid_argument("credible level must lie in (0, 1]");
  }
  const std::size_t dims[] = {param};
  const DensityGrid g = grid(dims, resolution, SliceMode::marginalize);
  const auto& x = g.axes[0].values;
  const auto w = trapezoid_weights(x);

  PosteriorSummary out;
  out.parameter = g.axes[0].name;
  out.level = level;
  double mass = 0.0;
  double first = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mass += w[i] * g.density[i];
    first += w[i] * g.density[i] * x[i];
  }
  out.mean = first / mass;
  const auto peak = std::max_element(g.density.begin(), g.density.end());
  out.mode = x[static_cast<std::size_t>(peak - g.density.begin())];

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return g.density[a] > g.density[b];
  });
  double held = 0.0;
  std::size_t lo = order.front(), hi = order.front();
  for (std::size_t i : order) {
    held += w[i] * g.density[i];
    lo = std::min(lo, i);
    hi = std::max(hi, i);
    if (held >= level * mass) break;
  }
  out.hdr_lo = x[lo];
  out.hdr_hi = x[hi];
  return out;
}

void write_grid2d_csv(std::ostream& os, const DensityGrid& grid) {
  if (grid.axes.size() != 2) throw std::invalid_argument("grid2d needs a 2-D grid");
  os << "param_a,param_b,value_a,value_b,density\n";
  const auto& a = grid.axes[0];
  const auto& b = grid.axes[1];
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    for (std::size_t j = 0; j < b.values.size(); ++j) {
      os << a.name << ',' << b.name << ',' << csv::format(a.values[i]) << ','
         << csv::format(b.values[j]) << ',' << csv::format(grid.at(i, j)) << '\n';
    }
  }
}

void write_posterior_csv(std::ostream& os,
                         const std::vector<PosteriorSummary>& summaries) {
  os << "parameter,mean,mode,hdr_lo,hdr_hi,level\n";
  for (const auto& s : summaries) {
    os << s.parameter << ',' << csv::format(s.mean) << ',' << csv::format(s.mode)
       << ',' << csv::format(s.hdr_lo) << ',' << csv::format(s.hdr_hi) << ','
       << csv::format(s.level) << '\n';
  }
}

}  // namespace abcnet
