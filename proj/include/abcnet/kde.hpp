#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abcnet/simtable.hpp"

namespace abcnet {

enum class Weighting {
  prior_inverse,  // each run carries mass 1 / prior density
  uniform,        // unit mass per run
};

enum class SliceMode {
  marginalize,  // average non-plotted parameters over a lattice
  fix_at_mode,  // hold non-plotted parameters at their marginal modes
};

/// Scaling bounds for a statistic column: the observed range widened by
/// range / (n + 1) on each side. Throws std::invalid_argument when the
/// values are constant.
std::pair<double, double> stat_scaling_bounds(std::span<const double> values);

/// Per-dimension Gaussian bandwidths for n points of dimension d stored
/// row-major: n^(-1/(d+4)) times the sample standard deviation, floored at
/// 1e-4 (which is also the result when n < 2).
std::vector<double> kde_bandwidths(std::span<const double> points, std::size_t n,
                                   std::size_t d);

inline constexpr double kMinBandwidth = 1e-4;

/// Gaussian product-kernel density over simulation points scaled into the
/// unit hypercube: parameters by their prior bounds, conditioned statistics
/// by stat_scaling_bounds. Parameter dimensions come first.
class KdeModel {
 public:
  /// Runs missing any of the `conditioned` statistics are dropped (see
  /// dropped_runs). Throws std::invalid_argument when fewer than two runs
  /// remain, a statistic is unknown or constant, or a prior density is not
  /// positive and finite.
  KdeModel(const SimTable& table, const std::vector<std::string>& conditioned,
           Weighting weighting = Weighting::prior_inverse);

  std::size_t runs() const { return weights_.size(); }
  std::size_t dims() const { return param_dims() + stat_dims(); }
  std::size_t param_dims() const { return param_names_.size(); }
  std::size_t stat_dims() const { return stat_names_.size(); }
  std::size_t dropped_runs() const { return dropped_; }

  const std::vector<std::string>& param_names() const { return param_names_; }
  const std::vector<std::string>& stat_names() const { return stat_names_; }
  const std::vector<double>& bandwidths() const { return bandwidths_; }
  const std::vector<double>& weights() const { return weights_; }
  std::span<const double> point(std::size_t run) const {
    return {points_.data() + run * dims(), dims()};
  }

  const ParamBounds& param_bounds(std::size_t j) const { return param_bounds_[j]; }
  const std::pair<double, double>& stat_bounds(std::size_t j) const {
    return stat_bounds_[j];
  }
  double scale_param(std::size_t j, double value) const;
  double unscale_param(std::size_t j, double scaled) const;
  double scale_stat(std::size_t j, double value) const;

  /// (2 pi)^(-d/2) prod(1/sigma_j) sum_i w_i exp(-1/2 sum_j (q_j - x_ij)^2 / sigma_j^2)
  /// at a query in scaled coordinates.
  double density(std::span<const double> scaled_query) const;

 private:
  std::vector<std::string> param_names_;
  std::vector<std::string> stat_names_;
  std::vector<ParamBounds> param_bounds_;
  std::vector<std::pair<double, double>> stat_bounds_;
  std::vector<double> points_;
  std::vector<double> bandwidths_;
  std::vector<double> weights_;
  std::size_t dropped_ = 0;
};

struct DensityAxis {
  std::string name;
  std::vector<double> values;  // original parameter units
};

/// Normalized conditional density on a 1-D or 2-D parameter grid, stored
/// row-major with the last axis fastest.
struct DensityGrid {
  std::vector<DensityAxis> axes;
  std::vector<double> density;
  /// Trapezoidal integral, in original units, of the density before
  /// normalization.
  double normalization = 0.0;

  double at(std::size_t i) const { return density[i]; }
  double at(std::size_t i, std::size_t j) const {
    return density[i * axes[1].values.size() + j];
  }
};

/// Trapezoidal integral of a grid's density over its axes.
double integrate(const DensityGrid& grid);

struct PosteriorSummary {
  std::string parameter;
  double mean = 0.0;
  double mode = 0.0;
  double hdr_lo = 0.0;
  double hdr_hi = 0.0;
  double level = 0.0;
};

/// The model restricted to the hyperplane of observed statistics. Holds a
/// reference to `model`, which must outlive it.
class ConditionalDensity {
 public:
  /// Throws std::invalid_argument when an observed statistic is missing and
  /// std::domain_error when one lies more than three bandwidths outside the
  /// scaled unit interval; smaller excursions are recorded in warnings().
  ConditionalDensity(const KdeModel& model, const StatVector& observed);

  const KdeModel& model() const { return *model_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::span<const double> observed_scaled() const { return observed_scaled_; }

  /// H(x, y*) at scaled parameter coordinates x.
  double joint_density(std::span<const double> scaled_params) const;

  /// Density over `plot_dims` (one or two parameter indices) on `resolution`
  /// points per axis spanning each parameter's bounds. With `marginalize`,
  /// every other parameter is averaged over `resolution` lattice midpoints.
  DensityGrid grid(std::span<const std::size_t> plot_dims, std::size_t resolution,
                   SliceMode mode = SliceMode::marginalize,
                   unsigned threads = 1) const;

  /// Mean, mode, and highest-density interval holding mass `level`, from a
  /// marginal grid of `resolution` points.
  PosteriorSummary summarize(std::size_t param, double level,
                             std::size_t resolution = 512) const;

 private:
  std::vector<double> slice_log_factors(std::span<const std::size_t> plot_dims,
                                        std::size_t resolution,
                                        SliceMode mode) const;

  const KdeModel* model_;
  std::vector<double> observed_scaled_;
  std::vector<double> log_base_;  // log w_i - 1/2 sum over statistic dims
  std::vector<std::string> warnings_;
};

/// grid2d.csv: param_a,param_b,value_a,value_b,density
void write_grid2d_csv(std::ostream& os, const DensityGrid& grid);
/// posterior.csv: parameter,mean,mode,hdr_lo,hdr_hi,level
void write_posterior_csv(std::ostream& os,
                         const std::vector<PosteriorSummary>& summaries);

}  // namespace abcnet
