#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "abcnet/random.hpp"

namespace abcnet {

struct Uniform {
  double lo;
  double hi;
};

/// offset + K where K counts failures before the first success, with
/// success probability 1 / (mean + 1) so that E[K] = mean.
struct ShiftedGeometric {
  double offset;
  double mean;
};

struct DiscreteUniform {
  long lo;
  long hi;
};

using Distribution = std::variant<Uniform, ShiftedGeometric, DiscreteUniform>;

/// Inverse CDF. `u` is in [0, 1).
double quantile(const Distribution& dist, double u);

/// Density (uniform) or probability mass (discrete, geometric) at `x`.
double marginal_density(const Distribution& dist, double x);

/// Natural scaling bounds: the support for bounded distributions; for the
/// geometric, offset up to the 0.99 quantile.
std::pair<double, double> default_bounds(const Distribution& dist);

std::string to_string(const Distribution& dist);

/// Parses "uniform(lo, hi)", "geometric(offset, mean)" or "discrete(lo, hi)".
/// Throws std::invalid_argument on malformed input.
Distribution parse_distribution(std::string_view text);

struct PriorEntry {
  std::string name;
  Distribution dist;
  double pmin;
  double pmax;
};

PriorEntry make_entry(std::string name, Distribution dist);

/// Ordered joint prior of independent parameters. Entry order defines the
/// parameter-dimension order everywhere downstream.
class PriorSpec {
 public:
  PriorSpec() = default;
  /// Throws std::invalid_argument unless every entry has pmin < pmax, a
  /// unique name, and (for bounded distributions) support inside its bounds.
  explicit PriorSpec(std::vector<PriorEntry> entries);

  const std::vector<PriorEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const PriorEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;

  /// Product of the marginal densities.
  double density(std::span<const double> values) const;

 private:
  std::vector<PriorEntry> entries_;
};

struct ParameterSet {
  std::vector<double> values;
  double prior_density = 0.0;
};

ParameterSet draw_parameters(const PriorSpec& prior, Rng& rng);

/// Deterministic counterpart of draw_parameters: entry i at quantile u[i].
ParameterSet parameters_at_quantiles(const PriorSpec& prior,
                                     std::span<const double> u);

}  // namespace abcnet
