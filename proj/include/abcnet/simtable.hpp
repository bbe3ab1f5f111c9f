#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abcnet/regression.hpp"

namespace abcnet {

struct StatVector {
  std::vector<std::string> names;
  std::vector<Stat> values;

  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws std::out_of_range for an unknown name.
  Stat get(std::string_view name) const;
  bool operator==(const StatVector&) const = default;
};

/// One simulation: the parameter draw, its prior density, and the summary
/// statistics of the data it produced.
struct SimRun {
  std::size_t run_id = 0;
  std::vector<double> params;
  double prior_density = 1.0;
  std::vector<Stat> stats;
  bool operator==(const SimRun&) const = default;
};

struct ParamBounds {
  double pmin;
  double pmax;
  bool operator==(const ParamBounds&) const = default;
};

struct SimTable {
  std::vector<std::string> param_names;
  std::vector<ParamBounds> param_bounds;
  std::vector<std::string> stat_names;
  std::vector<SimRun> runs;

  std::optional<std::size_t> param_index(std::string_view name) const;
  std::optional<std::size_t> stat_index(std::string_view name) const;
  /// Throws std::invalid_argument if a run's shape disagrees with the names.
  void validate() const;
  bool operator==(const SimTable&) const = default;
};

/// stats.csv: run_id,prior_density,<parameters...>,<statistics...>; a missing
/// statistic is an empty field.
void write_stats_csv(std::ostream& os, const SimTable& table);
/// prior.csv: parameter,pmin,pmax in parameter order.
void write_bounds_csv(std::ostream& os, const SimTable& table);

/// Rebuilds a table from stats.csv and prior.csv. Columns named in the bounds
/// file are parameters; the remaining columns are statistics.
SimTable read_sim_table(std::istream& stats, std::istream& bounds);

/// observed.csv: statistic,value
void write_observed_csv(std::ostream& os, const StatVector& observed);
StatVector read_observed_csv(std::istream& is);

}  // namespace abcnet
