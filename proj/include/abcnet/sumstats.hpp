#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "abcnet/linktrace.hpp"
#include "abcnet/regression.hpp"
#include "abcnet/simtable.hpp"

namespace abcnet {

namespace stat_name {
inline constexpr const char* kMeanDegreeRecruited = "mean_degree_recruited";
inline constexpr const char* kMeanDegreeReported = "mean_degree_reported";
inline constexpr const char* kMeanDegreeInfected = "mean_degree_infected";
inline constexpr const char* kDegreeDiffInfected = "degree_diff_infected";
inline constexpr const char* kInfectionProp = "infection_prop";
inline constexpr const char* kDeltaDegree = "d_degree";
inline constexpr const char* kDeltaDepth = "d_depth";
inline constexpr const char* kDeltaUsed = "d_used";
inline constexpr const char* kDeltaInfect = "d_infect";
}  // namespace stat_name

/// The nine link-trace statistics, in output order.
const std::vector<std::string>& linktrace_stat_names();

/// Share of a node's links, excluding the one it was recruited through, that
/// recruited a new sample member. Empty when that share has no denominator.
Stat pr_link_used(const SampleRow& row);

/// Nine statistics of a sample whose depths are filled (see node_depth).
/// Slopes are against normalized sampling order t = order / (n - 1).
/// Undefined statistics are left empty rather than zeroed.
StatVector compute_stats(const SampleRecord& record);

struct ScreeningEntry {
  std::string parameter;
  std::string statistic;
  std::size_t n = 0;
  Stat f_statistic;
  Stat r_squared;
};

struct ScreeningReport {
  std::vector<ScreeningEntry> entries;
};

/// Cubic fit of parameter `param` on statistic `stat` over runs where the
/// statistic is present.
std::optional<CubicFit> cubic_fit_pair(const SimTable& table, std::size_t param,
                                       std::size_t stat);

/// Every (parameter, statistic) cubic regression. Pairs with a constant
/// statistic, or fewer than five usable runs, are reported without F or R^2.
ScreeningReport cubic_screen(const SimTable& table);

/// screening.csv: parameter,statistic,F,R2
void write_screening_csv(std::ostream& os, const ScreeningReport& report);

struct CurvePoint {
  double x;
  double y;
};

/// Centered moving average of y over x: at each grid point g = min(x) + k*step
/// the mean of the y whose x lies within window/2 of g. Grid points with no
/// data in their window are skipped.
std::vector<CurvePoint> moving_average(std::span<const double> x,
                                       std::span<const double> y, double window,
                                       double step);

}  // namespace abcnet
