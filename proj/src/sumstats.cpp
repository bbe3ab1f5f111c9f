#include "abcnet/sumstats.hpp"

#include <algorithm>
#include <stdexcept>

#include "abcnet/csv.hpp"

namespace abcnet {

const std::vector<std::string>& linktrace_stat_names() {
  static const std::vector<std::string> names{
      stat_name::kMeanDegreeRecruited, stat_name::kMeanDegreeReported,
      stat_name::kMeanDegreeInfected,  stat_name::kDegreeDiffInfected,
      stat_name::kInfectionProp,       stat_name::kDeltaDegree,
      stat_name::kDeltaDepth,          stat_name::kDeltaUsed,
      stat_name::kDeltaInfect};
  return names;
}

Stat pr_link_used(const SampleRow& row) {
  const int available = row.is_leap() ? row.pop_degree : row.pop_degree - 1;
  if (available <= 0) return std::nullopt;
  return static_cast<double>(row.links_recruited) / available;
}

namespace {

Stat mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

StatVector compute_stats(const SampleRecord& record) {
  const auto& rows = record.rows;
  const std::size_t n = rows.size();
  std::vector<double> recruited_deg, all_deg, infected_deg, uninfected_deg;
  std::vector<double> t, degree, depth_t, depth, used_t, used, used_w;
  std::vector<BinomialPoint> infection;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i];
    const double deg = r.pop_degree;
    const double ti = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    all_deg.push_back(deg);
    if (!r.is_leap()) recruited_deg.push_back(deg);
    (r.infected ? infected_deg : uninfected_deg).push_back(deg);
    t.push_back(ti);
    degree.push_back(deg);
    if (r.depth) {
      depth_t.push_back(ti);
      depth.push_back(*r.depth);
    }
    if (const Stat u = pr_link_used(r)) {
      used_t.push_back(ti);
      used.push_back(*u);
      used_w.push_back(deg);
    }
    infection.push_back({ti, r.infected ? 1 : 0, 1});
  }

  StatVector out;
  out.names = linktrace_stat_names();
  const Stat mean_infected = mean_of(infected_deg);
  const Stat mean_uninfected = mean_of(uninfected_deg);
  Stat diff;
  if (mean_infected && mean_uninfected) diff = *mean_infected - *mean_uninfected;
  Stat prop;
  if (n > 0) prop = static_cast<double>(infected_deg.size()) / static_cast<double>(n);

  out.values = {mean_of(recruited_deg),
                mean_of(all_deg),
                mean_infected,
                diff,
                prop,
                n > 1 ? ols_slope(t, degree) : std::nullopt,
                ols_slope(depth_t, depth),
                weighted_slope(used_t, used, used_w),
                log_odds_slope(infection)};
  return out;
}

std::optional<CubicFit> cubic_fit_pair(const SimTable& table, std::size_t param,
                                       std::size_t stat) {
  std::vector<double> x, y;
  for (const auto& run : table.runs) {
    if (!run.stats[stat]) continue;
    x.push_back(*run.stats[stat]);
    y.push_back(run.params[param]);
  }
  return CubicFit::fit(x, y);
}

ScreeningReport cubic_screen(const SimTable& table) {
  table.validate();
  ScreeningReport report;
  for (std::size_t p = 0; p < table.param_names.size(); ++p) {
    for (std::size_t s = 0; s < table.stat_names.size(); ++s) {
      ScreeningEntry e;
      e.parameter = table.param_names[p];
      e.statistic = table.stat_names[s];
      for (const auto& run : table.runs) e.n += run.stats[s] ? 1 : 0;
      if (const auto fit = cubic_fit_pair(table, p, s)) {
        e.f_statistic = fit->f_statistic();
        e.r_squared = fit->r_squared();
      }
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

void write_screening_csv(std::ostream& os, const ScreeningReport& report) {
  os << "parameter,statistic,F,R2\n";
  for (const auto& e : report.entries) {
    os << e.parameter << ',' << e.statistic << ',' << csv::format(e.f_statistic)
       << ',' << csv::format(e.r_squared) << '\n';
  }
}

std::vector<CurvePoint> moving_average(std::span<const double> x,
                                       std::span<const double> y, double window,
                                       double step) {
  if (x.size() != y.size()) throw std::invalid_argument("moving_average: length mismatch");
  if (!(window > 0.0) || !(step > 0.0)) {
    throw std::invalid_argument("moving_average: window and step must be positive");
  }
  std::vector<CurvePoint> out;
  if (x.empty()) return out;
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  const double lo = x[order.front()];
  const double hi = x[order.back()];
  const double half = 0.5 * window;
  std::size_t begin = 0, end = 0;
  for (std::size_t k = 0;; ++k) {
    const double g = lo + static_cast<double>(k) * step;
    if (g > hi + 1e-12) break;
    while (end < order.size() && x[order[end]] <= g + half) ++end;
    while (begin < end && x[order[begin]] < g - half) ++begin;
    if (end == begin) continue;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += y[order[i]];
    out.push_back({g, sum / static_cast<double>(end - begin)});
  }
  return out;
}

}  // namespace abcnet
