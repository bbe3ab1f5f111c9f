#include "abcnet/simtable.hpp"

#include <algorithm>
#include <stdexcept>

#include "abcnet/csv.hpp"

namespace abcnet {
namespace {

std::optional<std::size_t> find_name(const std::vector<std::string>& names,
                                     std::string_view name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

std::optional<std::size_t> StatVector::index_of(std::string_view name) const {
  return find_name(names, name);
}

Stat StatVector::get(std::string_view name) const {
  const auto i = index_of(name);
  if (!i) throw std::out_of_range("no statistic named '" + std::string(name) + "'");
  return values[*i];
}

std::optional<std::size_t> SimTable::param_index(std::string_view name) const {
  return find_name(param_names, name);
}

std::optional<std::size_t> SimTable::stat_index(std::string_view name) const {
  return find_name(stat_names, name);
}

void SimTable::validate() const {
  if (param_bounds.size() != param_names.size()) {
    throw std::invalid_argument("one bound pair is needed per parameter");
  }
  for (const auto& run : runs) {
    if (run.params.size() != param_names.size() ||
        run.stats.size() != stat_names.size()) {
      throw std::invalid_argument("run " + std::to_string(run.run_id) +
                                  " does not match the table shape");
    }
  }
}

void write_stats_csv(std::ostream& os, const SimTable& table) {
  table.validate();
  os << "run_id,prior_density";
  for (const auto& n : table.param_names) os << ',' << n;
  for (const auto& n : table.stat_names) os << ',' << n;
  os << '\n';
  for (const auto& run : table.runs) {
    os << run.run_id << ',' << csv::format(run.prior_density);
    for (double p : run.params) os << ',' << csv::format(p);
    for (const auto& s : run.stats) os << ',' << csv::format(s);
    os << '\n';
  }
}

void write_bounds_csv(std::ostream& os, const SimTable& table) {
  table.validate();
  os << "parameter,pmin,pmax\n";
  for (std::size_t i = 0; i < table.param_names.size(); ++i) {
    os << table.param_names[i] << ',' << csv::format(table.param_bounds[i].pmin)
       << ',' << csv::format(table.param_bounds[i].pmax) << '\n';
  }
}

SimTable read_sim_table(std::istream& stats, std::istream& bounds) {
  SimTable table;
  std::string line;
  if (!csv::read_line(bounds, line) || line != "parameter,pmin,pmax") {
    throw std::invalid_argument("bounds file lacks header parameter,pmin,pmax");
  }
  while (csv::read_line(bounds, line)) {
    const auto f = csv::split(line);
    if (f.size() != 3) throw std::invalid_argument("bad bounds row: " + line);
    table.param_names.push_back(f[0]);
    table.param_bounds.push_back(
        {csv::parse_double(f[1], "pmin"), csv::parse_double(f[2], "pmax")});
  }

  if (!csv::read_line(stats, line)) throw std::invalid_argument("empty stats file");
  const auto header = csv::split(line);
  if (header.size() < 2 || header[0] != "run_id" || header[1] != "prior_density") {
    throw std::invalid_argument("stats file must start with run_id,prior_density");
  }
  const std::size_t np = table.param_names.size();
  if (header.size() < 2 + np) {
    throw std::invalid_argument("stats file has fewer columns than parameters");
  }
  for (std::size_t i = 0; i < np; ++i) {
    if (header[2 + i] != table.param_names[i]) {
      throw std::invalid_argument("stats column '" + header[2 + i] +
                                  "' does not match parameter '" +
                                  table.param_names[i] + "'");
    }
  }
  table.stat_names.assign(header.begin() + static_cast<std::ptrdiff_t>(2 + np),
                          header.end());

  while (csv::read_line(stats, line)) {
    const auto f = csv::split(line);
    if (f.size() != header.size()) {
      throw std::invalid_argument("stats row has " + std::to_string(f.size()) +
                                  " fields, expected " +
                                  std::to_string(header.size()));
    }
    SimRun run;
    run.run_id = static_cast<std::size_t>(csv::parse_int(f[0], "run_id"));
    run.prior_density = csv::parse_double(f[1], "prior_density");
    for (std::size_t i = 0; i < np; ++i) {
      run.params.push_back(csv::parse_double(f[2 + i], table.param_names[i]));
    }
    for (std::size_t i = 2 + np; i < f.size(); ++i) {
      run.stats.push_back(csv::parse_optional(f[i], header[i]));
    }
    table.runs.push_back(std::move(run));
  }
  return table;
}

void write_observed_csv(std::ostream& os, const StatVector& observed) {
  os << "statistic,value\n";
  for (std::size_t i = 0; i < observed.names.size(); ++i) {
    os << observed.names[i] << ',' << csv::format(observed.values[i]) << '\n';
  }
}

StatVector read_observed_csv(std::istream& is) {
  std::string line;
  if (!csv::read_line(is, line) || line != "statistic,value") {
    throw std::invalid_argument("observed file lacks header statistic,value");
  }
  StatVector out;
  while (csv::read_line(is, line)) {
    const auto f = csv::split(line);
    if (f.size() != 2) throw std::invalid_argument("bad observed row: " + line);
    out.names.push_back(f[0]);
    out.values.push_back(csv::parse_optional(f[1], f[0]));
  }
  return out;
}

}  // namespace abcnet
