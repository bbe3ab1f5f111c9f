#include "abcnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "abcnet/csv.hpp"
#include "abcnet/parallel.hpp"
#include "abcnet/population.hpp"

namespace abcnet {
namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& f : csv::split(s)) {
    auto t = trim(f);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

const std::vector<std::string>& model_param_names(Model m) {
  return m == Model::linktrace ? linktrace_param_names() : citation_param_names();
}

// Default for a parameter outside both the prior and [fixed].
std::optional<double> default_value(const RunConfig& c, const std::string& name) {
  if (c.model == Model::citation) {
    return name == "beta_pa" ? std::nullopt : std::optional<double>(0.0);
  }
  if (name == param_name::kPhi || name == param_name::kAlpha ||
      name == param_name::kGamma) {
    return 0.0;
  }
  if (name == param_name::kPrResponse) return 1.0;
  return std::nullopt;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return csv::parse_double(trim(v), key);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    return csv::parse_int(trim(v), key);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + " must be true or false");
}

struct OpenedFile {
  std::ifstream in;
  explicit OpenedFile(const fs::path& p) : in(p) {
    if (!in) throw ConfigError("cannot open " + p.string());
  }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

}  // namespace

const std::vector<std::string>& linktrace_param_names() {
  static const std::vector<std::string> names{
      param_name::kAvgDegree, param_name::kNodes, param_name::kPhi,
      param_name::kAlpha,     param_name::kGamma, param_name::kPrResponse};
  return names;
}

const std::vector<std::string>& model_stat_names(Model model) {
  return model == Model::linktrace ? linktrace_stat_names() : citation_stat_names();
}

void RunConfig::validate() const {
  if (runs < 2) throw ConfigError("runs must be at least 2");
  if (n_samp == 0) throw ConfigError("n_samp must be positive");
  const auto& names = model_param_names(model);
  for (const auto& e : prior.entries()) {
    if (std::find(names.begin(), names.end(), e.name) == names.end()) {
      throw ConfigError("unknown parameter '" + e.name + "' in [prior]");
    }
    if (fixed.count(e.name)) {
      throw ConfigError("parameter '" + e.name + "' is both fixed and in the prior");
    }
  }
  for (const auto& [name, v] : fixed) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ConfigError("unknown parameter '" + name + "' in [fixed]");
    }
  }
  for (const auto& name : names) {
    if (!prior.index_of(name) && !fixed.count(name) && !default_value(*this, name)) {
      throw ConfigError("parameter '" + name + "' needs a prior or a fixed value");
    }
  }
  const auto& stats = model_stat_names(model);
  for (const auto& s : kde.conditioned) {
    if (std::find(stats.begin(), stats.end(), s) == stats.end()) {
      throw ConfigError("unknown statistic '" + s + "' in [kde] conditioned");
    }
  }
  if (kde.resolution < 2) throw ConfigError("kde resolution must be at least 2");
  if (!(kde.level > 0.0 && kde.level <= 1.0)) throw ConfigError("kde level must be in (0, 1]");
  try {
    case_table.validate();
    seed_history.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> RunConfig::full_parameters(std::span<const double> values) const {
  std::vector<double> out;
  for (const auto& name : model_param_names(model)) {
    if (const auto i = prior.index_of(name)) {
      out.push_back(values[*i]);
    } else if (const auto it = fixed.find(name); it != fixed.end()) {
      out.push_back(it->second);
    } else {
      out.push_back(*default_value(*this, name));
    }
  }
  return out;
}

RunConfig parse_config(std::istream& is, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  static const std::set<std::string> sections{"run",       "prior",    "bounds", "fixed",
                                              "linktrace", "citation", "kde"};
  for (const auto& [name, sub] : tree) {
    if (!sections.count(name)) throw ConfigError("unknown section [" + name + "]");
  }
  auto resolve = [&](const std::string& p) {
    fs::path path(trim(p));
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  auto each = [&](const char* section, auto&& fn) {
    if (const auto sub = tree.get_child_optional(section)) {
      for (const auto& [key, node] : *sub) fn(key, node.data());
    }
  };
  auto unknown = [](const char* section, const std::string& key) {
    return ConfigError("unknown key '" + key + "' in [" + section + "]");
  };

  RunConfig c;
  each("run", [&](const std::string& k, const std::string& v) {
    if (k == "model") {
      const auto m = trim(v);
      if (m == "linktrace") {
        c.model = Model::linktrace;
      } else if (m == "citation") {
        c.model = Model::citation;
      } else {
        throw ConfigError("model must be linktrace or citation");
      }
    } else if (k == "runs") {
      const auto n = to_int(k, v);
      if (n < 0) throw ConfigError("runs must be positive");
      c.runs = static_cast<std::size_t>(n);
    } else if (k == "seed") {
      c.seed = static_cast<std::uint64_t>(to_int(k, v));
    } else if (k == "threads") {
      const auto n = to_int(k, v);
      if (n < 0) throw ConfigError("threads must be non-negative");
      c.threads = static_cast<unsigned>(n);
    } else if (k == "out") {
      c.out = resolve(v);
    } else if (k == "label") {
      c.label = trim(v);
    } else {
      throw unknown("run", k);
    }
  });

  std::map<std::string, std::pair<double, double>> bounds;
  each("bounds", [&](const std::string& k, const std::string& v) {
    const auto parts = split_list(v);
    if (parts.size() != 2) throw ConfigError("bounds for '" + k + "' need two values");
    bounds[k] = {to_double(k, parts[0]), to_double(k, parts[1])};
  });
  std::vector<PriorEntry> entries;
  each("prior", [&](const std::string& k, const std::string& v) {
    try {
      entries.push_back(make_entry(k, parse_distribution(v)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("prior for '" + k + "': " + e.what());
    }
    if (const auto it = bounds.find(k); it != bounds.end()) {
      entries.back().pmin = it->second.first;
      entries.back().pmax = it->second.second;
      bounds.erase(it);
    }
  });
  if (!bounds.empty()) {
    throw ConfigError("bounds given for '" + bounds.begin()->first +
                      "', which has no prior");
  }
  each("fixed", [&](const std::string& k, const std::string& v) {
    c.fixed[k] = to_double(k, v);
  });

  each("linktrace", [&](const std::string& k, const std::string& v) {
    if (k == "n_samp") {
      const auto n = to_int(k, v);
      if (n <= 0) throw ConfigError("n_samp must be positive");
      c.n_samp = static_cast<std::size_t>(n);
    } else if (k == "pr_response") {
      c.fixed[param_name::kPrResponse] = to_double(k, v);
    } else if (k == "order") {
      const auto o = trim(v);
      if (o == "fifo") {
        c.order = QueueOrder::fifo;
      } else if (o == "random_delay") {
        c.order = QueueOrder::random_delay;
      } else {
        throw ConfigError("order must be fifo or random_delay");
      }
    } else if (k == "write_samples") {
      c.write_samples = to_bool(k, v);
    } else {
      throw unknown("linktrace", k);
    }
  });

  std::optional<fs::path> seed_cases, seed_counts;
  each("citation", [&](const std::string& k, const std::string& v) {
    if (k == "case_table") {
      OpenedFile f(resolve(v));
      try {
        c.case_table = read_case_table_csv(f.in);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (k == "seed_citations") {
      seed_cases = resolve(v);
    } else if (k == "seed_counts") {
      seed_counts = resolve(v);
    } else if (k == "pooling") {
      const auto p = trim(v);
      if (p == "pooled") {
        c.pooling = ColdPooling::pooled;
      } else if (p == "per_case") {
        c.pooling = ColdPooling::per_case;
      } else {
        throw ConfigError("pooling must be pooled or per_case");
      }
    } else {
      throw unknown("citation", k);
    }
  });
  if (seed_cases.has_value() != seed_counts.has_value()) {
    throw ConfigError("seed_citations and seed_counts must be given together");
  }
  if (seed_cases) {
    OpenedFile a(*seed_cases), b(*seed_counts);
    try {
      c.seed_history = read_history_csv(a.in, b.in);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  each("kde", [&](const std::string& k, const std::string& v) {
    if (k == "conditioned") {
      c.kde.conditioned = split_list(v);
    } else if (k == "resolution") {
      const auto n = to_int(k, v);
      if (n < 2) throw ConfigError("resolution must be at least 2");
      c.kde.resolution = static_cast<std::size_t>(n);
    } else if (k == "level") {
      c.kde.level = to_double(k, v);
    } else if (k == "slice") {
      const auto s = trim(v);
      if (s == "marginalize") {
        c.kde.slice = SliceMode::marginalize;
      } else if (s == "fix_at_mode") {
        c.kde.slice = SliceMode::fix_at_mode;
      } else {
        throw ConfigError("slice must be marginalize or fix_at_mode");
      }
    } else if (k == "weighting") {
      const auto s = trim(v);
      if (s == "prior_inverse") {
        c.kde.weighting = Weighting::prior_inverse;
      } else if (s == "uniform") {
        c.kde.weighting = Weighting::uniform;
      } else {
        throw ConfigError("weighting must be prior_inverse or uniform");
      }
    } else if (k == "screen_r2") {
      c.kde.screen_r2 = to_double(k, v);
    } else if (k == "screen_level") {
      c.kde.screen_level = to_double(k, v);
    } else {
      throw unknown("kde", k);
    }
  });

  // beta_pa named nowhere: default U(0, 2).
  if (c.model == Model::citation) {
    const bool named = c.fixed.count("beta_pa") ||
                       std::any_of(entries.begin(), entries.end(),
                                   [](const PriorEntry& e) { return e.name == "beta_pa"; });
    if (!named) entries.push_back(make_entry("beta_pa", Uniform{0.0, 2.0}));
  }
  // pr_response from [linktrace] only fills in when the prior leaves it out.
  if (std::any_of(entries.begin(), entries.end(), [](const PriorEntry& e) {
        return e.name == param_name::kPrResponse;
      })) {
    c.fixed.erase(param_name::kPrResponse);
  }
  try {
    c.prior = PriorSpec(std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  OpenedFile f(path);
  return parse_config(f.in, path.parent_path());
}

namespace {

StatVector simulate_values(const RunConfig& config, std::span<const double> full,
                           Rng& rng, SampleRecord* sample,
                           CitationHistory* history) {
  if (config.model == Model::linktrace) {
    const double nodes = std::round(full[1]);
    if (!(nodes >= 2.0)) throw std::invalid_argument("n_nodes must be at least 2");
    PopulationParams p{full[0], static_cast<std::size_t>(nodes), full[2], full[3],
                       full[4]};
    const auto graph = generate_population(p, rng);
    auto record = node_depth(link_trace_sample(graph, config.n_samp, full[5], rng,
                                               LinkTraceOptions{config.order, {}}));
    auto stats = compute_stats(record);
    if (sample) *sample = std::move(record);
    return stats;
  }
  auto h = simulate_history(attract_params_from(full), config.case_table,
                            config.seed_history, rng);
  auto stats = citation_stats(h, config.pooling);
  if (history) *history = std::move(h);
  return stats;
}

}  // namespace

SimRun simulate_run(const RunConfig& config, std::size_t index, SampleRecord* sample) {
  Rng rng = stream_for_run(config.seed, index);
  const ParameterSet draw = draw_parameters(config.prior, rng);
  const auto full = config.full_parameters(draw.values);
  const StatVector stats = simulate_values(config, full, rng, sample, nullptr);
  return SimRun{index, draw.values, draw.prior_density, stats.values};
}

RoundResult simulate_round(const RunConfig& config) {
  config.validate();
  const std::size_t n = config.runs;
  std::vector<std::optional<SimRun>> slots(n);
  std::vector<std::string> errors(n);
  const fs::path sample_dir = config.out / "samples";
  if (config.write_samples && config.model == Model::linktrace) {
    fs::create_directories(sample_dir);
  }
  parallel_for(n, config.threads, [&](std::size_t i) {
    try {
      SampleRecord record;
      const bool keep = config.write_samples && config.model == Model::linktrace;
      slots[i] = simulate_run(config, i, keep ? &record : nullptr);
      if (keep) {
        auto os = open_out(sample_dir / ("sample_" + std::to_string(i) + ".csv"));
        write_sample_csv(os, record);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown failure";
    }
  });

  RoundResult result;
  result.table.param_names = config.prior.names();
  for (const auto& e : config.prior.entries()) {
    result.table.param_bounds.push_back({e.pmin, e.pmax});
  }
  result.table.stat_names = model_stat_names(config.model);
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      result.table.runs.push_back(std::move(*slots[i]));
    } else {
      result.failures.emplace_back(i, errors[i]);
    }
  }
  if (result.failures.size() * 10 > n) {
    throw RoundFailure(std::to_string(result.failures.size()) + " of " +
                       std::to_string(n) + " runs failed; first: " +
                       result.failures.front().second);
  }
  return result;
}

RoundResult run_round(const RunConfig& config) {
  fs::create_directories(config.out);
  RoundResult result = simulate_round(config);
  {
    auto os = open_out(config.out / "stats.csv");
    write_stats_csv(os, result.table);
  }
  {
    auto os = open_out(config.out / "prior.csv");
    write_bounds_csv(os, result.table);
  }
  const fs::path failures = config.out / "failures.csv";
  if (!result.failures.empty()) {
    auto os = open_out(failures);
    os << "run_id,message\n";
    for (const auto& [id, msg] : result.failures) {
      std::string clean = msg;
      std::replace(clean.begin(), clean.end(), ',', ';');
      std::replace(clean.begin(), clean.end(), '\n', ' ');
      os << id << ',' << clean << '\n';
    }
  } else {
    fs::remove(failures);
  }
  return result;
}

StatVector observe(const RunConfig& config, const std::map<std::string, double>& truth,
                   std::uint64_t seed, SampleRecord* sample, CitationHistory* history) {
  const auto& names = model_param_names(config.model);
  for (const auto& [k, v] : truth) {
    if (std::find(names.begin(), names.end(), k) == names.end()) {
      throw ConfigError("unknown parameter '" + k + "' in truth");
    }
  }
  std::vector<double> full;
  for (const auto& name : names) {
    if (const auto it = truth.find(name); it != truth.end()) {
      full.push_back(it->second);
    } else if (const auto f = config.fixed.find(name); f != config.fixed.end()) {
      full.push_back(f->second);
    } else if (const auto d = default_value(config, name); d && !config.prior.index_of(name)) {
      full.push_back(*d);
    } else {
      throw ConfigError("no true value for '" + name + "'");
    }
  }
  Rng rng = stream_for_run(seed, 0);
  return simulate_values(config, full, rng, sample, history);
}

ScreenResult screen_and_update(const SimTable& table, const StatVector& observed,
                               const PriorSpec& old_prior, double min_r2, double level) {
  ScreenResult out;
  out.report = cubic_screen(table);
  std::vector<PriorEntry> entries = old_prior.entries();
  for (std::size_t p = 0; p < table.param_names.size(); ++p) {
    const ScreeningEntry* best = nullptr;
    for (const auto& e : out.report.entries) {
      if (e.parameter != table.param_names[p] || !e.r_squared) continue;
      const auto obs = observed.index_of(e.statistic);
      if (!obs || !observed.values[*obs]) continue;
      if (!best || *e.r_squared > *best->r_squared) best = &e;
    }
    if (!best || *best->r_squared < min_r2) continue;
    const auto s = *table.stat_index(best->statistic);
    const auto fit = cubic_fit_pair(table, p, s);
    if (!fit) continue;
    auto [lo, hi] = fit->prediction_interval(*observed.get(best->statistic), level);
    lo = std::max(lo, table.param_bounds[p].pmin);
    hi = std::min(hi, table.param_bounds[p].pmax);
    if (!(lo < hi)) continue;
    out.suggestions.push_back({table.param_names[p], best->statistic, *best->r_squared, lo, hi});

    const auto idx = old_prior.index_of(table.param_names[p]);
    if (!idx) continue;
    auto& entry = entries[*idx];
    if (std::holds_alternative<Uniform>(entry.dist)) {
      entry = make_entry(entry.name, Uniform{lo, hi});
    } else {
      const long a = static_cast<long>(std::ceil(lo));
      const long b = static_cast<long>(std::floor(hi));
      if (a < b) entry = make_entry(entry.name, DiscreteUniform{a, b});
    }
  }
  out.suggested_prior = PriorSpec(std::move(entries));
  return out;
}

void write_suggestions_csv(std::ostream& os, const std::vector<PriorSuggestion>& s) {
  os << "parameter,statistic,R2,lo,hi\n";
  for (const auto& x : s) {
    os << x.parameter << ',' << x.statistic << ',' << csv::format(x.r_squared) << ','
       << csv::format(x.lo) << ',' << csv::format(x.hi) << '\n';
  }
}

void write_prior_ini(std::ostream& os, const PriorSpec& prior) {
  os << "[prior]\n";
  for (const auto& e : prior.entries()) os << e.name << " = " << to_string(e.dist) << '\n';
  os << "\n[bounds]\n";
  for (const auto& e : prior.entries()) {
    os << e.name << " = " << csv::format(e.pmin) << ", " << csv::format(e.pmax) << '\n';
  }
}

InferResult infer(const SimTable& table, const StatVector& observed,
                  const KdeSettings& settings, const fs::path& out_dir, unsigned threads) {
  std::vector<std::string> conditioned = settings.conditioned;
  if (conditioned.empty()) {
    for (std::size_t j = 0; j < observed.names.size(); ++j) {
      if (observed.values[j] && table.stat_index(observed.names[j])) {
        conditioned.push_back(observed.names[j]);
      }
    }
  }
  if (conditioned.empty()) throw ConfigError("no observed statistic matches the table");

  const KdeModel model(table, conditioned, settings.weighting);
  const ConditionalDensity cond(model, observed);
  InferResult result;
  result.warnings = cond.warnings();
  result.dropped_runs = model.dropped_runs();
  for (std::size_t k = 0; k < model.param_dims(); ++k) {
    result.posterior.push_back(cond.summarize(k, settings.level));
  }

  fs::create_directories(out_dir);
  {
    auto os = open_out(out_dir / "posterior.csv");
    write_posterior_csv(os, result.posterior);
  }
  for (std::size_t a = 0; a < model.param_dims(); ++a) {
    for (std::size_t b = a + 1; b < model.param_dims(); ++b) {
      const std::size_t dims[] = {a, b};
      const auto g = cond.grid(dims, settings.resolution, settings.slice, threads);
      auto os = open_out(out_dir / ("grid2d_" + model.param_names()[a] + "__" +
                                    model.param_names()[b] + ".csv"));
      write_grid2d_csv(os, g);
    }
  }

  const auto& cite = citation_stat_names();
  const bool citation = std::all_of(cite.begin(), cite.end(), [&](const std::string& s) {
    return table.stat_index(s).has_value();
  });
  if (citation) {
    result.abc_estimate =
        abc_estimate(table, observed, settings.weighting == Weighting::prior_inverse);
    auto os = open_out(out_dir / "abc_estimate.csv");
    os << "parameter,estimate\n";
    for (std::size_t k = 0; k < table.param_names.size(); ++k) {
      os << table.param_names[k] << ',' << csv::format((*result.abc_estimate)[k]) << '\n';
    }
  }
  return result;
}

}  // namespace abcnet
