#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "abcnet/csv.hpp"
#include "abcnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace abcnet;

namespace {

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

SimTable load_table(const fs::path& stats, std::optional<fs::path> bounds) {
  if (!bounds) bounds = stats.parent_path() / "prior.csv";
  auto s = open_in(stats);
  auto b = open_in(*bounds);
  try {
    return read_sim_table(s, b);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

StatVector load_observed(const fs::path& p) {
  auto in = open_in(p);
  try {
    return read_observed_csv(in);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<unsigned> threads;
  std::optional<std::string> out;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "master seed");
    app->add_option("--runs", runs, "number of simulations");
    app->add_option("--threads", threads, "worker threads (0 = all cores)");
    app->add_option("--out", out, "output directory");
  }
  void apply(RunConfig& c) const {
    if (seed) c.seed = *seed;
    if (runs) c.runs = *runs;
    if (threads) c.threads = *threads;
    if (out) c.out = *out;
    c.validate();
  }
};

int simulate(const std::string& config_path, const Overrides& o,
             std::optional<Model> required) {
  RunConfig c = load_config(config_path);
  if (required && c.model != *required) {
    throw ConfigError("this command needs model = citation in [run]");
  }
  o.apply(c);
  const auto r = run_round(c);
  std::cerr << c.label << ": " << r.table.runs.size() << " runs written to "
            << (c.out / "stats.csv").string();
  if (!r.failures.empty()) std::cerr << " (" << r.failures.size() << " failed)";
  std::cerr << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate Bayesian computation for link-traced and citation networks"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides over;
  auto* sim = app.add_subcommand("simulate", "run one simulation round");
  sim->add_option("--config", config_path, "round configuration (INI)")->required();
  over.add(sim);

  std::string cite_config;
  Overrides cite_over;
  auto* cite = app.add_subcommand("cite-simulate", "run one citation-model round");
  cite->add_option("--config", cite_config, "round configuration (INI)")->required();
  cite_over.add(cite);

  std::string stats_path, observed_path, bounds_path, screen_config, screen_out;
  auto* screen = app.add_subcommand("screen", "cubic screening and prior suggestions");
  screen->add_option("--stats", stats_path, "stats.csv")->required();
  screen->add_option("--bounds", bounds_path, "prior.csv (default: beside stats.csv)");
  screen->add_option("--observed", observed_path, "observed.csv")->required();
  screen->add_option("--config", screen_config, "round configuration holding the prior");
  screen->add_option("--out", screen_out, "output directory (default: beside stats.csv)");

  std::string infer_stats, infer_bounds, infer_observed, infer_out, infer_config;
  std::vector<std::string> conditioned;
  std::optional<std::size_t> resolution;
  unsigned infer_threads = 1;
  auto* inf = app.add_subcommand("infer", "posterior summaries and density grids");
  inf->add_option("--stats", infer_stats, "stats.csv")->required();
  inf->add_option("--bounds", infer_bounds, "prior.csv (default: beside stats.csv)");
  inf->add_option("--observed", infer_observed, "observed.csv")->required();
  inf->add_option("--out", infer_out, "output directory")->required();
  inf->add_option("--config", infer_config, "configuration whose [kde] section applies");
  inf->add_option("--conditioned", conditioned, "statistics to condition on")
      ->delimiter(',');
  inf->add_option("--resolution", resolution, "grid points per axis");
  inf->add_option("--threads", infer_threads, "worker threads (0 = all cores)");

  std::string obs_config, obs_out;
  std::vector<std::string> truth_args;
  std::uint64_t obs_seed = 1;
  auto* obs = app.add_subcommand("observe", "simulate one data set at known parameters");
  obs->add_option("--config", obs_config, "round configuration (INI)")->required();
  obs->add_option("--truth", truth_args, "name=value")->required();
  obs->add_option("--seed", obs_seed, "seed");
  obs->add_option("--out", obs_out, "output directory")->required();

  std::string cs_cases, cs_counts, cs_out, cs_pooling = "pooled";
  auto* cs = app.add_subcommand("cite-stats", "statistics of an observed citation history");
  cs->add_option("--citations", cs_cases, "citations.csv")->required();
  cs->add_option("--counts", cs_counts, "counts.csv")->required();
  cs->add_option("--out", cs_out, "observed.csv to write")->required();
  cs->add_option("--pooling", cs_pooling, "pooled or per_case");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return simulate(config_path, over, std::nullopt);
    if (*cite) return simulate(cite_config, cite_over, Model::citation);

    if (*screen) {
      std::optional<fs::path> bounds;
      if (!bounds_path.empty()) bounds = bounds_path;
      const SimTable table = load_table(stats_path, bounds);
      const StatVector observed = load_observed(observed_path);
      PriorSpec prior;
      double r2 = 0.5, level = 0.99;
      if (!screen_config.empty()) {
        const RunConfig c = load_config(screen_config);
        prior = c.prior;
        r2 = c.kde.screen_r2;
        level = c.kde.screen_level;
      } else {
        std::vector<PriorEntry> entries;
        for (std::size_t k = 0; k < table.param_names.size(); ++k) {
          entries.push_back(make_entry(
              table.param_names[k],
              Uniform{table.param_bounds[k].pmin, table.param_bounds[k].pmax}));
        }
        prior = PriorSpec(std::move(entries));
      }
      const auto r = screen_and_update(table, observed, prior, r2, level);
      const fs::path dir = screen_out.empty() ? fs::path(stats_path).parent_path()
                                              : fs::path(screen_out);
      auto a = open_out(dir / "screening.csv");
      write_screening_csv(a, r.report);
      auto b = open_out(dir / "suggestions.csv");
      write_suggestions_csv(b, r.suggestions);
      auto c = open_out(dir / "suggested_prior.ini");
      write_prior_ini(c, r.suggested_prior);
      for (const auto& s : r.suggestions) {
        std::cout << s.parameter << ": " << csv::format(s.lo) << " to "
                  << csv::format(s.hi) << " (" << s.statistic
                  << ", R2 = " << csv::format(s.r_squared) << ")\n";
      }
      return 0;
    }

    if (*inf) {
      std::optional<fs::path> bounds;
      if (!infer_bounds.empty()) bounds = infer_bounds;
      const SimTable table = load_table(infer_stats, bounds);
      const StatVector observed = load_observed(infer_observed);
      KdeSettings settings;
      if (!infer_config.empty()) settings = load_config(infer_config).kde;
      if (!conditioned.empty()) settings.conditioned = conditioned;
      if (resolution) settings.resolution = *resolution;
      const auto r = infer(table, observed, settings, infer_out, infer_threads);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
      if (r.dropped_runs > 0) {
        std::cerr << "warning: " << r.dropped_runs
                  << " runs lack a conditioned statistic and were dropped\n";
      }
      write_posterior_csv(std::cout, r.posterior);
      return 0;
    }

    if (*obs) {
      const RunConfig c = load_config(obs_config);
      std::map<std::string, double> truth;
      for (const auto& t : truth_args) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("--truth needs name=value");
        try {
          truth[t.substr(0, eq)] = csv::parse_double(t.substr(eq + 1), t.substr(0, eq));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
      SampleRecord sample;
      CitationHistory history;
      const auto stats = observe(c, truth, obs_seed, &sample, &history);
      const fs::path dir(obs_out);
      auto os = open_out(dir / "observed.csv");
      write_observed_csv(os, stats);
      if (c.model == Model::linktrace) {
        auto s = open_out(dir / "sample.csv");
        write_sample_csv(s, sample);
      } else {
        auto a = open_out(dir / "citations.csv");
        auto b = open_out(dir / "counts.csv");
        write_history_csv(a, b, history);
      }
      write_observed_csv(std::cout, stats);
      return 0;
    }

    if (*cs) {
      ColdPooling pooling;
      if (cs_pooling == "pooled") {
        pooling = ColdPooling::pooled;
      } else if (cs_pooling == "per_case") {
        pooling = ColdPooling::per_case;
      } else {
        throw ConfigError("--pooling must be pooled or per_case");
      }
      auto a = open_in(cs_cases);
      auto b = open_in(cs_counts);
      CitationHistory h;
      try {
        h = read_history_csv(a, b);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      const auto stats = citation_stats(h, pooling);
      auto os = open_out(cs_out);
      write_observed_csv(os, stats);
      write_observed_csv(std::cout, stats);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const RoundFailure& e) {
    std::cerr << "round failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
