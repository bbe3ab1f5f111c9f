#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcnet/citesim.hpp"
#include "abcnet/kde.hpp"
#include "abcnet/linktrace.hpp"
#include "abcnet/prior.hpp"
#include "abcnet/simtable.hpp"
#include "abcnet/sumstats.hpp"

namespace abcnet {

/// Bad configuration or input files; the CLI exits with status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too many simulations failed; the CLI exits with status 3.
struct RoundFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Model { linktrace, citation };

namespace param_name {
inline constexpr const char* kAvgDegree = "avg_degree";
inline constexpr const char* kNodes = "n_nodes";
inline constexpr const char* kPhi = "phi";
inline constexpr const char* kAlpha = "alpha";
inline constexpr const char* kGamma = "gamma";
inline constexpr const char* kPrResponse = "pr_response";
}  // namespace param_name

const std::vector<std::string>& linktrace_param_names();

struct KdeSettings {
  std::vector<std::string> conditioned;  // empty: every observed statistic
  std::size_t resolution = 50;
  double level = 0.95;
  SliceMode slice = SliceMode::marginalize;
  Weighting weighting = Weighting::prior_inverse;
  double screen_r2 = 0.5;
  double screen_level = 0.99;
};

struct RunConfig {
  Model model = Model::linktrace;
  PriorSpec prior;
  /// Values for model parameters outside the prior.
  std::map<std::string, double> fixed;
  std::size_t runs = 500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path out = "out";
  std::string label = "round";

  std::size_t n_samp = 400;
  QueueOrder order = QueueOrder::fifo;
  bool write_samples = false;

  CaseTable case_table = default_case_table();
  CitationHistory seed_history;
  ColdPooling pooling = ColdPooling::pooled;

  KdeSettings kde;

  /// Throws ConfigError when runs < 2, a parameter is unknown or doubly
  /// given, or a required parameter has no value.
  void validate() const;
  /// Prior entries first, then every other model parameter in canonical order.
  std::vector<double> full_parameters(std::span<const double> prior_values) const;
};

/// INI text with sections [run], [prior], [fixed], [linktrace], [citation]
/// and [kde]. Relative file paths are resolved against `base_dir`.
RunConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Statistic names produced by a model.
const std::vector<std::string>& model_stat_names(Model model);

/// One simulation of run `index`: its own random stream, a prior draw, and the
/// model's statistics. `sample` receives the link-trace record when non-null.
SimRun simulate_run(const RunConfig& config, std::size_t index,
                    SampleRecord* sample = nullptr);

struct RoundResult {
  SimTable table;
  std::vector<std::pair<std::size_t, std::string>> failures;
};

/// All runs of a round in run order, without touching the filesystem. Failed
/// runs are left out and listed; throws RoundFailure when more than 10% fail.
RoundResult simulate_round(const RunConfig& config);

/// simulate_round, then writes stats.csv and prior.csv (and failures.csv,
/// samples/sample_<run>.csv when enabled) under config.out.
RoundResult run_round(const RunConfig& config);

/// Statistics of a single simulation at fixed parameter values. For the
/// link-trace model `sample` receives the record; for the citation model
/// `history` receives the simulated history.
StatVector observe(const RunConfig& config, const std::map<std::string, double>& truth,
                   std::uint64_t seed, SampleRecord* sample = nullptr,
                   CitationHistory* history = nullptr);

struct PriorSuggestion {
  std::string parameter;
  std::string statistic;
  double r_squared = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct ScreenResult {
  ScreeningReport report;
  std::vector<PriorSuggestion> suggestions;
  /// `old_prior` with suggested parameters replaced by uniform (or discrete
  /// uniform) priors over the suggested interval, clipped to the old bounds.
  PriorSpec suggested_prior;
};

/// For each parameter, the statistic with the best cubic R^2; if that R^2
/// reaches `min_r2`, the cubic prediction interval at the observed value.
ScreenResult screen_and_update(const SimTable& table, const StatVector& observed,
                               const PriorSpec& old_prior, double min_r2 = 0.5,
                               double level = 0.99);

/// suggestions.csv: parameter,statistic,R2,lo,hi
void write_suggestions_csv(std::ostream& os, const std::vector<PriorSuggestion>& s);
/// [prior] section for the next round's configuration.
void write_prior_ini(std::ostream& os, const PriorSpec& prior);

struct InferResult {
  std::vector<PosteriorSummary> posterior;
  std::vector<std::string> warnings;
  std::size_t dropped_runs = 0;
  std::optional<std::vector<double>> abc_estimate;
};

/// Builds the conditional density and writes posterior.csv plus one
/// grid2d_<a>__<b>.csv per parameter pair into `out_dir`. For citation
/// statistics it also writes abc_estimate.csv: parameter,estimate.
InferResult infer(const SimTable& table, const StatVector& observed,
                  const KdeSettings& settings, const std::filesystem::path& out_dir,
                  unsigned threads = 1);

}  // namespace abcnet
