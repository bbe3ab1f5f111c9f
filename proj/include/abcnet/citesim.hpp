#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "abcnet/random.hpp"
#include "abcnet/regression.hpp"
#include "abcnet/simtable.hpp"

namespace abcnet {

struct CaseTableRow {
  std::string period;
  long cases = 0;
  long cites = 0;
  double p_corp = 0.0;
  double p_crown = 0.0;
  double p_dissent = 0.0;
};

struct CaseTable {
  std::vector<CaseTableRow> rows;
  /// Throws std::invalid_argument on negative counts or probabilities
  /// outside [0, 1].
  void validate() const;
};

/// Supreme Court of Canada counts, 1950-4 through 2010-4.
const CaseTable& default_case_table();

/// case_table.csv: period,cases,cites,p_corp,p_crown,p_dissent
CaseTable read_case_table_csv(std::istream& is);
void write_case_table_csv(std::ostream& os, const CaseTable& table);

struct Case {
  std::size_t created_step = 0;
  bool corp = false;
  bool crown = false;
  bool dissent = false;
  bool operator==(const Case&) const = default;
};

/// Cases ordered by creation step, and per-step citation counts. counts[t]
/// has one entry per case created at or before step t, so a case can never
/// hold citations from before it existed.
struct CitationHistory {
  std::vector<Case> cases;
  std::vector<std::vector<long>> counts;

  std::size_t steps() const { return counts.size(); }
  long count(std::size_t step, std::size_t case_index) const {
    const auto& row = counts[step];
    return case_index < row.size() ? row[case_index] : 0;
  }
  /// Total citations per case over all steps.
  std::vector<long> totals() const;
  /// Throws std::invalid_argument if cases are out of creation order, a row
  /// has the wrong length, or a count is negative.
  void validate() const;
  bool operator==(const CitationHistory&) const = default;
};

/// citations.csv: case_id,created_step,corp,crown,dissent
/// counts.csv: case_id,step,count (zero counts omitted)
void write_history_csv(std::ostream& cases, std::ostream& counts,
                       const CitationHistory& history);
/// Cases are re-indexed in (created_step, case_id) order. An empty `cases`
/// stream gives an empty history.
CitationHistory read_history_csv(std::istream& cases, std::istream& counts);

struct AttractParams {
  double irrel = 0.0;
  double pa = 0.0;
  double corp = 0.0;
  double crown = 0.0;
  double dis = 0.0;
};

struct CaseState {
  double x_irrel = 0.0;
  double x_pa = 0.0;
  bool corp = false;
  bool crown = false;
  bool dissent = false;
};

/// Linear predictor, clamped to [-700, 700].
double attractiveness_exponent(const CaseState& state, const AttractParams& params);
double attractiveness(const CaseState& state, const AttractParams& params);

/// exp(e_i) / sum_k exp(e_k), computed after subtracting max(e).
std::vector<double> selection_probabilities(std::span<const double> exponents);

/// Start-of-step states after replaying `history` through its last step.
/// A never-cited case has x_irrel equal to the steps since its creation.
std::vector<CaseState> replay_states(const CitationHistory& history);

/// Extends `seed_history` by one step per table row. Throws
/// std::invalid_argument when citations are due but no case exists.
CitationHistory simulate_history(const AttractParams& params, const CaseTable& table,
                                 const CitationHistory& seed_history, Rng& rng);

enum class ColdPooling {
  pooled,    // one ratio over all (case, step) transitions
  per_case,  // mean of per-case ratios
};

/// Share of hot (case, step) pairs, with at least one citation, whose next
/// step has none. Empty when no case is ever hot before the last step.
Stat p_cold(const CitationHistory& history, ColdPooling pooling = ColdPooling::pooled);

/// Poisson log-link fit of per-case totals on an intercept and the three
/// flags; returns the corp, crown and dissent coefficients. A flag constant
/// over cases is dropped and its coefficient left empty; all are empty on
/// non-convergence or collinear flags.
std::array<Stat, 3> poisson_glm(const CitationHistory& history);

namespace stat_name {
inline constexpr const char* kSdCitations = "sd_citations";
inline constexpr const char* kPCold = "p_cold";
inline constexpr const char* kGammaCorp = "gamma_corp";
inline constexpr const char* kGammaCrown = "gamma_crown";
inline constexpr const char* kGammaDis = "gamma_dis";
}  // namespace stat_name

const std::vector<std::string>& citation_stat_names();

StatVector citation_stats(const CitationHistory& history,
                          ColdPooling pooling = ColdPooling::pooled);

/// Parameter names in AttractParams order.
const std::vector<std::string>& citation_param_names();
AttractParams attract_params_from(std::span<const double> values);

/// Kernel-weighted mean of each parameter. Distances use statistics present
/// in `observed`, scaled by their standard deviation across runs (statistics
/// with zero spread are skipped); runs missing any of them are ignored.
/// Throws std::invalid_argument with no usable run and std::domain_error when
/// every weight underflows.
std::vector<double> abc_estimate(const SimTable& sims, const StatVector& observed,
                                 bool prior_inverse = true);

}  // namespace abcnet
