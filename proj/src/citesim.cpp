#include "abcnet/citesim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include <Eigen/Dense>

#include "abcnet/csv.hpp"
#include "abcnet/kde.hpp"

namespace abcnet {
namespace {

constexpr double kExponentClamp = 700.0;

bool parse_flag(std::string_view field, std::string_view what) {
  const auto v = csv::parse_int(field, what);
  if (v != 0 && v != 1) {
    throw std::invalid_argument(std::string(what) + " must be 0 or 1");
  }
  return v == 1;
}

// Advance states past one step given that step's counts.
void update_states(std::vector<CaseState>& states, const std::vector<long>& counts) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    const long c = i < counts.size() ? counts[i] : 0;
    states[i].x_irrel = c > 0 ? 0.0 : states[i].x_irrel + 1.0;
    states[i].x_pa = std::sqrt(static_cast<double>(c));
  }
}

}  // namespace

void CaseTable::validate() const {
  for (const auto& r : rows) {
    if (r.cases < 0 || r.cites < 0) {
      throw std::invalid_argument("period " + r.period + " has a negative count");
    }
    for (double p : {r.p_corp, r.p_crown, r.p_dissent}) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("period " + r.period +
                                    " has a proportion outside [0, 1]");
      }
    }
  }
}

const CaseTable& default_case_table() {
  static const CaseTable table{{
      {"1950-4", 220, 1185, 0.32, 0.25, 0.52},
      {"1955-9", 287, 1087, 0.40, 0.17, 0.39},
      {"1960-4", 384, 1363, 0.44, 0.19, 0.31},
      {"1965-9", 398, 1675, 0.43, 0.21, 0.30},
      {"1970-4", 425, 2971, 0.39, 0.19, 0.35},
      {"1975-9", 510, 4482, 0.36, 0.31, 0.33},
      {"1980-4", 590, 5672, 0.29, 0.38, 0.20},
      {"1985-9", 462, 6870, 0.24, 0.49, 0.27},
      {"1990-4", 536, 9433, 0.16, 0.53, 0.33},
      {"1995-9", 564, 12373, 0.24, 0.52, 0.36},
      {"2000-4", 460, 18445, 0.27, 0.37, 0.31},
      {"2005-9", 416, 21076, 0.29, 0.38, 0.32},
      {"2010-4", 313, 24947, 0.26, 0.44, 0.26},
  }};
  return table;
}

CaseTable read_case_table_csv(std::istream& is) {
  std::string line;
  if (!csv::read_line(is, line)) throw std::invalid_argument("case table is empty");
  if (csv::split(line) != std::vector<std::string>{"period", "cases", "cites", "p_corp",
                                                    "p_crown", "p_dissent"}) {
    throw std::invalid_argument("case table header must be "
                                "period,cases,cites,p_corp,p_crown,p_dissent");
  }
  CaseTable table;
  while (csv::read_line(is, line)) {
    const auto f = csv::split(line);
    if (f.size() != 6) throw std::invalid_argument("case table row needs 6 fields");
    table.rows.push_back({f[0], static_cast<long>(csv::parse_int(f[1], "cases")),
                          static_cast<long>(csv::parse_int(f[2], "cites")),
                          csv::parse_double(f[3], "p_corp"),
                          csv::parse_double(f[4], "p_crown"),
                          csv::parse_double(f[5], "p_dissent")});
  }
  table.validate();
  return table;
}

void write_case_table_csv(std::ostream& os, const CaseTable& table) {
  os << "period,cases,cites,p_corp,p_crown,p_dissent\n";
  for (const auto& r : table.rows) {
    os << r.period << ',' << r.cases << ',' << r.cites << ',' << csv::format(r.p_corp)
       << ',' << csv::format(r.p_crown) << ',' << csv::format(r.p_dissent) << '\n';
  }
}

std::vector<long> CitationHistory::totals() const {
  std::vector<long> out(cases.size(), 0);
  for (const auto& row : counts) {
    for (std::size_t i = 0; i < row.size(); ++i) out[i] += row[i];
  }
  return out;
}

void CitationHistory::validate() const {
  std::size_t alive = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (i > 0 && cases[i].created_step < cases[i - 1].created_step) {
      throw std::invalid_argument("cases must be ordered by creation step");
    }
    if (cases[i].created_step >= steps()) {
      throw std::invalid_argument("case created after the last step");
    }
  }
  for (std::size_t t = 0; t < steps(); ++t) {
    while (alive < cases.size() && cases[alive].created_step <= t) ++alive;
    if (counts[t].size() != alive) {
      throw std::invalid_argument("step " + std::to_string(t) +
                                  " has the wrong number of cases");
    }
    for (long c : counts[t]) {
      if (c < 0) throw std::invalid_argument("negative citation count");
    }
  }
}

void write_history_csv(std::ostream& cases, std::ostream& counts,
                       const CitationHistory& history) {
  cases << "case_id,created_step,corp,crown,dissent\n";
  for (std::size_t i = 0; i < history.cases.size(); ++i) {
    const auto& c = history.cases[i];
    cases << i << ',' << c.created_step << ',' << int(c.corp) << ',' << int(c.crown)
          << ',' << int(c.dissent) << '\n';
  }
  counts << "case_id,step,count\n";
  for (std::size_t i = 0; i < history.cases.size(); ++i) {
    for (std::size_t t = history.cases[i].created_step; t < history.steps(); ++t) {
      const long c = history.count(t, i);
      if (c != 0) counts << i << ',' << t << ',' << c << '\n';
    }
  }
}

CitationHistory read_history_csv(std::istream& cases_in, std::istream& counts_in) {
  std::string line;
  CitationHistory h;
  if (!csv::read_line(cases_in, line)) return h;
  if (csv::split(line) !=
      std::vector<std::string>{"case_id", "created_step", "corp", "crown", "dissent"}) {
    throw std::invalid_argument("citations header must be "
                                "case_id,created_step,corp,crown,dissent");
  }
  std::vector<std::pair<long long, Case>> raw;
  while (csv::read_line(cases_in, line)) {
    const auto f = csv::split(line);
    if (f.size() != 5) throw std::invalid_argument("citations row needs 5 fields");
    const auto step = csv::parse_int(f[1], "created_step");
    if (step < 0) throw std::invalid_argument("created_step must be non-negative");
    raw.push_back({csv::parse_int(f[0], "case_id"),
                   Case{static_cast<std::size_t>(step), parse_flag(f[2], "corp"),
                        parse_flag(f[3], "crown"), parse_flag(f[4], "dissent")}});
  }
  std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second.created_step, a.first) <
           std::tie(b.second.created_step, b.first);
  });
  std::map<long long, std::size_t> index;
  std::size_t last_step = 0;
  for (const auto& [id, c] : raw) {
    if (!index.emplace(id, h.cases.size()).second) {
      throw std::invalid_argument("duplicate case_id " + std::to_string(id));
    }
    h.cases.push_back(c);
    last_step = std::max(last_step, c.created_step);
  }

  struct Entry {
    std::size_t case_index;
    std::size_t step;
    long count;
  };
  std::vector<Entry> entries;
  if (csv::read_line(counts_in, line)) {
    if (csv::split(line) != std::vector<std::string>{"case_id", "step", "count"}) {
      throw std::invalid_argument("counts header must be case_id,step,count");
    }
    while (csv::read_line(counts_in, line)) {
      const auto f = csv::split(line);
      if (f.size() != 3) throw std::invalid_argument("counts row needs 3 fields");
      const auto id = csv::parse_int(f[0], "case_id");
      const auto it = index.find(id);
      if (it == index.end()) {
        throw std::invalid_argument("counts refer to unknown case " + std::to_string(id));
      }
      const auto step = csv::parse_int(f[1], "step");
      const auto count = csv::parse_int(f[2], "count");
      if (step < 0 || count < 0) {
        throw std::invalid_argument("counts must be non-negative");
      }
      const auto s = static_cast<std::size_t>(step);
      if (s < h.cases[it->second].created_step) {
        throw std::invalid_argument("case " + std::to_string(id) +
                                    " is cited before it was created");
      }
      entries.push_back({it->second, s, static_cast<long>(count)});
      last_step = std::max(last_step, s);
    }
  }

  h.counts.resize(h.cases.empty() ? 0 : last_step + 1);
  std::size_t alive = 0;
  for (std::size_t t = 0; t < h.counts.size(); ++t) {
    while (alive < h.cases.size() && h.cases[alive].created_step <= t) ++alive;
    h.counts[t].assign(alive, 0);
  }
  for (const auto& e : entries) h.counts[e.step][e.case_index] += e.count;
  return h;
}

double attractiveness_exponent(const CaseState& s, const AttractParams& p) {
  const double e = p.irrel * s.x_irrel + p.pa * s.x_pa + (s.corp ? p.corp : 0.0) +
                   (s.crown ? p.crown : 0.0) + (s.dissent ? p.dis : 0.0);
  if (std::isnan(e)) throw std::invalid_argument("attractiveness exponent is NaN");
  return std::clamp(e, -kExponentClamp, kExponentClamp);
}

double attractiveness(const CaseState& state, const AttractParams& params) {
  return std::exp(attractiveness_exponent(state, params));
}

std::vector<double> selection_probabilities(std::span<const double> exponents) {
  std::vector<double> p(exponents.begin(), exponents.end());
  if (p.empty()) return p;
  const double hi = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - hi);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<CaseState> replay_states(const CitationHistory& history) {
  std::vector<CaseState> states;
  std::size_t next = 0;
  for (std::size_t t = 0; t < history.steps(); ++t) {
    while (next < history.cases.size() && history.cases[next].created_step <= t) {
      const auto& c = history.cases[next++];
      states.push_back({0.0, 0.0, c.corp, c.crown, c.dissent});
    }
    update_states(states, history.counts[t]);
  }
  return states;
}

CitationHistory simulate_history(const AttractParams& params, const CaseTable& table,
                                 const CitationHistory& seed_history, Rng& rng) {
  table.validate();
  CitationHistory h = seed_history;
  std::vector<CaseState> states = replay_states(seed_history);
  std::vector<double> cumulative;
  for (const auto& row : table.rows) {
    const std::size_t step = h.steps();
    for (long k = 0; k < row.cases; ++k) {
      Case c{step, bernoulli(rng, row.p_corp), bernoulli(rng, row.p_crown),
             bernoulli(rng, row.p_dissent)};
      h.cases.push_back(c);
      states.push_back({0.0, 0.0, c.corp, c.crown, c.dissent});
    }
    std::vector<long> counts(states.size(), 0);
    if (row.cites > 0) {
      if (states.empty()) {
        throw std::invalid_argument("period " + row.period +
                                    " assigns citations but no case exists");
      }
      std::vector<double> expo(states.size());
      for (std::size_t i = 0; i < states.size(); ++i) {
        expo[i] = attractiveness_exponent(states[i], params);
      }
      const auto prob = selection_probabilities(expo);
      cumulative.resize(prob.size());
      std::partial_sum(prob.begin(), prob.end(), cumulative.begin());
      const double total = cumulative.back();
      for (long k = 0; k < row.cites; ++k) {
        const double u = uniform01(rng) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        ++counts[static_cast<std::size_t>(it - cumulative.begin())];
      }
    }
    update_states(states, counts);
    h.counts.push_back(std::move(counts));
  }
  return h;
}

Stat p_cold(const CitationHistory& history, ColdPooling pooling) {
  long hot_all = 0, cold_all = 0;
  double ratio_sum = 0.0;
  std::size_t ratio_n = 0;
  for (std::size_t i = 0; i < history.cases.size(); ++i) {
    long hot = 0, cold = 0;
    for (std::size_t t = history.cases[i].created_step + 1; t < history.steps(); ++t) {
      if (history.count(t - 1, i) >= 1) {
        ++hot;
        if (history.count(t, i) == 0) ++cold;
      }
    }
    hot_all += hot;
    cold_all += cold;
    if (hot > 0) {
      ratio_sum += static_cast<double>(cold) / static_cast<double>(hot);
      ++ratio_n;
    }
  }
  if (pooling == ColdPooling::per_case) {
    if (ratio_n == 0) return std::nullopt;
    return ratio_sum / static_cast<double>(ratio_n);
  }
  if (hot_all == 0) return std::nullopt;
  return static_cast<double>(cold_all) / static_cast<double>(hot_all);
}

std::array<Stat, 3> poisson_glm(const CitationHistory& history) {
  std::array<Stat, 3> out{};
  const std::size_t n = history.cases.size();
  if (n == 0) return out;
  const auto totals = history.totals();

  auto flag = [&](std::size_t i, std::size_t k) {
    const auto& c = history.cases[i];
    return k == 0 ? c.corp : k == 1 ? c.crown : c.dissent;
  };
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k < 3; ++k) {
    bool any0 = false, any1 = false;
    for (std::size_t i = 0; i < n; ++i) (flag(i, k) ? any1 : any0) = true;
    if (any0 && any1) used.push_back(k);
  }
  if (used.empty()) return out;
  const auto p = static_cast<Eigen::Index>(used.size() + 1);
  if (static_cast<Eigen::Index>(n) <= p) return out;

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    for (std::size_t j = 0; j < used.size(); ++j) {
      x(r, static_cast<Eigen::Index>(j + 1)) = flag(i, used[j]) ? 1.0 : 0.0;
    }
    y(r) = static_cast<double>(totals[i]);
  }
  const double ybar = y.mean();
  if (!(ybar > 0.0)) return out;

  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < p) return out;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  beta(0) = std::log(ybar);
  for (int iter = 0; iter < 50; ++iter) {
    const Eigen::VectorXd eta = x * beta;
    const Eigen::VectorXd mu = eta.array().exp();
    const Eigen::VectorXd sw = mu.array().sqrt();
    const Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();
    const Eigen::MatrixXd xw = sw.asDiagonal() * x;
    const Eigen::VectorXd zw = sw.asDiagonal() * z;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    if (qr.rank() < p) return out;
    const Eigen::VectorXd next = qr.solve(zw);
    if (!next.allFinite()) return out;
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (change <= 1e-8 * (beta.cwiseAbs().maxCoeff() + 1e-8)) {
      for (std::size_t j = 0; j < used.size(); ++j) {
        out[used[j]] = beta(static_cast<Eigen::Index>(j + 1));
      }
      return out;
    }
  }
  return out;
}

const std::vector<std::string>& citation_stat_names() {
  static const std::vector<std::string> names{
      stat_name::kSdCitations, stat_name::kPCold, stat_name::kGammaCorp,
      stat_name::kGammaCrown, stat_name::kGammaDis};
  return names;
}

StatVector citation_stats(const CitationHistory& history, ColdPooling pooling) {
  StatVector out;
  out.names = citation_stat_names();
  const auto totals = history.totals();
  Stat sd;
  if (totals.size() >= 2) {
    double mean = 0.0;
    for (long v : totals) mean += static_cast<double>(v);
    mean /= static_cast<double>(totals.size());
    double ss = 0.0;
    for (long v : totals) {
      const double d = static_cast<double>(v) - mean;
      ss += d * d;
    }
    sd = std::sqrt(ss / static_cast<double>(totals.size() - 1));
  }
  const auto gamma = poisson_glm(history);
  out.values = {sd, p_cold(history, pooling), gamma[0], gamma[1], gamma[2]};
  return out;
}

const std::vector<std::string>& citation_param_names() {
  static const std::vector<std::string> names{"beta_irrel", "beta_pa", "beta_corp",
                                              "beta_crown", "beta_dis"};
  return names;
}

AttractParams attract_params_from(std::span<const double> v) {
  if (v.size() != 5) throw std::invalid_argument("five attractiveness parameters expected");
  return {v[0], v[1], v[2], v[3], v[4]};
}

std::vector<double> abc_estimate(const SimTable& sims, const StatVector& observed,
                                 bool prior_inverse) {
  sims.validate();
  std::vector<std::size_t> cols;
  std::vector<double> target;
  for (std::size_t j = 0; j < observed.names.size(); ++j) {
    if (!observed.values[j]) continue;
    const auto col = sims.stat_index(observed.names[j]);
    if (!col) continue;
    cols.push_back(*col);
    target.push_back(*observed.values[j]);
  }
  std::vector<const SimRun*> runs;
  for (const auto& r : sims.runs) {
    if (std::all_of(cols.begin(), cols.end(),
                    [&](std::size_t c) { return r.stats[c].has_value(); })) {
      runs.push_back(&r);
    }
  }
  if (runs.empty()) throw std::invalid_argument("no simulation has the observed statistics");
  const std::size_t n = runs.size();

  std::vector<double> scale(cols.size(), 0.0);
  std::size_t used = 0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (n < 2) continue;
    double mean = 0.0;
    for (const SimRun* r : runs) mean += *r->stats[cols[j]];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const SimRun* r : runs) {
      const double d = *r->stats[cols[j]] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd > 0.0 && std::isfinite(sd)) {
      scale[j] = sd;
      ++used;
    }
  }
  const double dim = static_cast<double>(sims.param_names.size() + used);
  const double h = std::max(std::pow(static_cast<double>(n), -1.0 / (dim + 4.0)),
                            kMinBandwidth);

  std::vector<double> est(sims.param_names.size(), 0.0);
  double wsum = 0.0;
  for (const SimRun* r : runs) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (scale[j] == 0.0) continue;
      const double z = (*r->stats[cols[j]] - target[j]) / scale[j];
      d2 += z * z;
    }
    double w = std::exp(-0.5 * d2 / (h * h));
    if (prior_inverse) {
      if (!(r->prior_density > 0.0)) {
        throw std::invalid_argument("run " + std::to_string(r->run_id) +
                                    " has a non-positive prior density");
      }
      w /= r->prior_density;
    }
    wsum += w;
    for (std::size_t k = 0; k < est.size(); ++k) est[k] += w * r->params[k];
  }
  if (!(wsum > 0.0)) {
    throw std::domain_error("observed statistics are too far from every simulation");
  }
  for (double& v : est) v /= wsum;
  return est;
}

}  // namespace abcnet
