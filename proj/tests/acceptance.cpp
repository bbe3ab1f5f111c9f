// End-to-end checks, one PASS/FAIL line each. Exit status is non-zero when
// any selected check fails.
#include <CLI11.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "abcnet/pipeline.hpp"
#include "abcnet/population.hpp"
#include "kde_oracle.hpp"
#include "oracles.hpp"
#include "sample_checks.hpp"

using namespace abcnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_out = "acceptance_artifacts";
fs::path g_data = ABCNET_DATA_DIR;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative paths of every regular file under `root`, sorted.
std::vector<fs::path> tree_files(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

StatVector observed_from(const SimTable& t, const std::vector<double>& v) {
  StatVector s;
  s.names = t.stat_names;
  for (double x : v) s.values.push_back(x);
  return s;
}

std::vector<double> random_observation(std::mt19937_64& rng, const SimTable& t) {
  // a statistic vector drawn near one of the runs
  std::uniform_int_distribution<std::size_t> pick(0, t.runs.size() - 1);
  const auto& r = t.runs[pick(rng)];
  std::vector<double> v;
  for (const auto& s : r.stats) v.push_back(*s);
  return v;
}

Outcome criterion1() {
  auto c = load_config(g_data / "round1.ini");
  c.runs = 2500;
  c.seed = 101;
  c.threads = 0;
  c.out = g_out / "degree_curve";
  c.prior = PriorSpec({make_entry(param_name::kAvgDegree, Uniform{0.0, 7.0})});
  c.fixed = {{param_name::kNodes, 1000.0}, {param_name::kPhi, 0.0},
             {param_name::kAlpha, 0.0}, {param_name::kGamma, 0.0},
             {param_name::kPrResponse, 1.0}};
  c.n_samp = 400;
  c.kde.conditioned.clear();
  const auto round = run_round(c);
  const auto col = *round.table.stat_index(stat_name::kDeltaUsed);
  std::vector<double> x, y;
  for (const auto& r : round.table.runs) {
    if (!r.stats[col]) continue;
    x.push_back(r.params[0]);
    y.push_back(*r.stats[col]);
  }
  const auto curve = moving_average(x, y, 0.25, 0.05);
  const auto low = std::min_element(curve.begin(), curve.end(),
                                    [](auto& a, auto& b) { return a.y < b.y; });
  {
    std::ofstream os(c.out / "curve.csv");
    os << "avg_degree,d_used\n";
    for (const auto& p : curve) os << p.x << ',' << p.y << '\n';
  }
  const bool ok = low != curve.end() && low->x >= 1.8 && low->x <= 3.0 && low->y >= -0.55 &&
                  low->y <= -0.25;
  return {ok, "minimum " + fmt(low->y) + " at degree " + fmt(low->x) + " over " +
                  std::to_string(x.size()) + " samples"};
}

Outcome criterion2() {
  std::mt19937_64 rng(202);
  double worst_density = 0.0, worst_grid = 0.0, worst_integral = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int table = 0; table < 20; ++table) {
    const auto t = oracle::random_table(rng, 50, 3, 3);
    const auto obs = random_observation(rng, t);
    const KdeModel m(t, t.stat_names);
    const ConditionalDensity c(m, observed_from(t, obs));
    const auto s = oracle::scale_table(t, t.stat_names, obs, true);
    for (int q = 0; q < 100; ++q) {
      std::vector<double> x(s.d);
      for (auto& v : x) v = u(rng);
      worst_density = std::max(
          worst_density, rel_err(m.density(x), oracle::kernel_sum(s.points, s.weights, s.sigma, x)));
    }
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = a + 1; b < 3; ++b) {
        const std::vector<std::size_t> dims{a, b};
        const auto g = c.grid(dims, 20);
        const auto o = oracle::conditional_grid(s, dims, 20);
        for (std::size_t i = 0; i < o.size(); ++i) {
          worst_grid = std::max(worst_grid, rel_err(g.density[i], o[i]));
        }
        worst_integral = std::max(worst_integral, std::abs(integrate(g) - 1.0));
      }
      const std::vector<std::size_t> one{a};
      worst_integral = std::max(worst_integral, std::abs(integrate(c.grid(one, 50)) - 1.0));
    }
  }
  const bool ok = worst_density <= 1e-9 && worst_grid <= 1e-9 && worst_integral <= 1e-3;
  return {ok, "density rel " + fmt(worst_density) + ", grid rel " + fmt(worst_grid) +
                  ", integral off " + fmt(worst_integral)};
}

Outcome criterion3() {
  std::mt19937_64 rng(303);
  double scaled = 0.0, uniform = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    auto t = oracle::random_table(rng, 60, 3, 2);
    const auto obs = observed_from(t, random_observation(rng, t));
    const std::vector<std::size_t> dims{0, 2};
    const auto base = ConditionalDensity(KdeModel(t, t.stat_names), obs).grid(dims, 30);
    auto t17 = t;
    for (auto& r : t17.runs) r.prior_density *= 17.0;
    const auto g17 = ConditionalDensity(KdeModel(t17, t.stat_names), obs).grid(dims, 30);

    auto flat = t;
    double volume = 1.0;
    for (const auto& b : t.param_bounds) volume *= b.pmax - b.pmin;
    for (auto& r : flat.runs) r.prior_density = 1.0 / volume;
    const auto w = ConditionalDensity(KdeModel(flat, t.stat_names, Weighting::prior_inverse), obs)
                       .grid(dims, 30);
    const auto p = ConditionalDensity(KdeModel(flat, t.stat_names, Weighting::uniform), obs)
                       .grid(dims, 30);
    for (std::size_t i = 0; i < base.density.size(); ++i) {
      scaled = std::max(scaled, std::abs(base.density[i] - g17.density[i]));
      uniform = std::max(uniform, std::abs(w.density[i] - p.density[i]));
    }
  }
  return {scaled <= 1e-12 && uniform <= 1e-12,
          "prior x17 max change " + fmt(scaled) + ", weighted vs unweighted " + fmt(uniform)};
}

Outcome criterion4() {
  Rng rng(404);
  std::size_t violations = 0;
  std::string first;
  for (int rep = 0; rep < 1000; ++rep) {
    PopulationParams p;
    p.n_nodes = 2 + uniform_index(rng, 400);
    p.avg_degree = std::min(7.0, static_cast<double>(p.n_nodes - 1)) * uniform01(rng);
    p.initial_infection = 0.3 * uniform01(rng);
    p.transmission = 0.6 * uniform01(rng);
    p.gamma = 12.0 * uniform01(rng) - 2.0;
    const auto g = generate_population(p, rng);
    const std::size_t n_samp = 1 + uniform_index(rng, 450);
    const auto order = bernoulli(rng, 0.5) ? QueueOrder::fifo : QueueOrder::random_delay;
    const double response = bernoulli(rng, 0.3) ? 1.0 : uniform01(rng);
    const auto rec = link_trace_sample(g, n_samp, response, rng, {order, {}});
    const auto bad = sample_violations(g, rec, n_samp);
    if (!bad.empty() && first.empty()) first = bad.front();
    violations += bad.size();
  }
  return {violations == 0,
          std::to_string(violations) + " violations" + (first.empty() ? "" : ": " + first)};
}

Outcome criterion5() {
  Rng rng(505);
  double slope_err = 0.0, odds_err = 0.0, cubic_err = 0.0, glm_err = 0.0;
  int odds_n = 0, glm_n = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 3 + uniform_index(rng, 30);
    std::vector<double> t(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = uniform01(rng);
      y[i] = 3.0 * uniform01(rng) - 1.0;
      w[i] = 0.1 + 5.0 * uniform01(rng);
    }
    slope_err = std::max(slope_err, rel_err(*weighted_slope(t, y, w), oracle::wls_slope(t, y, w)));
  }
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 4 + uniform_index(rng, 20);
    std::vector<double> t(n);
    std::vector<int> k(n), m(n);
    std::vector<BinomialPoint> pts;
    const double b = 4.0 * uniform01(rng) - 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<double>(i) / static_cast<double>(n - 1);
      m[i] = 1 + static_cast<int>(uniform_index(rng, 6));
      const double p = 1.0 / (1.0 + std::exp(-(b * t[i] - 0.3)));
      for (int j = 0; j < m[i]; ++j) k[i] += bernoulli(rng, p);
      pts.push_back({t[i], k[i], m[i]});
    }
    const auto got = log_odds_slope(pts);
    const auto want = oracle::logistic_slope(t, k, m);
    if (got.has_value() != want.has_value()) {
      odds_err = 1.0;
    } else if (got) {
      odds_err = std::max(odds_err, std::abs(*got - *want) / std::max(1.0, std::abs(*want)));
      ++odds_n;
    }
  }
  for (int rep = 0; rep < 100; ++rep) {
    SimTable table;
    table.param_names = {"a"};
    table.param_bounds = {{0, 1}};
    table.stat_names = {"s"};
    const std::size_t n = 8 + uniform_index(rng, 40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 4.0 * uniform01(rng) - 1.0;
      y[i] = 0.5 * x[i] - 0.3 * x[i] * x[i] * x[i] + uniform01(rng);
      table.runs.push_back({i, {y[i]}, 1.0, {x[i]}});
    }
    const auto rep_ = cubic_screen(table);
    const auto o = oracle::cubic(x, y);
    cubic_err = std::max({cubic_err, rel_err(*rep_.entries[0].r_squared, o.r2),
                          rel_err(*rep_.entries[0].f_statistic, o.f)});
  }
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 30 + uniform_index(rng, 60);
    CitationHistory h;
    h.counts.emplace_back();
    oracle::Matrix x;
    std::vector<double> y;
    const double b[4] = {1.0 + uniform01(rng), uniform01(rng) - 0.5, uniform01(rng) - 0.5,
                         uniform01(rng) - 0.5};
    for (std::size_t i = 0; i < n; ++i) {
      Case c{0, bernoulli(rng, 0.4), bernoulli(rng, 0.5), bernoulli(rng, 0.3)};
      std::poisson_distribution<long> pois(
          std::exp(b[0] + b[1] * c.corp + b[2] * c.crown + b[3] * c.dissent));
      h.cases.push_back(c);
      h.counts[0].push_back(pois(rng));
      x.push_back({1.0, double(c.corp), double(c.crown), double(c.dissent)});
      y.push_back(static_cast<double>(h.counts[0].back()));
    }
    const auto g = poisson_glm(h);
    if (!g[0] || !g[1] || !g[2]) continue;
    const auto want = oracle::poisson_newton(x, y);
    for (std::size_t k = 0; k < 3; ++k) {
      glm_err = std::max(glm_err, std::abs(*g[k] - want[k + 1]) / std::max(1.0, std::abs(want[k + 1])));
    }
    ++glm_n;
  }
  const bool ok = slope_err <= 1e-6 && odds_err <= 1e-6 && cubic_err <= 1e-6 &&
                  glm_err <= 1e-4 && odds_n >= 90 && glm_n >= 95;
  return {ok, "slope " + fmt(slope_err) + ", log-odds " + fmt(odds_err) + " (" +
                  std::to_string(odds_n) + " fits), cubic " + fmt(cubic_err) + ", Poisson " +
                  fmt(glm_err) + " (" + std::to_string(glm_n) + " fits)"};
}

Outcome criterion6() {
  const auto& table = default_case_table();
  Rng draw(606);
  std::size_t bad_steps = 0;
  for (int run = 0; run < 200; ++run) {
    const AttractParams p{-0.5 * uniform01(draw), 2.0 * uniform01(draw),
                          5.0 * uniform01(draw) - 2.0, 5.5 * uniform01(draw) - 0.5,
                          1.5 * uniform01(draw) + 0.5};
    Rng rng = stream_for_run(606, static_cast<std::uint64_t>(run));
    const auto h = simulate_history(p, table, {}, rng);
    for (std::size_t t = 0; t < h.steps(); ++t) {
      if (std::accumulate(h.counts[t].begin(), h.counts[t].end(), 0L) != table.rows[t].cites) {
        ++bad_steps;
      }
    }
  }

  CaseTable neutral{{{"only", 10, 100000, 0.3, 0.3, 0.3}}};
  Rng rng(607);
  const auto counts = simulate_history(AttractParams{}, neutral, {}, rng).counts[0];
  const double e = 100000.0 / 10.0;
  double x2 = 0.0;
  for (long c : counts) x2 += (c - e) * (c - e) / e;
  const double pval =
      boost::math::cdf(boost::math::complement(boost::math::chi_squared(9.0), x2));

  double shift = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> ex(2 + uniform_index(draw, 50));
    for (auto& v : ex) v = 20.0 * uniform01(draw) - 10.0;
    auto moved = ex;
    const double c = 600.0 * uniform01(draw) - 300.0;
    for (auto& v : moved) v += c;
    const auto a = selection_probabilities(ex);
    const auto b = selection_probabilities(moved);
    for (std::size_t i = 0; i < a.size(); ++i) shift = std::max(shift, std::abs(a[i] - b[i]));
  }
  const bool ok = bad_steps == 0 && pval > 0.001 && shift <= 1e-12;
  return {ok, std::to_string(bad_steps) + " unbalanced steps, chi-square p " + fmt(pval) +
                  ", shift change " + fmt(shift)};
}

Outcome criterion7() {
  auto c = load_config(g_data / "citation.ini");
  c.runs = 2000;
  c.out = g_out / "citation_prior";
  const auto round = run_round(c);
  std::string detail;
  std::optional<double> cold;
  for (std::size_t k = 0; k < round.table.stat_names.size(); ++k) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& r : round.table.runs) {
      if (!r.stats[k]) continue;
      sum += *r.stats[k];
      sq += *r.stats[k] * *r.stats[k];
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
    if (round.table.stat_names[k] == stat_name::kPCold) cold = mean;
    detail += (detail.empty() ? "" : ", ") + round.table.stat_names[k] + " " + fmt(mean) +
              " (sd " + fmt(sd) + ")";
  }
  const bool ok = cold && *cold >= 0.35 && *cold <= 0.53;
  return {ok, "means over " + std::to_string(round.table.runs.size()) + " runs: " + detail};
}

const std::map<std::string, double> kTruth{{param_name::kAvgDegree, 3.5},
                                           {param_name::kNodes, 1412.0},
                                           {param_name::kPhi, 0.093},
                                           {param_name::kAlpha, 0.467},
                                           {param_name::kGamma, 7.3}};

// One recovery round plus inference; returns (phi, gamma) posterior means.
std::pair<double, double> recovery(std::uint64_t seed, const fs::path& dir, unsigned threads) {
  auto c = load_config(g_data / "round1.ini");
  c.runs = 500;
  c.seed = seed;
  c.threads = threads;
  c.out = dir;
  const auto observed = observe(c, kTruth, 1412);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "observed.csv");
    write_observed_csv(os, observed);
  }
  const auto round = run_round(c);
  const auto r = infer(round.table, observed, c.kde, dir / "posterior", threads);
  double phi = NAN, gamma = NAN;
  for (const auto& p : r.posterior) {
    if (p.parameter == param_name::kPhi) phi = p.mean;
    if (p.parameter == param_name::kGamma) gamma = p.mean;
  }
  return {phi, gamma};
}

Outcome criterion8() {
  int good = 0;
  std::string detail;
  for (std::uint64_t k = 1; k <= 3; ++k) {
    const auto [phi, gamma] = recovery(k, g_out / ("recovery_seed" + std::to_string(k)), 0);
    const bool ok = std::abs(phi - 0.093) <= 0.15 && std::abs(gamma - 7.3) <= 4.0;
    good += ok;
    detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(k) +
              ": phi " + fmt(phi) + ", gamma " + fmt(gamma) + (ok ? "" : " (miss)");
  }
  return {good >= 2, std::to_string(good) + " of 3 seeds recovered; " + detail};
}

Outcome criterion9() {
  const fs::path a = g_out / "determinism_a", b = g_out / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  recovery(1, a / "recovery", 1);
  recovery(1, b / "recovery", 2);
  auto cite = load_config(g_data / "citation.ini");
  cite.out = a / "citation";
  cite.threads = 1;
  run_round(cite);
  cite.out = b / "citation";
  cite.threads = 3;
  run_round(cite);

  const auto fa = tree_files(a), fb = tree_files(b);
  std::size_t differ = 0;
  if (fa != fb) ++differ;
  for (const auto& f : fa) {
    if (slurp(a / f) != slurp(b / f)) ++differ;
  }
  return {differ == 0 && !fa.empty(),
          std::to_string(fa.size()) + " files compared, " + std::to_string(differ) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  std::string out = g_out.string();
  app.add_option("--criterion,-c", only, "run only these checks (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--out", out, "artifact directory");
  CLI11_PARSE(app, argc, argv);
  g_out = out;
  fs::create_directories(g_out);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"degree curve minimum", criterion1},
      {"kernel density oracle", criterion2},
      {"prior weight invariance", criterion3},
      {"sampler invariants", criterion4},
      {"regression oracles", criterion5},
      {"citation conservation and neutrality", criterion6},
      {"citation prior predictive", criterion7},
      {"synthetic recovery", criterion8},
      {"determinism", criterion9},
  };
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id,
                checks[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
