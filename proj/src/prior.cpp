#include "abcnet/prior.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace abcnet {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double success_probability(const ShiftedGeometric& g) {
  return 1.0 / (g.mean + 1.0);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_number(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

double quantile(const Distribution& dist, double u) {
  return std::visit(
      Overloaded{
          [u](const Uniform& d) { return d.lo + u * (d.hi - d.lo); },
          [u](const ShiftedGeometric& d) {
            const double p = success_probability(d);
            if (p >= 1.0) return d.offset;
            return d.offset + std::floor(std::log1p(-u) / std::log1p(-p));
          },
          [u](const DiscreteUniform& d) {
            const double width = static_cast<double>(d.hi - d.lo + 1);
            const double k = std::min(std::floor(u * width), width - 1.0);
            return static_cast<double>(d.lo) + k;
          }},
      dist);
}

double marginal_density(const Distribution& dist, double x) {
  return std::visit(
      Overloaded{
          [x](const Uniform& d) {
            return (x >= d.lo && x <= d.hi) ? 1.0 / (d.hi - d.lo) : 0.0;
          },
          [x](const ShiftedGeometric& d) {
            const double k = x - d.offset;
            if (k < 0 || k != std::floor(k)) return 0.0;
            const double p = success_probability(d);
            return p * std::pow(1.0 - p, k);
          },
          [x](const DiscreteUniform& d) {
            if (x < d.lo || x > d.hi || x != std::floor(x)) return 0.0;
            return 1.0 / static_cast<double>(d.hi - d.lo + 1);
          }},
      dist);
}

std::pair<double, double> default_bounds(const Distribution& dist) {
  return std::visit(
      Overloaded{
          [](const Uniform& d) { return std::pair{d.lo, d.hi}; },
          [](const ShiftedGeometric& d) {
            const double q = quantile(d, 0.99);
            return std::pair{d.offset, std::max(q, d.offset + 1.0)};
          },
          [](const DiscreteUniform& d) {
            return std::pair{static_cast<double>(d.lo),
                             static_cast<double>(d.hi)};
          }},
      dist);
}

std::string to_string(const Distribution& dist) {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{[&](const Uniform& d) {
                          os << "uniform(" << d.lo << ", " << d.hi << ")";
                        },
                        [&](const ShiftedGeometric& d) {
                          os << "geometric(" << d.offset << ", " << d.mean
                             << ")";
                        },
                        [&](const DiscreteUniform& d) {
                          os << "discrete(" << d.lo << ", " << d.hi << ")";
                        }},
             dist);
  return os.str();
}

Distribution parse_distribution(std::string_view text) {
  text = trim(text);
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos ||
      close < open || close != text.size() - 1) {
    throw std::invalid_argument("expected kind(a, b): '" + std::string(text) +
                                "'");
  }
  const auto kind = trim(text.substr(0, open));
  const auto args = text.substr(open + 1, close - open - 1);
  const auto comma = args.find(',');
  if (comma == std::string_view::npos) {
    throw std::invalid_argument("expected two arguments: '" +
                                std::string(text) + "'");
  }
  const double a = parse_number(args.substr(0, comma));
  const double b = parse_number(args.substr(comma + 1));
  if (kind == "uniform" || kind == "unif") {
    if (!(a < b)) throw std::invalid_argument("uniform needs lo < hi");
    return Uniform{a, b};
  }
  if (kind == "geometric" || kind == "geom") {
    if (!(b >= 0)) throw std::invalid_argument("geometric needs mean >= 0");
    return ShiftedGeometric{a, b};
  }
  if (kind == "discrete") {
    if (a != std::floor(a) || b != std::floor(b) || a > b) {
      throw std::invalid_argument("discrete needs integer lo <= hi");
    }
    return DiscreteUniform{static_cast<long>(a), static_cast<long>(b)};
  }
  throw std::invalid_argument("unknown distribution '" + std::string(kind) +
                              "'");
}

PriorEntry make_entry(std::string name, Distribution dist) {
  auto [lo, hi] = default_bounds(dist);
  return PriorEntry{std::move(name), dist, lo, hi};
}

PriorSpec::PriorSpec(std::vector<PriorEntry> entries)
    : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (!seen.insert(e.name).second) {
      throw std::invalid_argument("duplicate prior entry '" + e.name + "'");
    }
    if (!(e.pmin < e.pmax)) {
      throw std::invalid_argument("prior '" + e.name + "' needs pmin < pmax");
    }
    const bool bounded = !std::holds_alternative<ShiftedGeometric>(e.dist);
    if (bounded) {
      auto [lo, hi] = default_bounds(e.dist);
      if (lo < e.pmin || hi > e.pmax) {
        throw std::invalid_argument("prior '" + e.name +
                                    "' support exceeds its bounds");
      }
    } else if (std::get<ShiftedGeometric>(e.dist).offset < e.pmin) {
      throw std::invalid_argument("prior '" + e.name +
                                  "' offset below its lower bound");
    }
  }
}

std::optional<std::size_t> PriorSpec::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> PriorSpec::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

double PriorSpec::density(std::span<const double> values) const {
  if (values.size() != entries_.size()) {
    throw std::invalid_argument("parameter count does not match prior");
  }
  double f = 1.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    f *= marginal_density(entries_[i].dist, values[i]);
  }
  return f;
}

ParameterSet draw_parameters(const PriorSpec& prior, Rng& rng) {
  std::vector<double> u(prior.size());
  for (auto& x : u) x = uniform01(rng);
  return parameters_at_quantiles(prior, u);
}

ParameterSet parameters_at_quantiles(const PriorSpec& prior,
                                     std::span<const double> u) {
  ParameterSet out;
  out.values.reserve(prior.size());
  for (std::size_t i = 0; i < prior.size(); ++i) {
    out.values.push_back(quantile(prior[i].dist, u[i]));
  }
  out.prior_density = prior.density(out.values);
  return out;
}

}  // namespace abcnet
