#include "abcnet/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "abcnet/csv.hpp"

namespace abcnet {

PopulationGraph::PopulationGraph(std::vector<Node> nodes)
    : nodes_(std::move(nodes)), adjacency_(nodes_.size()) {}

bool PopulationGraph::has_edge(NodeId a, NodeId b) const {
  const auto& small =
      adjacency_[a].size() <= adjacency_[b].size() ? adjacency_[a] : adjacency_[b];
  const NodeId other = &small == &adjacency_[a] ? b : a;
  return std::find(small.begin(), small.end(), other) != small.end();
}

bool PopulationGraph::add_edge(NodeId a, NodeId b) {
  if (a == b || a >= nodes_.size() || b >= nodes_.size() || has_edge(a, b)) {
    return false;
  }
  adjacency_[a].push_back(b);
  adjacency_[b].push_back(a);
  edges_.emplace_back(std::min(a, b), std::max(a, b));
  return true;
}

std::size_t edge_count_for(double avg_degree, std::size_t n_nodes) {
  return static_cast<std::size_t>(
      std::llround(avg_degree * static_cast<double>(n_nodes) / 2.0));
}

namespace {

// Unnormalized D^-gamma weights into `w`; returns their sum.
double distance_weights(const PopulationGraph& graph, NodeId source,
                        double gamma, std::vector<double>& w) {
  const std::size_t n = graph.node_count();
  w.assign(n, 0.0);
  const Point s = graph.node(source).position;
  const double half_exp = -0.5 * gamma;
  bool overflow = false;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == source) continue;
    const Point p = graph.node(static_cast<NodeId>(j)).position;
    const double dx = p.x - s.x;
    const double dy = p.y - s.y;
    const double d2 = dx * dx + dy * dy;
    const double v = std::pow(d2, half_exp);
    if (d2 == 0.0 || !std::isfinite(v)) overflow = true;
    w[j] = v;
  }
  for (NodeId j : graph.neighbors(source)) w[j] = 0.0;

  double total = 0.0;
  for (double v : w) total += v;
  if (!overflow && std::isfinite(total)) return total;

  // Coincident or extremely close nodes: redo in log space, flooring D at the
  // smallest positive double.
  const double tiny = std::numeric_limits<double>::denorm_min();
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == source) continue;
    const Point p = graph.node(static_cast<NodeId>(j)).position;
    const double d = std::max(std::hypot(p.x - s.x, p.y - s.y), tiny);
    w[j] = -gamma * std::log(d);
  }
  for (NodeId j : graph.neighbors(source)) w[j] = -std::numeric_limits<double>::infinity();
  w[source] = -std::numeric_limits<double>::infinity();
  for (double v : w) max_log = std::max(max_log, v);
  total = 0.0;
  for (double& v : w) {
    v = std::isinf(v) ? 0.0 : std::exp(v - max_log);
    total += v;
  }
  return total;
}

NodeId pick_weighted(const std::vector<double>& w, double total, Rng& rng) {
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = w.size();
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] <= 0.0) continue;
    acc += w[j];
    last = j;
    if (target < acc) return static_cast<NodeId>(j);
  }
  return static_cast<NodeId>(last);
}

}  // namespace

std::vector<double> target_probabilities(const PopulationGraph& graph,
                                         NodeId source, double gamma) {
  std::vector<double> w;
  const double total = distance_weights(graph, source, gamma, w);
  if (total > 0.0) {
    for (double& v : w) v /= total;
  }
  return w;
}

PopulationGraph generate_population(const PopulationParams& params, Rng& rng) {
  const std::size_t n = params.n_nodes;
  if (n < 2) throw std::invalid_argument("population needs at least 2 nodes");
  if (n > std::numeric_limits<NodeId>::max()) {
    throw std::invalid_argument("population too large");
  }
  if (!(params.avg_degree >= 0.0) || !std::isfinite(params.avg_degree)) {
    throw std::invalid_argument("average degree must be finite and >= 0");
  }
  if (!(params.initial_infection >= 0.0 && params.initial_infection <= 1.0) ||
      !(params.transmission >= 0.0 && params.transmission <= 1.0)) {
    throw std::invalid_argument("infection probabilities must lie in [0, 1]");
  }
  if (!std::isfinite(params.gamma)) {
    throw std::invalid_argument("gamma must be finite");
  }
  const std::size_t n_edges = edge_count_for(params.avg_degree, n);
  const std::size_t capacity = n * (n - 1) / 2;
  if (n_edges > capacity) {
    throw std::invalid_argument("requested " + std::to_string(n_edges) +
                                " edges but a simple graph on " +
                                std::to_string(n) + " nodes holds " +
                                std::to_string(capacity));
  }

  std::vector<Node> nodes(n);
  for (auto& v : nodes) {
    v.position.x = uniform01(rng);
    v.position.y = uniform01(rng);
  }
  for (auto& v : nodes) v.infected = bernoulli(rng, params.initial_infection);

  PopulationGraph graph(std::move(nodes));
  std::vector<double> weights;
  for (std::size_t e = 0; e < n_edges; ++e) {
    NodeId source = 0;
    do {
      source = static_cast<NodeId>(uniform_index(rng, n));
    } while (graph.degree(source) + 1 >= n);

    NodeId target = 0;
    if (params.gamma == 0.0 && 2 * graph.degree(source) < n) {
      do {
        target = static_cast<NodeId>(uniform_index(rng, n));
      } while (target == source || graph.has_edge(source, target));
    } else {
      const double total = distance_weights(graph, source, params.gamma, weights);
      target = pick_weighted(weights, total, rng);
    }
    graph.add_edge(source, target);

    Node& a = graph.node(source);
    Node& b = graph.node(target);
    if (a.infected != b.infected && bernoulli(rng, params.transmission)) {
      a.infected = b.infected = true;
    }
  }
  return graph;
}

void write_nodes_csv(std::ostream& os, const PopulationGraph& graph) {
  os << "id,x,y,infected\n";
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const Node& v = graph.node(static_cast<NodeId>(i));
    os << i << ',' << csv::format(v.position.x) << ','
       << csv::format(v.position.y) << ',' << (v.infected ? 1 : 0) << '\n';
  }
}

void write_edges_csv(std::ostream& os, const PopulationGraph& graph) {
  os << "id_a,id_b\n";
  for (const auto& [a, b] : graph.edges()) os << a << ',' << b << '\n';
}

}  // namespace abcnet
