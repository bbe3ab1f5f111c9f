#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "abcnet/random.hpp"

namespace abcnet {

using NodeId = std::uint32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct Node {
  Point position;
  bool infected = false;
};

/// Undirected simple graph over nodes in the unit square.
class PopulationGraph {
 public:
  PopulationGraph() = default;
  explicit PopulationGraph(std::vector<Node> nodes);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Node& node(NodeId v) const { return nodes_[v]; }
  Node& node(NodeId v) { return nodes_[v]; }
  const std::vector<Node>& nodes() const { return nodes_; }

  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[v]; }
  std::size_t degree(NodeId v) const { return adjacency_[v].size(); }
  bool has_edge(NodeId a, NodeId b) const;

  /// Adds {a, b}. Returns false (and changes nothing) for a self-loop or an
  /// existing edge.
  bool add_edge(NodeId a, NodeId b);

  /// Edges as (min, max) pairs in insertion order.
  const std::vector<std::pair<NodeId, NodeId>>& edges() const {
    return edges_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
};

struct PopulationParams {
  double avg_degree = 0.0;
  std::size_t n_nodes = 0;
  double initial_infection = 0.0;  // phi
  double transmission = 0.0;       // alpha
  double gamma = 0.0;              // distance-decay exponent
};

/// round(avg_degree * n_nodes / 2).
std::size_t edge_count_for(double avg_degree, std::size_t n_nodes);

/// Probability that `source` picks each node as the target of its next edge:
/// proportional to D^-gamma over nodes that are neither `source` nor already
/// adjacent to it, zero elsewhere. Empty result sums to zero when `source`
/// is saturated.
std::vector<double> target_probabilities(const PopulationGraph& graph,
                                         NodeId source, double gamma);

/// Places nodes uniformly in the unit square, infects each with probability
/// initial_infection, then forms edges one at a time: a uniform source, a
/// distance-weighted target, and transmission across the new edge with
/// probability `transmission` when exactly one endpoint is infected.
///
/// Throws std::invalid_argument when the edge count cannot fit in a simple
/// graph or a parameter is out of range.
PopulationGraph generate_population(const PopulationParams& params, Rng& rng);

/// nodes.csv: id,x,y,infected
void write_nodes_csv(std::ostream& os, const PopulationGraph& graph);
/// edges.csv: id_a,id_b with id_a < id_b
void write_edges_csv(std::ostream& os, const PopulationGraph& graph);

}  // namespace abcnet
