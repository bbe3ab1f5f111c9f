#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <vector>

#include "abcnet/population.hpp"
#include "abcnet/random.hpp"

namespace abcnet {

/// Order in which queued recruitment links are followed.
enum class QueueOrder {
  fifo,          // breadth-first
  random_delay,  // each link arrives after an independent uniform(0,1) delay
};

struct SampleRow {
  std::size_t order = 0;
  NodeId node_id = 0;
  std::optional<NodeId> source_id;  // empty for a seed or leap
  int pop_degree = 0;
  int links_reported = 0;
  int links_responding = 0;
  int links_recruited = 0;
  int links_redundant = 0;
  bool infected = false;
  Point position;
  std::optional<double> depth;

  bool is_leap() const { return !source_id.has_value(); }
  bool operator==(const SampleRow&) const = default;
};

/// Per-node log of a link-traced sample, in sampling order.
struct SampleRecord {
  std::vector<SampleRow> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t leap_count() const;
  bool operator==(const SampleRecord&) const = default;
};

struct LinkTraceOptions {
  QueueOrder order = QueueOrder::fifo;
  /// Forces the first seed instead of drawing it.
  std::optional<NodeId> first_seed;
};

/// Link-traced sample of min(n_samp, node count) nodes.
///
/// The queue holds (target, source) links. Before each pick, every queued
/// link whose target is already sampled is purged and counted as redundant
/// for its source. An empty queue triggers a leap: a uniform draw among
/// never-selected nodes. Each newly sampled node reports its full degree, and
/// every neighbor responds independently with probability `pr_response`;
/// responders are queued with the new node as their source.
///
/// Throws std::invalid_argument for an empty graph, n_samp == 0, or
/// pr_response outside [0, 1].
SampleRecord link_trace_sample(const PopulationGraph& graph, std::size_t n_samp,
                               double pr_response, Rng& rng,
                               const LinkTraceOptions& options = {});

/// Fills each row's depth: mean geodesic distance to the other nodes of its
/// component in the recruitment forest. Isolated nodes get no depth.
SampleRecord node_depth(SampleRecord record);

/// Long format, one row per sampled node:
/// order,node_id,source_id,pop_degree,links_reported,links_responding,
/// links_recruited,links_redundant,infected,x,y,depth
void write_sample_csv(std::ostream& os, const SampleRecord& record);
SampleRecord read_sample_csv(std::istream& is);

}  // namespace abcnet
