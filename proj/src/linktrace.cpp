#include "abcnet/linktrace.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "abcnet/csv.hpp"

namespace abcnet {

std::size_t SampleRecord::leap_count() const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [](const SampleRow& r) { return r.is_leap(); }));
}

namespace {

constexpr std::int64_t kNone = -1;

struct QueuedLink {
  NodeId target;
  std::size_t source_row;
  double arrival;
  bool removed;
  std::int64_t next_same_target;  // intrusive list of links per target
};

// Nodes never selected, with O(1) removal.
class UnselectedPool {
 public:
  explicit UnselectedPool(std::size_t n) : nodes_(n), slot_(n) {
    std::iota(nodes_.begin(), nodes_.end(), NodeId{0});
    std::iota(slot_.begin(), slot_.end(), std::size_t{0});
  }
  NodeId draw(Rng& rng) const { return nodes_[uniform_index(rng, nodes_.size())]; }
  void remove(NodeId v) {
    const std::size_t s = slot_[v];
    const NodeId last = nodes_.back();
    nodes_[s] = last;
    slot_[last] = s;
    nodes_.pop_back();
  }

 private:
  std::vector<NodeId> nodes_;
  std::vector<std::size_t> slot_;
};

}  // namespace

SampleRecord link_trace_sample(const PopulationGraph& graph, std::size_t n_samp,
                               double pr_response, Rng& rng,
                               const LinkTraceOptions& options) {
  const std::size_t n = graph.node_count();
  if (n == 0) throw std::invalid_argument("cannot sample an empty graph");
  if (n_samp == 0) throw std::invalid_argument("sample size must be positive");
  if (!(pr_response >= 0.0 && pr_response <= 1.0)) {
    throw std::invalid_argument("response probability must lie in [0, 1]");
  }
  if (options.first_seed && *options.first_seed >= n) {
    throw std::invalid_argument("forced seed is not a node of the graph");
  }
  const std::size_t wanted = std::min(n_samp, n);
  const bool delayed = options.order == QueueOrder::random_delay;

  SampleRecord record;
  record.rows.reserve(wanted);
  std::vector<QueuedLink> links;
  std::vector<std::int64_t> pending(n, kNone);
  std::vector<std::int64_t> row_of(n, kNone);
  std::vector<std::size_t> stale;
  using Arrival = std::pair<double, std::size_t>;
  std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> by_arrival;
  std::size_t fifo_head = 0;
  double clock = 0.0;
  UnselectedPool pool(n);

  while (record.rows.size() < wanted) {
    // Purge queued links whose target has been sampled.
    for (std::size_t idx : stale) {
      QueuedLink& link = links[idx];
      if (link.removed) continue;
      link.removed = true;
      ++record.rows[link.source_row].links_redundant;
    }
    stale.clear();

    std::int64_t next = kNone;
    if (delayed) {
      while (!by_arrival.empty() && links[by_arrival.top().second].removed) {
        by_arrival.pop();
      }
      if (!by_arrival.empty()) {
        next = static_cast<std::int64_t>(by_arrival.top().second);
        by_arrival.pop();
      }
    } else {
      while (fifo_head < links.size() && links[fifo_head].removed) ++fifo_head;
      if (fifo_head < links.size()) next = static_cast<std::int64_t>(fifo_head++);
    }

    SampleRow row;
    row.order = record.rows.size();
    double arrival = clock;
    if (next == kNone) {
      row.node_id = (record.rows.empty() && options.first_seed)
                        ? *options.first_seed
                        : pool.draw(rng);
    } else {
      QueuedLink& link = links[static_cast<std::size_t>(next)];
      link.removed = true;
      row.node_id = link.target;
      row.source_id = record.rows[link.source_row].node_id;
      ++record.rows[link.source_row].links_recruited;
      arrival = link.arrival;
      clock = std::max(clock, arrival);
    }
    const NodeId x = row.node_id;
    pool.remove(x);
    row_of[x] = static_cast<std::int64_t>(row.order);
    for (std::int64_t l = pending[x]; l != kNone; l = links[static_cast<std::size_t>(l)].next_same_target) {
      if (!links[static_cast<std::size_t>(l)].removed) stale.push_back(static_cast<std::size_t>(l));
    }
    pending[x] = kNone;

    const Node& node = graph.node(x);
    row.pop_degree = static_cast<int>(graph.degree(x));
    row.links_reported = row.pop_degree;
    row.infected = node.infected;
    row.position = node.position;

    for (NodeId sink : graph.neighbors(x)) {
      if (!bernoulli(rng, pr_response)) continue;
      ++row.links_responding;
      const std::size_t idx = links.size();
      const double when = delayed ? arrival + uniform01(rng) : 0.0;
      links.push_back(QueuedLink{sink, row.order, when, false, kNone});
      if (row_of[sink] != kNone) {
        stale.push_back(idx);
      } else {
        links[idx].next_same_target = pending[sink];
        pending[sink] = static_cast<std::int64_t>(idx);
      }
      if (delayed) by_arrival.emplace(when, idx);
    }
    record.rows.push_back(row);
  }
  return record;
}

SampleRecord node_depth(SampleRecord record) {
  const std::size_t n = record.rows.size();
  std::unordered_map<NodeId, std::size_t> row_of;
  row_of.reserve(n);
  for (std::size_t i = 0; i < n; ++i) row_of.emplace(record.rows[i].node_id, i);

  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> parent(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& src = record.rows[i].source_id;
    if (!src) continue;
    const auto it = row_of.find(*src);
    if (it == row_of.end()) {
      throw std::invalid_argument("recruiter of node " +
                                  std::to_string(record.rows[i].node_id) +
                                  " is not in the sample");
    }
    parent[i] = it->second;
    children[it->second].push_back(i);
  }

  // Sum of distances in each tree by rerooting: one pass down for subtree
  // sizes and depth sums, one pass to move the root across each edge.
  std::vector<std::size_t> subtree(n, 1);
  std::vector<double> below(n, 0.0);
  std::vector<double> total(n, 0.0);
  for (std::size_t root = 0; root < n; ++root) {
    if (parent[root] != n) continue;
    std::vector<std::size_t> order{root};
    for (std::size_t k = 0; k < order.size(); ++k) {
      for (std::size_t c : children[order[k]]) order.push_back(c);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      for (std::size_t c : children[*it]) {
        subtree[*it] += subtree[c];
        below[*it] += below[c] + static_cast<double>(subtree[c]);
      }
    }
    const auto size = static_cast<double>(order.size());
    total[root] = below[root];
    for (std::size_t v : order) {
      for (std::size_t c : children[v]) {
        total[c] = total[v] + size - 2.0 * static_cast<double>(subtree[c]);
      }
    }
    for (std::size_t v : order) {
      record.rows[v].depth = order.size() > 1
                                 ? std::optional<double>(total[v] / (size - 1.0))
                                 : std::nullopt;
    }
  }
  return record;
}

namespace {
constexpr const char* kSampleHeader =
    "order,node_id,source_id,pop_degree,links_reported,links_responding,"
    "links_recruited,links_redundant,infected,x,y,depth";
}

void write_sample_csv(std::ostream& os, const SampleRecord& record) {
  os << kSampleHeader << '\n';
  for (const auto& r : record.rows) {
    os << r.order << ',' << r.node_id << ',';
    if (r.source_id) os << *r.source_id;
    os << ',' << r.pop_degree << ',' << r.links_reported << ','
       << r.links_responding << ',' << r.links_recruited << ','
       << r.links_redundant << ',' << (r.infected ? 1 : 0) << ','
       << csv::format(r.position.x) << ',' << csv::format(r.position.y) << ','
       << csv::format(r.depth) << '\n';
  }
}

SampleRecord read_sample_csv(std::istream& is) {
  std::string line;
  if (!csv::read_line(is, line) || line != kSampleHeader) {
    throw std::invalid_argument("sample file lacks the expected header");
  }
  SampleRecord record;
  while (csv::read_line(is, line)) {
    const auto f = csv::split(line);
    if (f.size() != 12) {
      throw std::invalid_argument("sample row has " + std::to_string(f.size()) +
                                  " fields, expected 12");
    }
    SampleRow r;
    r.order = static_cast<std::size_t>(csv::parse_int(f[0], "order"));
    r.node_id = static_cast<NodeId>(csv::parse_int(f[1], "node_id"));
    if (!f[2].empty()) r.source_id = static_cast<NodeId>(csv::parse_int(f[2], "source_id"));
    r.pop_degree = static_cast<int>(csv::parse_int(f[3], "pop_degree"));
    r.links_reported = static_cast<int>(csv::parse_int(f[4], "links_reported"));
    r.links_responding = static_cast<int>(csv::parse_int(f[5], "links_responding"));
    r.links_recruited = static_cast<int>(csv::parse_int(f[6], "links_recruited"));
    r.links_redundant = static_cast<int>(csv::parse_int(f[7], "links_redundant"));
    r.infected = csv::parse_int(f[8], "infected") != 0;
    r.position = {csv::parse_double(f[9], "x"), csv::parse_double(f[10], "y")};
    r.depth = csv::parse_optional(f[11], "depth");
    record.rows.push_back(r);
  }
  return record;
}

}  // namespace abcnet
