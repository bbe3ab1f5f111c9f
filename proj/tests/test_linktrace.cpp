#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <sstream>

#include "abcnet/linktrace.hpp"
#include "sample_checks.hpp"

using namespace abcnet;

namespace {

PopulationGraph make_graph(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  std::vector<Node> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].position = {0.1 * static_cast<double>(i), 0.5};
  }
  PopulationGraph g(nodes);
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

int total_redundant(const SampleRecord& r) {
  int s = 0;
  for (const auto& row : r.rows) s += row.links_redundant;
  return s;
}

// Small random graph: random positions and edges.
PopulationGraph random_graph(Rng& rng, std::size_t n, double p) {
  std::vector<Node> nodes(n);
  for (auto& v : nodes) {
    v.position = {uniform01(rng), uniform01(rng)};
    v.infected = bernoulli(rng, 0.3);
  }
  PopulationGraph g(nodes);
  for (NodeId a = 0; a < n; ++a) {
    for (NodeId b = a + 1; b < n; ++b) {
      if (bernoulli(rng, p)) g.add_edge(a, b);
    }
  }
  return g;
}

}  // namespace

TEST_CASE("edgeless graph is all leaps") {
  const auto g = make_graph(8, {});
  Rng rng(1);
  const auto r = link_trace_sample(g, 5, 1.0, rng);
  REQUIRE(r.size() == 5);
  CHECK(r.leap_count() == 5);
  for (const auto& row : r.rows) {
    CHECK(row.is_leap());
    CHECK(row.pop_degree == 0);
    CHECK(row.links_reported == 0);
    CHECK(row.links_responding == 0);
    CHECK(row.links_recruited == 0);
    CHECK(row.links_redundant == 0);
  }
  CHECK(sample_violations(g, r, 5).empty());
}

TEST_CASE("path traced from its middle") {
  const auto g = make_graph(3, {{0, 1}, {1, 2}});
  for (auto order : {QueueOrder::fifo, QueueOrder::random_delay}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng rng(s);
      const auto r = link_trace_sample(g, 3, 1.0, rng, {order, NodeId{1}});
      REQUIRE(r.size() == 3);
      CHECK(r.rows[0].node_id == 1);
      CHECK(r.rows[0].is_leap());
      CHECK(r.leap_count() == 1);
      CHECK(r.rows[1].source_id == NodeId{1});
      CHECK(r.rows[2].source_id == NodeId{1});
      CHECK(r.rows[1].node_id + r.rows[2].node_id == 2);
      CHECK(r.rows[0].links_recruited == 2);
      CHECK(sample_violations(g, r, 3).empty());
    }
  }
}

TEST_CASE("triangle has exactly one redundant link") {
  const auto g = make_graph(3, {{0, 1}, {1, 2}, {0, 2}});
  for (auto order : {QueueOrder::fifo, QueueOrder::random_delay}) {
    for (NodeId seed = 0; seed < 3; ++seed) {
      for (std::uint64_t s = 0; s < 30; ++s) {
        Rng rng(s);
        const auto r = link_trace_sample(g, 3, 1.0, rng, {order, seed});
        CHECK(total_redundant(r) == 1);
        CHECK(r.size() - r.leap_count() == 2);
        CHECK(sample_violations(g, r, 3).empty());
      }
    }
  }
}

TEST_CASE("breadth-first order on a tree") {
  // 0 - {1, 2}; 1 - {3, 4}; 2 - {5}
  const auto g = make_graph(6, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}});
  Rng rng(4);
  const auto r = link_trace_sample(g, 6, 1.0, rng, {QueueOrder::fifo, NodeId{0}});
  std::vector<NodeId> seen;
  for (const auto& row : r.rows) seen.push_back(row.node_id);
  CHECK(seen == std::vector<NodeId>{0, 1, 2, 3, 4, 5});
  // back links to recruiters are the only redundant ones; the last node's
  // back link is still queued when sampling stops
  CHECK(total_redundant(r) == 4);
  CHECK(r.rows[5].links_redundant == 0);
  CHECK(r.rows[1].links_responding == 3);
  CHECK(r.rows[1].links_recruited == 2);
}

TEST_CASE("links to one target queued twice") {
  // square 0-1-3-2-0 seeded at 0: node 3 is queued by 1 and by 2
  const auto g = make_graph(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  Rng rng(2);
  const auto r = link_trace_sample(g, 4, 1.0, rng, {QueueOrder::fifo, NodeId{0}});
  REQUIRE(r.size() == 4);
  CHECK(r.rows[3].node_id == 3);
  CHECK(r.rows[3].source_id == NodeId{1});
  // 1 -> 0 and 2 -> 0 back links are purged; 2 -> 3 is left in the queue
  CHECK(total_redundant(r) == 2);
  CHECK(r.rows[2].links_redundant == 1);  // node 2 lost its back link to 0
}

TEST_CASE("no response means every node is a leap") {
  Rng rng(9);
  const auto g = random_graph(rng, 30, 0.3);
  const auto r = link_trace_sample(g, 10, 0.0, rng);
  CHECK(r.leap_count() == 10);
  for (const auto& row : r.rows) {
    CHECK(row.links_responding == 0);
    CHECK(row.links_reported == row.pop_degree);
  }
}

TEST_CASE("connected population is covered with one leap") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId v = 1; v < 50; ++v) edges.push_back({static_cast<NodeId>(uniform_index(rng, v)), v});
    const auto g = make_graph(50, edges);
    for (auto order : {QueueOrder::fifo, QueueOrder::random_delay}) {
      const auto r = link_trace_sample(g, 80, 1.0, rng, {order, {}});
      CHECK(r.size() == 50);
      CHECK(r.leap_count() == 1);
      CHECK(sample_violations(g, r, 80).empty());
    }
  }
}

TEST_CASE("random samples keep their invariants") {
  Rng rng(77);
  std::size_t violations = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + uniform_index(rng, 60);
    const auto g = random_graph(rng, n, uniform01(rng) * 0.2);
    const std::size_t n_samp = 1 + uniform_index(rng, 70);
    const auto order = bernoulli(rng, 0.5) ? QueueOrder::fifo : QueueOrder::random_delay;
    const auto r = link_trace_sample(g, n_samp, uniform01(rng), rng, {order, {}});
    violations += sample_violations(g, r, n_samp).size();
  }
  CHECK(violations == 0);
}

TEST_CASE("bad inputs") {
  Rng rng(1);
  const auto g = make_graph(3, {{0, 1}});
  CHECK_THROWS_AS(link_trace_sample(PopulationGraph{}, 3, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(link_trace_sample(g, 0, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(link_trace_sample(g, 2, 1.5, rng), std::invalid_argument);
  CHECK_THROWS_AS(link_trace_sample(g, 2, 1.0, rng, {QueueOrder::fifo, NodeId{9}}),
                  std::invalid_argument);
}

TEST_CASE("sampling is deterministic") {
  Rng a(5), b(5);
  const auto g = random_graph(a, 80, 0.05);
  random_graph(b, 80, 0.05);
  for (auto order : {QueueOrder::fifo, QueueOrder::random_delay}) {
    const auto r1 = link_trace_sample(g, 40, 0.7, a, {order, {}});
    const auto r2 = link_trace_sample(g, 40, 0.7, b, {order, {}});
    CHECK(r1 == r2);
  }
}

namespace {

// Mean geodesic distance by breadth-first search from every node.
std::vector<std::optional<double>> bfs_depths(const SampleRecord& r) {
  const std::size_t n = r.size();
  std::map<NodeId, std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) idx[r.rows[i].node_id] = i;
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (r.rows[i].source_id) {
      const auto j = idx.at(*r.rows[i].source_id);
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  std::vector<std::optional<double>> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> dist(n, -1);
    std::deque<std::size_t> q{s};
    dist[s] = 0;
    double total = 0.0;
    int reached = 0;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop_front();
      for (auto w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          total += dist[w];
          ++reached;
          q.push_back(w);
        }
      }
    }
    if (reached > 0) out[s] = total / reached;
  }
  return out;
}

SampleRow leap(NodeId id) {
  SampleRow r;
  r.node_id = id;
  return r;
}

SampleRow child(NodeId id, NodeId src) {
  SampleRow r;
  r.node_id = id;
  r.source_id = src;
  return r;
}

}  // namespace

TEST_CASE("depth on small forests") {
  SUBCASE("isolated") {
    SampleRecord r{{leap(4)}};
    CHECK_FALSE(node_depth(r).rows[0].depth.has_value());
  }
  SUBCASE("path") {
    SampleRecord r{{leap(1), child(2, 1), child(3, 2)}};
    const auto d = node_depth(r);
    CHECK(*d.rows[0].depth == doctest::Approx(1.5));
    CHECK(*d.rows[1].depth == doctest::Approx(1.0));
    CHECK(*d.rows[2].depth == doctest::Approx(1.5));
  }
  SUBCASE("star") {
    SampleRecord r{{leap(0), child(1, 0), child(2, 0), child(3, 0), child(4, 0)}};
    const auto d = node_depth(r);
    CHECK(*d.rows[0].depth == doctest::Approx(1.0));
    for (int i = 1; i <= 4; ++i) CHECK(*d.rows[i].depth == doctest::Approx(1.75));
  }
  SUBCASE("unknown recruiter") {
    SampleRecord r{{leap(0), child(1, 7)}};
    CHECK_THROWS_AS(node_depth(r), std::invalid_argument);
  }
}

TEST_CASE("depth matches breadth-first search") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g = random_graph(rng, 60, 0.04);
    const auto r = node_depth(link_trace_sample(g, 50, 0.8, rng));
    const auto expect = bfs_depths(r);
    for (std::size_t i = 0; i < r.size(); ++i) {
      REQUIRE(r.rows[i].depth.has_value() == expect[i].has_value());
      if (expect[i]) CHECK(*r.rows[i].depth == doctest::Approx(*expect[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("long format") {
  SUBCASE("empty sample is header only") {
    std::ostringstream os;
    write_sample_csv(os, SampleRecord{});
    CHECK(os.str() ==
          "order,node_id,source_id,pop_degree,links_reported,links_responding,"
          "links_recruited,links_redundant,infected,x,y,depth\n");
  }
  SUBCASE("round trip") {
    Rng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
      const auto g = random_graph(rng, 500, 0.01);
      const auto r = node_depth(link_trace_sample(g, 400, 0.9, rng));
      std::ostringstream os;
      write_sample_csv(os, r);
      std::istringstream is(os.str());
      const auto back = read_sample_csv(is);
      CHECK(back == r);
      std::size_t lines = 0;
      for (char c : os.str()) lines += c == '\n';
      CHECK(lines == 401);
      for (std::size_t i = 1; i < back.size(); ++i) {
        CHECK(back.rows[i].order > back.rows[i - 1].order);
      }
    }
  }
}
