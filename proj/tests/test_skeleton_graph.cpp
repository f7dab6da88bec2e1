#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <numeric>

#include "stgformer/skeleton_graph.hpp"

using namespace stg;

namespace {

// Plain queue BFS kept separate from the library's traversal.
std::vector<int> bfs_from(int src, int n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> nbr(n);
  for (auto [a, b] : edges) {
    nbr[a].push_back(b);
    nbr[b].push_back(a);
  }
  std::vector<int> d(n, -1), q{src};
  d[src] = 0;
  for (size_t i = 0; i < q.size(); ++i)
    for (int v : nbr[q[i]])
      if (d[v] < 0) {
        d[v] = d[q[i]] + 1;
        q.push_back(v);
      }
  return d;
}

std::vector<Edge> random_edges(int n, Rng& rng, double p) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) e.push_back({i, j});
  return e;
}

}  // namespace

TEST_CASE("chain hop distances") {
  const auto g = SkeletonGraph::build({{0, 1}, {1, 2}, {2, 3}}, 4);
  CHECK(g.hop(0, 3) == 3);
  for (int i = 0; i < 4; ++i) CHECK(g.hop(i, i) == 0);
}

TEST_CASE("h36m wrist to wrist matches BFS") {
  const auto g = human36m_skeleton();
  REQUIRE(g.num_joints() == 17);
  const int lwrist = 13, rwrist = 16;
  const auto d = bfs_from(lwrist, 17, g.edges());
  CHECK(g.hop(lwrist, rwrist) == d[rwrist]);
  CHECK(d[rwrist] == 6);
  for (int i = 0; i < 17; ++i) {
    const auto di = bfs_from(i, 17, g.edges());
    for (int j = 0; j < 17; ++j) CHECK(g.hop(i, j) == di[j]);
  }
}

TEST_CASE("build rejects bad edges") {
  CHECK_THROWS_AS(SkeletonGraph::build({{0, 4}}, 4), std::invalid_argument);
  CHECK_THROWS_AS(SkeletonGraph::build({{-1, 0}}, 4), std::invalid_argument);
  CHECK_THROWS_AS(SkeletonGraph::build({{1, 1}}, 4), std::invalid_argument);
  CHECK_THROWS_AS(SkeletonGraph::build({{0, 1}, {1, 0}}, 4), std::invalid_argument);
}

TEST_CASE("disconnected pairs are -1") {
  const auto g = SkeletonGraph::build({{0, 1}}, 3);
  CHECK(g.hop(0, 2) == -1);
  CHECK(g.hop(2, 2) == 0);
}

TEST_CASE("normalized adjacency hand cases") {
  const Mat a = normalized_adjacency(SkeletonGraph::build({{0, 1}}, 2));
  CHECK(a(0, 0) == doctest::Approx(0.5));
  CHECK(a(0, 1) == doctest::Approx(0.5));
  CHECK(a(1, 0) == doctest::Approx(0.5));
  CHECK(a(1, 1) == doctest::Approx(0.5));
  const Mat one = normalized_adjacency(SkeletonGraph::build({}, 1));
  CHECK(one(0, 0) == 1.0);
}

TEST_CASE("normalized adjacency matches loop oracle") {
  const auto g = chain_skeleton(3);
  const auto hops = oracle::floyd_hops(3, g.edges());
  CHECK(oracle::max_abs_diff(normalized_adjacency(g), oracle::ring_adjacency(hops, 1)) < 1e-12);
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + rep % 7;
    const auto e = random_edges(n, rng, 0.4);
    const auto gr = SkeletonGraph::build(e, n);
    const Mat a = normalized_adjacency(gr);
    CHECK(oracle::max_abs_diff(a, oracle::ring_adjacency(oracle::floyd_hops(n, e), 1)) < 1e-12);
    CHECK(oracle::max_abs_diff(a, a.transpose()) == 0.0);
    CHECK(a.minCoeff() >= 0.0);
  }
}

TEST_CASE("exact hop adjacency") {
  const auto chain = chain_skeleton(3);
  const Mat h2 = exact_hop_adjacency(chain, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK((h2(i, j) != 0.0) == ((i == 0 && j == 2) || (i == 2 && j == 0)));

  std::vector<Edge> complete;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) complete.push_back({i, j});
  CHECK(exact_hop_adjacency(SkeletonGraph::build(complete, 4), 2).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(exact_hop_adjacency(chain, 0), std::invalid_argument);

  const auto g = human36m_skeleton();
  const Mat h3 = exact_hop_adjacency(g, 3);
  for (int i = 0; i < 17; ++i) {
    const auto d = bfs_from(i, 17, g.edges());
    for (int j = 0; j < 17; ++j) CHECK((h3(i, j) != 0.0) == (d[j] == 3));
  }
}

TEST_CASE("exact hop adjacency matches ring oracle on random graphs") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + rep % 7;
    const auto e = random_edges(n, rng, 0.35);
    const auto g = SkeletonGraph::build(e, n);
    const auto hops = oracle::floyd_hops(n, e);
    for (int h = 1; h <= 4; ++h) CHECK(oracle::max_abs_diff(exact_hop_adjacency(g, h), oracle::ring_adjacency(hops, h)) < 1e-12);
  }
}

TEST_CASE("rings partition reachability") {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 3 + rep % 6;
    const auto e = random_edges(n, rng, 0.3);
    const auto g = SkeletonGraph::build(e, n);
    IntMat sum = IntMat::Zero(n, n);
    for (int h = 1; h <= n; ++h) {
      const Mat a = exact_hop_adjacency(g, h);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (a(i, j) != 0.0 && i != j) sum(i, j) += 1;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) CHECK(sum(i, j) == ((i != j && g.hop(i, j) > 0) ? 1 : 0));
  }
}

TEST_CASE("temporal hop adjacency") {
  const Mat t1 = temporal_hop_adjacency(4, 1);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) CHECK((t1(a, b) != 0.0) == (std::abs(a - b) <= 1));
  CHECK(temporal_hop_adjacency(3, 3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(oracle::max_abs_diff(temporal_hop_adjacency(8, 2), oracle::ring_adjacency(oracle::chain_hops(8), 2)) < 1e-12);
  // BFS on an explicit chain graph gives the same rings.
  std::vector<Edge> e;
  for (int t = 0; t + 1 < 8; ++t) e.push_back({t, t + 1});
  std::vector<std::vector<int>> d;
  for (int t = 0; t < 8; ++t) d.push_back(bfs_from(t, 8, e));
  CHECK(oracle::max_abs_diff(temporal_hop_adjacency(8, 2), oracle::ring_adjacency(d, 2)) < 1e-12);
}

TEST_CASE("bias index tables") {
  const auto g = human36m_skeleton();
  const auto idx = bias_index_tables(g, 10, 4, 3);
  CHECK(idx.temporal_index(0, 5) == 6);
  CHECK(idx.temporal_index(5, 0) == 0);
  for (int i = 0; i < 10; ++i) CHECK(idx.temporal_index(i, i) == 3);
  for (int i = 0; i < 17; ++i) CHECK(idx.spatial_index(i, i) == 0);
  // shift invariance
  for (int a = 0; a + 2 < 10; ++a)
    for (int b = 0; b + 2 < 10; ++b) CHECK(idx.temporal_index(a, b) == idx.temporal_index(a + 2, b + 2));

  std::vector<int> hist(6, 0), expect(6, 0);
  for (int i = 0; i < 17; ++i) {
    const auto d = bfs_from(i, 17, g.edges());
    for (int j = 0; j < 17; ++j) {
      ++hist[idx.spatial_index(i, j)];
      ++expect[d[j] < 0 ? 5 : std::min(d[j], 4)];
    }
  }
  CHECK(hist == expect);
  CHECK(idx.spatial_buckets() == 6);
  CHECK(idx.temporal_buckets() == 7);

  const auto split = bias_index_tables(SkeletonGraph::build({{0, 1}}, 3), 2, 2, 1);
  CHECK(split.spatial_index(0, 2) == 3);
}

TEST_CASE("joint relabeling permutes every structure") {
  const auto g = human36m_skeleton();
  std::vector<int> perm(17);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(5);
  perm = shuffled_indices(17, rng);
  std::vector<Edge> pe;
  for (auto [a, b] : g.edges()) pe.push_back({perm[a], perm[b]});
  const auto gp = SkeletonGraph::build(pe, 17);
  const Mat a = normalized_adjacency(g), ap = normalized_adjacency(gp);
  const Mat r2 = exact_hop_adjacency(g, 2), r2p = exact_hop_adjacency(gp, 2);
  const auto bi = bias_index_tables(g, 3, 4, 2), bip = bias_index_tables(gp, 3, 4, 2);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 17; ++j) {
      CHECK(gp.hop(perm[i], perm[j]) == g.hop(i, j));
      CHECK(ap(perm[i], perm[j]) == doctest::Approx(a(i, j)).epsilon(1e-14));
      CHECK(r2p(perm[i], perm[j]) == doctest::Approx(r2(i, j)).epsilon(1e-14));
      CHECK(bip.spatial_index(perm[i], perm[j]) == bi.spatial_index(i, j));
    }
}

TEST_CASE("adjacency sets") {
  const auto s = spatial_adjacency_set(human36m_skeleton(), 3);
  CHECK(s.per_hop.size() == 3);
  CHECK(oracle::max_abs_diff(s.base, normalized_adjacency(human36m_skeleton())) == 0.0);
  const auto t = temporal_adjacency_set(5, 2);
  CHECK(t.per_hop.size() == 2);
  CHECK(oracle::max_abs_diff(t.per_hop[1], temporal_hop_adjacency(5, 2)) == 0.0);
}

TEST_CASE("topology text round trip and named skeletons") {
  const auto g = mpi_inf_3dhp_skeleton();
  CHECK(g.num_joints() == 13);
  const auto back = parse_topology(format_topology(g));
  CHECK(back.num_joints() == 13);
  CHECK(back.hop_dist() == g.hop_dist());
  CHECK(skeleton_by_name("chain:6").num_joints() == 6);
  CHECK(skeleton_by_name("h36m17").hop_dist() == human36m_skeleton().hop_dist());
  CHECK_THROWS(parse_topology("3\n0 7\n"));
  CHECK_THROWS(skeleton_by_name("/nonexistent/topology.txt"));
}
