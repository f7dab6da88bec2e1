#include "doctest.h"
#include "oracles.hpp"

#include "stgformer/gcn_baselines.hpp"
#include "stgformer/skeleton_graph.hpp"

using namespace stg;

namespace {

Mat random_graph_adj(int n, Rng& rng) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < 0.5) e.push_back({i, j});
  return normalized_adjacency(SkeletonGraph::build(e, n));
}

}  // namespace

TEST_CASE("vanilla gcn matches per-node loop") {
  Rng rng(1);
  const Mat h = oracle::random_mat(3, 2, rng), w = oracle::random_mat(2, 2, rng);
  const Mat adj = normalized_adjacency(chain_skeleton(3));
  GcnLayerParams p;
  p.shared_weight = w;
  CHECK(oracle::max_abs_diff(vanilla_gcn(h, p, adj), oracle::vanilla_gcn(h, w, adj)) < 1e-12);
}

TEST_CASE("unshared gcn matches per-node loop") {
  Rng rng(2);
  const Mat h = oracle::random_mat(3, 4, rng);
  std::vector<Mat> ws;
  for (int j = 0; j < 3; ++j) ws.push_back(oracle::random_mat(5, 4, rng));
  const Mat adj = random_graph_adj(3, rng);
  GcnLayerParams p;
  p.node_weights = ws;
  CHECK(oracle::max_abs_diff(unshared_gcn(h, p, adj), oracle::unshared_gcn(h, ws, adj)) < 1e-12);
}

TEST_CASE("modulated and regular gcn match loops") {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat h = oracle::random_mat(4, 3, rng), x = oracle::random_mat(4, 2, rng);
    const Mat w = oracle::random_mat(3, 5, rng), m = oracle::random_mat(4, 5, rng), wr = oracle::random_mat(2, 5, rng);
    const Mat adj = random_graph_adj(4, rng);
    GcnLayerParams p;
    p.shared_weight = w;
    p.modulation = m;
    p.residual_weight = wr;
    CHECK(oracle::max_abs_diff(modulated_gcn(h, p, adj), oracle::modulated_gcn(h, w, m, adj)) < 1e-12);
    CHECK(oracle::max_abs_diff(regular_modulated_gcn(h, x, p, adj), oracle::modulated_gcn(h, w, m, adj, &x, &wr)) < 1e-12);
  }
}

TEST_CASE("unit modulation reduces to vanilla") {
  Rng rng(4);
  const Mat h = oracle::random_mat(5, 3, rng), w = oracle::random_mat(3, 3, rng);
  const Mat adj = random_graph_adj(5, rng);
  GcnLayerParams p;
  p.shared_weight = w;
  p.modulation = Mat::Ones(5, 3);
  CHECK(oracle::max_abs_diff(modulated_gcn(h, p, adj), vanilla_gcn(h, p, adj)) < 1e-14);
}

TEST_CASE("missing or mis-shaped weights are rejected") {
  const Mat h = Mat::Zero(3, 2), adj = Mat::Identity(3, 3);
  GcnLayerParams p;
  CHECK_THROWS(vanilla_gcn(h, p, adj));
  p.shared_weight = Mat::Zero(3, 2);
  CHECK_THROWS_AS(vanilla_gcn(h, p, adj), ShapeError);
  p.shared_weight = Mat::Zero(2, 2);
  CHECK_THROWS(modulated_gcn(h, p, adj));
  p.node_weights = std::vector<Mat>(2, Mat::Zero(2, 2));
  CHECK_THROWS_AS(unshared_gcn(h, p, adj), ShapeError);
}
