#include "doctest.h"
#include "oracles.hpp"

#include "stgformer/gcn_baselines.hpp"
#include "stgformer/mhr_gcn.hpp"

using namespace stg;

namespace {

PathLayerParams random_path(int fp, int hops, int nodes, Rng& rng, bool unit_m = false) {
  PathLayerParams p;
  for (int w : hop_widths(fp, hops))
    p.hops.push_back({oracle::random_mat(fp, w, rng), unit_m ? Mat(Mat::Ones(nodes, w)) : oracle::random_mat(nodes, w, rng),
                      oracle::random_mat(fp, w, rng)});
  return p;
}

MhrGcnParams random_mhr(int f, int j, int k, SeqShape s, int layers, Rng& rng, bool unit_m = false) {
  MhrGcnParams p;
  for (int l = 0; l < layers; ++l)
    p.layers.push_back({random_path(f / 2, j, s.joints, rng, unit_m), random_path(f / 2, k, s.frames, rng, unit_m),
                        oracle::random_mat(f, f, rng)});
  return p;
}

}  // namespace

TEST_CASE("hop widths") {
  CHECK(hop_widths(128, 3) == std::vector<int>{43, 43, 42});
  CHECK(hop_widths(4, 2) == std::vector<int>{2, 2});
  CHECK(hop_widths(5, 1) == std::vector<int>{5});
  CHECK_THROWS(hop_widths(4, 0));
  CHECK_THROWS(hop_widths(2, 3));
}

TEST_CASE("hop branch cases") {
  Rng rng(1);
  const Mat h = oracle::random_mat(4, 6, rng);
  Mat w = Mat::Zero(6, 2);
  w(0, 0) = w(1, 1) = 1.0;
  CHECK(oracle::max_abs_diff(hop_branch(h, Mat::Identity(4, 4), w, Mat::Ones(4, 2)), h.leftCols(2)) == 0.0);
  CHECK(hop_branch(h, Mat::Zero(4, 4), oracle::random_mat(6, 2, rng), oracle::random_mat(4, 2, rng)).cwiseAbs().maxCoeff() == 0.0);
  for (int rep = 0; rep < 10; ++rep) {
    const Mat wr = oracle::random_mat(6, 3, rng), m = oracle::random_mat(4, 3, rng);
    const Mat adj = exact_hop_adjacency(chain_skeleton(4), 1 + rep % 3);
    CHECK(oracle::max_abs_diff(hop_branch(h, adj, wr, m), oracle::hop_branch(h, adj, wr, m)) < 1e-12);
  }
}

TEST_CASE("single hop path equals regular modulated gcn") {
  Rng rng(2);
  const auto g = human36m_skeleton();
  const auto adjs = spatial_adjacency_set(g, 1);
  const auto p = random_path(4, 1, 17, rng);
  const Mat h = oracle::random_mat(17, 4, rng), x = oracle::random_mat(17, 4, rng);
  GcnLayerParams ref;
  ref.shared_weight = p.hops[0].w;
  ref.modulation = p.hops[0].m;
  ref.residual_weight = p.hops[0].wreg;
  CHECK(oracle::max_abs_diff(path_forward(h, x, p, adjs.per_hop), regular_modulated_gcn(h, x, ref, adjs.base)) < 1e-12);
}

TEST_CASE("pure regular connection gives gelu of x") {
  Rng rng(3);
  const auto adjs = spatial_adjacency_set(chain_skeleton(5), 2);
  PathLayerParams p = random_path(4, 2, 5, rng);
  for (int r = 0; r < 2; ++r) {
    p.hops[r].wreg.setZero();
    p.hops[r].wreg(2 * r, 0) = p.hops[r].wreg(2 * r + 1, 1) = 1.0;
  }
  const Mat x = oracle::random_mat(5, 4, rng);
  CHECK(oracle::max_abs_diff(path_forward(Mat::Zero(5, 4), x, p, adjs.per_hop), gelu(x)) < 1e-15);
}

TEST_CASE("three hop path matches branch-wise oracle") {
  Rng rng(4);
  const auto adjs = spatial_adjacency_set(chain_skeleton(6), 3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = random_path(7, 3, 6, rng);
    const Mat h = oracle::random_mat(6, 7, rng), x = oracle::random_mat(6, 7, rng);
    CHECK(oracle::max_abs_diff(path_forward(h, x, p, adjs.per_hop), oracle::path(h, x, p, adjs.per_hop)) < 1e-12);
  }
}

TEST_CASE("mhr gcn matches nested oracle") {
  Rng rng(5);
  const SeqShape s{3, 5};
  const auto sadj = spatial_adjacency_set(chain_skeleton(5), 2);
  const auto tadj = temporal_adjacency_set(3, 2);
  for (int rep = 0; rep < 10; ++rep) {
    const auto p = random_mhr(8, 2, 2, s, 2, rng);
    const Mat h = oracle::random_mat(15, 8, rng), x = oracle::random_mat(15, 8, rng);
    CHECK(oracle::max_abs_diff(mhr_gcn_forward(h, x, s, p, sadj, tadj),
                               oracle::mhr_gcn(h, x, s, p, sadj.per_hop, tadj.per_hop)) < 1e-10);
  }
}

TEST_CASE("single frame input") {
  Rng rng(6);
  const SeqShape s{1, 5};
  const auto sadj = spatial_adjacency_set(chain_skeleton(5), 2);
  const auto tadj = temporal_adjacency_set(1, 3);
  CHECK(tadj.per_hop[1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(tadj.per_hop[2].cwiseAbs().maxCoeff() == 0.0);
  CHECK(tadj.per_hop[0](0, 0) == 1.0);
  const auto p = random_mhr(12, 2, 3, s, 1, rng);
  const Mat h = oracle::random_mat(5, 12, rng), x = oracle::random_mat(5, 12, rng);
  CHECK(oracle::max_abs_diff(mhr_gcn_forward(h, x, s, p, sadj, tadj),
                             oracle::mhr_gcn(h, x, s, p, sadj.per_hop, tadj.per_hop)) < 1e-10);
}

TEST_CASE("disabled path passes its half through") {
  Rng rng(7);
  const SeqShape s{3, 4};
  const auto sadj = spatial_adjacency_set(chain_skeleton(4), 2);
  const auto tadj = temporal_adjacency_set(3, 2);
  auto p = random_mhr(8, 2, 2, s, 1, rng);
  p.layers[0].fuse = Mat::Identity(8, 8);
  const Mat h = oracle::random_mat(12, 8, rng), x = oracle::random_mat(12, 8, rng);
  const Mat t_only = mhr_gcn_forward(h, x, s, p, sadj, tadj, {false, true, Activation::kGelu});
  CHECK((t_only.leftCols(4).array() == h.leftCols(4).array()).all());
  const Mat s_only = mhr_gcn_forward(h, x, s, p, sadj, tadj, {true, false, Activation::kGelu});
  CHECK((s_only.rightCols(4).array() == h.rightCols(4).array()).all());
  CHECK(oracle::max_abs_diff(mhr_gcn_forward(h, x, s, p, sadj, tadj, {false, false, Activation::kGelu}), h) == 0.0);
}

TEST_CASE("unit modulation with one hop reduces to the baseline gcn") {
  Rng rng(8);
  const SeqShape s{4, 6};
  const auto g = chain_skeleton(6);
  const auto sadj = spatial_adjacency_set(g, 1);
  const auto tadj = temporal_adjacency_set(4, 1);
  auto p = random_mhr(8, 1, 1, s, 1, rng, true);
  p.layers[0].fuse = Mat::Identity(8, 8);
  const Mat h = oracle::random_mat(24, 8, rng), x = oracle::random_mat(24, 8, rng);
  const Mat out = mhr_gcn_forward(h, x, s, p, sadj, tadj);
  GcnLayerParams sp{p.layers[0].spatial.hops[0].w, std::nullopt, std::nullopt, p.layers[0].spatial.hops[0].wreg};
  GcnLayerParams tp{p.layers[0].temporal.hops[0].w, std::nullopt, std::nullopt, p.layers[0].temporal.hops[0].wreg};
  for (int t = 0; t < 4; ++t) {
    const Mat xs = x.block(t * 6, 0, 6, 4);
    const Mat full = oracle::modulated_gcn(h.block(t * 6, 0, 6, 4), *sp.shared_weight, Mat::Ones(6, 4),
                                           normalized_adjacency(g), &xs, &*sp.residual_weight);
    CHECK(oracle::max_abs_diff(out.block(t * 6, 0, 6, 4), full) < 1e-10);
  }
  const Mat chain_adj = normalized_adjacency(chain_skeleton(4));
  for (int n = 0; n < 6; ++n) {
    const Mat hj = gather_joint(h.rightCols(4), s, n), xj = gather_joint(x.rightCols(4), s, n);
    const Mat full = oracle::modulated_gcn(hj, *tp.shared_weight, Mat::Ones(4, 4), chain_adj, &xj, &*tp.residual_weight);
    CHECK(oracle::max_abs_diff(gather_joint(out.rightCols(4), s, n), full) < 1e-10);
  }
}

TEST_CASE("channel split independence") {
  Rng rng(9);
  const SeqShape s{3, 4};
  const auto sadj = spatial_adjacency_set(chain_skeleton(4), 2);
  const auto tadj = temporal_adjacency_set(3, 2);
  auto p = random_mhr(8, 2, 2, s, 1, rng);
  p.layers[0].fuse = Mat::Identity(8, 8);
  const Mat h = oracle::random_mat(12, 8, rng), x = oracle::random_mat(12, 8, rng);
  const Mat base = mhr_gcn_forward(h, x, s, p, sadj, tadj);
  Mat h2 = h, x2 = x;
  h2.rightCols(4).setRandom();
  x2.rightCols(4).setRandom();
  CHECK((mhr_gcn_forward(h2, x2, s, p, sadj, tadj).leftCols(4).array() == base.leftCols(4).array()).all());
  h2 = h;
  x2 = x;
  h2.leftCols(4).setRandom();
  x2.leftCols(4).setRandom();
  CHECK((mhr_gcn_forward(h2, x2, s, p, sadj, tadj).rightCols(4).array() == base.rightCols(4).array()).all());
}

TEST_CASE("exact ring locality of each hop branch") {
  Rng rng(10);
  const auto g = human36m_skeleton();
  const auto adjs = spatial_adjacency_set(g, 3);
  const Mat h = oracle::random_mat(17, 6, rng);
  for (int r = 0; r < 3; ++r) {
    const Mat w = oracle::random_mat(6, 2, rng), m = oracle::random_mat(17, 2, rng);
    const Mat base = hop_branch(h, adjs.per_hop[r], w, m);
    for (int i = 0; i < 17; ++i) {
      Mat masked = h;
      for (int j = 0; j < 17; ++j) {
        const bool in_ring = g.hop(i, j) == r + 1 || (r == 0 && j == i);
        if (!in_ring) masked.row(j).setZero();
      }
      CHECK((hop_branch(masked, adjs.per_hop[r], w, m).row(i).array() == base.row(i).array()).all());
    }
  }
}

TEST_CASE("output shape for several hop counts") {
  Rng rng(11);
  const SeqShape s{4, 17};
  const auto g = human36m_skeleton();
  for (int j = 1; j <= 4; ++j)
    for (int k = 1; k <= 4; ++k) {
      const auto p = random_mhr(16, j, k, s, 2, rng);
      const Mat h = oracle::random_mat(68, 16, rng);
      const Mat out = mhr_gcn_forward(h, h, s, p, spatial_adjacency_set(g, j), temporal_adjacency_set(4, k));
      CHECK(out.rows() == 68);
      CHECK(out.cols() == 16);
    }
  CHECK_THROWS_AS(mhr_gcn_forward(Mat::Zero(68, 15), Mat::Zero(68, 15), s, random_mhr(16, 1, 1, s, 1, rng),
                                  spatial_adjacency_set(g, 1), temporal_adjacency_set(4, 1)),
                  ShapeError);
}
