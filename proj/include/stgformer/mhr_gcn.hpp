#pragma once

#include <vector>

#include "stgformer/skeleton_graph.hpp"
#include "stgformer/tensor.hpp"

namespace stg {

// One hop ring r: weight W_r [Fp x Fh_r], modulation M_r [nodes x Fh_r],
// regular weight W~_r [Fp x Fh_r].
struct HopParams {
  Mat w, m, wreg;
};

struct PathLayerParams {
  std::vector<HopParams> hops;
};

struct MhrGcnLayerParams {
  PathLayerParams spatial;
  PathLayerParams temporal;
  Mat fuse;  // [F x F]
};

struct MhrGcnParams {
  std::vector<MhrGcnLayerParams> layers;
};

struct MhrGcnOptions {
  bool use_spatial = true;
  bool use_temporal = true;
  Activation activation = Activation::kGelu;
};

// Per-hop channel widths: `width` split into `hops` parts differing by at most one,
// larger parts first. Throws if hops < 1 or hops > width.
std::vector<int> hop_widths(int width, int hops);

// A_r ((H W_r) .* M_r); no activation.
Mat hop_branch(const Mat& h_path, const Mat& adj_h, const Mat& w, const Mat& m);

struct PathCache {
  Mat h, x;
  std::vector<Mat> hw;  // H W_r per hop
  Mat pre;              // concatenated pre-activation
};

struct PathGrads {
  std::vector<HopParams> hops;
  Mat h, x;
};

// sigma(concat_r (A_r ((H W_r) .* M_r) + X W~_r)) over one graph (frame or joint chain).
// hop_adjs[r] is the ring adjacency of hop r + 1.
Mat path_forward(const Mat& h_path, const Mat& x_path, const PathLayerParams& p, const std::vector<Mat>& hop_adjs,
                 Activation act = Activation::kGelu, PathCache* cache = nullptr);

PathGrads path_backward(const Mat& grad_out, const PathLayerParams& p, const std::vector<Mat>& hop_adjs,
                        Activation act, const PathCache& cache);

struct MhrGcnLayerCache {
  std::vector<PathCache> spatial;   // one per frame
  std::vector<PathCache> temporal;  // one per joint
  Mat concat;
};

struct MhrGcnCache {
  std::vector<MhrGcnLayerCache> layers;
};

struct MhrGcnGrads {
  MhrGcnParams params;
  Mat h, x_skip;
};

// Stacked dual-path layers. Each layer splits channels into a spatial half
// (first F/2, graph per frame over joints) and a temporal half (last F/2,
// chain per joint over frames), runs path_forward on each with the regular
// connection taken from x_skip, then fuses by concatenation and W_fuse.
// A disabled path passes its half through unchanged.
Mat mhr_gcn_forward(const Mat& h, const Mat& x_skip, SeqShape s, const MhrGcnParams& p,
                    const AdjacencySet& spatial_adjs, const AdjacencySet& temporal_adjs,
                    const MhrGcnOptions& opt = {}, MhrGcnCache* cache = nullptr);

MhrGcnGrads mhr_gcn_backward(const Mat& grad_out, SeqShape s, const MhrGcnParams& p,
                             const AdjacencySet& spatial_adjs, const AdjacencySet& temporal_adjs,
                             const MhrGcnOptions& opt, const MhrGcnCache& cache);

}  // namespace stg
