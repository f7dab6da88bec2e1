#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stgformer/tensor.hpp"

namespace stg {

using Edge = std::pair<int, int>;

// Undirected joint topology with all-pairs hop distances (-1 when unreachable).
class SkeletonGraph {
 public:
  // Throws std::invalid_argument on out-of-range indices, self-loops or duplicate edges.
  static SkeletonGraph build(const std::vector<Edge>& edges, int num_joints);

  int num_joints() const { return num_joints_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const IntMat& hop_dist() const { return hop_dist_; }
  int hop(int i, int j) const { return hop_dist_(i, j); }
  int max_hop() const;

 private:
  int num_joints_ = 0;
  std::vector<Edge> edges_;
  IntMat hop_dist_;
};

// Normalized adjacency plus per-hop ring adjacencies. per_hop[r] holds the
// ring at hop distance r + 1.
struct AdjacencySet {
  Mat base;
  std::vector<Mat> per_hop;
};

// Index functions for the structural attention biases.
//   spatial_index(i, j)  = min(hop, d_s), or d_s + 1 when unreachable
//   temporal_index(a, b) = clamp(b - a, -d_t, d_t) + d_t
struct BiasIndexTables {
  IntMat spatial_index;
  IntMat temporal_index;
  int d_s = 0;
  int d_t = 0;

  int spatial_buckets() const { return d_s + 2; }
  int temporal_buckets() const { return 2 * d_t + 1; }
};

// D^-1/2 (A + I) D^-1/2.
Mat normalized_adjacency(const SkeletonGraph& g);

// Symmetric-normalized indicator of hop distance == h (self-loops added for h == 1).
Mat exact_hop_adjacency(const SkeletonGraph& g, int h);

// Ring adjacency of the frame chain 0-1-...-(T-1).
Mat temporal_hop_adjacency(int t_frames, int k);

AdjacencySet spatial_adjacency_set(const SkeletonGraph& g, int hops);
AdjacencySet temporal_adjacency_set(int t_frames, int hops);

BiasIndexTables bias_index_tables(const SkeletonGraph& g, int t_frames, int d_s, int d_t);

SkeletonGraph chain_skeleton(int n);
SkeletonGraph human36m_skeleton();
SkeletonGraph mpi_inf_3dhp_skeleton();

// Resolves "h36m17", "mpi13", "chain:<n>", or a topology file path.
SkeletonGraph skeleton_by_name(const std::string& name);

// Topology text: first line N, then one "i j" edge per line.
SkeletonGraph read_topology(const std::string& path);
SkeletonGraph parse_topology(const std::string& text);
std::string format_topology(const SkeletonGraph& g);

}  // namespace stg
