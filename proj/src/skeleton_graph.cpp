#include "stgformer/skeleton_graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace stg {

namespace {

IntMat bfs_all_pairs(int n, const std::vector<std::vector<int>>& nbrs) {
  IntMat dist = IntMat::Constant(n, n, -1);
  for (int src = 0; src < n; ++src) {
    std::queue<int> q;
    dist(src, src) = 0;
    q.push(src);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : nbrs[u]) {
        if (dist(src, v) < 0) {
          dist(src, v) = dist(src, u) + 1;
          q.push(v);
        }
      }
    }
  }
  return dist;
}

Mat symmetric_normalize(const Mat& a) {
  const Vec deg = a.rowwise().sum();
  Vec inv_sqrt(deg.size());
  for (Eigen::Index i = 0; i < deg.size(); ++i) inv_sqrt(i) = deg(i) > 0.0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

Mat ring_indicator(const IntMat& hop_dist, int h) {
  const auto n = hop_dist.rows();
  Mat ind = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (hop_dist(i, j) == h) ind(i, j) = 1.0;
  if (h == 1) ind += Mat::Identity(n, n);
  return ind;
}

SkeletonGraph from_parents(const std::vector<int>& parents) {
  std::vector<Edge> edges;
  for (int j = 0; j < static_cast<int>(parents.size()); ++j)
    if (parents[j] >= 0) edges.emplace_back(parents[j], j);
  return SkeletonGraph::build(edges, static_cast<int>(parents.size()));
}

}  // namespace

SkeletonGraph SkeletonGraph::build(const std::vector<Edge>& edges, int num_joints) {
  if (num_joints <= 0) throw std::invalid_argument("skeleton: joint count must be positive");
  std::set<Edge> seen;
  std::vector<std::vector<int>> nbrs(num_joints);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= num_joints || j >= num_joints) {
      throw std::invalid_argument("skeleton: edge (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") out of range for " + std::to_string(num_joints) + " joints");
    }
    if (i == j) throw std::invalid_argument("skeleton: self-loop at joint " + std::to_string(i));
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second) {
      throw std::invalid_argument("skeleton: duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    nbrs[i].push_back(j);
    nbrs[j].push_back(i);
  }
  SkeletonGraph g;
  g.num_joints_ = num_joints;
  g.edges_ = edges;
  g.hop_dist_ = bfs_all_pairs(num_joints, nbrs);
  return g;
}

int SkeletonGraph::max_hop() const { return hop_dist_.maxCoeff(); }

Mat normalized_adjacency(const SkeletonGraph& g) { return exact_hop_adjacency(g, 1); }

Mat exact_hop_adjacency(const SkeletonGraph& g, int h) {
  if (h < 1) throw std::invalid_argument("exact_hop_adjacency: hop must be >= 1, got " + std::to_string(h));
  return symmetric_normalize(ring_indicator(g.hop_dist(), h));
}

Mat temporal_hop_adjacency(int t_frames, int k) {
  if (t_frames < 1) throw std::invalid_argument("temporal_hop_adjacency: frame count must be >= 1");
  if (k < 1) throw std::invalid_argument("temporal_hop_adjacency: hop must be >= 1");
  IntMat dist(t_frames, t_frames);
  for (int a = 0; a < t_frames; ++a)
    for (int b = 0; b < t_frames; ++b) dist(a, b) = std::abs(a - b);
  return symmetric_normalize(ring_indicator(dist, k));
}

AdjacencySet spatial_adjacency_set(const SkeletonGraph& g, int hops) {
  AdjacencySet s;
  s.base = normalized_adjacency(g);
  for (int h = 1; h <= hops; ++h) s.per_hop.push_back(exact_hop_adjacency(g, h));
  return s;
}

AdjacencySet temporal_adjacency_set(int t_frames, int hops) {
  AdjacencySet s;
  s.base = temporal_hop_adjacency(t_frames, 1);
  for (int k = 1; k <= hops; ++k) s.per_hop.push_back(temporal_hop_adjacency(t_frames, k));
  return s;
}

BiasIndexTables bias_index_tables(const SkeletonGraph& g, int t_frames, int d_s, int d_t) {
  if (d_s < 1 || d_t < 1) throw std::invalid_argument("bias_index_tables: clip radii must be >= 1");
  if (t_frames < 1) throw std::invalid_argument("bias_index_tables: frame count must be >= 1");
  BiasIndexTables b;
  b.d_s = d_s;
  b.d_t = d_t;
  const int n = g.num_joints();
  b.spatial_index.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int hop = g.hop(i, j);
      b.spatial_index(i, j) = hop < 0 ? d_s + 1 : std::min(hop, d_s);
    }
  b.temporal_index.resize(t_frames, t_frames);
  for (int a = 0; a < t_frames; ++a)
    for (int c = 0; c < t_frames; ++c) b.temporal_index(a, c) = std::clamp(c - a, -d_t, d_t) + d_t;
  return b;
}

SkeletonGraph chain_skeleton(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return SkeletonGraph::build(edges, n);
}

// 0 pelvis, 1-3 right leg, 4-6 left leg, 7 spine, 8 thorax, 9 neck, 10 head,
// 11-13 left arm, 14-16 right arm.
SkeletonGraph human36m_skeleton() {
  return from_parents({-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15});
}

// 0 head, 1 neck, 2-4 right arm, 5-7 left arm, 8 pelvis, 9-10 right leg, 11-12 left leg.
SkeletonGraph mpi_inf_3dhp_skeleton() {
  return from_parents({1, -1, 1, 2, 3, 1, 5, 6, 1, 8, 9, 8, 11});
}

SkeletonGraph skeleton_by_name(const std::string& name) {
  if (name == "h36m17") return human36m_skeleton();
  if (name == "mpi13") return mpi_inf_3dhp_skeleton();
  if (name.rfind("chain:", 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(name.substr(6));
    } catch (const std::exception&) {
      throw std::invalid_argument("skeleton: bad chain length in '" + name + "'");
    }
    return chain_skeleton(n);
  }
  return read_topology(name);
}

SkeletonGraph parse_topology(const std::string& text) {
  std::istringstream in(text);
  int n = 0;
  if (!(in >> n)) throw std::invalid_argument("topology: missing joint count");
  std::vector<Edge> edges;
  int i = 0, j = 0;
  while (in >> i) {
    if (!(in >> j)) throw std::invalid_argument("topology: dangling edge endpoint");
    edges.emplace_back(i, j);
  }
  if (!in.eof()) throw std::invalid_argument("topology: non-integer token");
  return SkeletonGraph::build(edges, n);
}

SkeletonGraph read_topology(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("topology: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_topology(ss.str());
}

std::string format_topology(const SkeletonGraph& g) {
  std::ostringstream out;
  out << g.num_joints() << '\n';
  for (auto [i, j] : g.edges()) out << i << ' ' << j << '\n';
  return out.str();
}

}  // namespace stg
