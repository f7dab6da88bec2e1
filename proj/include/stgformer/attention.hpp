#pragma once

#include <vector>

#include "stgformer/skeleton_graph.hpp"
#include "stgformer/tensor.hpp"

namespace stg {

// softmax(Q K^T / sqrt(d)) V
Mat scaled_dot_attention(const Mat& q, const Mat& k, const Mat& v);

// Row-wise softmax with max subtraction.
Mat softmax_rows(const Mat& logits);

// Projections and structural bias table for one channel group.
struct AttentionGroupParams {
  Mat wq, wk, wv;  // [Fg x Fg]
  Mat bias;        // [heads x buckets]
};

struct AttentionParams {
  AttentionGroupParams time;
  AttentionGroupParams space;
  Mat wo;  // [F x F]
  int heads_per_group = 1;
};

// Which channel groups attend; a disabled group's channels pass through unmixed.
enum class AttentionGroups { kBoth, kTemporalOnly, kSpatialOnly };

enum class AttentionAxis { kTemporal, kSpatial };

struct GroupAttentionCache {
  Mat input, q, k, v;
  // Post-softmax weights, one [L x L] map per (sequence, head), index seq * heads + head.
  // Temporal axis: one sequence per joint. Spatial axis: one sequence per frame.
  std::vector<Mat> probs;
};

struct GroupAttentionGrads {
  Mat wq, wk, wv, bias;
  Mat input;
};

// Multi-head attention along one axis of a [T*N x Fg] group tensor, with the
// bias table entry b[head][index(a, b)] added to every logit before softmax.
Mat axis_graph_attention(const Mat& h, SeqShape s, AttentionAxis axis, const AttentionGroupParams& p,
                         int heads, const BiasIndexTables& idx, GroupAttentionCache* cache = nullptr);

GroupAttentionGrads axis_graph_attention_backward(const Mat& grad_out, SeqShape s, AttentionAxis axis,
                                                  const AttentionGroupParams& p, int heads,
                                                  const BiasIndexTables& idx, const GroupAttentionCache& cache);

// Attention over the frames of each joint (temporal_index bias).
inline Mat temporal_graph_attention(const Mat& h_t, SeqShape s, const AttentionGroupParams& p, int heads,
                                    const BiasIndexTables& idx, GroupAttentionCache* cache = nullptr) {
  return axis_graph_attention(h_t, s, AttentionAxis::kTemporal, p, heads, idx, cache);
}

// Attention over the joints of each frame (spatial_index bias).
inline Mat spatial_graph_attention(const Mat& h_s, SeqShape s, const AttentionGroupParams& p, int heads,
                                   const BiasIndexTables& idx, GroupAttentionCache* cache = nullptr) {
  return axis_graph_attention(h_s, s, AttentionAxis::kSpatial, p, heads, idx, cache);
}

struct StgAttentionCache {
  GroupAttentionCache time, space;
  Mat concat;  // pre-projection [time group | space group]
};

struct StgAttentionGrads {
  GroupAttentionGrads time, space;
  Mat wo;
  Mat input;
};

// Criss-cross block: first F/2 channels attend along time, last F/2 along
// joints; the two outputs are concatenated and projected by W_O.
Mat stg_attention_block(const Mat& h, SeqShape s, const AttentionParams& p, const BiasIndexTables& idx,
                        AttentionGroups groups = AttentionGroups::kBoth, StgAttentionCache* cache = nullptr);

StgAttentionGrads stg_attention_block_backward(const Mat& grad_out, SeqShape s, const AttentionParams& p,
                                               const BiasIndexTables& idx, AttentionGroups groups,
                                               const StgAttentionCache& cache);

}  // namespace stg
