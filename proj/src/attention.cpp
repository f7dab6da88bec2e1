#include "stgformer/attention.hpp"

#include <cmath>

namespace stg {

namespace {

struct AxisLayout {
  int sequences;
  int length;
  const IntMat* index;
  // Row of element `pos` in sequence `seq`.
  int (*row)(SeqShape, int seq, int pos);
};

void check_index(const IntMat& m, int size, const char* what) {
  if (m.rows() != size || m.cols() != size) {
    throw ShapeError(std::string(what) + ": table is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", sequence length " + std::to_string(size));
  }
}

AxisLayout layout_for(SeqShape s, AttentionAxis axis, const BiasIndexTables& idx) {
  if (axis == AttentionAxis::kTemporal) {
    check_index(idx.temporal_index, s.frames, "temporal bias index");
    return {s.joints, s.frames, &idx.temporal_index, [](SeqShape sh, int n, int t) { return sh.row(t, n); }};
  }
  check_index(idx.spatial_index, s.joints, "spatial bias index");
  return {s.frames, s.joints, &idx.spatial_index, [](SeqShape sh, int t, int n) { return sh.row(t, n); }};
}

void check_group(const Mat& h, SeqShape s, const AttentionGroupParams& p, int heads, int buckets) {
  const auto fg = h.cols();
  if (h.rows() != s.tokens()) throw ShapeError("attention: input rows " + std::to_string(h.rows()) + " != T*N");
  require_shape(p.wq, fg, fg, "attention W_Q");
  require_shape(p.wk, fg, fg, "attention W_K");
  require_shape(p.wv, fg, fg, "attention W_V");
  if (heads <= 0 || fg % heads != 0) throw ShapeError("attention: heads must divide the group width");
  require_shape(p.bias, heads, buckets, "attention bias table");
}

Mat gather(const Mat& x, const AxisLayout& lay, SeqShape s, int seq, Eigen::Index col, Eigen::Index width) {
  Mat out(lay.length, width);
  for (int a = 0; a < lay.length; ++a) out.row(a) = x.block(lay.row(s, seq, a), col, 1, width);
  return out;
}

void scatter_add(Mat& x, const AxisLayout& lay, SeqShape s, int seq, Eigen::Index col, const Mat& rows) {
  for (int a = 0; a < lay.length; ++a) x.block(lay.row(s, seq, a), col, 1, rows.cols()) += rows.row(a);
}

}  // namespace

Mat softmax_rows(const Mat& logits) {
  Mat p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      p(i, j) = std::exp(logits(i, j) - mx);
      sum += p(i, j);
    }
    p.row(i) /= sum;
  }
  return p;
}

Mat scaled_dot_attention(const Mat& q, const Mat& k, const Mat& v) {
  if (q.cols() == 0) throw ShapeError("attention: head dimension must be positive");
  require_shape(k, q.rows(), q.cols(), "attention keys");
  if (v.rows() != q.rows()) throw ShapeError("attention: value rows must match query rows");
  return softmax_rows(q * k.transpose() / std::sqrt(static_cast<double>(q.cols()))) * v;
}

Mat axis_graph_attention(const Mat& h, SeqShape s, AttentionAxis axis, const AttentionGroupParams& p, int heads,
                         const BiasIndexTables& idx, GroupAttentionCache* cache) {
  const int buckets = axis == AttentionAxis::kTemporal ? idx.temporal_buckets() : idx.spatial_buckets();
  check_group(h, s, p, heads, buckets);
  const AxisLayout lay = layout_for(s, axis, idx);
  const Eigen::Index d = h.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Mat q = h * p.wq, k = h * p.wk, v = h * p.wv;
  Mat out = Mat::Zero(h.rows(), h.cols());
  std::vector<Mat> probs;
  if (cache) probs.reserve(static_cast<size_t>(lay.sequences) * heads);

  for (int seq = 0; seq < lay.sequences; ++seq) {
    for (int hd = 0; hd < heads; ++hd) {
      const Mat qs = gather(q, lay, s, seq, hd * d, d);
      const Mat ks = gather(k, lay, s, seq, hd * d, d);
      const Mat vs = gather(v, lay, s, seq, hd * d, d);
      Mat logits = qs * ks.transpose() * scale;
      for (int a = 0; a < lay.length; ++a)
        for (int b = 0; b < lay.length; ++b) logits(a, b) += p.bias(hd, (*lay.index)(a, b));
      Mat pr = softmax_rows(logits);
      scatter_add(out, lay, s, seq, hd * d, pr * vs);
      if (cache) probs.push_back(std::move(pr));
    }
  }
  if (cache) {
    cache->input = h;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
  }
  return out;
}

GroupAttentionGrads axis_graph_attention_backward(const Mat& grad_out, SeqShape s, AttentionAxis axis,
                                                  const AttentionGroupParams& p, int heads,
                                                  const BiasIndexTables& idx, const GroupAttentionCache& cache) {
  const AxisLayout lay = layout_for(s, axis, idx);
  const Eigen::Index fg = cache.input.cols();
  const Eigen::Index d = fg / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  Mat dq = Mat::Zero(cache.q.rows(), fg), dk = Mat::Zero(cache.k.rows(), fg), dv = Mat::Zero(cache.v.rows(), fg);
  GroupAttentionGrads g;
  g.bias = Mat::Zero(p.bias.rows(), p.bias.cols());

  for (int seq = 0; seq < lay.sequences; ++seq) {
    for (int hd = 0; hd < heads; ++hd) {
      const Mat& pr = cache.probs[static_cast<size_t>(seq) * heads + hd];
      const Mat qs = gather(cache.q, lay, s, seq, hd * d, d);
      const Mat ks = gather(cache.k, lay, s, seq, hd * d, d);
      const Mat vs = gather(cache.v, lay, s, seq, hd * d, d);
      const Mat dos = gather(grad_out, lay, s, seq, hd * d, d);

      scatter_add(dv, lay, s, seq, hd * d, pr.transpose() * dos);
      const Mat dp = dos * vs.transpose();
      Mat dlogits(lay.length, lay.length);
      for (int a = 0; a < lay.length; ++a) {
        const double dot = pr.row(a).dot(dp.row(a));
        for (int b = 0; b < lay.length; ++b) dlogits(a, b) = pr(a, b) * (dp(a, b) - dot);
      }
      for (int a = 0; a < lay.length; ++a)
        for (int b = 0; b < lay.length; ++b) g.bias(hd, (*lay.index)(a, b)) += dlogits(a, b);
      scatter_add(dq, lay, s, seq, hd * d, dlogits * ks * scale);
      scatter_add(dk, lay, s, seq, hd * d, dlogits.transpose() * qs * scale);
    }
  }
  g.wq = cache.input.transpose() * dq;
  g.wk = cache.input.transpose() * dk;
  g.wv = cache.input.transpose() * dv;
  g.input = dq * p.wq.transpose() + dk * p.wk.transpose() + dv * p.wv.transpose();
  return g;
}

Mat stg_attention_block(const Mat& h, SeqShape s, const AttentionParams& p, const BiasIndexTables& idx,
                        AttentionGroups groups, StgAttentionCache* cache) {
  const auto f = h.cols();
  if (f % 2 != 0) throw ShapeError("stg attention: channel count must be even, got " + std::to_string(f));
  require_shape(p.wo, f, f, "attention W_O");
  const auto fg = f / 2;
  const Mat ht = h.leftCols(fg), hs = h.rightCols(fg);

  Mat concat(h.rows(), f);
  GroupAttentionCache* tc = cache ? &cache->time : nullptr;
  GroupAttentionCache* sc = cache ? &cache->space : nullptr;
  concat.leftCols(fg) = groups == AttentionGroups::kSpatialOnly
                            ? ht
                            : temporal_graph_attention(ht, s, p.time, p.heads_per_group, idx, tc);
  concat.rightCols(fg) = groups == AttentionGroups::kTemporalOnly
                             ? hs
                             : spatial_graph_attention(hs, s, p.space, p.heads_per_group, idx, sc);
  Mat out = concat * p.wo;
  if (cache) cache->concat = std::move(concat);
  return out;
}

StgAttentionGrads stg_attention_block_backward(const Mat& grad_out, SeqShape s, const AttentionParams& p,
                                               const BiasIndexTables& idx, AttentionGroups groups,
                                               const StgAttentionCache& cache) {
  const auto f = grad_out.cols();
  const auto fg = f / 2;
  StgAttentionGrads g;
  g.wo = cache.concat.transpose() * grad_out;
  const Mat dconcat = grad_out * p.wo.transpose();
  g.input.resize(grad_out.rows(), f);
  if (groups == AttentionGroups::kSpatialOnly) {
    g.input.leftCols(fg) = dconcat.leftCols(fg);
  } else {
    g.time = axis_graph_attention_backward(dconcat.leftCols(fg), s, AttentionAxis::kTemporal, p.time,
                                           p.heads_per_group, idx, cache.time);
    g.input.leftCols(fg) = g.time.input;
  }
  if (groups == AttentionGroups::kTemporalOnly) {
    g.input.rightCols(fg) = dconcat.rightCols(fg);
  } else {
    g.space = axis_graph_attention_backward(dconcat.rightCols(fg), s, AttentionAxis::kSpatial, p.space,
                                            p.heads_per_group, idx, cache.space);
    g.input.rightCols(fg) = g.space.input;
  }
  return g;
}

}  // namespace stg
