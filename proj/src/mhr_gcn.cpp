#include "stgformer/mhr_gcn.hpp"

#include <string>

namespace stg {

namespace {

Mat frame_block(const Mat& x, SeqShape s, int t, Eigen::Index col, Eigen::Index width) {
  return x.block(static_cast<Eigen::Index>(t) * s.joints, col, s.joints, width);
}

void check_path(const Mat& h, const Mat& x, const PathLayerParams& p, const std::vector<Mat>& adjs) {
  if (p.hops.empty()) throw ShapeError("mhr-gcn: path has no hops");
  if (p.hops.size() > adjs.size()) {
    throw ShapeError("mhr-gcn: " + std::to_string(p.hops.size()) + " hops but only " +
                     std::to_string(adjs.size()) + " ring adjacencies");
  }
  require_shape(x, h.rows(), h.cols(), "mhr-gcn regular input");
  Eigen::Index total = 0;
  for (size_t r = 0; r < p.hops.size(); ++r) {
    const auto& hp = p.hops[r];
    const auto width = hp.w.cols();
    require_shape(hp.w, h.cols(), width, "mhr-gcn W");
    require_shape(hp.m, h.rows(), width, "mhr-gcn M");
    require_shape(hp.wreg, h.cols(), width, "mhr-gcn regular W");
    require_shape(adjs[r], h.rows(), h.rows(), "mhr-gcn ring adjacency");
    total += width;
  }
  if (total != h.cols()) {
    throw ShapeError("mhr-gcn: hop widths sum to " + std::to_string(total) + ", path width is " +
                     std::to_string(h.cols()));
  }
}

PathLayerParams zero_like(const PathLayerParams& p) {
  PathLayerParams z;
  for (const auto& hp : p.hops)
    z.hops.push_back({Mat::Zero(hp.w.rows(), hp.w.cols()), Mat::Zero(hp.m.rows(), hp.m.cols()),
                      Mat::Zero(hp.wreg.rows(), hp.wreg.cols())});
  return z;
}

void accumulate(PathLayerParams& acc, const std::vector<HopParams>& g) {
  for (size_t r = 0; r < g.size(); ++r) {
    acc.hops[r].w += g[r].w;
    acc.hops[r].m += g[r].m;
    acc.hops[r].wreg += g[r].wreg;
  }
}

}  // namespace

std::vector<int> hop_widths(int width, int hops) {
  if (hops < 1 || hops > width) {
    throw ShapeError("mhr-gcn: cannot split " + std::to_string(width) + " channels into " + std::to_string(hops) +
                     " hops");
  }
  std::vector<int> out(hops, width / hops);
  for (int r = 0; r < width % hops; ++r) ++out[r];
  return out;
}

Mat hop_branch(const Mat& h_path, const Mat& adj_h, const Mat& w, const Mat& m) {
  require_shape(adj_h, h_path.rows(), h_path.rows(), "hop adjacency");
  if (w.rows() != h_path.cols()) throw ShapeError("hop branch: weight rows must equal feature width");
  require_shape(m, h_path.rows(), w.cols(), "hop modulation");
  return adj_h * (h_path * w).cwiseProduct(m);
}

Mat path_forward(const Mat& h_path, const Mat& x_path, const PathLayerParams& p, const std::vector<Mat>& hop_adjs,
                 Activation act, PathCache* cache) {
  check_path(h_path, x_path, p, hop_adjs);
  Mat pre(h_path.rows(), h_path.cols());
  std::vector<Mat> hw;
  Eigen::Index col = 0;
  for (size_t r = 0; r < p.hops.size(); ++r) {
    const auto& hp = p.hops[r];
    Mat t = h_path * hp.w;
    pre.middleCols(col, hp.w.cols()) = hop_adjs[r] * t.cwiseProduct(hp.m) + x_path * hp.wreg;
    col += hp.w.cols();
    if (cache) hw.push_back(std::move(t));
  }
  Mat out = activate(pre, act);
  if (cache) {
    cache->h = h_path;
    cache->x = x_path;
    cache->hw = std::move(hw);
    cache->pre = std::move(pre);
  }
  return out;
}

PathGrads path_backward(const Mat& grad_out, const PathLayerParams& p, const std::vector<Mat>& hop_adjs,
                        Activation act, const PathCache& cache) {
  const Mat dpre = activate_backward(cache.pre, grad_out, act);
  PathGrads g;
  g.h = Mat::Zero(cache.h.rows(), cache.h.cols());
  g.x = Mat::Zero(cache.x.rows(), cache.x.cols());
  Eigen::Index col = 0;
  for (size_t r = 0; r < p.hops.size(); ++r) {
    const auto& hp = p.hops[r];
    const Mat dz = dpre.middleCols(col, hp.w.cols());
    col += hp.w.cols();
    HopParams hg;
    hg.wreg = cache.x.transpose() * dz;
    g.x += dz * hp.wreg.transpose();
    const Mat du = hop_adjs[r].transpose() * dz;
    hg.m = cache.hw[r].cwiseProduct(du);
    const Mat dhw = du.cwiseProduct(hp.m);
    hg.w = cache.h.transpose() * dhw;
    g.h += dhw * hp.w.transpose();
    g.hops.push_back(std::move(hg));
  }
  return g;
}

Mat mhr_gcn_forward(const Mat& h, const Mat& x_skip, SeqShape s, const MhrGcnParams& p,
                    const AdjacencySet& spatial_adjs, const AdjacencySet& temporal_adjs, const MhrGcnOptions& opt,
                    MhrGcnCache* cache) {
  const auto f = h.cols();
  if (f % 2 != 0) throw ShapeError("mhr-gcn: channel count must be even, got " + std::to_string(f));
  if (h.rows() != s.tokens()) throw ShapeError("mhr-gcn: input rows must equal T*N");
  require_shape(x_skip, h.rows(), f, "mhr-gcn skip input");
  const auto fp = f / 2;
  if (cache) cache->layers.assign(p.layers.size(), {});

  Mat cur = h;
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const auto& lp = p.layers[l];
    require_shape(lp.fuse, f, f, "mhr-gcn fusion");
    MhrGcnLayerCache* lc = cache ? &cache->layers[l] : nullptr;
    Mat concat = cur;
    if (opt.use_spatial) {
      if (lc) lc->spatial.resize(s.frames);
      for (int t = 0; t < s.frames; ++t) {
        concat.block(static_cast<Eigen::Index>(t) * s.joints, 0, s.joints, fp) =
            path_forward(frame_block(cur, s, t, 0, fp), frame_block(x_skip, s, t, 0, fp), lp.spatial,
                         spatial_adjs.per_hop, opt.activation, lc ? &lc->spatial[t] : nullptr);
      }
    }
    if (opt.use_temporal) {
      if (lc) lc->temporal.resize(s.joints);
      const Mat cur_t = cur.rightCols(fp), x_t = x_skip.rightCols(fp);
      Mat out_t(cur.rows(), fp);
      for (int n = 0; n < s.joints; ++n) {
        scatter_joint(out_t, s, n,
                      path_forward(gather_joint(cur_t, s, n), gather_joint(x_t, s, n), lp.temporal,
                                   temporal_adjs.per_hop, opt.activation, lc ? &lc->temporal[n] : nullptr));
      }
      concat.rightCols(fp) = out_t;
    }
    cur = concat * lp.fuse;
    if (lc) lc->concat = std::move(concat);
  }
  return cur;
}

MhrGcnGrads mhr_gcn_backward(const Mat& grad_out, SeqShape s, const MhrGcnParams& p,
                             const AdjacencySet& spatial_adjs, const AdjacencySet& temporal_adjs,
                             const MhrGcnOptions& opt, const MhrGcnCache& cache) {
  const auto f = grad_out.cols();
  const auto fp = f / 2;
  MhrGcnGrads g;
  g.params.layers.resize(p.layers.size());
  g.x_skip = Mat::Zero(grad_out.rows(), f);

  Mat dcur = grad_out;
  for (size_t li = p.layers.size(); li-- > 0;) {
    const auto& lp = p.layers[li];
    const auto& lc = cache.layers[li];
    auto& lg = g.params.layers[li];
    lg.fuse = lc.concat.transpose() * dcur;
    const Mat dconcat = dcur * lp.fuse.transpose();
    Mat dprev = dconcat;  // disabled halves pass straight through

    if (opt.use_spatial) {
      lg.spatial = zero_like(lp.spatial);
      for (int t = 0; t < s.frames; ++t) {
        const PathGrads pg = path_backward(frame_block(dconcat, s, t, 0, fp), lp.spatial, spatial_adjs.per_hop,
                                           opt.activation, lc.spatial[t]);
        accumulate(lg.spatial, pg.hops);
        dprev.block(static_cast<Eigen::Index>(t) * s.joints, 0, s.joints, fp) = pg.h;
        g.x_skip.block(static_cast<Eigen::Index>(t) * s.joints, 0, s.joints, fp) += pg.x;
      }
    }
    if (opt.use_temporal) {
      lg.temporal = zero_like(lp.temporal);
      const Mat dout_t = dconcat.rightCols(fp);
      Mat dh_t(dconcat.rows(), fp), dx_t = Mat::Zero(dconcat.rows(), fp);
      for (int n = 0; n < s.joints; ++n) {
        const PathGrads pg = path_backward(gather_joint(dout_t, s, n), lp.temporal, temporal_adjs.per_hop,
                                           opt.activation, lc.temporal[n]);
        accumulate(lg.temporal, pg.hops);
        scatter_joint(dh_t, s, n, pg.h);
        scatter_add_joint(dx_t, s, n, pg.x);
      }
      dprev.rightCols(fp) = dh_t;
      g.x_skip.rightCols(fp) += dx_t;
    }
    dcur = std::move(dprev);
  }
  g.h = std::move(dcur);
  return g;
}

}  // namespace stg
