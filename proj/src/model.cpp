#include "stgformer/model.hpp"

#include <cmath>

namespace stg {

namespace {

std::string blk(int b) { return "blocks." + std::to_string(b) + "."; }

std::string gcn_prefix(int b, int layer) { return blk(b) + "gcn." + std::to_string(layer) + "."; }

bool has_gcn(const ModelConfig& c) { return c.use_smhr || c.use_tmhr; }

bool has_time_group(const ModelConfig& c) { return c.stga_groups != AttentionGroups::kSpatialOnly; }
bool has_space_group(const ModelConfig& c) { return c.stga_groups != AttentionGroups::kTemporalOnly; }

MhrGcnOptions gcn_options(const ModelConfig& c) { return {c.use_smhr, c.use_tmhr, c.activation}; }

PathLayerParams path_params(const ParameterSet& p, const std::string& prefix, int hops) {
  PathLayerParams out;
  for (int r = 1; r <= hops; ++r) {
    const std::string h = prefix + "hop" + std::to_string(r) + ".";
    out.hops.push_back({p.get(h + "w"), p.get(h + "m"), p.get(h + "wreg")});
  }
  return out;
}

void store_path_grads(ParameterSet& g, const std::string& prefix, const PathLayerParams& pg) {
  for (size_t r = 0; r < pg.hops.size(); ++r) {
    const std::string h = prefix + "hop" + std::to_string(r + 1) + ".";
    g.accumulate(h + "w", pg.hops[r].w);
    g.accumulate(h + "m", pg.hops[r].m);
    g.accumulate(h + "wreg", pg.hops[r].wreg);
  }
}

Mat add_row_bias(Mat x, const Mat& bias) {
  x.rowwise() += bias.row(0);
  return x;
}

}  // namespace

GraphContext GraphContext::build(const ModelConfig& c) {
  c.validate();
  GraphContext g{skeleton_by_name(c.skeleton), {}, {}, {}};
  if (g.skeleton.num_joints() != c.joints) {
    throw std::invalid_argument("config: skeleton '" + c.skeleton + "' has " + std::to_string(g.skeleton.num_joints()) +
                                " joints, config says " + std::to_string(c.joints));
  }
  g.bias = bias_index_tables(g.skeleton, c.frames, c.spatial_clip, c.temporal_clip);
  g.spatial = spatial_adjacency_set(g.skeleton, c.spatial_hops);
  g.temporal = temporal_adjacency_set(c.frames, c.temporal_hops);
  return g;
}

std::vector<ParameterShape> parameter_shapes(const ModelConfig& c) {
  c.validate();
  const int f = c.embed_dim, fg = f / 2, hg = c.heads_per_group();
  std::vector<ParameterShape> s;
  s.push_back({"embed.weight", 2, f});
  s.push_back({"embed.bias", 1, f});
  for (int b = 0; b < c.blocks; ++b) {
    const std::string pre = blk(b);
    if (c.use_stga) {
      s.push_back({pre + "norm1.gain", 1, f});
      s.push_back({pre + "norm1.bias", 1, f});
      if (has_time_group(c)) {
        for (const char* w : {"wq", "wk", "wv"}) s.push_back({pre + "attn.time." + w, fg, fg});
        s.push_back({pre + "attn.time.bias", hg, 2 * c.temporal_clip + 1});
      }
      if (has_space_group(c)) {
        for (const char* w : {"wq", "wk", "wv"}) s.push_back({pre + "attn.space." + w, fg, fg});
        s.push_back({pre + "attn.space.bias", hg, c.spatial_clip + 2});
      }
      s.push_back({pre + "attn.wo", f, f});
    }
    if (has_gcn(c)) {
      s.push_back({pre + "norm2.gain", 1, f});
      s.push_back({pre + "norm2.bias", 1, f});
      for (int l = 0; l < c.gcn_layers; ++l) {
        const std::string gp = gcn_prefix(b, l);
        auto add_path = [&](const std::string& path, int hops, int nodes) {
          const auto widths = hop_widths(fg, hops);
          for (int r = 0; r < hops; ++r) {
            const std::string h = gp + path + ".hop" + std::to_string(r + 1) + ".";
            s.push_back({h + "w", fg, widths[r]});
            s.push_back({h + "m", nodes, widths[r]});
            s.push_back({h + "wreg", fg, widths[r]});
          }
        };
        if (c.use_smhr) add_path("spatial", c.spatial_hops, c.joints);
        if (c.use_tmhr) add_path("temporal", c.temporal_hops, c.frames);
        s.push_back({gp + "fuse", f, f});
      }
    }
  }
  s.push_back({"head.weight", f, 3});
  s.push_back({"head.bias", 1, 3});
  return s;
}

AttentionParams attention_params(const ParameterSet& p, const ModelConfig& c, int block) {
  const std::string pre = blk(block) + "attn.";
  AttentionParams a;
  a.heads_per_group = c.heads_per_group();
  if (has_time_group(c)) a.time = {p.get(pre + "time.wq"), p.get(pre + "time.wk"), p.get(pre + "time.wv"), p.get(pre + "time.bias")};
  if (has_space_group(c)) a.space = {p.get(pre + "space.wq"), p.get(pre + "space.wk"), p.get(pre + "space.wv"), p.get(pre + "space.bias")};
  a.wo = p.get(pre + "wo");
  return a;
}

MhrGcnParams mhr_gcn_params(const ParameterSet& p, const ModelConfig& c, int block) {
  MhrGcnParams m;
  for (int l = 0; l < c.gcn_layers; ++l) {
    const std::string gp = gcn_prefix(block, l);
    MhrGcnLayerParams lp;
    if (c.use_smhr) lp.spatial = path_params(p, gp + "spatial.", c.spatial_hops);
    if (c.use_tmhr) lp.temporal = path_params(p, gp + "temporal.", c.temporal_hops);
    lp.fuse = p.get(gp + "fuse");
    m.layers.push_back(std::move(lp));
  }
  return m;
}

Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, double eps, LayerNormCache* cache) {
  require_shape(gain, 1, x.cols(), "norm gain");
  require_shape(bias, 1, x.cols(), "norm bias");
  const double n = static_cast<double>(x.cols());
  Mat xhat(x.rows(), x.cols());
  Vec rstd(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / n;
    const double var = (x.row(i).array() - mean).square().sum() / n;
    rstd(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
  }
  Mat y = xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

LayerNormGrads layer_norm_backward(const Mat& grad_out, const Mat& gain, const LayerNormCache& cache) {
  LayerNormGrads g;
  g.gain = (grad_out.cwiseProduct(cache.xhat)).colwise().sum();
  g.bias = grad_out.colwise().sum();
  const Mat dxhat = grad_out.array().rowwise() * gain.row(0).array();
  const double n = static_cast<double>(grad_out.cols());
  g.input.resize(grad_out.rows(), grad_out.cols());
  for (Eigen::Index i = 0; i < grad_out.rows(); ++i) {
    const double m1 = dxhat.row(i).sum() / n;
    const double m2 = dxhat.row(i).dot(cache.xhat.row(i)) / n;
    g.input.row(i) = cache.rstd(i) * (dxhat.row(i).array() - m1 - cache.xhat.row(i).array() * m2);
  }
  return g;
}

Mat joint_embedding(const Mat& p2d, const ParameterSet& p, const ModelConfig& c, Mat* pre) {
  if (p2d.cols() != 2) throw ShapeError("embedding: expected 2 input channels, got " + std::to_string(p2d.cols()));
  if (!p2d.allFinite()) throw std::invalid_argument("embedding: non-finite input coordinate");
  Mat z = add_row_bias(p2d * p.get("embed.weight"), p.get("embed.bias"));
  Mat out = activate(z, c.activation);
  if (pre) *pre = std::move(z);
  return out;
}

Mat stgformer_block(const Mat& h, int block, const ParameterSet& p, const ModelConfig& c, const GraphContext& g,
                    BlockCache* cache) {
  const SeqShape s = c.shape();
  require_shape(h, s.tokens(), c.embed_dim, "block input");
  const std::string pre = blk(block);
  Mat y = h;
  if (c.use_stga) {
    const Mat n1 = layer_norm(h, p.get(pre + "norm1.gain"), p.get(pre + "norm1.bias"), c.norm_eps,
                              cache ? &cache->norm1 : nullptr);
    y += stg_attention_block(n1, s, attention_params(p, c, block), g.bias, c.stga_groups,
                             cache ? &cache->attn : nullptr);
  }
  Mat out = y;
  if (has_gcn(c)) {
    const Mat n2 = layer_norm(y, p.get(pre + "norm2.gain"), p.get(pre + "norm2.bias"), c.norm_eps,
                              cache ? &cache->norm2 : nullptr);
    out += mhr_gcn_forward(n2, n2, s, mhr_gcn_params(p, c, block), g.spatial, g.temporal, gcn_options(c),
                           cache ? &cache->gcn : nullptr);
  }
  return out;
}

Mat model_forward(const Mat& p2d, const ParameterSet& p, const ModelConfig& c, const GraphContext& g,
                  ModelCache* cache) {
  const SeqShape s = c.shape();
  require_shape(p2d, s.tokens(), 2, "model input");
  Mat embed_pre;
  Mat h = joint_embedding(p2d, p, c, cache ? &embed_pre : nullptr);
  if (cache) {
    cache->input = p2d;
    cache->embed_pre = std::move(embed_pre);
    cache->block_inputs.clear();
    cache->blocks.assign(c.blocks, {});
  }
  for (int b = 0; b < c.blocks; ++b) {
    if (cache) cache->block_inputs.push_back(h);
    h = stgformer_block(h, b, p, c, g, cache ? &cache->blocks[b] : nullptr);
  }
  if (cache) cache->block_inputs.push_back(h);
  return add_row_bias(h * p.get("head.weight"), p.get("head.bias"));
}

ParameterSet model_backward(const Mat& grad_out, const ParameterSet& p, const ModelConfig& c, const GraphContext& g,
                            const ModelCache& cache) {
  const SeqShape s = c.shape();
  ParameterSet grads = p.zeros_like();
  const Mat& head_in = cache.block_inputs.back();
  grads.accumulate("head.weight", head_in.transpose() * grad_out);
  grads.accumulate("head.bias", grad_out.colwise().sum());
  Mat dh = grad_out * p.get("head.weight").transpose();

  for (int b = c.blocks - 1; b >= 0; --b) {
    const std::string pre = blk(b);
    const BlockCache& bc = cache.blocks[b];
    // out = y + gcn(n2, n2)
    Mat dy = dh;
    if (has_gcn(c)) {
      const MhrGcnParams mp = mhr_gcn_params(p, c, b);
      const MhrGcnGrads mg = mhr_gcn_backward(dh, s, mp, g.spatial, g.temporal, gcn_options(c), bc.gcn);
      for (int l = 0; l < c.gcn_layers; ++l) {
        const std::string gp = gcn_prefix(b, l);
        const auto& lg = mg.params.layers[l];
        if (c.use_smhr) store_path_grads(grads, gp + "spatial.", lg.spatial);
        if (c.use_tmhr) store_path_grads(grads, gp + "temporal.", lg.temporal);
        grads.accumulate(gp + "fuse", lg.fuse);
      }
      const LayerNormGrads ng = layer_norm_backward(mg.h + mg.x_skip, p.get(pre + "norm2.gain"), bc.norm2);
      grads.accumulate(pre + "norm2.gain", ng.gain);
      grads.accumulate(pre + "norm2.bias", ng.bias);
      dy += ng.input;
    }
    // y = h + attn(n1)
    Mat dprev = dy;
    if (c.use_stga) {
      const AttentionParams ap = attention_params(p, c, b);
      const StgAttentionGrads ag = stg_attention_block_backward(dy, s, ap, g.bias, c.stga_groups, bc.attn);
      if (has_time_group(c)) {
        grads.accumulate(pre + "attn.time.wq", ag.time.wq);
        grads.accumulate(pre + "attn.time.wk", ag.time.wk);
        grads.accumulate(pre + "attn.time.wv", ag.time.wv);
        grads.accumulate(pre + "attn.time.bias", ag.time.bias);
      }
      if (has_space_group(c)) {
        grads.accumulate(pre + "attn.space.wq", ag.space.wq);
        grads.accumulate(pre + "attn.space.wk", ag.space.wk);
        grads.accumulate(pre + "attn.space.wv", ag.space.wv);
        grads.accumulate(pre + "attn.space.bias", ag.space.bias);
      }
      grads.accumulate(pre + "attn.wo", ag.wo);
      const LayerNormGrads ng = layer_norm_backward(ag.input, p.get(pre + "norm1.gain"), bc.norm1);
      grads.accumulate(pre + "norm1.gain", ng.gain);
      grads.accumulate(pre + "norm1.bias", ng.bias);
      dprev += ng.input;
    }
    dh = std::move(dprev);
  }

  const Mat dz = activate_backward(cache.embed_pre, dh, c.activation);
  grads.accumulate("embed.weight", cache.input.transpose() * dz);
  grads.accumulate("embed.bias", dz.colwise().sum());
  return grads;
}

double mse_loss(const Mat& pred, const Mat& target) {
  require_shape(target, pred.rows(), pred.cols(), "mse target");
  if (pred.size() == 0) throw ShapeError("mse: empty input");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Mat mse_loss_grad(const Mat& pred, const Mat& target) {
  require_shape(target, pred.rows(), pred.cols(), "mse target");
  return 2.0 * (pred - target) / static_cast<double>(pred.size());
}

LossAndGradient loss_and_gradient(const Mat& p2d, const Mat& target, const ParameterSet& p, const ModelConfig& c,
                                  const GraphContext& g) {
  ModelCache cache;
  const Mat pred = model_forward(p2d, p, c, g, &cache);
  LossAndGradient out;
  out.loss = mse_loss(pred, target);
  out.grads = model_backward(mse_loss_grad(pred, target), p, c, g, cache);
  return out;
}

std::vector<Mat> attention_maps(const Mat& p2d, const ParameterSet& p, const ModelConfig& c, const GraphContext& g,
                                int block, int head) {
  if (!c.use_stga) throw std::invalid_argument("attention export: model has no attention sub-layers");
  if (block < 0 || block >= c.blocks) throw std::invalid_argument("attention export: block out of range");
  if (head < 0 || head >= c.heads) throw std::invalid_argument("attention export: head out of range");
  const int hg = c.heads_per_group();
  const bool temporal = head < hg;
  if (temporal && !has_time_group(c)) throw std::invalid_argument("attention export: temporal group disabled");
  if (!temporal && !has_space_group(c)) throw std::invalid_argument("attention export: spatial group disabled");
  const int local = temporal ? head : head - hg;

  ModelCache cache;
  model_forward(p2d, p, c, g, &cache);
  const GroupAttentionCache& gc = temporal ? cache.blocks[block].attn.time : cache.blocks[block].attn.space;
  const int sequences = temporal ? c.joints : c.frames;
  std::vector<Mat> maps;
  for (int seq = 0; seq < sequences; ++seq) maps.push_back(gc.probs[static_cast<size_t>(seq) * hg + local]);
  return maps;
}

}  // namespace stg
