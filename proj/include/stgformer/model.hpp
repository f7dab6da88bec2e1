#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stgformer/attention.hpp"
#include "stgformer/config.hpp"
#include "stgformer/mhr_gcn.hpp"
#include "stgformer/parameters.hpp"
#include "stgformer/skeleton_graph.hpp"

namespace stg {

// Graph structures derived once from a config and shared by every forward pass.
struct GraphContext {
  SkeletonGraph skeleton;
  BiasIndexTables bias;
  AdjacencySet spatial;
  AdjacencySet temporal;

  static GraphContext build(const ModelConfig& c);
};

struct ParameterShape {
  std::string name;
  int rows;
  int cols;
};

// Every learnable tensor the config instantiates, in canonical order.
std::vector<ParameterShape> parameter_shapes(const ModelConfig& c);

// Views of one block's parameters in the layout the layer functions expect.
AttentionParams attention_params(const ParameterSet& p, const ModelConfig& c, int block);
MhrGcnParams mhr_gcn_params(const ParameterSet& p, const ModelConfig& c, int block);

struct LayerNormCache {
  Mat xhat;
  Vec rstd;
};

// Per-token normalization over channels with gain and offset (1 x F each).
Mat layer_norm(const Mat& x, const Mat& gain, const Mat& bias, double eps, LayerNormCache* cache = nullptr);

struct LayerNormGrads {
  Mat input, gain, bias;
};
LayerNormGrads layer_norm_backward(const Mat& grad_out, const Mat& gain, const LayerNormCache& cache);

struct BlockCache {
  LayerNormCache norm1, norm2;
  StgAttentionCache attn;
  MhrGcnCache gcn;
};

struct ModelCache {
  Mat input;
  Mat embed_pre;
  std::vector<Mat> block_inputs;  // L + 1 entries, last is the head input
  std::vector<BlockCache> blocks;
};

// GELU(P W_e + b_e) applied per token. p2d is [T*N x 2].
Mat joint_embedding(const Mat& p2d, const ParameterSet& p, const ModelConfig& c, Mat* pre = nullptr);

// y = h + STGA(LN1(h)); out = y + MHR-GCN(LN2(y), LN2(y)). Disabled sub-layers are identity.
Mat stgformer_block(const Mat& h, int block, const ParameterSet& p, const ModelConfig& c, const GraphContext& g,
                    BlockCache* cache = nullptr);

// Embedding, L blocks, per-token linear head. Returns [T*N x 3].
Mat model_forward(const Mat& p2d, const ParameterSet& p, const ModelConfig& c, const GraphContext& g,
                  ModelCache* cache = nullptr);

// Gradient of sum(grad_out .* model_forward) with respect to every parameter.
ParameterSet model_backward(const Mat& grad_out, const ParameterSet& p, const ModelConfig& c, const GraphContext& g,
                            const ModelCache& cache);

// Mean over all entries of the squared difference.
double mse_loss(const Mat& pred, const Mat& target);
Mat mse_loss_grad(const Mat& pred, const Mat& target);

struct LossAndGradient {
  double loss = 0.0;
  ParameterSet grads;
};
LossAndGradient loss_and_gradient(const Mat& p2d, const Mat& target, const ParameterSet& p, const ModelConfig& c,
                                  const GraphContext& g);

// Post-softmax weights of one block and head. Heads [0, H/2) are temporal and
// yield N maps of [T x T] (one per joint); heads [H/2, H) are spatial and yield
// T maps of [N x N] (one per frame).
std::vector<Mat> attention_maps(const Mat& p2d, const ParameterSet& p, const ModelConfig& c, const GraphContext& g,
                                int block, int head);

}  // namespace stg
