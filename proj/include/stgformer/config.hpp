#pragma once

#include <cstdint>
#include <string>

#include "stgformer/attention.hpp"
#include "stgformer/tensor.hpp"

namespace stg {

struct ModelConfig {
  int frames = 243;                // T
  std::string skeleton = "h36m17";  // see skeleton_by_name
  int joints = 17;                 // N, must match the skeleton
  int embed_dim = 256;             // F
  int heads = 8;                   // H, split evenly between the time and space groups
  int blocks = 6;                  // L
  int spatial_hops = 3;            // J
  int temporal_hops = 3;           // K
  int gcn_layers = 2;
  int spatial_clip = 4;   // D_s
  int temporal_clip = 16;  // D_t
  bool use_stga = true;
  AttentionGroups stga_groups = AttentionGroups::kBoth;
  bool use_smhr = true;
  bool use_tmhr = true;
  Activation activation = Activation::kGelu;
  double norm_eps = 1e-5;

  // Data units: 2D pixels are mapped to [-1, 1] by the image width, 3D targets
  // are root-relative and divided by target_unit_mm.
  int root_joint = 0;
  double image_width = 1000.0;
  double image_height = 1000.0;
  double target_unit_mm = 1000.0;

  SeqShape shape() const { return {frames, joints}; }
  int heads_per_group() const { return heads / 2; }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct TrainConfig {
  double base_lr = 0.001;
  double lr_decay = 0.97;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 8;
  int epochs = 40;
  long long max_steps = 0;  // 0 = no limit
  std::uint64_t seed = 0;
};

// Tiny configuration used by the gradient check (T=4, N=5, F=8, H=2, L=1, J=K=2).
ModelConfig tiny_config();

// Four structural ablation rows: attention only, +spatial GCN, +temporal GCN, full.
struct AblationRow {
  const char* name;
  bool use_smhr;
  bool use_tmhr;
};
inline constexpr AblationRow kAblationRows[] = {
    {"STGA", false, false}, {"STGA+SMHR", true, false}, {"STGA+TMHR", false, true}, {"STGA+SMHR+TMHR", true, true}};

// key=value text; '#' starts a comment. Unknown keys are rejected.
void parse_config_text(const std::string& text, ModelConfig* model, TrainConfig* train);
std::string format_config_text(const ModelConfig& model, const TrainConfig* train = nullptr);
void read_config_file(const std::string& path, ModelConfig* model, TrainConfig* train);

}  // namespace stg
