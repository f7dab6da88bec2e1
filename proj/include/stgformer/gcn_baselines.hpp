#pragma once

#include <optional>
#include <vector>

#include "stgformer/tensor.hpp"

namespace stg {

// Weights for the reference GCN layers. All layers use the row-vector
// convention H' = sigma(A H W) with node features along rows.
struct GcnLayerParams {
  std::optional<Mat> shared_weight;            // W   [F x F']
  std::optional<std::vector<Mat>> node_weights;  // W_j [F' x F], one per node
  std::optional<Mat> modulation;               // M   [N x F']
  std::optional<Mat> residual_weight;          // W~  [F x F']
};

// sigma(A H W)
Mat vanilla_gcn(const Mat& h, const GcnLayerParams& p, const Mat& adj);

// Row i = sigma(sum_j a_ij W_j h_j).
Mat unshared_gcn(const Mat& h, const GcnLayerParams& p, const Mat& adj);

// sigma(A ((H W) .* M))
Mat modulated_gcn(const Mat& h, const GcnLayerParams& p, const Mat& adj);

// sigma(A ((H W) .* M) + X W~)
Mat regular_modulated_gcn(const Mat& h, const Mat& x_input, const GcnLayerParams& p, const Mat& adj);

}  // namespace stg
