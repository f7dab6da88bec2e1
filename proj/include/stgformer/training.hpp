#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stgformer/config.hpp"
#include "stgformer/model.hpp"
#include "stgformer/parameters.hpp"

namespace stg {

// Deterministic given the seed: modulations and norm gains 1, bias tables and
// offsets 0, projections U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ParameterSet init_parameters(const ModelConfig& c, std::uint64_t seed);

struct OptimizerState {
  long long step = 0;
  ParameterSet m, v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimizerState for_params(const ParameterSet& p, const TrainConfig& t);
};

// Bias-corrected Adam step. Throws std::runtime_error naming the first
// parameter with a non-finite gradient; nothing is modified in that case.
void adam_update(ParameterSet& params, const ParameterSet& grads, OptimizerState& state, double lr);

double lr_at_epoch(double base_lr, double decay, int epoch);

// One training window: inputs in normalized image units, targets root-relative
// in model units. Both [T*N x C].
struct Sample {
  Mat p2d;
  Mat p3d;
};

struct TraceEntry {
  long long step;
  int epoch;
  double lr;
  double loss;
};

struct TrainResult {
  ParameterSet params;
  std::vector<TraceEntry> trace;
};

// Mini-batch Adam over a seed-shuffled order, learning rate base_lr * decay^epoch.
// Stops after t.epochs epochs or t.max_steps steps, whichever comes first.
TrainResult train_epochs(const std::vector<Sample>& data, const ModelConfig& c, const TrainConfig& t,
                         ParameterSet init);
TrainResult train_epochs(const std::vector<Sample>& data, const ModelConfig& c, const TrainConfig& t);

// Mean loss over a dataset.
double dataset_loss(const std::vector<Sample>& data, const ParameterSet& p, const ModelConfig& c,
                    const GraphContext& g);

std::string format_trace(const std::vector<TraceEntry>& trace);

struct GradcheckOptions {
  double step = 1e-5;         // scaled by max(1, |theta|)
  int max_entries = 200;      // per tensor; larger tensors are subsampled
  double jitter = 0.1;        // perturbation added to the initial parameters
  std::function<void(ParameterSet&)> corrupt;  // fault injection on the analytic gradient
};

struct TensorCheck {
  std::string name;
  double max_rel_error = 0.0;
  int checked = 0;
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  bool passed = false;
  std::vector<TensorCheck> tensors;
};

// Compares the analytic gradient of mse_loss(model_forward) against central
// differences on a seeded random input/target pair.
GradcheckReport finite_diff_gradcheck(const ModelConfig& c, std::uint64_t seed, double tolerance,
                                      const GradcheckOptions& opt = {});

}  // namespace stg
