#include "stgformer/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "stgformer/random.hpp"

namespace stg {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

}  // namespace

ParameterSet init_parameters(const ModelConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  ParameterSet p;
  for (const auto& s : parameter_shapes(c)) {
    Mat m(s.rows, s.cols);
    if (ends_with(s.name, ".gain") || ends_with(s.name, ".m")) {
      m.setOnes();
    } else if (ends_with(s.name, ".bias")) {
      m.setZero();
    } else {
      const double bound = 1.0 / std::sqrt(static_cast<double>(s.rows));
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -bound, bound);
    }
    p.add(s.name, std::move(m));
  }
  return p;
}

OptimizerState OptimizerState::for_params(const ParameterSet& p, const TrainConfig& t) {
  OptimizerState s;
  s.m = p.zeros_like();
  s.v = p.zeros_like();
  s.beta1 = t.beta1;
  s.beta2 = t.beta2;
  s.eps = t.adam_eps;
  return s;
}

void adam_update(ParameterSet& params, const ParameterSet& grads, OptimizerState& state, double lr) {
  params.require_congruent(grads, "adam gradients");
  params.require_congruent(state.m, "adam first moment");
  params.require_congruent(state.v, "adam second moment");
  for (const auto& g : grads.entries())
    if (!g.value.allFinite()) throw std::runtime_error("adam: non-finite gradient in '" + g.name + "'");

  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const Mat& g = grads.entries()[i].value;
    Mat& m = state.m.entries()[i].value;
    Mat& v = state.v.entries()[i].value;
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    const Mat step = (m / c1).array() / ((v / c2).array().sqrt() + state.eps);
    params.entries()[i].value -= lr * step;
  }
}

double lr_at_epoch(double base_lr, double decay, int epoch) {
  if (epoch < 0) throw std::invalid_argument("lr_at_epoch: epoch must be >= 0");
  return base_lr * std::pow(decay, epoch);
}

double dataset_loss(const std::vector<Sample>& data, const ParameterSet& p, const ModelConfig& c,
                    const GraphContext& g) {
  if (data.empty()) throw std::invalid_argument("dataset_loss: empty dataset");
  double sum = 0.0;
  for (const auto& s : data) sum += mse_loss(model_forward(s.p2d, p, c, g), s.p3d);
  return sum / static_cast<double>(data.size());
}

TrainResult train_epochs(const std::vector<Sample>& data, const ModelConfig& c, const TrainConfig& t) {
  return train_epochs(data, c, t, init_parameters(c, t.seed));
}

TrainResult train_epochs(const std::vector<Sample>& data, const ModelConfig& c, const TrainConfig& t,
                         ParameterSet init) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (t.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  const GraphContext g = GraphContext::build(c);
  TrainResult r{std::move(init), {}};
  init_parameters(c, 0).require_congruent(r.params, "train initial parameters");
  OptimizerState opt = OptimizerState::for_params(r.params, t);
  Rng order_rng(t.seed ^ kShuffleStream);
  const int n = static_cast<int>(data.size());

  long long step = 0;
  for (int epoch = 0; epoch < t.epochs; ++epoch) {
    const double lr = lr_at_epoch(t.base_lr, t.lr_decay, epoch);
    const std::vector<int> order = shuffled_indices(n, order_rng);
    for (int start = 0; start < n; start += t.batch_size) {
      if (t.max_steps > 0 && step >= t.max_steps) return r;
      const int end = std::min(n, start + t.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      ParameterSet grads = r.params.zeros_like();
      double loss = 0.0;
      for (int i = start; i < end; ++i) {
        const Sample& s = data[order[i]];
        LossAndGradient lg = loss_and_gradient(s.p2d, s.p3d, r.params, c, g);
        loss += lg.loss * inv;
        for (size_t k = 0; k < grads.size(); ++k) grads.entries()[k].value += inv * lg.grads.entries()[k].value;
      }
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));
      }
      r.trace.push_back({step, epoch, lr, loss});
      adam_update(r.params, grads, opt, lr);
      ++step;
    }
  }
  return r;
}

std::string format_trace(const std::vector<TraceEntry>& trace) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << "step,epoch,lr,loss\n";
  for (const auto& e : trace) o << e.step << ',' << e.epoch << ',' << e.lr << ',' << e.loss << '\n';
  return o.str();
}

GradcheckReport finite_diff_gradcheck(const ModelConfig& c, std::uint64_t seed, double tolerance,
                                      const GradcheckOptions& opt) {
  const GraphContext g = GraphContext::build(c);
  Rng rng(seed);
  ParameterSet p = init_parameters(c, seed);
  for (auto& e : p.entries())
    for (Eigen::Index i = 0; i < e.value.size(); ++i) e.value.data()[i] += opt.jitter * uniform(rng, -1.0, 1.0);

  const SeqShape s = c.shape();
  Mat x(s.tokens(), 2), y(s.tokens(), 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = uniform(rng, -1.0, 1.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = uniform(rng, -1.0, 1.0);

  LossAndGradient lg = loss_and_gradient(x, y, p, c, g);
  if (opt.corrupt) opt.corrupt(lg.grads);

  GradcheckReport rep;
  for (size_t k = 0; k < p.size(); ++k) {
    auto& entry = p.entries()[k];
    const Mat& analytic = lg.grads.entries()[k].value;
    const auto size = static_cast<int>(entry.value.size());
    std::vector<int> picks;
    if (size <= opt.max_entries) {
      picks.resize(size);
      for (int i = 0; i < size; ++i) picks[i] = i;
    } else {
      picks = shuffled_indices(size, rng);
      picks.resize(opt.max_entries);
      std::sort(picks.begin(), picks.end());
    }
    TensorCheck tc{entry.name, 0.0, 0};
    for (int i : picks) {
      double& theta = entry.value.data()[i];
      const double old = theta;
      const double h = opt.step * std::max(1.0, std::abs(old));
      theta = old + h;
      const double up = mse_loss(model_forward(x, p, c, g), y);
      theta = old - h;
      const double down = mse_loss(model_forward(x, p, c, g), y);
      theta = old;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      double rel = std::abs(a - numeric) / denom;
      if (!std::isfinite(rel)) rel = std::numeric_limits<double>::infinity();
      tc.max_rel_error = std::max(tc.max_rel_error, rel);
      ++tc.checked;
    }
    if (tc.max_rel_error > rep.max_rel_error || rep.worst_param.empty()) {
      rep.max_rel_error = std::max(rep.max_rel_error, tc.max_rel_error);
      rep.worst_param = tc.name;
    }
    rep.tensors.push_back(std::move(tc));
  }
  rep.passed = rep.max_rel_error < tolerance;
  return rep;
}

}  // namespace stg
