#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "stgformer/data.hpp"
#include "stgformer/metrics.hpp"
#include "stgformer/model.hpp"
#include "stgformer/pose_io.hpp"
#include "stgformer/training.hpp"

using namespace stg;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kIo = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthArgs {
  SynthConfig cfg;
  std::string out2d, out3d;
};

struct TrainArgs {
  std::string data2d, data3d, config, checkpoint, trace;
  int epochs = -1, batch = -1;
  long long max_steps = -1;
  double lr = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

struct EvalArgs {
  std::string data2d, data3d, checkpoint, pred, report;
  int root = 0;
};

struct GradcheckArgs {
  std::string config;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  bool all_ablations = false;
};

struct AttnArgs {
  std::string checkpoint, data2d, out;
  int layer = 0, head = 0, window = 0;
};

int run_synth(const SynthArgs& a) {
  const SynthOutput out = synth_generate(a.cfg);
  write_pose_file(a.out2d, out.pose2d);
  write_pose_file(a.out3d, out.pose3d);
  std::printf("wrote %d frames x %d joints to %s and %s\n", out.pose3d.frames, out.pose3d.joints, a.out2d.c_str(),
              a.out3d.c_str());
  return kOk;
}

int run_train(TrainArgs a) {
  ModelConfig model;
  TrainConfig train;
  if (!a.config.empty()) read_config_file(a.config, &model, &train);
  if (a.epochs >= 0) train.epochs = a.epochs;
  if (a.batch >= 0) train.batch_size = a.batch;
  if (a.max_steps >= 0) train.max_steps = a.max_steps;
  if (a.lr >= 0.0) train.base_lr = a.lr;
  if (a.seed_set) train.seed = a.seed;
  model.validate();

  const PoseSequence p2d = read_pose_file(a.data2d);
  const PoseSequence p3d = read_pose_file(a.data3d);
  const WindowedData w = make_windows(p2d, &p3d, model, false);
  const TrainResult r = train_epochs(w.samples, model, train);
  write_checkpoint(a.checkpoint, r.params, model, &train);
  if (!a.trace.empty()) write_file_atomic(a.trace, format_trace(r.trace));
  if (!r.trace.empty()) {
    std::printf("trained %lld steps on %zu windows, loss %.6g -> %.6g\n", r.trace.back().step + 1, w.samples.size(),
                r.trace.front().loss, r.trace.back().loss);
  }
  return kOk;
}

int run_eval(const EvalArgs& a) {
  if (a.checkpoint.empty() == a.pred.empty()) throw UsageError("eval: give exactly one of --checkpoint or --pred");
  const PoseSequence gt = read_pose_file(a.data3d);
  Mat pred;
  int root = a.root;
  if (!a.pred.empty()) {
    const PoseSequence p = read_pose_file(a.pred);
    if (p.channels != 3 || p.frames != gt.frames || p.joints != gt.joints)
      throw std::invalid_argument("eval: prediction and ground truth shapes differ");
    pred = p.data;
  } else {
    if (a.data2d.empty()) throw UsageError("eval: --data-2d is required with --checkpoint");
    const Checkpoint ck = read_checkpoint(a.checkpoint);
    const PoseSequence p2d = read_pose_file(a.data2d);
    if (p2d.frames != gt.frames || p2d.joints != gt.joints)
      throw std::invalid_argument("eval: 2D and 3D sequences do not pair up");
    pred = predict_sequence(p2d, ck.params, ck.config);
    root = ck.config.root_joint;
  }
  const EvalReport r = evaluate(pred, gt.data, gt.shape(), root, gt.labels);
  const std::string text = format_report(r);
  if (!a.report.empty()) write_file_atomic(a.report, text);
  std::fputs(text.c_str(), stdout);
  return kOk;
}

int run_gradcheck(const GradcheckArgs& a) {
  ModelConfig base = tiny_config();
  if (!a.config.empty()) read_config_file(a.config, &base, nullptr);
  std::vector<std::pair<std::string, ModelConfig>> runs;
  if (a.all_ablations) {
    for (const auto& row : kAblationRows) {
      ModelConfig c = base;
      c.use_smhr = row.use_smhr;
      c.use_tmhr = row.use_tmhr;
      runs.push_back({row.name, c});
    }
  } else {
    runs.push_back({"config", base});
  }
  bool ok = true;
  for (const auto& [name, c] : runs) {
    const GradcheckReport r = finite_diff_gradcheck(c, a.seed, a.tolerance);
    std::printf("%s %s max_rel_error %.3e worst %s\n", r.passed ? "PASS" : "FAIL", name.c_str(), r.max_rel_error,
                r.worst_param.c_str());
    for (const auto& t : r.tensors) std::printf("  %-40s %.3e (%d entries)\n", t.name.c_str(), t.max_rel_error, t.checked);
    ok = ok && r.passed;
  }
  return ok ? kOk : kValidation;
}

int run_attn_export(const AttnArgs& a) {
  const Checkpoint ck = read_checkpoint(a.checkpoint);
  const PoseSequence p2d = read_pose_file(a.data2d);
  const WindowedData w = make_windows(p2d, nullptr, ck.config, true);
  if (a.window < 0 || a.window >= static_cast<int>(w.samples.size()))
    throw std::invalid_argument("attn-export: window " + std::to_string(a.window) + " out of range [0, " +
                                std::to_string(w.samples.size()) + ")");
  const GraphContext g = GraphContext::build(ck.config);
  const auto maps = attention_maps(w.samples[a.window].p2d, ck.params, ck.config, g, a.layer, a.head);
  const auto rows = maps.front().rows(), cols = maps.front().cols();
  Mat stacked(static_cast<Eigen::Index>(maps.size()) * rows, cols);
  for (size_t i = 0; i < maps.size(); ++i) stacked.middleRows(static_cast<Eigen::Index>(i) * rows, rows) = maps[i];
  write_tensor_file(a.out, "ATTN",
                    {static_cast<std::uint32_t>(maps.size()), static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols)},
                    stacked);
  std::printf("wrote %zu maps of %ldx%ld to %s\n", maps.size(), static_cast<long>(rows), static_cast<long>(cols),
              a.out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STGFormer pose lifting: synthetic data, training, evaluation, gradient checks"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a paired synthetic 2D/3D pose sequence");
  s->add_option("--seed", synth.cfg.seed, "Random seed");
  s->add_option("--frames", synth.cfg.frames, "Number of frames");
  s->add_option("--skeleton", synth.cfg.skeleton, "h36m17 or mpi13");
  s->add_option("--clip-frames", synth.cfg.clip_frames, "Frames per motion clip");
  s->add_option("--step-mm", synth.cfg.step_mm, "Random-walk step scale (mm)");
  s->add_option("--focal", synth.cfg.focal, "Focal length (pixels)");
  s->add_option("--distance", synth.cfg.distance, "Camera distance (mm)");
  s->add_option("--out-2d", synth.out2d, "Output 2D pose file")->required();
  s->add_option("--out-3d", synth.out3d, "Output 3D pose file")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
  t->add_option("--data-2d", train.data2d, "2D pose file")->required();
  t->add_option("--data-3d", train.data3d, "3D pose file")->required();
  t->add_option("--config", train.config, "key=value config file (model and training keys)");
  t->add_option("--epochs", train.epochs, "Epochs (overrides config)");
  t->add_option("--batch", train.batch, "Batch size (overrides config)");
  t->add_option("--max-steps", train.max_steps, "Step limit, 0 = none (overrides config)");
  t->add_option("--lr", train.lr, "Base learning rate (overrides config)");
  t->add_option("--seed", train.seed, "Seed for init and shuffling (overrides config)")
      ->each([&](const std::string&) { train.seed_set = true; });
  t->add_option("--out-checkpoint", train.checkpoint, "Checkpoint directory")->required();
  t->add_option("--trace", train.trace, "Loss trace CSV");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint or a prediction file");
  e->add_option("--data-2d", eval.data2d, "2D pose file (with --checkpoint)");
  e->add_option("--data-3d", eval.data3d, "Ground-truth 3D pose file")->required();
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint directory");
  e->add_option("--pred", eval.pred, "Predicted 3D pose file (instead of --checkpoint)");
  e->add_option("--root", eval.root, "Root joint for --pred");
  e->add_option("--report", eval.report, "Write the report here as well as to stdout");

  GradcheckArgs grad;
  auto* g = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  g->add_option("--config", grad.config, "key=value config file (default: tiny config)");
  g->add_option("--seed", grad.seed, "Seed for parameters and inputs");
  g->add_option("--tolerance", grad.tolerance, "Maximum relative error");
  g->add_flag("--all-ablations", grad.all_ablations, "Check all four structural configurations");

  AttnArgs attn;
  auto* x = app.add_subcommand("attn-export", "Export post-softmax attention weights of one block and head");
  x->add_option("--checkpoint", attn.checkpoint, "Checkpoint directory")->required();
  x->add_option("--data-2d", attn.data2d, "2D pose file")->required();
  x->add_option("--layer", attn.layer, "Block index");
  x->add_option("--head", attn.head, "Head index: [0, H/2) temporal, [H/2, H) spatial");
  x->add_option("--window", attn.window, "Window index within the sequence");
  x->add_option("--out", attn.out, "Output ATTN file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (s->parsed()) return run_synth(synth);
    if (t->parsed()) return run_train(train);
    if (e->parsed()) return run_eval(eval);
    if (g->parsed()) return run_gradcheck(grad);
    if (x->parsed()) return run_attn_export(attn);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kUsage;
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kIo;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kValidation;
  }
  return kUsage;
}
