#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stgformer/data.hpp"
#include "stgformer/metrics.hpp"
#include "stgformer/model.hpp"
#include "stgformer/pose_io.hpp"
#include "stgformer/training.hpp"

namespace py = pybind11;
using namespace stg;

namespace {

py::dict params_to_dict(const ParameterSet& p) {
  py::dict d;
  for (const auto& e : p.entries()) d[py::str(e.name)] = e.value;
  return d;
}

// Rebuilds the canonical ordering from the config so dict order does not matter.
ParameterSet params_from_dict(const py::dict& d, const ModelConfig& c) {
  ParameterSet p;
  for (const auto& s : parameter_shapes(c)) {
    if (!d.contains(s.name)) throw std::invalid_argument("missing parameter '" + s.name + "'");
    Mat m = d[py::str(s.name)].cast<Mat>();
    require_shape(m, s.rows, s.cols, s.name.c_str());
    p.add(s.name, std::move(m));
  }
  if (py::len(d) != p.size()) throw std::invalid_argument("unexpected extra parameters for this config");
  return p;
}

PoseSequence seq_from(const Mat& data, int frames, int joints, const std::vector<std::string>& labels) {
  return {frames, joints, static_cast<int>(data.cols()), data, labels};
}

py::dict seq_to_dict(const PoseSequence& s) {
  py::dict d;
  d["frames"] = s.frames;
  d["joints"] = s.joints;
  d["channels"] = s.channels;
  d["data"] = s.data;
  d["labels"] = s.labels;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pose lifting with criss-cross graph attention and hop-wise GCNs";

  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::enum_<Activation>(m, "Activation").value("GELU", Activation::kGelu).value("IDENTITY", Activation::kIdentity);
  py::enum_<AttentionGroups>(m, "AttentionGroups")
      .value("BOTH", AttentionGroups::kBoth)
      .value("TEMPORAL_ONLY", AttentionGroups::kTemporalOnly)
      .value("SPATIAL_ONLY", AttentionGroups::kSpatialOnly);

  py::class_<SkeletonGraph>(m, "SkeletonGraph")
      .def_property_readonly("num_joints", &SkeletonGraph::num_joints)
      .def_property_readonly("edges", &SkeletonGraph::edges)
      .def_property_readonly("hop_dist", &SkeletonGraph::hop_dist)
      .def("max_hop", &SkeletonGraph::max_hop);
  m.def("build_skeleton", &SkeletonGraph::build, py::arg("edges"), py::arg("num_joints"));
  m.def("skeleton_by_name", &skeleton_by_name, py::arg("name"));
  m.def("normalized_adjacency", &normalized_adjacency, py::arg("graph"));
  m.def("exact_hop_adjacency", &exact_hop_adjacency, py::arg("graph"), py::arg("hop"));
  m.def("temporal_hop_adjacency", &temporal_hop_adjacency, py::arg("frames"), py::arg("hop"));
  m.def(
      "bias_index_tables",
      [](const SkeletonGraph& g, int frames, int d_s, int d_t) {
        const auto t = bias_index_tables(g, frames, d_s, d_t);
        return py::make_tuple(t.spatial_index, t.temporal_index);
      },
      py::arg("graph"), py::arg("frames"), py::arg("d_s"), py::arg("d_t"),
      "Returns (spatial_index, temporal_index).");

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("frames", &ModelConfig::frames)
      .def_readwrite("skeleton", &ModelConfig::skeleton)
      .def_readwrite("joints", &ModelConfig::joints)
      .def_readwrite("embed_dim", &ModelConfig::embed_dim)
      .def_readwrite("heads", &ModelConfig::heads)
      .def_readwrite("blocks", &ModelConfig::blocks)
      .def_readwrite("spatial_hops", &ModelConfig::spatial_hops)
      .def_readwrite("temporal_hops", &ModelConfig::temporal_hops)
      .def_readwrite("gcn_layers", &ModelConfig::gcn_layers)
      .def_readwrite("spatial_clip", &ModelConfig::spatial_clip)
      .def_readwrite("temporal_clip", &ModelConfig::temporal_clip)
      .def_readwrite("use_stga", &ModelConfig::use_stga)
      .def_readwrite("stga_groups", &ModelConfig::stga_groups)
      .def_readwrite("use_smhr", &ModelConfig::use_smhr)
      .def_readwrite("use_tmhr", &ModelConfig::use_tmhr)
      .def_readwrite("activation", &ModelConfig::activation)
      .def_readwrite("norm_eps", &ModelConfig::norm_eps)
      .def_readwrite("root_joint", &ModelConfig::root_joint)
      .def_readwrite("image_width", &ModelConfig::image_width)
      .def_readwrite("image_height", &ModelConfig::image_height)
      .def_readwrite("target_unit_mm", &ModelConfig::target_unit_mm)
      .def("validate", &ModelConfig::validate)
      .def("to_text", [](const ModelConfig& c) { return format_config_text(c); })
      .def_static("from_text", [](const std::string& text) {
        ModelConfig c;
        parse_config_text(text, &c, nullptr);
        return c;
      });
  m.def("tiny_config", &tiny_config);

  m.def(
      "parameter_shapes",
      [](const ModelConfig& c) {
        std::vector<std::tuple<std::string, int, int>> out;
        for (const auto& s : parameter_shapes(c)) out.emplace_back(s.name, s.rows, s.cols);
        return out;
      },
      py::arg("config"));
  m.def(
      "init_parameters", [](const ModelConfig& c, std::uint64_t seed) { return params_to_dict(init_parameters(c, seed)); },
      py::arg("config"), py::arg("seed"));
  m.def(
      "model_forward",
      [](const Mat& p2d, const py::dict& params, const ModelConfig& c) {
        return model_forward(p2d, params_from_dict(params, c), c, GraphContext::build(c));
      },
      py::arg("p2d"), py::arg("params"), py::arg("config"), "p2d is [T*N, 2] in normalized units; returns [T*N, 3].");
  m.def(
      "attention_maps",
      [](const Mat& p2d, const py::dict& params, const ModelConfig& c, int block, int head) {
        return attention_maps(p2d, params_from_dict(params, c), c, GraphContext::build(c), block, head);
      },
      py::arg("p2d"), py::arg("params"), py::arg("config"), py::arg("block"), py::arg("head"));
  m.def("mse_loss", &mse_loss, py::arg("pred"), py::arg("target"));
  m.def(
      "loss_and_gradient",
      [](const Mat& p2d, const Mat& target, const py::dict& params, const ModelConfig& c) {
        const auto r = loss_and_gradient(p2d, target, params_from_dict(params, c), c, GraphContext::build(c));
        return py::make_tuple(r.loss, params_to_dict(r.grads));
      },
      py::arg("p2d"), py::arg("target"), py::arg("params"), py::arg("config"));

  m.def(
      "gradcheck",
      [](const ModelConfig& c, std::uint64_t seed, double tolerance) {
        const auto r = finite_diff_gradcheck(c, seed, tolerance);
        py::dict d;
        d["max_rel_error"] = r.max_rel_error;
        d["worst_param"] = r.worst_param;
        d["passed"] = r.passed;
        py::dict per;
        for (const auto& t : r.tensors) per[py::str(t.name)] = t.max_rel_error;
        d["tensors"] = per;
        return d;
      },
      py::arg("config"), py::arg("seed") = 0, py::arg("tolerance") = 1e-4);
  m.def("lr_at_epoch", &lr_at_epoch, py::arg("base_lr"), py::arg("decay"), py::arg("epoch"));
  m.def(
      "train",
      [](const Mat& p2d, const Mat& p3d, int frames, int joints, const ModelConfig& c, int epochs, int batch_size,
         std::uint64_t seed, double base_lr, long long max_steps) {
        TrainConfig t;
        t.epochs = epochs;
        t.batch_size = batch_size;
        t.seed = seed;
        t.base_lr = base_lr;
        t.max_steps = max_steps;
        const auto a = seq_from(p2d, frames, joints, {}), b = seq_from(p3d, frames, joints, {});
        const auto w = make_windows(a, &b, c, false);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train_epochs(w.samples, c, t);
        }
        std::vector<py::tuple> trace;
        for (const auto& e : r.trace) trace.push_back(py::make_tuple(e.step, e.epoch, e.lr, e.loss));
        return py::make_tuple(params_to_dict(r.params), trace);
      },
      py::arg("p2d"), py::arg("p3d"), py::arg("frames"), py::arg("joints"), py::arg("config"), py::arg("epochs") = 1,
      py::arg("batch_size") = 8, py::arg("seed") = 0, py::arg("base_lr") = 0.001, py::arg("max_steps") = 0,
      "Trains on a full pixel/millimeter sequence pair; returns (params, [(step, epoch, lr, loss)]).");
  m.def(
      "predict_sequence",
      [](const Mat& p2d, int frames, int joints, const py::dict& params, const ModelConfig& c) {
        return predict_sequence(seq_from(p2d, frames, joints, {}), params_from_dict(params, c), c);
      },
      py::arg("p2d"), py::arg("frames"), py::arg("joints"), py::arg("params"), py::arg("config"));

  m.def(
      "root_align", [](const Mat& pose, int frames, int joints, int root) { return root_align(pose, {frames, joints}, root); },
      py::arg("pose"), py::arg("frames"), py::arg("joints"), py::arg("root") = 0);
  m.def("mpjpe", &mpjpe, py::arg("pred"), py::arg("gt"));
  m.def(
      "pa_mpjpe", [](const Mat& pred, const Mat& gt, int frames, int joints) { return pa_mpjpe(pred, gt, {frames, joints}); },
      py::arg("pred"), py::arg("gt"), py::arg("frames"), py::arg("joints"));
  m.def(
      "procrustes_align", [](const Mat& pred, const Mat& gt) { return procrustes_align(pred, gt).aligned; },
      py::arg("pred"), py::arg("gt"));
  m.def("pck", &pck, py::arg("pred"), py::arg("gt"), py::arg("threshold_mm") = 150.0);
  m.def("auc", &auc, py::arg("pred"), py::arg("gt"));
  m.def(
      "evaluate_report",
      [](const Mat& pred, const Mat& gt, int frames, int joints, int root, const std::vector<std::string>& labels) {
        return format_report(evaluate(pred, gt, {frames, joints}, root, labels));
      },
      py::arg("pred"), py::arg("gt"), py::arg("frames"), py::arg("joints"), py::arg("root") = 0,
      py::arg("labels") = std::vector<std::string>{});

  m.def(
      "synth_generate",
      [](std::uint64_t seed, int frames, const std::string& skeleton) {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.frames = frames;
        cfg.skeleton = skeleton;
        const auto out = synth_generate(cfg);
        return py::make_tuple(seq_to_dict(out.pose2d), seq_to_dict(out.pose3d));
      },
      py::arg("seed") = 0, py::arg("frames") = 1024, py::arg("skeleton") = "h36m17",
      "Returns (pose2d, pose3d) dicts with frames, joints, channels, data, labels.");
  m.def("read_pose_file", [](const std::string& path) { return seq_to_dict(read_pose_file(path)); }, py::arg("path"));
  m.def(
      "write_pose_file",
      [](const std::string& path, const Mat& data, int frames, int joints, const std::vector<std::string>& labels) {
        write_pose_file(path, seq_from(data, frames, joints, labels));
      },
      py::arg("path"), py::arg("data"), py::arg("frames"), py::arg("joints"),
      py::arg("labels") = std::vector<std::string>{});
  m.def(
      "write_checkpoint",
      [](const std::string& dir, const py::dict& params, const ModelConfig& c) {
        write_checkpoint(dir, params_from_dict(params, c), c);
      },
      py::arg("dir"), py::arg("params"), py::arg("config"));
  m.def(
      "read_checkpoint",
      [](const std::string& dir) {
        const auto ck = read_checkpoint(dir);
        return py::make_tuple(params_to_dict(ck.params), ck.config);
      },
      py::arg("dir"), "Returns (params, config).");
}
