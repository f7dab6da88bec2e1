#include "doctest.h"
#include "oracles.hpp"

#include <filesystem>
#include <functional>

#include "stgformer/data.hpp"
#include "stgformer/metrics.hpp"
#include "stgformer/pose_io.hpp"
#include "stgformer/skeleton_graph.hpp"
#include "stgformer/training.hpp"

using namespace stg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stg_io_test_" + name);
  fs::remove_all(p);
  return p;
}

PoseSequence random_seq(int t, int n, int c, Rng& rng) {
  PoseSequence s{t, n, c, oracle::random_mat(t * n, c, rng, -500, 500), {}};
  // Exactly representable in f32.
  s.data = s.data.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  return s;
}

bool throws_with(const std::function<void()>& f, const std::string& needle) {
  try {
    f();
  } catch (const std::exception& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("pose file round trip") {
  Rng rng(1);
  auto s = random_seq(3, 4, 3, rng);
  s.labels = {"walk", "walk", "sit"};
  const fs::path p = scratch("rt.pseq");
  write_pose_file(p.string(), s);
  const auto back = read_pose_file(p.string());
  CHECK(back.frames == 3);
  CHECK(back.joints == 4);
  CHECK(back.channels == 3);
  CHECK((back.data.array() == s.data.array()).all());
  CHECK(back.labels == s.labels);
  CHECK_FALSE(fs::exists(p.string() + ".tmp"));
  CHECK(encode_pose_file(back) == read_file(p.string()));
  fs::remove(p);
}

TEST_CASE("minimal file size") {
  PoseSequence s{1, 1, 3, Mat::Zero(1, 3), {}};
  CHECK(encode_pose_file(s).size() == 4 + 4 + 12 + 12);
}

TEST_CASE("decode faults carry byte offsets") {
  Rng rng(2);
  const std::string good = encode_pose_file(random_seq(2, 3, 2, rng));
  CHECK(throws_with([&] { decode_pose_file(good.substr(0, 10)); }, "expected 20 bytes, got 10"));
  CHECK(throws_with([&] { decode_pose_file(good.substr(0, good.size() - 3)); },
                    "expected " + std::to_string(good.size()) + " bytes, got " + std::to_string(good.size() - 3)));
  std::string bad = good;
  bad[0] = 'X';
  CHECK(throws_with([&] { decode_pose_file(bad); }, "byte 0"));
  bad = good;
  bad[4] = 2;
  CHECK(throws_with([&] { decode_pose_file(bad); }, "byte 4"));
  bad = good;
  bad[16] = 4;
  CHECK(throws_with([&] { decode_pose_file(bad); }, "byte 16"));
  CHECK(throws_with([&] { decode_pose_file(good + "a\nb\n"); }, "2 labels for 2 frames") == false);
  CHECK(throws_with([&] { decode_pose_file(good + "a\n"); }, "1 labels for 2 frames"));
  CHECK(throws_with([&] { decode_pose_file(good + "a\nb"); }, "newline"));
  CHECK_THROWS_AS(decode_pose_file(good.substr(0, 10)), IoError);
  CHECK_THROWS_AS(read_pose_file("/nonexistent/file.pseq"), IoError);
  CHECK_THROWS_AS(encode_pose_file(PoseSequence{1, 1, 4, Mat::Zero(1, 4), {}}), ShapeError);
}

TEST_CASE("tensor container") {
  const std::string bytes = encode_tensor_file("ATTN", {2, 3, 3}, Mat::Constant(6, 3, 0.25));
  CHECK(bytes.size() == 20 + 4 * 18);
  CHECK(bytes.compare(0, 4, "ATTN") == 0);
  CHECK_THROWS(encode_tensor_file("ATTN", {2, 3, 4}, Mat::Zero(6, 3)));
}

TEST_CASE("checkpoint round trip and mismatch") {
  const ModelConfig c = tiny_config();
  ParameterSet p = init_parameters(c, 3);
  for (auto& e : p.entries()) e.value = e.value.unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
  const fs::path dir = scratch("ckpt");
  TrainConfig t;
  t.seed = 17;
  write_checkpoint(dir.string(), p, c, &t);
  const auto ck = read_checkpoint(dir.string());
  REQUIRE(ck.params.size() == p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    CHECK(ck.params.entries()[i].name == p.entries()[i].name);
    CHECK((ck.params.entries()[i].value.array() == p.entries()[i].value.array()).all());
  }
  CHECK(format_config_text(ck.config) == format_config_text(c));
  const std::string manifest = read_file((dir / "manifest.txt").string());
  CHECK(manifest.rfind("# stgformer checkpoint v1\nembed.weight f32 2x8 0\nembed.bias f32 1x8 64\n", 0) == 0);

  // Config that no longer matches the stored tensors.
  ModelConfig other = c;
  other.embed_dim = 12;
  write_file_atomic((dir / "config.txt").string(), format_config_text(other));
  CHECK(throws_with([&] { read_checkpoint(dir.string()); }, "config/checkpoint mismatch"));
  CHECK_THROWS_AS(read_checkpoint(dir.string()), std::invalid_argument);

  write_file_atomic((dir / "config.txt").string(), format_config_text(c));
  const std::string payload = read_file((dir / "params.bin").string());
  write_file_atomic((dir / "params.bin").string(), payload.substr(0, payload.size() - 8));
  CHECK_THROWS_AS(read_checkpoint(dir.string()), IoError);
  CHECK_THROWS_AS(read_checkpoint((dir / "missing").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("config text") {
  ModelConfig m = tiny_config();
  m.use_smhr = false;
  m.stga_groups = AttentionGroups::kTemporalOnly;
  m.activation = Activation::kIdentity;
  TrainConfig t;
  t.base_lr = 0.0123;
  t.seed = 42;
  const std::string text = format_config_text(m, &t);
  ModelConfig m2;
  TrainConfig t2;
  parse_config_text(text, &m2, &t2);
  CHECK(format_config_text(m2, &t2) == text);
  CHECK(m2.stga_groups == AttentionGroups::kTemporalOnly);
  CHECK(t2.base_lr == 0.0123);
  ModelConfig m3;
  parse_config_text("# comment\nframes = 9\n\nblocks=2 # trailing\n", &m3, nullptr);
  CHECK(m3.frames == 9);
  CHECK(m3.blocks == 2);
  CHECK_THROWS(parse_config_text("bogus=1\n", &m3, nullptr));
  CHECK_THROWS(parse_config_text("frames=abc\n", &m3, nullptr));
  CHECK_THROWS(parse_config_text("frames\n", &m3, nullptr));
}

TEST_CASE("topology fixtures") {
  const auto h = read_topology(std::string(STG_DATA_DIR) + "/h36m_17.txt");
  CHECK(h.hop_dist() == human36m_skeleton().hop_dist());
  const auto m = read_topology(std::string(STG_DATA_DIR) + "/mpi_inf_3dhp_13.txt");
  CHECK(m.hop_dist() == mpi_inf_3dhp_skeleton().hop_dist());
}

TEST_CASE("synthetic data") {
  SynthConfig cfg;
  cfg.frames = 130;
  cfg.seed = 5;
  const auto a = synth_generate(cfg), b = synth_generate(cfg);
  CHECK(encode_pose_file(a.pose3d) == encode_pose_file(b.pose3d));
  CHECK(encode_pose_file(a.pose2d) == encode_pose_file(b.pose2d));
  cfg.seed = 6;
  CHECK(encode_pose_file(synth_generate(cfg).pose3d) != encode_pose_file(a.pose3d));
  CHECK(a.pose3d.labels.size() == 130);

  // Bone lengths are fixed by the rest pose.
  const auto parents = skeleton_parents("h36m17");
  const Mat rest = rest_pose("h36m17");
  for (int t = 0; t < 130; ++t)
    for (int j = 0; j < 17; ++j) {
      if (parents[j] < 0) continue;
      const double len = (a.pose3d.data.row(t * 17 + j) - a.pose3d.data.row(t * 17 + parents[j])).norm();
      CHECK(std::abs(len / rest.row(j).norm() - 1.0) < 1e-4);
    }

  // Pinhole projection written out by hand.
  for (int i = 0; i < a.pose3d.data.rows(); ++i) {
    const double x = a.pose3d.data(i, 0), y = a.pose3d.data(i, 1), z = a.pose3d.data(i, 2);
    CHECK(std::abs(a.pose2d.data(i, 0) - (1000.0 * x / z + 500.0)) < 1e-9);
    CHECK(std::abs(a.pose2d.data(i, 1) - (1000.0 * y / z + 500.0)) < 1e-9);
  }

  SynthConfig mpi;
  mpi.skeleton = "mpi13";
  mpi.frames = 10;
  CHECK(synth_generate(mpi).pose3d.joints == 13);
  SynthConfig bad;
  bad.focal = 0.0;
  CHECK_THROWS(synth_generate(bad));
  bad = SynthConfig{};
  bad.distance = -1.0;
  CHECK_THROWS(synth_generate(bad));
  CHECK_THROWS(project_pinhole(Mat::Zero(1, 3), 1000, 1000, 1000));
}

TEST_CASE("windows and stitching") {
  SynthConfig cfg;
  cfg.frames = 37;
  const auto d = synth_generate(cfg);
  ModelConfig c;
  c.frames = 16;
  const auto w = make_windows(d.pose2d, &d.pose3d, c, true);
  CHECK(w.starts == std::vector<int>{0, 16, 21});
  CHECK(make_windows(d.pose2d, &d.pose3d, c, false).starts == std::vector<int>{0, 16});
  for (const auto& s : w.samples) CHECK(s.p3d.row(0).cwiseAbs().maxCoeff() == 0.0);
  std::vector<Mat> preds;
  for (const auto& s : w.samples) preds.push_back(s.p3d);
  const Mat back = stitch_predictions(preds, w.starts, 37, c);
  CHECK(oracle::max_abs_diff(back, root_align(d.pose3d.data, d.pose3d.shape(), 0)) < 1e-9);
  c.frames = 40;
  CHECK_THROWS(make_windows(d.pose2d, &d.pose3d, c, true));
  c.frames = 16;
  c.joints = 13;
  CHECK_THROWS(make_windows(d.pose2d, &d.pose3d, c, true));
}
