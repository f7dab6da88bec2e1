#include "stgformer/data.hpp"

#include <Eigen/Geometry>

#include <stdexcept>

#include "stgformer/metrics.hpp"
#include "stgformer/model.hpp"
#include "stgformer/random.hpp"

namespace stg {

namespace {

struct ActionRegime {
  const char* label;
  double step_scale;
};
constexpr ActionRegime kRegimes[] = {{"slow", 0.5}, {"medium", 1.0}, {"fast", 2.0}};

// Typical lengths of a standing adult, z up, x to the subject's left.
const double kH36mOffsets[17][3] = {
    {0, 0, 1000},  {-130, 0, 0}, {0, 0, -450}, {0, 0, -440}, {130, 0, 0},   {0, 0, -450},
    {0, 0, -440},  {0, 0, 230},  {0, 0, 250},  {0, 0, 110},  {0, 0, 110},   {150, 0, 0},
    {0, 0, -280},  {0, 0, -250}, {-150, 0, 0}, {0, 0, -280}, {0, 0, -250}};

const double kMpiOffsets[13][3] = {
    {0, 0, 180},   {0, 0, 1500},   {-170, 0, -20}, {0, 0, -280}, {0, 0, -250}, {170, 0, -20}, {0, 0, -280},
    {0, 0, -250},  {0, 0, -500},   {-120, 0, -450}, {0, 0, -440}, {120, 0, -450}, {0, 0, -440}};

}  // namespace

void SynthConfig::validate() const {
  if (frames < 1) throw std::invalid_argument("synth: frames must be >= 1");
  if (clip_frames < 1) throw std::invalid_argument("synth: clip_frames must be >= 1");
  if (!(focal > 0.0)) throw std::invalid_argument("synth: focal length must be positive");
  if (!(distance > 0.0)) throw std::invalid_argument("synth: camera distance must be positive");
  if (!(step_mm >= 0.0)) throw std::invalid_argument("synth: step scale must be non-negative");
  if (!(image_width > 0.0) || !(image_height > 0.0)) throw std::invalid_argument("synth: image size must be positive");
}

std::vector<int> skeleton_parents(const std::string& skeleton) {
  if (skeleton == "h36m17") return {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
  if (skeleton == "mpi13") return {1, -1, 1, 2, 3, 1, 5, 6, 1, 8, 9, 8, 11};
  throw std::invalid_argument("synth: no rest pose for skeleton '" + skeleton + "' (use h36m17 or mpi13)");
}

Mat rest_pose(const std::string& skeleton) {
  const auto parents = skeleton_parents(skeleton);
  Mat m(static_cast<Eigen::Index>(parents.size()), 3);
  for (size_t j = 0; j < parents.size(); ++j)
    for (int k = 0; k < 3; ++k)
      m(static_cast<Eigen::Index>(j), k) = skeleton == "h36m17" ? kH36mOffsets[j][k] : kMpiOffsets[j][k];
  return m;
}

Mat project_pinhole(const Mat& cam, double focal, double image_width, double image_height) {
  if (cam.cols() != 3) throw ShapeError("project: expected 3 columns");
  Mat uv(cam.rows(), 2);
  for (Eigen::Index i = 0; i < cam.rows(); ++i) {
    const double z = cam(i, 2);
    if (!(z > 0.0)) throw std::invalid_argument("project: point behind the camera at row " + std::to_string(i));
    uv(i, 0) = focal * cam(i, 0) / z + 0.5 * image_width;
    uv(i, 1) = focal * cam(i, 1) / z + 0.5 * image_height;
  }
  return uv;
}

SynthOutput synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto parents = skeleton_parents(cfg.skeleton);
  const Mat offsets = rest_pose(cfg.skeleton);
  const int n = static_cast<int>(parents.size());
  int root = 0;
  for (int j = 0; j < n; ++j)
    if (parents[j] < 0) root = j;
  // Parents precede children except for the mpi13 head (child of joint 1), so order by depth.
  std::vector<int> order{root};
  for (size_t i = 0; i < order.size(); ++i)
    for (int j = 0; j < n; ++j)
      if (parents[j] == order[i]) order.push_back(j);

  Rng rng(cfg.seed);
  const double angle_step = cfg.step_mm / 250.0;
  const double camera_height = offsets(root, 2);

  SynthOutput out;
  Mat world(static_cast<Eigen::Index>(cfg.frames) * n, 3);
  std::vector<std::string> labels(cfg.frames);

  std::vector<Eigen::Vector3d> angle(n), omega(n);
  Eigen::Vector3d root_pos, root_vel;
  double yaw = 0.0;
  const ActionRegime* regime = &kRegimes[0];

  for (int t = 0; t < cfg.frames; ++t) {
    if (t % cfg.clip_frames == 0) {
      regime = &kRegimes[rng() % 3];
      yaw = uniform(rng, -M_PI, M_PI);
      root_pos = Eigen::Vector3d(uniform(rng, -200, 200), uniform(rng, -200, 200), offsets(root, 2));
      root_vel.setZero();
      for (int j = 0; j < n; ++j) {
        angle[j].setZero();
        omega[j].setZero();
      }
    }
    const double step = angle_step * regime->step_scale;
    for (int j = 0; j < n; ++j) {
      if (j == root) continue;
      for (int k = 0; k < 3; ++k) omega[j](k) = 0.8 * omega[j](k) + step * normal(rng);
      angle[j] = 0.95 * angle[j] + omega[j];
    }
    for (int k = 0; k < 2; ++k) root_vel(k) = 0.8 * root_vel(k) + cfg.step_mm * regime->step_scale * normal(rng);
    root_pos.head<2>() = 0.98 * root_pos.head<2>() + root_vel.head<2>();

    std::vector<Eigen::Matrix3d> global(n);
    std::vector<Eigen::Vector3d> pos(n);
    global[root] = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    pos[root] = root_pos;
    for (size_t i = 1; i < order.size(); ++i) {
      const int j = order[i];
      const double a = angle[j].norm();
      const Eigen::Matrix3d local =
          a > 0.0 ? Eigen::AngleAxisd(a, angle[j] / a).toRotationMatrix() : Eigen::Matrix3d::Identity();
      global[j] = global[parents[j]] * local;
      pos[j] = pos[parents[j]] + global[j] * offsets.row(j).transpose();
    }
    for (int j = 0; j < n; ++j) world.row(static_cast<Eigen::Index>(t) * n + j) = pos[j].transpose();
    labels[t] = regime->label;
  }

  // Camera on the -y axis at root height looking along +y; image y points down.
  Mat cam(world.rows(), 3);
  cam.col(0) = world.col(0);
  cam.col(1) = -(world.col(2).array() - camera_height).matrix();
  cam.col(2) = world.col(1).array() + cfg.distance;

  out.pose3d = {cfg.frames, n, 3, cam, labels};
  out.pose2d = {cfg.frames, n, 2, project_pinhole(cam, cfg.focal, cfg.image_width, cfg.image_height), labels};
  return out;
}

Mat normalize_2d(const Mat& p2d, const ModelConfig& c) {
  Mat out(p2d.rows(), 2);
  out.col(0) = (p2d.col(0) / c.image_width * 2.0).array() - 1.0;
  out.col(1) = (p2d.col(1) / c.image_width * 2.0).array() - c.image_height / c.image_width;
  return out;
}

WindowedData make_windows(const PoseSequence& p2d, const PoseSequence* p3d, const ModelConfig& c, bool cover_all) {
  if (p2d.channels != 2) throw std::invalid_argument("windows: 2D input must have 2 channels");
  if (p2d.joints != c.joints) {
    throw std::invalid_argument("windows: data has " + std::to_string(p2d.joints) + " joints, model expects " +
                                std::to_string(c.joints));
  }
  if (p3d && (p3d->channels != 3 || p3d->frames != p2d.frames || p3d->joints != p2d.joints))
    throw std::invalid_argument("windows: 2D and 3D sequences do not pair up");
  if (p2d.frames < c.frames) {
    throw std::invalid_argument("windows: sequence has " + std::to_string(p2d.frames) + " frames, window needs " +
                                std::to_string(c.frames));
  }
  WindowedData w;
  for (int s = 0; s + c.frames <= p2d.frames; s += c.frames) w.starts.push_back(s);
  if (cover_all && w.starts.back() + c.frames < p2d.frames) w.starts.push_back(p2d.frames - c.frames);

  const Mat norm2d = normalize_2d(p2d.data, c);
  const SeqShape whole = p2d.shape();
  const Mat rel3d = p3d ? Mat(root_align(p3d->data, whole, c.root_joint) / c.target_unit_mm) : Mat();
  const Eigen::Index rows = static_cast<Eigen::Index>(c.frames) * c.joints;
  for (int s : w.starts) {
    const Eigen::Index r0 = static_cast<Eigen::Index>(s) * c.joints;
    Sample smp;
    smp.p2d = norm2d.middleRows(r0, rows);
    if (p3d) smp.p3d = rel3d.middleRows(r0, rows);
    w.samples.push_back(std::move(smp));
  }
  return w;
}

Mat stitch_predictions(const std::vector<Mat>& window_preds, const std::vector<int>& starts, int total_frames,
                       const ModelConfig& c) {
  if (window_preds.size() != starts.size()) throw std::invalid_argument("stitch: one start per window required");
  Mat out = Mat::Zero(static_cast<Eigen::Index>(total_frames) * c.joints, 3);
  int filled = 0;
  for (size_t w = 0; w < starts.size(); ++w) {
    for (int t = 0; t < c.frames; ++t) {
      const int frame = starts[w] + t;
      if (frame < filled) continue;
      out.middleRows(static_cast<Eigen::Index>(frame) * c.joints, c.joints) =
          window_preds[w].middleRows(static_cast<Eigen::Index>(t) * c.joints, c.joints) * c.target_unit_mm;
      filled = frame + 1;
    }
  }
  if (filled != total_frames) throw std::invalid_argument("stitch: windows do not cover every frame");
  return out;
}

Mat predict_sequence(const PoseSequence& p2d, const ParameterSet& p, const ModelConfig& c) {
  const WindowedData w = make_windows(p2d, nullptr, c, true);
  const GraphContext g = GraphContext::build(c);
  std::vector<Mat> preds;
  preds.reserve(w.samples.size());
  for (const auto& s : w.samples) preds.push_back(model_forward(s.p2d, p, c, g));
  return stitch_predictions(preds, w.starts, p2d.frames, c);
}

}  // namespace stg
