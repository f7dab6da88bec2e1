#include "stgformer/metrics.hpp"

#include <Eigen/SVD>

#include <cstdio>
#include <sstream>

namespace stg {

namespace {

void check_pair(const Mat& pred, const Mat& gt) {
  if (pred.cols() != 3) throw ShapeError("metrics: poses must have 3 columns, got " + std::to_string(pred.cols()));
  require_shape(gt, pred.rows(), 3, "metrics ground truth");
  if (pred.rows() == 0) throw ShapeError("metrics: empty pose set");
}

Vec joint_errors(const Mat& pred, const Mat& gt) { return (pred - gt).rowwise().norm(); }

MetricValues compute(const Mat& pred, const Mat& gt, SeqShape s, int* degenerate) {
  MetricValues v;
  v.frames = s.frames;
  v.mpjpe_mm = mpjpe(pred, gt);
  const PaMpjpeResult pa = pa_mpjpe_detailed(pred, gt, s);
  v.pa_mpjpe_mm = pa.value;
  if (degenerate) *degenerate += pa.degenerate_frames;
  v.pck_percent = pck(pred, gt, 150.0);
  v.auc = auc(pred, gt);
  return v;
}

Mat select_frames(const Mat& x, SeqShape s, const std::vector<int>& frames) {
  Mat out(static_cast<Eigen::Index>(frames.size()) * s.joints, x.cols());
  for (size_t i = 0; i < frames.size(); ++i)
    out.middleRows(static_cast<Eigen::Index>(i) * s.joints, s.joints) =
        x.middleRows(static_cast<Eigen::Index>(frames[i]) * s.joints, s.joints);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

Mat root_align(const Mat& pose, SeqShape s, int root_index) {
  if (root_index < 0 || root_index >= s.joints) throw std::invalid_argument("root_align: root index out of range");
  require_shape(pose, s.tokens(), pose.cols(), "root_align pose");
  Mat out = pose;
  for (int t = 0; t < s.frames; ++t) {
    const Eigen::RowVectorXd root = pose.row(s.row(t, root_index));
    for (int n = 0; n < s.joints; ++n) out.row(s.row(t, n)) -= root;
  }
  return out;
}

double mpjpe(const Mat& pred, const Mat& gt) {
  check_pair(pred, gt);
  return joint_errors(pred, gt).mean();
}

ProcrustesResult procrustes_align(const Mat& pred, const Mat& gt) {
  check_pair(pred, gt);
  const Eigen::RowVector3d mu_p = pred.colwise().mean();
  const Eigen::RowVector3d mu_g = gt.colwise().mean();
  const Mat p0 = pred.rowwise() - mu_p;
  const Mat g0 = gt.rowwise() - mu_g;
  const double norm_p = p0.squaredNorm();

  ProcrustesResult r;
  const Eigen::Matrix3d h = p0.transpose() * g0;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (pred.rows() < 3 || norm_p <= 1e-24 || sv(1) <= 1e-12 * std::max(sv(0), 1e-300)) {
    r.degenerate = true;
    r.aligned = p0.rowwise() + mu_g;
    return r;
  }
  const Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  const Eigen::Matrix3d rot = v * d.asDiagonal() * u.transpose();
  const double scale = sv.dot(d) / norm_p;
  r.aligned = (scale * (p0 * rot.transpose())).rowwise() + mu_g;
  return r;
}

PaMpjpeResult pa_mpjpe_detailed(const Mat& pred, const Mat& gt, SeqShape s) {
  check_pair(pred, gt);
  require_shape(pred, s.tokens(), 3, "pa_mpjpe prediction");
  PaMpjpeResult out;
  double sum = 0.0;
  for (int t = 0; t < s.frames; ++t) {
    const Mat g = gt.middleRows(static_cast<Eigen::Index>(t) * s.joints, s.joints);
    const ProcrustesResult pr = procrustes_align(pred.middleRows(static_cast<Eigen::Index>(t) * s.joints, s.joints), g);
    if (pr.degenerate) ++out.degenerate_frames;
    sum += joint_errors(pr.aligned, g).sum();
  }
  out.value = sum / static_cast<double>(s.tokens());
  return out;
}

double pa_mpjpe(const Mat& pred, const Mat& gt, SeqShape s) { return pa_mpjpe_detailed(pred, gt, s).value; }

double pck(const Mat& pred, const Mat& gt, double threshold_mm) {
  check_pair(pred, gt);
  const Vec err = joint_errors(pred, gt);
  long long hit = 0;
  for (Eigen::Index i = 0; i < err.size(); ++i)
    if (err(i) < threshold_mm) ++hit;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(err.size());
}

std::vector<double> auc_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 30; ++i) t.push_back(5.0 * i);
  return t;
}

double auc(const Mat& pred, const Mat& gt) {
  const auto th = auc_thresholds();
  double sum = 0.0;
  for (double t : th) sum += pck(pred, gt, t) / 100.0;
  return sum / static_cast<double>(th.size());
}

EvalReport evaluate(const Mat& pred, const Mat& gt, SeqShape s, int root_index,
                    const std::vector<std::string>& frame_labels) {
  check_pair(pred, gt);
  if (!frame_labels.empty() && static_cast<int>(frame_labels.size()) != s.frames) {
    throw std::invalid_argument("evaluate: expected " + std::to_string(s.frames) + " frame labels, got " +
                                std::to_string(frame_labels.size()));
  }
  const Mat p = root_align(pred, s, root_index);
  const Mat g = root_align(gt, s, root_index);
  EvalReport r;
  r.overall = compute(p, g, s, &r.degenerate_frames);

  std::map<std::string, std::vector<int>> groups;
  for (int t = 0; t < static_cast<int>(frame_labels.size()); ++t) groups[frame_labels[t]].push_back(t);
  for (const auto& [label, frames] : groups) {
    const SeqShape sub{static_cast<int>(frames.size()), s.joints};
    r.per_action[label] = compute(select_frames(p, s, frames), select_frames(g, s, frames), sub, nullptr);
  }
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream o;
  o << "frames: " << r.overall.frames << '\n'
    << "mpjpe_mm: " << fmt(r.overall.mpjpe_mm) << '\n'
    << "pa_mpjpe_mm: " << fmt(r.overall.pa_mpjpe_mm) << '\n'
    << "pck150_percent: " << fmt(r.overall.pck_percent) << '\n'
    << "auc: " << fmt(r.overall.auc) << '\n'
    << "degenerate_frames: " << r.degenerate_frames << '\n'
    << "actions: " << r.per_action.size() << '\n';
  if (!r.per_action.empty()) {
    o << "action,frames,mpjpe_mm,pa_mpjpe_mm,pck150_percent,auc\n";
    for (const auto& [label, v] : r.per_action)
      o << label << ',' << v.frames << ',' << fmt(v.mpjpe_mm) << ',' << fmt(v.pa_mpjpe_mm) << ','
        << fmt(v.pck_percent) << ',' << fmt(v.auc) << '\n';
  }
  return o.str();
}

}  // namespace stg
