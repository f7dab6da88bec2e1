#pragma once

#include <map>
#include <string>
#include <vector>

#include "stgformer/tensor.hpp"

namespace stg {

// Pose tensors here are [T*N x 3] in millimeters with row t*N + n.

Mat root_align(const Mat& pose, SeqShape s, int root_index);

// Mean Euclidean distance over all (t, n).
double mpjpe(const Mat& pred, const Mat& gt);

struct ProcrustesResult {
  Mat aligned;       // [N x 3]
  bool degenerate = false;  // fell back to translation-only alignment
};

// Similarity transform (rotation without reflection, uniform scale,
// translation) of pred minimizing the squared distance to gt, per frame.
ProcrustesResult procrustes_align(const Mat& pred, const Mat& gt);

struct PaMpjpeResult {
  double value = 0.0;
  int degenerate_frames = 0;
};
PaMpjpeResult pa_mpjpe_detailed(const Mat& pred, const Mat& gt, SeqShape s);
double pa_mpjpe(const Mat& pred, const Mat& gt, SeqShape s);

// Percentage of joints with error strictly below the threshold.
double pck(const Mat& pred, const Mat& gt, double threshold_mm);

// Thresholds 0, 5, ..., 150 mm.
std::vector<double> auc_thresholds();

// Mean of pck/100 over auc_thresholds().
double auc(const Mat& pred, const Mat& gt);

struct MetricValues {
  double mpjpe_mm = 0.0;
  double pa_mpjpe_mm = 0.0;
  double pck_percent = 0.0;
  double auc = 0.0;
  long long frames = 0;
};

struct EvalReport {
  MetricValues overall;
  int degenerate_frames = 0;
  std::map<std::string, MetricValues> per_action;
};

// Root-aligns both inputs, then computes all four metrics overall and per
// action label (labels are per frame; empty means no breakdown).
EvalReport evaluate(const Mat& pred, const Mat& gt, SeqShape s, int root_index,
                    const std::vector<std::string>& frame_labels = {});

std::string format_report(const EvalReport& r);

}  // namespace stg
