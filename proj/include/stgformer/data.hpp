#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stgformer/config.hpp"
#include "stgformer/parameters.hpp"
#include "stgformer/pose_io.hpp"
#include "stgformer/training.hpp"

namespace stg {

struct SynthConfig {
  std::uint64_t seed = 0;
  int frames = 1024;
  std::string skeleton = "h36m17";  // h36m17 or mpi13
  int clip_frames = 64;             // motion restarts (new heading, new action) every clip
  double step_mm = 10.0;            // random-walk step scale
  double focal = 1000.0;            // pixels
  double distance = 4500.0;         // camera to subject, mm
  double image_width = 1000.0;
  double image_height = 1000.0;

  void validate() const;
};

struct SynthOutput {
  PoseSequence pose3d;  // camera coordinates, mm
  PoseSequence pose2d;  // pixels
};

// Forward-kinematic random walk over joint rotations (bone lengths are exact),
// viewed by a pinhole camera. Deterministic per seed.
SynthOutput synth_generate(const SynthConfig& cfg);

// u = f X / Z + w / 2, v = f Y / Z + h / 2 per row of a [M x 3] camera-space array.
Mat project_pinhole(const Mat& cam, double focal, double image_width, double image_height);

// Rest-pose bone offsets (mm) from each joint's parent, root row = root position.
Mat rest_pose(const std::string& skeleton);
std::vector<int> skeleton_parents(const std::string& skeleton);

// Maps pixels to [-1, 1] by image width (aspect preserved).
Mat normalize_2d(const Mat& p2d, const ModelConfig& c);

struct WindowedData {
  std::vector<Sample> samples;
  std::vector<int> starts;  // first frame of each window
};

// Cuts paired sequences into windows of config.frames. Non-overlapping; with
// cover_all a final window aligned to the last frame is appended when needed.
// p3d may be absent (data only), in which case targets are left empty.
WindowedData make_windows(const PoseSequence& p2d, const PoseSequence* p3d, const ModelConfig& c, bool cover_all);

// Model output (model units, root-relative) back to millimeters for a full sequence,
// taking each frame from the first window that covers it.
Mat stitch_predictions(const std::vector<Mat>& window_preds, const std::vector<int>& starts, int total_frames,
                       const ModelConfig& c);

// Root-relative 3D prediction (mm) for every frame of a 2D sequence.
Mat predict_sequence(const PoseSequence& p2d, const ParameterSet& p, const ModelConfig& c);

}  // namespace stg
