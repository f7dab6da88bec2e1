#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stgformer/config.hpp"
#include "stgformer/parameters.hpp"
#include "stgformer/tensor.hpp"

namespace stg {

// Pose sequence file, little-endian:
//   "PSEQ" | u32 version=1 | u32 T | u32 N | u32 C | T*N*C f32 in (t, n, c) order
// followed by an optional text block of T newline-terminated action labels.
struct PoseSequence {
  int frames = 0;
  int joints = 0;
  int channels = 0;
  Mat data;  // [T*N x C]
  std::vector<std::string> labels;  // empty or one per frame

  SeqShape shape() const { return {frames, joints}; }
};

inline constexpr std::uint32_t kPoseFileVersion = 1;
inline constexpr std::size_t kPoseHeaderBytes = 20;

std::string encode_pose_file(const PoseSequence& seq);
PoseSequence decode_pose_file(const std::string& bytes);

void write_pose_file(const std::string& path, const PoseSequence& seq);
PoseSequence read_pose_file(const std::string& path);

// Same layout with a caller-chosen magic and free third dimension; used for
// attention-map export ("ATTN", dims = maps x rows x cols).
std::string encode_tensor_file(const char magic[4], const std::array<std::uint32_t, 3>& dims, const Mat& data);
void write_tensor_file(const std::string& path, const char magic[4], const std::array<std::uint32_t, 3>& dims,
                       const Mat& data);

// Checkpoint directory: manifest.txt (name f32 RxC byte_offset per line),
// params.bin (flat little-endian f32 payload), config.txt (key=value).
void write_checkpoint(const std::string& dir, const ParameterSet& p, const ModelConfig& c,
                      const TrainConfig* t = nullptr);

struct Checkpoint {
  ParameterSet params;
  ModelConfig config;
};

// Throws IoError for missing/corrupt files and std::invalid_argument when the
// stored tensors do not match the stored config.
Checkpoint read_checkpoint(const std::string& dir);

// Writes to "<path>.tmp" and renames over the destination.
void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

}  // namespace stg
