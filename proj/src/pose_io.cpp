#include "stgformer/pose_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stgformer/model.hpp"

namespace stg {

namespace fs = std::filesystem;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, double value) {
  const float f = static_cast<float>(value);
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

double get_f32(const std::string& in, std::size_t off) {
  const std::uint32_t bits = get_u32(in, off);
  float f = 0.0f;
  std::memcpy(&f, &bits, 4);
  return static_cast<double>(f);
}

void put_payload(std::string& out, const Mat& data) {
  for (Eigen::Index i = 0; i < data.size(); ++i) put_f32(out, data.data()[i]);
}

const std::string kManifestHeader = "# stgformer checkpoint v1";

}  // namespace

std::string encode_tensor_file(const char magic[4], const std::array<std::uint32_t, 3>& dims, const Mat& data) {
  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (static_cast<std::size_t>(data.size()) != count) throw ShapeError("tensor file: payload size does not match dims");
  std::string out(magic, 4);
  put_u32(out, kPoseFileVersion);
  for (auto d : dims) put_u32(out, d);
  put_payload(out, data);
  return out;
}

void write_tensor_file(const std::string& path, const char magic[4], const std::array<std::uint32_t, 3>& dims,
                       const Mat& data) {
  write_file_atomic(path, encode_tensor_file(magic, dims, data));
}

std::string encode_pose_file(const PoseSequence& seq) {
  if (seq.channels != 2 && seq.channels != 3) throw ShapeError("pose file: channels must be 2 or 3");
  require_shape(seq.data, static_cast<Eigen::Index>(seq.frames) * seq.joints, seq.channels, "pose file payload");
  if (!seq.labels.empty() && static_cast<int>(seq.labels.size()) != seq.frames)
    throw ShapeError("pose file: need one label per frame");
  std::string out = encode_tensor_file("PSEQ",
                                       {static_cast<std::uint32_t>(seq.frames), static_cast<std::uint32_t>(seq.joints),
                                        static_cast<std::uint32_t>(seq.channels)},
                                       seq.data);
  for (const auto& l : seq.labels) {
    if (l.find('\n') != std::string::npos) throw std::invalid_argument("pose file: label contains a newline");
    out += l;
    out.push_back('\n');
  }
  return out;
}

PoseSequence decode_pose_file(const std::string& bytes) {
  if (bytes.size() < kPoseHeaderBytes) {
    throw IoError("pose file: truncated header: expected " + std::to_string(kPoseHeaderBytes) + " bytes, got " +
                  std::to_string(bytes.size()));
  }
  if (bytes.compare(0, 4, "PSEQ") != 0) throw IoError("pose file: bad magic at byte 0");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kPoseFileVersion) {
    throw IoError("pose file: unsupported version " + std::to_string(version) + " at byte 4 (expected " +
                  std::to_string(kPoseFileVersion) + ")");
  }
  PoseSequence seq;
  seq.frames = static_cast<int>(get_u32(bytes, 8));
  seq.joints = static_cast<int>(get_u32(bytes, 12));
  seq.channels = static_cast<int>(get_u32(bytes, 16));
  if (seq.channels != 2 && seq.channels != 3)
    throw IoError("pose file: channel count " + std::to_string(seq.channels) + " at byte 16 is not 2 or 3");
  const std::size_t count = static_cast<std::size_t>(seq.frames) * seq.joints * seq.channels;
  const std::size_t need = kPoseHeaderBytes + 4 * count;
  if (bytes.size() < need) {
    throw IoError("pose file: truncated payload: expected " + std::to_string(need) + " bytes, got " +
                  std::to_string(bytes.size()));
  }
  seq.data.resize(static_cast<Eigen::Index>(seq.frames) * seq.joints, seq.channels);
  for (std::size_t i = 0; i < count; ++i) seq.data.data()[i] = get_f32(bytes, kPoseHeaderBytes + 4 * i);

  if (bytes.size() > need) {
    const std::string tail = bytes.substr(need);
    if (tail.back() != '\n') throw IoError("pose file: label block at byte " + std::to_string(need) + " not newline-terminated");
    std::istringstream in(tail);
    std::string line;
    while (std::getline(in, line)) seq.labels.push_back(line);
    if (static_cast<int>(seq.labels.size()) != seq.frames) {
      throw IoError("pose file: label block at byte " + std::to_string(need) + " has " +
                    std::to_string(seq.labels.size()) + " labels for " + std::to_string(seq.frames) + " frames");
    }
  }
  return seq;
}

void write_pose_file(const std::string& path, const PoseSequence& seq) { write_file_atomic(path, encode_pose_file(seq)); }

PoseSequence read_pose_file(const std::string& path) {
  try {
    return decode_pose_file(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + tmp + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_checkpoint(const std::string& dir, const ParameterSet& p, const ModelConfig& c, const TrainConfig* t) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory '" + dir + "': " + ec.message());
  std::string manifest = kManifestHeader + "\n";
  std::string payload;
  for (const auto& e : p.entries()) {
    manifest += e.name + " f32 " + std::to_string(e.value.rows()) + "x" + std::to_string(e.value.cols()) + " " +
                std::to_string(payload.size()) + "\n";
    put_payload(payload, e.value);
  }
  write_file_atomic((fs::path(dir) / "params.bin").string(), payload);
  write_file_atomic((fs::path(dir) / "config.txt").string(), format_config_text(c, t));
  write_file_atomic((fs::path(dir) / "manifest.txt").string(), manifest);
}

Checkpoint read_checkpoint(const std::string& dir) {
  Checkpoint ck;
  parse_config_text(read_file((fs::path(dir) / "config.txt").string()), &ck.config, nullptr);
  const std::string manifest = read_file((fs::path(dir) / "manifest.txt").string());
  const std::string payload = read_file((fs::path(dir) / "params.bin").string());

  std::istringstream in(manifest);
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) throw IoError("checkpoint: bad manifest header in '" + dir + "'");
  std::size_t expected_offset = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, dtype, shape;
    std::size_t offset = 0;
    if (!(ls >> name >> dtype >> shape >> offset) || dtype != "f32") throw IoError("checkpoint: bad manifest line '" + line + "'");
    const auto x = shape.find('x');
    if (x == std::string::npos) throw IoError("checkpoint: bad shape '" + shape + "'");
    const int rows = std::stoi(shape.substr(0, x)), cols = std::stoi(shape.substr(x + 1));
    const std::size_t bytes = 4 * static_cast<std::size_t>(rows) * cols;
    if (offset != expected_offset) throw IoError("checkpoint: tensor '" + name + "' offset " + std::to_string(offset) + " is not contiguous");
    if (offset + bytes > payload.size()) {
      throw IoError("checkpoint: payload truncated: tensor '" + name + "' needs bytes up to " +
                    std::to_string(offset + bytes) + ", file has " + std::to_string(payload.size()));
    }
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get_f32(payload, offset + 4 * static_cast<std::size_t>(i));
    ck.params.add(name, std::move(m));
    expected_offset = offset + bytes;
  }
  if (expected_offset != payload.size()) {
    throw IoError("checkpoint: payload has " + std::to_string(payload.size()) + " bytes, manifest covers " +
                  std::to_string(expected_offset));
  }
  const auto shapes = parameter_shapes(ck.config);
  ParameterSet expected;
  for (const auto& s : shapes) expected.add(s.name, Mat::Zero(s.rows, s.cols));
  try {
    expected.require_congruent(ck.params, "checkpoint");
  } catch (const ShapeError& e) {
    throw std::invalid_argument(std::string("config/checkpoint mismatch: ") + e.what());
  }
  return ck;
}

}  // namespace stg
