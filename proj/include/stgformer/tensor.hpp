#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace stg {

// Row-major dense matrix. A pose-sequence tensor [T x N x C] is stored as a
// (T*N) x C matrix whose row t*N + n holds the features of joint n at frame t.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using IntMat = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SeqShape {
  int frames = 0;
  int joints = 0;

  int tokens() const { return frames * joints; }
  int row(int t, int n) const { return t * joints + n; }
  bool operator==(const SeqShape&) const = default;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File missing, unreadable, or malformed on disk.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_shape(const Mat& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + shape_str(m));
  }
}

// Exact (erf) GELU.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) * (0.5 * M_2_SQRTPI * M_SQRT1_2);
  return cdf + x * pdf;
}

inline Mat gelu(const Mat& x) { return x.unaryExpr([](double v) { return gelu(v); }); }

inline Mat gelu_backward(const Mat& pre, const Mat& grad_out) {
  return grad_out.cwiseProduct(pre.unaryExpr([](double v) { return gelu_grad(v); }));
}

enum class Activation { kGelu, kIdentity };

inline Mat activate(const Mat& x, Activation a) {
  return a == Activation::kGelu ? gelu(x) : x;
}

inline Mat activate_backward(const Mat& pre, const Mat& grad_out, Activation a) {
  return a == Activation::kGelu ? gelu_backward(pre, grad_out) : grad_out;
}

// Rows {t*N + n : t} of a sequence tensor (the frame chain of joint n).
inline Mat gather_joint(const Mat& x, SeqShape s, int n) {
  Mat out(s.frames, x.cols());
  for (int t = 0; t < s.frames; ++t) out.row(t) = x.row(s.row(t, n));
  return out;
}

inline void scatter_add_joint(Mat& x, SeqShape s, int n, const Mat& rows) {
  for (int t = 0; t < s.frames; ++t) x.row(s.row(t, n)) += rows.row(t);
}

inline void scatter_joint(Mat& x, SeqShape s, int n, const Mat& rows) {
  for (int t = 0; t < s.frames; ++t) x.row(s.row(t, n)) = rows.row(t);
}

}  // namespace stg
