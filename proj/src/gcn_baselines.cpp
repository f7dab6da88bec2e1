#include "stgformer/gcn_baselines.hpp"

namespace stg {

namespace {

const Mat& need(const std::optional<Mat>& m, const char* what) {
  if (!m) throw ShapeError(std::string("gcn: missing ") + what);
  return *m;
}

void check_adj(const Mat& h, const Mat& adj) {
  require_shape(adj, h.rows(), h.rows(), "gcn adjacency");
}

Mat modulated_aggregate(const Mat& h, const GcnLayerParams& p, const Mat& adj) {
  check_adj(h, adj);
  const Mat& w = need(p.shared_weight, "shared weight");
  require_shape(w, h.cols(), w.cols(), "gcn shared weight");
  const Mat& m = need(p.modulation, "modulation");
  require_shape(m, h.rows(), w.cols(), "gcn modulation");
  return adj * (h * w).cwiseProduct(m);
}

}  // namespace

Mat vanilla_gcn(const Mat& h, const GcnLayerParams& p, const Mat& adj) {
  check_adj(h, adj);
  const Mat& w = need(p.shared_weight, "shared weight");
  if (w.rows() != h.cols()) throw ShapeError("gcn: weight rows " + std::to_string(w.rows()) + " != features " + std::to_string(h.cols()));
  return gelu(adj * (h * w));
}

Mat unshared_gcn(const Mat& h, const GcnLayerParams& p, const Mat& adj) {
  check_adj(h, adj);
  if (!p.node_weights) throw ShapeError("gcn: missing per-node weights");
  const auto& ws = *p.node_weights;
  if (static_cast<Eigen::Index>(ws.size()) != h.rows()) throw ShapeError("gcn: need one weight per node");
  const Eigen::Index out = ws.front().rows();
  Mat transformed(h.rows(), out);
  for (Eigen::Index j = 0; j < h.rows(); ++j) {
    require_shape(ws[j], out, h.cols(), "gcn per-node weight");
    transformed.row(j) = (ws[j] * h.row(j).transpose()).transpose();
  }
  return gelu(adj * transformed);
}

Mat modulated_gcn(const Mat& h, const GcnLayerParams& p, const Mat& adj) {
  return gelu(modulated_aggregate(h, p, adj));
}

Mat regular_modulated_gcn(const Mat& h, const Mat& x_input, const GcnLayerParams& p, const Mat& adj) {
  const Mat agg = modulated_aggregate(h, p, adj);
  const Mat& wr = need(p.residual_weight, "residual weight");
  require_shape(x_input, h.rows(), wr.rows(), "gcn skip input");
  require_shape(wr, x_input.cols(), agg.cols(), "gcn residual weight");
  return gelu(agg + x_input * wr);
}

}  // namespace stg
