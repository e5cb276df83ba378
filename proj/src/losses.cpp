#include "wcp/losses.hpp"

#include "wcp/errors.hpp"

namespace wcp {

double l2_loss(const PointCloud& pred, const PointCloud& target) {
  if (pred.size() != target.size()) {
    throw AlignmentError("l2_loss requires equal, index-aligned clouds");
  }
  if (pred.empty()) throw EmptyCloudError("l2_loss over empty clouds");
  double sum = 0.0;
  for (int i = 0; i < pred.size(); ++i) {
    sum += (pred.points[i] - target.points[i]).squaredNorm();
  }
  return sum / static_cast<double>(pred.size());
}

double chamfer_loss(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw EmptyCloudError("chamfer_loss over empty cloud");
  SpatialIndex ib(b);
  SpatialIndex ia(a);
  double total = 0.0;
  for (const Vec3& p : a.points) total += ib.nearest(p).second;
  for (const Vec3& q : b.points) total += ia.nearest(q).second;
  return total;
}

LossBreakdown deformation_loss(const PointCloud& pred, const PointCloud& target, double w_l2,
                               double w_chamfer) {
  LossBreakdown out;
  out.l2 = w_l2 * l2_loss(pred, target);
  out.chamfer = w_chamfer * chamfer_loss(pred, target);
  out.total = out.l2 + out.chamfer;
  return out;
}

LossNodes deformation_loss_node(Tape& tape, int pred, const PointCloud& target, double w_l2,
                                double w_chamfer) {
  Matrix t = cloud_to_matrix(target);
  int l2 = tape.l2_loss(pred, t);
  int ch = tape.chamfer_loss(pred, t);
  if (w_l2 != 1.0) l2 = tape.scale(l2, w_l2);
  if (w_chamfer != 1.0) ch = tape.scale(ch, w_chamfer);
  LossNodes nodes;
  nodes.total = tape.add_scalars(l2, ch);
  nodes.values.l2 = tape.scalar(l2);
  nodes.values.chamfer = tape.scalar(ch);
  nodes.values.total = tape.scalar(nodes.total);
  return nodes;
}

Matrix cloud_to_matrix(const PointCloud& cloud) {
  Matrix m(cloud.size(), 3);
  for (int i = 0; i < cloud.size(); ++i) m.row(i) = cloud.points[i].transpose();
  return m;
}

PointCloud matrix_to_cloud(const Matrix& m) {
  if (m.cols() != 3) throw ShapeError("expected 3-column matrix");
  PointCloud cloud;
  cloud.points.reserve(m.rows());
  for (int i = 0; i < m.rows(); ++i) cloud.points.emplace_back(m.row(i).transpose());
  return cloud;
}

}  // namespace wcp
