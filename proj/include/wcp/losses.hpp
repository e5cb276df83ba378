#pragma once

#include "wcp/autodiff.hpp"
#include "wcp/geometry.hpp"

namespace wcp {

struct LossBreakdown {
  double l2 = 0.0;       // mm^2
  double chamfer = 0.0;  // mm
  double total = 0.0;    // l2 + chamfer
};

// (1/n) sum ||pred_i - target_i||^2, index-aligned.
double l2_loss(const PointCloud& pred, const PointCloud& target);

// Symmetric sum of unsquared nearest-neighbor distances (counts may
// differ). Index-accelerated; matches the O(n^2) scan exactly.
double chamfer_loss(const PointCloud& a, const PointCloud& b);

// total = w_l2 * l2 + w_chamfer * chamfer. Defaults weight the terms 1:1.
LossBreakdown deformation_loss(const PointCloud& pred, const PointCloud& target,
                               double w_l2 = 1.0, double w_chamfer = 1.0);

// Tape-recorded deformation loss against a fixed target; returns the
// scalar total node plus the component values.
struct LossNodes {
  int total = -1;
  LossBreakdown values;
};
LossNodes deformation_loss_node(Tape& tape, int pred, const PointCloud& target,
                                double w_l2 = 1.0, double w_chamfer = 1.0);

Matrix cloud_to_matrix(const PointCloud& cloud);
PointCloud matrix_to_cloud(const Matrix& m);

}  // namespace wcp
