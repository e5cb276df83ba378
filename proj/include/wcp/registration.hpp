#pragma once

#include <utility>
#include <vector>

#include "wcp/geometry.hpp"

namespace wcp {

// Per-CAD-point nearest-scan correspondence with displacement vectors
// displacement[i] = scan[pairs[i].second] - cad[pairs[i].first].
struct Correspondence {
  std::vector<std::pair<int, int>> pairs;  // (cad index, scan index)
  std::vector<Vec3> displacements;
};

struct RigidFit {
  Placement placement;  // maps scan into the CAD frame
  double rms = 0.0;     // mm, over kept pairs of the final iteration
  int iterations = 0;
};

struct IcpConfig {
  int max_iter = 100;
  double tol = 1e-6;           // mm, RMS change convergence threshold
  double trim_fraction = 0.05;  // worst matches discarded per iteration
  bool pca_init = true;         // PCA-based coarse alignment before ICP
};

// Trimmed point-to-point ICP with SVD-based (reflection-corrected) rigid
// fits. Non-convergence is not an error; the best fit is returned with
// iterations == max_iter.
RigidFit icp_align(const PointCloud& scan, const PointCloud& cad, const IcpConfig& config = {});

// Nearest scan point per CAD point (clouds must already share a frame);
// many-to-one scan matches are allowed.
Correspondence correspond(const PointCloud& cad, const PointCloud& scan);

// Least-squares rigid transform mapping src onto dst (Kabsch, det +1).
Placement fit_rigid(const std::vector<Vec3>& src, const std::vector<Vec3>& dst);

// CSV export: cad_index, scan_index, dx, dy, dz.
void write_correspondence_csv(const Correspondence& corr, const std::string& path);

}  // namespace wcp
