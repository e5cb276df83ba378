#include "wcp/registration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "wcp/errors.hpp"

namespace wcp {

namespace {

Vec3 centroid_of(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

// Covariance eigenbasis with eigenvectors sorted by descending eigenvalue.
// Returns false for degenerate (coplanar or thinner) clouds.
bool principal_axes(const std::vector<Vec3>& pts, Mat3& basis, Vec3& center) {
  center = centroid_of(pts);
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : pts) {
    Vec3 d = p - center;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 vals = eig.eigenvalues();  // ascending
  if (vals[2] <= 0.0 || vals[0] < 1e-12 * vals[2]) return false;
  basis.col(0) = eig.eigenvectors().col(2);
  basis.col(1) = eig.eigenvectors().col(1);
  basis.col(2) = eig.eigenvectors().col(0);
  if (basis.determinant() < 0.0) basis.col(2) = -basis.col(2);
  return true;
}

double nn_rms(const std::vector<Vec3>& moved, const SpatialIndex& cad_index) {
  double sum = 0.0;
  for (const Vec3& p : moved) {
    double d = cad_index.nearest(p).second;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(moved.size()));
}

}  // namespace

Placement fit_rigid(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size() || src.size() < 3) {
    throw DegenerateGeometryError("rigid fit needs >= 3 matched pairs");
  }
  Vec3 cs = centroid_of(src), cd = centroid_of(dst);
  Mat3 h = Mat3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    h += (src[i] - cs) * (dst[i] - cd).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU(), v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  Placement fit;
  fit.rotation = v * d * u.transpose();
  fit.translation = cd - fit.rotation * cs;
  return fit;
}

RigidFit icp_align(const PointCloud& scan, const PointCloud& cad, const IcpConfig& config) {
  if (scan.size() < 4 || cad.size() < 4) {
    throw DegenerateGeometryError("ICP needs at least 4 points per cloud");
  }
  Mat3 scan_axes, cad_axes;
  Vec3 scan_center, cad_center;
  if (!principal_axes(scan.points, scan_axes, scan_center) ||
      !principal_axes(cad.points, cad_axes, cad_center)) {
    throw DegenerateGeometryError("coplanar or degenerate cloud; ICP needs full-rank geometry");
  }

  SpatialIndex cad_index(cad);

  Placement current;  // scan -> cad
  if (config.pca_init) {
    // Principal axes carry a sign ambiguity; try the four proper
    // combinations and keep the one with the lowest nearest-neighbor RMS.
    double best_rms = std::numeric_limits<double>::infinity();
    const int signs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    for (const auto& s : signs) {
      Mat3 flipped = cad_axes;
      flipped.col(0) *= s[0];
      flipped.col(1) *= s[1];
      flipped.col(2) *= s[0] * s[1];  // keeps det = +1
      Placement cand;
      cand.rotation = flipped * scan_axes.transpose();
      cand.translation = cad_center - cand.rotation * scan_center;
      std::vector<Vec3> moved;
      moved.reserve(scan.points.size());
      for (const Vec3& p : scan.points) moved.push_back(cand.apply(p));
      double rms = nn_rms(moved, cad_index);
      if (rms < best_rms) {
        best_rms = rms;
        current = cand;
      }
    }
  }

  RigidFit fit;
  fit.placement = current;
  double prev_rms = std::numeric_limits<double>::infinity();

  const int n = scan.size();
  const int keep = std::max(3, static_cast<int>(std::lround(n * (1.0 - config.trim_fraction))));

  std::vector<Vec3> moved(n);
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    for (int i = 0; i < n; ++i) moved[i] = current.apply(scan.points[i]);

    struct Match {
      int scan_idx;
      Vec3 target;
      double dist;
    };
    std::vector<Match> matches(n);
    for (int i = 0; i < n; ++i) {
      auto [j, d] = cad_index.nearest(moved[i]);
      matches[i] = {i, cad.points[j], d};
    }
    if (keep < n) {
      std::stable_sort(matches.begin(), matches.end(),
                       [](const Match& a, const Match& b) { return a.dist < b.dist; });
      matches.resize(keep);
    }

    std::vector<Vec3> src, dst;
    src.reserve(matches.size());
    dst.reserve(matches.size());
    double sum2 = 0.0;
    for (const Match& m : matches) {
      src.push_back(moved[m.scan_idx]);
      dst.push_back(m.target);
      sum2 += m.dist * m.dist;
    }
    double rms = std::sqrt(sum2 / static_cast<double>(matches.size()));

    Placement delta = fit_rigid(src, dst);
    current = delta.compose(current);
    fit.placement = current;
    fit.rms = rms;
    fit.iterations = iter;

    if (std::abs(prev_rms - rms) < config.tol) break;
    prev_rms = rms;
  }

  // Final residual under the converged transform.
  for (int i = 0; i < n; ++i) moved[i] = current.apply(scan.points[i]);
  std::vector<double> dists(n);
  for (int i = 0; i < n; ++i) dists[i] = cad_index.nearest(moved[i]).second;
  if (keep < n) std::nth_element(dists.begin(), dists.begin() + keep, dists.end());
  double sum2 = 0.0;
  for (int i = 0; i < keep; ++i) sum2 += dists[i] * dists[i];
  fit.rms = std::sqrt(sum2 / static_cast<double>(keep));
  return fit;
}

Correspondence correspond(const PointCloud& cad, const PointCloud& scan) {
  if (scan.empty()) throw EmptyCloudError("scan cloud is empty");
  if (cad.empty()) throw EmptyCloudError("cad cloud is empty");
  SpatialIndex scan_index(scan);
  Correspondence corr;
  corr.pairs.reserve(cad.size());
  corr.displacements.reserve(cad.size());
  for (int i = 0; i < cad.size(); ++i) {
    int j = scan_index.nearest(cad.points[i]).first;
    corr.pairs.emplace_back(i, j);
    corr.displacements.push_back(scan.points[j] - cad.points[i]);
  }
  return corr;
}

void write_correspondence_csv(const Correspondence& corr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "cad_index,scan_index,dx,dy,dz\n";
  for (size_t i = 0; i < corr.pairs.size(); ++i) {
    const Vec3& d = corr.displacements[i];
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g\n", corr.pairs[i].first,
                  corr.pairs[i].second, d.x(), d.y(), d.z());
    out << buf;
  }
}

}  // namespace wcp
