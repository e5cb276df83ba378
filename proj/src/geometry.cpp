#include "wcp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wcp/errors.hpp"
#include "wcp/rng.hpp"

namespace wcp {

void PointCloud::validate() const {
  if (points.empty()) throw EmptyCloudError("point cloud is empty");
  for (const Vec3& p : points) {
    if (!p.allFinite()) throw InvalidArgumentError("point cloud contains non-finite coordinate");
  }
}

Vec3 PointCloud::centroid() const {
  if (points.empty()) throw EmptyCloudError("centroid of empty cloud");
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : points) c += p;
  return c / static_cast<double>(points.size());
}

void TriangleMesh::validate() const {
  const int n = static_cast<int>(vertices.size());
  for (const auto& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= n) throw DegenerateMeshError("face index out of range");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw DegenerateMeshError("degenerate face with repeated vertex index");
    }
  }
}

double TriangleMesh::face_area(int f) const {
  const auto& t = faces[f];
  Vec3 e1 = vertices[t[1]] - vertices[t[0]];
  Vec3 e2 = vertices[t[2]] - vertices[t[0]];
  return 0.5 * e1.cross(e2).norm();
}

double TriangleMesh::total_area() const {
  double a = 0.0;
  for (int f = 0; f < static_cast<int>(faces.size()); ++f) a += face_area(f);
  return a;
}

void TriangleMesh::bounding_box(Vec3& lo, Vec3& hi) const {
  if (vertices.empty()) throw DegenerateMeshError("bounding box of empty mesh");
  lo = hi = vertices[0];
  for (const Vec3& v : vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
}

void Placement::validate() const {
  Mat3 rtr = rotation.transpose() * rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidPlacementError("rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw InvalidPlacementError("rotation determinant is not +1");
  }
  if (!translation.allFinite()) throw InvalidPlacementError("non-finite translation");
}

Placement Placement::inverse() const {
  Placement inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(rotation.transpose() * translation);
  return inv;
}

Placement Placement::compose(const Placement& inner) const {
  Placement out;
  out.rotation = rotation * inner.rotation;
  out.translation = rotation * inner.translation + translation;
  return out;
}

void ChamberSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (!(min_corner[a] < max_corner[a])) {
      throw InvalidArgumentError("chamber min must be strictly below max on every axis");
    }
  }
}

bool ChamberSpec::contains(const Vec3& p) const {
  return (p.array() >= min_corner.array()).all() && (p.array() <= max_corner.array()).all();
}

double ChamberSpec::radial_fraction(const Vec3& p) const {
  double half_diag = 0.5 * extent().norm();
  return (p - center()).norm() / half_diag;
}

SpatialIndex::SpatialIndex(const PointCloud& cloud) : pts_(cloud.points) {
  if (pts_.empty()) throw EmptyIndexError("cannot build spatial index over an empty cloud");
  std::vector<int> idx(pts_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(pts_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int SpatialIndex::build(std::vector<int>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  int axis = depth % 3;
  int mid = (lo + hi) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                   [&](int a, int b) {
                     if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
                     return a < b;
                   });
  Node node;
  node.point = idx[mid];
  node.axis = axis;
  int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  int left = build(idx, lo, mid, depth + 1);
  int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

void SpatialIndex::search(int node, const Vec3& q, int& best, double& best_d2) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3& p = pts_[n.point];
  double d2 = (p - q).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && n.point < best)) {
    best_d2 = d2;
    best = n.point;
  }
  double delta = q[n.axis] - p[n.axis];
  int near = delta < 0.0 ? n.left : n.right;
  int far = delta < 0.0 ? n.right : n.left;
  search(near, q, best, best_d2);
  // The far side can still hold an equal-distance lower index, so descend
  // on <= rather than <.
  if (delta * delta <= best_d2) search(far, q, best, best_d2);
}

std::pair<int, double> SpatialIndex::nearest(const Vec3& query) const {
  int best = static_cast<int>(pts_.size());
  double best_d2 = std::numeric_limits<double>::infinity();
  search(root_, query, best, best_d2);
  return {best, std::sqrt(best_d2)};
}

PointCloud apply_placement(const PointCloud& cloud, const Placement& placement) {
  placement.validate();
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) out.points.push_back(placement.apply(p));
  return out;
}

std::pair<int, double> nearest_neighbor(const SpatialIndex& index, const Vec3& query) {
  return index.nearest(query);
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return b + w * (c - b);
  }

  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return a + ab * v + ac * w;
}

Vec3 closest_point_on_mesh(const TriangleMesh& mesh, const Vec3& p) {
  double best_d2 = std::numeric_limits<double>::infinity();
  Vec3 best = p;
  for (const auto& f : mesh.faces) {
    Vec3 q = closest_point_on_triangle(p, mesh.vertices[f[0]], mesh.vertices[f[1]],
                                       mesh.vertices[f[2]]);
    double d2 = (q - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = q;
    }
  }
  return best;
}

namespace {

// Area-proportional face pick followed by uniform barycentric sampling.
Vec3 sample_on_mesh(const TriangleMesh& mesh, const std::vector<double>& cum_area, Rng& rng) {
  double u = rng.uniform() * cum_area.back();
  auto it = std::upper_bound(cum_area.begin(), cum_area.end(), u);
  int f = static_cast<int>(std::min<size_t>(it - cum_area.begin(), cum_area.size() - 1));
  const auto& t = mesh.faces[f];
  double r1 = std::sqrt(rng.uniform());
  double r2 = rng.uniform();
  return (1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
         r1 * r2 * mesh.vertices[t[2]];
}

}  // namespace

PointCloud resample_uniform(const TriangleMesh& mesh, int k, uint64_t seed) {
  if (k < 1) throw InvalidArgumentError("resample count must be >= 1");
  if (mesh.faces.empty()) throw DegenerateMeshError("cannot resample an empty mesh");
  mesh.validate();

  std::vector<double> cum_area(mesh.faces.size());
  double acc = 0.0;
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    acc += mesh.face_area(static_cast<int>(f));
    cum_area[f] = acc;
  }
  if (acc <= 0.0) throw DegenerateMeshError("mesh has zero surface area");

  Rng rng(seed);
  PointCloud samples;
  samples.points.reserve(k);
  for (int i = 0; i < k; ++i) samples.points.push_back(sample_on_mesh(mesh, cum_area, rng));

  // Lloyd-style relaxation: assign a dense candidate pool to its nearest
  // sample, move each sample to its cluster centroid, project back onto
  // the surface. 5 iterations nudges the set toward blue-noise spacing.
  const int pool_size = std::max(20 * k, 1000);
  std::vector<Vec3> pool;
  pool.reserve(pool_size);
  for (int i = 0; i < pool_size; ++i) pool.push_back(sample_on_mesh(mesh, cum_area, rng));

  for (int iter = 0; iter < 5; ++iter) {
    SpatialIndex index(samples);
    std::vector<Vec3> sums(samples.points.size(), Vec3::Zero());
    std::vector<int> counts(samples.points.size(), 0);
    for (const Vec3& c : pool) {
      int owner = index.nearest(c).first;
      sums[owner] += c;
      counts[owner] += 1;
    }
    for (size_t i = 0; i < samples.points.size(); ++i) {
      if (counts[i] == 0) continue;  // keep starved samples in place
      Vec3 centroid = sums[i] / static_cast<double>(counts[i]);
      samples.points[i] = closest_point_on_mesh(mesh, centroid);
    }
  }
  return samples;
}

TriangleMesh make_box_mesh(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  m.vertices = {
      {lo.x(), lo.y(), lo.z()}, {hi.x(), lo.y(), lo.z()}, {hi.x(), hi.y(), lo.z()},
      {lo.x(), hi.y(), lo.z()}, {lo.x(), lo.y(), hi.z()}, {hi.x(), lo.y(), hi.z()},
      {hi.x(), hi.y(), hi.z()}, {lo.x(), hi.y(), hi.z()},
  };
  m.faces = {
      {0, 2, 1}, {0, 3, 2},  // bottom (z = lo)
      {4, 5, 6}, {4, 6, 7},  // top (z = hi)
      {0, 1, 5}, {0, 5, 4},  // front (y = lo)
      {2, 3, 7}, {2, 7, 6},  // back (y = hi)
      {0, 4, 7}, {0, 7, 3},  // left (x = lo)
      {1, 2, 6}, {1, 6, 5},  // right (x = hi)
  };
  return m;
}

}  // namespace wcp
