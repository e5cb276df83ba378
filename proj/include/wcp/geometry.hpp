#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace wcp {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Ordered set of 3D points in millimetres, build-chamber frame. Point order
// is an identity across pipeline stages.
struct PointCloud {
  std::vector<Vec3> points;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}

  int size() const { return static_cast<int>(points.size()); }
  bool empty() const { return points.empty(); }

  // Throws if any coordinate is non-finite or the cloud is empty.
  void validate() const;

  Vec3 centroid() const;
};

// Raw CAD representation: vertices in mm plus triangle faces.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  // Checks face indices are in range and faces are non-degenerate
  // (three distinct indices).
  void validate() const;

  double face_area(int f) const;
  double total_area() const;
  void bounding_box(Vec3& lo, Vec3& hi) const;
};

// Rigid transform locating a part in the build chamber.
struct Placement {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  // Throws InvalidPlacementError unless R is orthonormal with det +1
  // (within 1e-9).
  void validate() const;

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Placement inverse() const;
  Placement compose(const Placement& inner) const;  // this ∘ inner
};

// Axis-aligned build chamber extents. Frame convention: right-handed,
// z up (build direction), origin at the chamber min corner.
struct ChamberSpec {
  Vec3 min_corner = Vec3::Zero();
  Vec3 max_corner = Vec3::Ones();

  void validate() const;  // min < max on every axis
  Vec3 center() const { return 0.5 * (min_corner + max_corner); }
  Vec3 extent() const { return max_corner - min_corner; }
  bool contains(const Vec3& p) const;
  // Normalized radial distance from the chamber center: 0 at the center,
  // 1 at a corner.
  double radial_fraction(const Vec3& p) const;
};

// kd-tree nearest-neighbor index over a PointCloud. Query results are
// identical to exhaustive search; equal distances break toward the lowest
// point index. Read-only after construction, safe for concurrent queries.
class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& cloud);

  // Returns (point index, distance). Throws EmptyIndexError if built over
  // an empty cloud (construction already rejects that).
  std::pair<int, double> nearest(const Vec3& query) const;

  int size() const { return static_cast<int>(pts_.size()); }

 private:
  struct Node {
    int point = -1;   // index into pts_
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& idx, int lo, int hi, int depth);
  void search(int node, const Vec3& q, int& best, double& best_d2) const;

  std::vector<Vec3> pts_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Applies a rigid transform to every point; order preserved.
PointCloud apply_placement(const PointCloud& cloud, const Placement& placement);

std::pair<int, double> nearest_neighbor(const SpatialIndex& index, const Vec3& query);

// Samples exactly k points on the mesh surface, area-proportionally per
// face, then relaxes them toward blue-noise spacing (5 Lloyd-style
// iterations). Deterministic per seed.
PointCloud resample_uniform(const TriangleMesh& mesh, int k, uint64_t seed);

// Closest point on a triangle (a, b, c) to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Closest point on any face of the mesh.
Vec3 closest_point_on_mesh(const TriangleMesh& mesh, const Vec3& p);

// Axis-aligned box mesh (12 triangles) spanning [lo, hi], used for the
// synthetic bar/cube geometries.
TriangleMesh make_box_mesh(const Vec3& lo, const Vec3& hi);

}  // namespace wcp
