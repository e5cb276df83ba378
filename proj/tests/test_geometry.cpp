#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "wcp/errors.hpp"
#include "wcp/geometry.hpp"
#include "wcp/rng.hpp"

using namespace wcp;

namespace {

Mat3 rot_z(double angle) {
  Mat3 r;
  r << std::cos(angle), -std::sin(angle), 0, std::sin(angle), std::cos(angle), 0, 0, 0, 1;
  return r;
}

Mat3 random_rotation(Rng& rng) {
  // QR of a random matrix, sign-fixed to det +1.
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Mat3> qr(m);
  Mat3 q = qr.householderQ();
  if (q.determinant() < 0) q.col(2) = -q.col(2);
  return q;
}

PointCloud random_cloud(Rng& rng, int n, double extent) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(rng.uniform(0, extent), rng.uniform(0, extent), rng.uniform(0, extent));
  }
  return PointCloud(std::move(pts));
}

// Exhaustive nearest-neighbor scan, ties to the lowest index.
std::pair<int, double> brute_nearest(const PointCloud& cloud, const Vec3& q) {
  int best = 0;
  double best_d2 = (cloud.points[0] - q).squaredNorm();
  for (int i = 1; i < cloud.size(); ++i) {
    double d2 = (cloud.points[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best = i;
      best_d2 = d2;
    }
  }
  return {best, std::sqrt(best_d2)};
}

}  // namespace

TEST_CASE("placement identity leaves points unchanged") {
  Placement p;
  PointCloud cloud({{1, 2, 3}, {-4, 0, 2.5}});
  PointCloud out = apply_placement(cloud, p);
  for (int i = 0; i < cloud.size(); ++i) CHECK((out.points[i] - cloud.points[i]).norm() == 0.0);
}

TEST_CASE("90 degree z rotation maps x axis onto y axis") {
  Placement p;
  p.rotation = rot_z(M_PI / 2);
  Vec3 out = p.apply(Vec3(1, 0, 0));
  CHECK(out.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.y() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("placement composed with its inverse is the identity") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Placement p;
    p.rotation = random_rotation(rng);
    p.translation = Vec3(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50));
    p.validate();
    PointCloud cloud = random_cloud(rng, 40, 100.0);
    PointCloud round = apply_placement(apply_placement(cloud, p), p.inverse());
    for (int i = 0; i < cloud.size(); ++i) {
      CHECK((round.points[i] - cloud.points[i]).norm() < 1e-11);
    }
  }
}

TEST_CASE("placement validation rejects non-orthonormal rotations") {
  Placement p;
  p.rotation(0, 0) = 2.0;
  CHECK_THROWS_AS(p.validate(), InvalidPlacementError);
  Placement refl;
  refl.rotation(2, 2) = -1.0;  // det -1
  CHECK_THROWS_AS(refl.validate(), InvalidPlacementError);
}

TEST_CASE("compose applies the inner placement first") {
  Placement outer;
  outer.translation = Vec3(1, 0, 0);
  Placement inner;
  inner.rotation = rot_z(M_PI / 2);
  Vec3 out = outer.compose(inner).apply(Vec3(1, 0, 0));
  CHECK((out - Vec3(1, 1, 0)).norm() < 1e-12);
}

TEST_CASE("chamber center, extent and containment") {
  ChamberSpec chamber{Vec3(0, 0, 0), Vec3(400, 300, 120)};
  chamber.validate();
  CHECK((chamber.center() - Vec3(200, 150, 60)).norm() == 0.0);
  CHECK(chamber.contains(Vec3(1, 1, 1)));
  CHECK(!chamber.contains(Vec3(-1, 1, 1)));
  CHECK(chamber.radial_fraction(chamber.center()) == 0.0);
  CHECK(chamber.radial_fraction(chamber.min_corner) == doctest::Approx(1.0));
  ChamberSpec bad{Vec3::Ones(), Vec3::Zero()};
  CHECK_THROWS_AS(bad.validate(), InvalidArgumentError);
}

TEST_CASE("spatial index finds exact matches at distance zero") {
  PointCloud cloud({{0, 0, 0}, {2, 0, 0}, {0, 3, 0}});
  SpatialIndex index(cloud);
  auto [idx, dist] = index.nearest(Vec3(0, 3, 0));
  CHECK(idx == 2);
  CHECK(dist == 0.0);
}

TEST_CASE("spatial index two point hand case") {
  PointCloud cloud({{0, 0, 0}, {2, 0, 0}});
  SpatialIndex index(cloud);
  auto [idx, dist] = index.nearest(Vec3(0.9, 0, 0));
  CHECK(idx == 0);
  CHECK(dist == doctest::Approx(0.9));
}

TEST_CASE("spatial index matches exhaustive search on random data") {
  Rng rng(3);
  PointCloud cloud = random_cloud(rng, 500, 10.0);
  SpatialIndex index(cloud);
  for (int q = 0; q < 100; ++q) {
    Vec3 query(rng.uniform(-1, 11), rng.uniform(-1, 11), rng.uniform(-1, 11));
    auto got = index.nearest(query);
    auto want = brute_nearest(cloud, query);
    CHECK(got.first == want.first);
    CHECK(got.second == doctest::Approx(want.second).epsilon(1e-12));
  }
}

TEST_CASE("spatial index breaks distance ties toward the lowest index") {
  PointCloud cloud({{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}});
  SpatialIndex index(cloud);
  CHECK(index.nearest(Vec3::Zero()).first == 0);
}

TEST_CASE("empty cloud is rejected by the index") {
  PointCloud empty;
  CHECK_THROWS_AS(SpatialIndex{empty}, EmptyIndexError);
}

TEST_CASE("resample keeps points on the source surface") {
  // Unit square in the z = 0 plane.
  TriangleMesh square;
  square.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  square.faces = {{0, 1, 2}, {0, 2, 3}};
  PointCloud pts = resample_uniform(square, 4, 17);
  CHECK(pts.size() == 4);
  for (const Vec3& p : pts.points) {
    CHECK(p.z() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.x() >= -1e-12);
    CHECK(p.x() <= 1 + 1e-12);
    CHECK(p.y() >= -1e-12);
    CHECK(p.y() <= 1 + 1e-12);
  }
}

TEST_CASE("resample is deterministic per seed") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Ones());
  PointCloud a = resample_uniform(cube, 128, 5);
  PointCloud b = resample_uniform(cube, 128, 5);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) CHECK((a.points[i] - b.points[i]).norm() == 0.0);
}

TEST_CASE("resample distributes points area proportionally across cube faces") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Ones());
  const int k = 600;
  PointCloud pts = resample_uniform(cube, k, 29);
  REQUIRE(pts.size() == k);
  // Classify each sample by the face plane it landed on.
  std::map<int, int> face_counts;
  for (const Vec3& p : pts.points) {
    int face = -1;
    for (int axis = 0; axis < 3 && face < 0; ++axis) {
      if (std::abs(p[axis]) < 1e-9) face = 2 * axis;
      if (std::abs(p[axis] - 1.0) < 1e-9) face = 2 * axis + 1;
    }
    REQUIRE(face >= 0);
    face_counts[face]++;
  }
  for (const auto& [face, count] : face_counts) {
    CHECK(count >= k / 6 * 0.8);
    CHECK(count <= k / 6 * 1.2);
  }
  CHECK(face_counts.size() == 6);
}

TEST_CASE("closest point on triangle covers the interior, edges and corners") {
  Vec3 a(0, 0, 0), b(2, 0, 0), c(0, 2, 0);
  CHECK((closest_point_on_triangle(Vec3(0.5, 0.5, 3), a, b, c) - Vec3(0.5, 0.5, 0)).norm() <
        1e-12);
  CHECK((closest_point_on_triangle(Vec3(-1, -1, 0), a, b, c) - a).norm() < 1e-12);
  CHECK((closest_point_on_triangle(Vec3(1, -5, 0), a, b, c) - Vec3(1, 0, 0)).norm() < 1e-12);
  CHECK((closest_point_on_triangle(Vec3(3, 3, 0), a, b, c) - Vec3(1, 1, 0)).norm() < 1e-12);
}

TEST_CASE("box mesh has 12 valid faces and the analytic surface area") {
  TriangleMesh box = make_box_mesh(Vec3(0, 0, 0), Vec3(100, 10, 5));
  box.validate();
  CHECK(box.faces.size() == 12);
  double want = 2.0 * (100 * 10 + 100 * 5 + 10 * 5);
  CHECK(box.total_area() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("cloud validation rejects non-finite coordinates") {
  PointCloud cloud({{0, 0, 0}});
  cloud.points[0].x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cloud.validate(), InvalidArgumentError);
  PointCloud empty;
  CHECK_THROWS_AS(empty.validate(), EmptyCloudError);
}
