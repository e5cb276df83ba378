#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "wcp/errors.hpp"
#include "wcp/remesh.hpp"

using namespace wcp;

namespace {

// Brute-force conservative triangle-box overlap via dense point sampling of
// the triangle: marks every voxel any sample falls into. A sampled hit must
// also be a voxelizer hit (no false negatives on the voxelizer side).
std::set<std::array<int, 3>> sampled_occupancy(const TriangleMesh& mesh, const VoxelGrid& grid) {
  std::set<std::array<int, 3>> hit;
  const int n = 64;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n - i; ++j) {
        double u = static_cast<double>(i) / n;
        double v = static_cast<double>(j) / n;
        Vec3 p = a + u * (b - a) + v * (c - a);
        Vec3 local = (p - grid.origin) / grid.voxel_size;
        std::array<int, 3> cell{static_cast<int>(std::floor(local.x())),
                                static_cast<int>(std::floor(local.y())),
                                static_cast<int>(std::floor(local.z()))};
        hit.insert(cell);
      }
    }
  }
  return hit;
}

double max_vertex_gap_to_surface(const IsoGraph& graph, const std::vector<VoxelCoord>& surface,
                                 const VoxelGrid& grid) {
  double worst = 0.0;
  for (const Vec3& v : graph.vertices) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : surface) best = std::min(best, (grid.voxel_center(s) - v).norm());
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

TEST_CASE("voxelizing a tiny triangle occupies exactly its containing voxel") {
  TriangleMesh mesh;
  mesh.vertices = {{0.6, 0.6, 0.6}, {0.8, 0.6, 0.6}, {0.6, 0.8, 0.6}};
  mesh.faces = {{0, 1, 2}};
  VoxelGrid grid = voxelize(mesh, 1.0);
  CHECK(grid.occupied_count() == 1);
}

TEST_CASE("voxelizer never misses a sampled surface cell") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Ones());
  VoxelGrid grid = voxelize(cube, 0.5);
  for (const auto& cell : sampled_occupancy(cube, grid)) {
    CHECK(grid.occupied(cell[0], cell[1], cell[2]));
  }
}

TEST_CASE("translating the mesh by one voxel translates the occupancy pattern") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Ones());
  VoxelGrid a = voxelize(cube, 0.5);
  TriangleMesh moved = cube;
  for (Vec3& v : moved.vertices) v += Vec3(0.5, 0, 0);
  VoxelGrid b = voxelize(moved, 0.5);
  REQUIRE(a.dims == b.dims);
  CHECK(a.occupancy == b.occupancy);  // same pattern; the origin shifted instead
  CHECK((b.origin - a.origin - Vec3(0.5, 0, 0)).norm() < 1e-12);
}

TEST_CASE("resolution limit is enforced") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Constant(1000.0));
  CHECK_THROWS_AS(voxelize(cube, 0.5), ResolutionLimitError);
}

TEST_CASE("surface of a single voxel is itself") {
  TriangleMesh mesh;
  mesh.vertices = {{0.5, 0.5, 0.5}, {0.6, 0.5, 0.5}, {0.5, 0.6, 0.5}};
  mesh.faces = {{0, 1, 2}};
  VoxelGrid grid = voxelize(mesh, 1.0);
  CHECK(surface_voxels(grid).size() == 1);
}

TEST_CASE("solid blocks expose exactly their shells") {
  // Hand-built occupancy, no mesh involved.
  auto solid_block = [](int n) {
    VoxelGrid grid;
    grid.voxel_size = 1.0;
    grid.dims = {n + 2, n + 2, n + 2};  // one-voxel padding like the voxelizer
    grid.occupancy.assign(static_cast<size_t>((n + 2) * (n + 2) * (n + 2)), 0);
    for (int z = 1; z <= n; ++z) {
      for (int y = 1; y <= n; ++y) {
        for (int x = 1; x <= n; ++x) grid.occupancy[grid.linear(x, y, z)] = 1;
      }
    }
    return grid;
  };
  CHECK(surface_voxels(solid_block(5)).size() == 125 - 27);  // 98-voxel shell
  CHECK(surface_voxels(solid_block(3)).size() == 27 - 1);
}

TEST_CASE("diffusion wrap covers a block shell with a connected graph") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Constant(5.0));
  VoxelGrid grid = voxelize(cube, 1.0);
  std::vector<VoxelCoord> surface = surface_voxels(grid);
  IsoGraph graph = diffusion_wrap(surface, grid.origin, grid.voxel_size, 1);
  CHECK(graph.vertex_count() == static_cast<int>(surface.size()));
  CHECK(graph.connected());
  // Neighbor symmetry and every edge covered by at least one face.
  std::set<std::array<int, 2>> face_edges;
  for (const auto& f : graph.faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      face_edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  for (const auto& e : graph.edges) CHECK(face_edges.count(e) == 1);
  CHECK(max_vertex_gap_to_surface(graph, surface, grid) < 1e-9);
}

TEST_CASE("diffusion wrap rejects a disconnected surface set") {
  std::vector<VoxelCoord> surface{{0, 0, 0}, {10, 10, 10}};
  CHECK_THROWS_AS(diffusion_wrap(surface, Vec3::Zero(), 1.0, 0), DisconnectedSurfaceError);
}

TEST_CASE("diffusion wrap is deterministic per seed") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Constant(4.0));
  VoxelGrid grid = voxelize(cube, 0.5);
  std::vector<VoxelCoord> surface = surface_voxels(grid);
  IsoGraph a = diffusion_wrap(surface, grid.origin, grid.voxel_size, 9);
  IsoGraph b = diffusion_wrap(surface, grid.origin, grid.voxel_size, 9);
  CHECK(a.edges == b.edges);
  CHECK(a.faces == b.faces);
  IsoGraph c = diffusion_wrap(surface, grid.origin, grid.voxel_size, 10);
  CHECK(c.connected());
}

TEST_CASE("unit cube remesh is near-isometric") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Ones());
  IsoGraph graph = remesh(cube, 0.25, 2);
  CHECK(graph.connected());
  IsometryStats stats = isometry_report(graph);
  CHECK(stats.cv <= 0.3);
  CHECK(stats.cv == doctest::Approx(stats.stddev / stats.mean));
}

TEST_CASE("isometry statistics on hand-computed edge sets") {
  IsoGraph graph;
  graph.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 0, 3}};
  graph.edges = {{0, 1}, {1, 2}};  // lengths 1 and 3
  IsometryStats stats = isometry_report(graph);
  CHECK(stats.mean == doctest::Approx(2.0));
  CHECK(stats.stddev == doctest::Approx(1.0));
  CHECK(stats.cv == doctest::Approx(0.5));

  IsoGraph uniform;
  uniform.vertices = {{0, 0, 0}, {2, 0, 0}, {4, 0, 0}};
  uniform.edges = {{0, 1}, {1, 2}};
  IsometryStats u = isometry_report(uniform);
  CHECK(u.mean == doctest::Approx(2.0));
  CHECK(u.stddev == 0.0);
  CHECK(u.cv == 0.0);
}

TEST_CASE("voxel size heuristics scale with the mesh") {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Ones());
  CHECK(default_voxel_size(cube) == doctest::Approx(std::sqrt(3.0) / 200.0));
  double v = voxel_size_for_vertex_count(cube, 600);
  CHECK(v == doctest::Approx(std::sqrt(6.0 / 600.0)));
}
