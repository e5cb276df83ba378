#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "wcp/geometry.hpp"

namespace wcp {

using VoxelCoord = std::array<int, 3>;

// Dense occupancy grid over the mesh bounding box, padded by one voxel on
// all sides.
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<uint8_t> occupancy;

  size_t linear(int x, int y, int z) const {
    return (static_cast<size_t>(z) * dims[1] + y) * dims[0] + x;
  }
  bool in_bounds(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }
  bool occupied(int x, int y, int z) const {
    return in_bounds(x, y, z) && occupancy[linear(x, y, z)] != 0;
  }
  Vec3 voxel_center(const VoxelCoord& c) const {
    return origin + voxel_size * Vec3(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
  }
  size_t occupied_count() const;
};

// Isometric surface mesh as a graph. Vertices in mm; neighbor lists are
// symmetric; edges stored with i < j.
struct IsoGraph {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 2>> edges;
  std::vector<std::array<int, 3>> faces;
  std::vector<std::vector<int>> neighbors;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  void build_neighbors();
  bool connected() const;
};

struct IsometryStats {
  double mean = 0.0;
  double stddev = 0.0;
  double cv = 0.0;  // stddev / mean
};

// Marks a voxel occupied iff it intersects a triangle (conservative
// separating-axis overlap test). Throws ResolutionLimitError above 512^3.
VoxelGrid voxelize(const TriangleMesh& mesh, double voxel_size);

// Occupied voxels with at least one unoccupied cell in their 3x3x3
// neighborhood; the grid boundary counts as unoccupied.
std::vector<VoxelCoord> surface_voxels(const VoxelGrid& grid);

// Probabilistic wrap over the surface voxel set: face-adjacent neighbors
// are admitted outright, diagonal neighbors with acceptance weight
// 1/(4*sqrt(2)) per visit, revisiting until every surface voxel is
// admitted. Deterministic per seed. Throws DisconnectedSurfaceError if the
// surface set is not 26-connected.
IsoGraph diffusion_wrap(const std::vector<VoxelCoord>& surface, const Vec3& origin,
                        double voxel_size, uint64_t seed);

IsometryStats isometry_report(const IsoGraph& graph);

// Full remeshing pipeline: voxelize, extract the shell, wrap.
IsoGraph remesh(const TriangleMesh& mesh, double voxel_size, uint64_t seed);

// Default grid resolution: bounding-box diagonal / 200.
double default_voxel_size(const TriangleMesh& mesh);

// Voxel size that yields roughly `target_vertices` shell voxels, estimated
// from the mesh surface area.
double voxel_size_for_vertex_count(const TriangleMesh& mesh, int target_vertices);

}  // namespace wcp
