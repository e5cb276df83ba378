#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wcp/geometry.hpp"

namespace wcp {

// ASCII OBJ, v/f records only.
TriangleMesh read_obj(const std::string& path);
void write_obj(const TriangleMesh& mesh, const std::string& path);

// ASCII PLY point cloud with x,y,z properties and an optional per-vertex
// `deviation` scalar (mm). Coordinates are written with 9 significant digits.
struct PlyCloud {
  PointCloud cloud;
  std::optional<std::vector<double>> deviation;
};

PlyCloud read_ply_cloud(const std::string& path);
void write_ply_cloud(const PointCloud& cloud, const std::string& path,
                     const std::vector<double>* deviation = nullptr,
                     const std::vector<std::string>& header_comments = {});

// ASCII PLY mesh (vertices + faces), used for IsoGraph serialization.
struct PlyMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

PlyMesh read_ply_mesh(const std::string& path);
void write_ply_mesh(const std::vector<Vec3>& vertices,
                    const std::vector<std::array<int, 3>>& faces, const std::string& path);

// Sidecar edge list: one `i j` pair per line.
std::vector<std::array<int, 2>> read_edge_list(const std::string& path);
void write_edge_list(const std::vector<std::array<int, 2>>& edges, const std::string& path);

}  // namespace wcp
