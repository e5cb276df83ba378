#include "wcp/remesh.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>
#include <unordered_set>

#include "wcp/errors.hpp"
#include "wcp/rng.hpp"

namespace wcp {

namespace {

// Acceptance probability for diagonal (non-face-adjacent) expansion steps.
const double kDiagonalWeight = 1.0 / (4.0 * std::sqrt(2.0));

uint64_t pack(const VoxelCoord& c) {
  return (static_cast<uint64_t>(c[0]) << 42) | (static_cast<uint64_t>(c[1]) << 21) |
         static_cast<uint64_t>(c[2]);
}

// Akenine-Moller triangle/AABB separating axis test.
bool tri_box_overlap(const Vec3& center, const Vec3& half, const Vec3& a, const Vec3& b,
                     const Vec3& c) {
  Vec3 v0 = a - center, v1 = b - center, v2 = c - center;
  Vec3 e0 = v1 - v0, e1 = v2 - v1, e2 = v0 - v2;

  auto axis_test = [&](const Vec3& axis) {
    double p0 = v0.dot(axis), p1 = v1.dot(axis), p2 = v2.dot(axis);
    double lo = std::min({p0, p1, p2}), hi = std::max({p0, p1, p2});
    double r = half.x() * std::abs(axis.x()) + half.y() * std::abs(axis.y()) +
               half.z() * std::abs(axis.z());
    return lo <= r && hi >= -r;
  };

  // 9 cross-product axes
  const Vec3 edges[3] = {e0, e1, e2};
  for (const Vec3& e : edges) {
    if (!axis_test(Vec3(0, -e.z(), e.y()))) return false;
    if (!axis_test(Vec3(e.z(), 0, -e.x()))) return false;
    if (!axis_test(Vec3(-e.y(), e.x(), 0))) return false;
  }
  // 3 box face normals
  for (int i = 0; i < 3; ++i) {
    double lo = std::min({v0[i], v1[i], v2[i]}), hi = std::max({v0[i], v1[i], v2[i]});
    if (lo > half[i] || hi < -half[i]) return false;
  }
  // triangle plane
  Vec3 n = e0.cross(e1);
  double d = n.dot(v0);
  double r = half.x() * std::abs(n.x()) + half.y() * std::abs(n.y()) +
             half.z() * std::abs(n.z());
  return std::abs(d) <= r;
}

}  // namespace

size_t VoxelGrid::occupied_count() const {
  size_t n = 0;
  for (uint8_t v : occupancy) n += v != 0;
  return n;
}

VoxelGrid voxelize(const TriangleMesh& mesh, double voxel_size) {
  if (voxel_size <= 0.0) throw InvalidArgumentError("voxel size must be positive");
  mesh.validate();
  Vec3 lo, hi;
  mesh.bounding_box(lo, hi);

  VoxelGrid grid;
  grid.voxel_size = voxel_size;
  grid.origin = lo - Vec3::Constant(voxel_size);  // 1-voxel padding
  for (int a = 0; a < 3; ++a) {
    grid.dims[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / voxel_size)) + 2;
  }
  size_t cells = static_cast<size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  if (cells > 512ull * 512ull * 512ull) {
    throw ResolutionLimitError("voxel grid exceeds 512^3 cells; increase voxel size");
  }
  grid.occupancy.assign(cells, 0);

  // Slightly inflate the box so triangles lying exactly on a voxel boundary
  // are not lost to floating-point rounding in the separating-axis test.
  const Vec3 half = Vec3::Constant(0.5 * voxel_size * (1.0 + 1e-9));
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    Vec3 tlo = a.cwiseMin(b).cwiseMin(c), thi = a.cwiseMax(b).cwiseMax(c);
    int ilo[3], ihi[3];
    for (int ax = 0; ax < 3; ++ax) {
      ilo[ax] = std::max(0, static_cast<int>(std::floor((tlo[ax] - grid.origin[ax]) / voxel_size)));
      ihi[ax] = std::min(grid.dims[ax] - 1,
                         static_cast<int>(std::floor((thi[ax] - grid.origin[ax]) / voxel_size)));
    }
    for (int z = ilo[2]; z <= ihi[2]; ++z) {
      for (int y = ilo[1]; y <= ihi[1]; ++y) {
        for (int x = ilo[0]; x <= ihi[0]; ++x) {
          size_t lin = grid.linear(x, y, z);
          if (grid.occupancy[lin]) continue;
          Vec3 center = grid.voxel_center({x, y, z});
          if (tri_box_overlap(center, half, a, b, c)) grid.occupancy[lin] = 1;
        }
      }
    }
  }
  if (grid.occupied_count() == 0) throw DegenerateMeshError("voxelization produced no occupied voxels");
  return grid;
}

std::vector<VoxelCoord> surface_voxels(const VoxelGrid& grid) {
  if (grid.occupied_count() == 0) throw InvalidArgumentError("grid has no occupied voxels");
  std::vector<VoxelCoord> out;
  for (int z = 0; z < grid.dims[2]; ++z) {
    for (int y = 0; y < grid.dims[1]; ++y) {
      for (int x = 0; x < grid.dims[0]; ++x) {
        if (!grid.occupied(x, y, z)) continue;
        bool exposed = false;
        for (int dz = -1; dz <= 1 && !exposed; ++dz) {
          for (int dy = -1; dy <= 1 && !exposed; ++dy) {
            for (int dx = -1; dx <= 1 && !exposed; ++dx) {
              if (dx == 0 && dy == 0 && dz == 0) continue;
              if (!grid.occupied(x + dx, y + dy, z + dz)) exposed = true;
            }
          }
        }
        if (exposed) out.push_back({x, y, z});
      }
    }
  }
  return out;
}

void IsoGraph::build_neighbors() {
  neighbors.assign(vertices.size(), {});
  for (const auto& e : edges) {
    neighbors[e[0]].push_back(e[1]);
    neighbors[e[1]].push_back(e[0]);
  }
  for (auto& n : neighbors) std::sort(n.begin(), n.end());
}

bool IsoGraph::connected() const {
  if (vertices.empty()) return true;
  std::vector<uint8_t> seen(vertices.size(), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  size_t count = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int u : neighbors[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        queue.push_back(u);
      }
    }
  }
  return count == vertices.size();
}

IsoGraph diffusion_wrap(const std::vector<VoxelCoord>& surface, const Vec3& origin,
                        double voxel_size, uint64_t seed) {
  if (surface.empty()) throw InvalidArgumentError("surface voxel set is empty");

  // Canonical ordering of the input set, independent of caller order.
  std::vector<VoxelCoord> cells = surface;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  const int n = static_cast<int>(cells.size());

  std::unordered_map<uint64_t, int> cell_index;
  cell_index.reserve(cells.size() * 2);
  for (int i = 0; i < n; ++i) cell_index.emplace(pack(cells[i]), i);

  // 26-neighborhood offsets, face-adjacent first, fixed order.
  std::vector<std::array<int, 4>> offsets;  // dx, dy, dz, face?
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        int face = (std::abs(dx) + std::abs(dy) + std::abs(dz) == 1) ? 1 : 0;
        offsets.push_back({dx, dy, dz, face});
      }
  std::stable_sort(offsets.begin(), offsets.end(),
                   [](const auto& a, const auto& b) { return a[3] > b[3]; });

  auto neighbor_of = [&](int cell, const std::array<int, 4>& off) -> int {
    VoxelCoord c = cells[cell];
    VoxelCoord u = {c[0] + off[0], c[1] + off[1], c[2] + off[2]};
    if (u[0] < 0 || u[1] < 0 || u[2] < 0) return -1;
    auto it = cell_index.find(pack(u));
    return it == cell_index.end() ? -1 : it->second;
  };

  // Reject inputs that cannot be covered by a single wrap.
  {
    std::vector<uint8_t> seen(n, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    int count = 1;
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (const auto& off : offsets) {
        int u = neighbor_of(v, off);
        if (u >= 0 && !seen[u]) {
          seen[u] = 1;
          ++count;
          queue.push_back(u);
        }
      }
    }
    if (count != n) {
      throw DisconnectedSurfaceError("surface voxel set is not 26-connected; split components first");
    }
  }

  Rng rng(seed);
  const int start = static_cast<int>(rng.below(static_cast<uint64_t>(n)));

  std::vector<int> admit_order(n, -1);  // cell -> admission rank
  std::vector<int> admitted_cells;      // rank -> cell
  std::vector<std::array<int, 2>> admission_edges;  // (parent cell, child cell)
  std::deque<int> frontier;

  auto admit = [&](int cell) {
    admit_order[cell] = static_cast<int>(admitted_cells.size());
    admitted_cells.push_back(cell);
    frontier.push_back(cell);
  };
  admit(start);

  int remaining = n - 1;
  while (remaining > 0) {
    int v = frontier.front();
    frontier.pop_front();
    bool pending = false;
    for (const auto& off : offsets) {
      int u = neighbor_of(v, off);
      if (u < 0 || admit_order[u] >= 0) continue;
      if (off[3] == 1 || rng.uniform() < kDiagonalWeight) {
        admit(u);
        admission_edges.push_back({v, u});
        --remaining;
      } else {
        pending = true;  // rejected this pass; revisit v later
      }
    }
    if (pending) frontier.push_back(v);
  }

  // Vertices at voxel centers, in admission order.
  IsoGraph graph;
  graph.vertices.reserve(n);
  for (int cell : admitted_cells) {
    graph.vertices.push_back(origin + voxel_size * Vec3(cells[cell][0] + 0.5,
                                                        cells[cell][1] + 0.5,
                                                        cells[cell][2] + 0.5));
  }
  std::vector<int> vid(n);
  for (int cell = 0; cell < n; ++cell) vid[cell] = admit_order[cell];

  // Quad faces over each axis pair, split by the diagonal through the
  // lowest vertex id (both diagonals of a planar unit quad tie on length).
  std::vector<std::array<int, 3>> faces;
  const std::array<std::array<int, 3>, 3> unit = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const std::array<std::array<int, 2>, 3> axis_pairs = {{{0, 1}, {0, 2}, {1, 2}}};
  for (int cell = 0; cell < n; ++cell) {
    const VoxelCoord& c = cells[cell];
    for (const auto& ap : axis_pairs) {
      const auto& a = unit[ap[0]];
      const auto& b = unit[ap[1]];
      VoxelCoord ca = {c[0] + a[0], c[1] + a[1], c[2] + a[2]};
      VoxelCoord cb = {c[0] + b[0], c[1] + b[1], c[2] + b[2]};
      VoxelCoord cab = {ca[0] + b[0], ca[1] + b[1], ca[2] + b[2]};
      auto ia = cell_index.find(pack(ca));
      auto ib = cell_index.find(pack(cb));
      auto iab = cell_index.find(pack(cab));
      if (ia == cell_index.end() || ib == cell_index.end() || iab == cell_index.end()) continue;
      int q0 = vid[cell], q1 = vid[ia->second], q2 = vid[iab->second], q3 = vid[ib->second];
      // Diagonals are (q0,q2) and (q1,q3).
      if (std::min(q0, q2) <= std::min(q1, q3)) {
        faces.push_back({q0, q1, q2});
        faces.push_back({q0, q2, q3});
      } else {
        faces.push_back({q1, q2, q3});
        faces.push_back({q1, q3, q0});
      }
    }
  }

  auto edge_key = [](int i, int j) {
    return (static_cast<uint64_t>(std::min(i, j)) << 32) | static_cast<uint64_t>(std::max(i, j));
  };
  std::unordered_set<uint64_t> face_edges;
  for (const auto& f : faces) {
    face_edges.insert(edge_key(f[0], f[1]));
    face_edges.insert(edge_key(f[1], f[2]));
    face_edges.insert(edge_key(f[0], f[2]));
  }

  // Admission edges keep the wrap spanning. Any admission edge not already
  // covered by a quad gets a bridging triangle through the lowest-id common
  // neighbor when one exists.
  std::vector<std::array<int, 2>> extra_edges;
  for (const auto& ae : admission_edges) {
    int vi = vid[ae[0]], vj = vid[ae[1]];
    if (face_edges.count(edge_key(vi, vj))) continue;
    int best_w = -1;
    for (const auto& off_a : offsets) {
      int w = neighbor_of(ae[0], off_a);
      if (w < 0 || w == ae[1]) continue;
      // must also be 26-adjacent to the child cell
      const VoxelCoord& cw = cells[w];
      const VoxelCoord& cj = cells[ae[1]];
      if (std::abs(cw[0] - cj[0]) > 1 || std::abs(cw[1] - cj[1]) > 1 ||
          std::abs(cw[2] - cj[2]) > 1) {
        continue;
      }
      if (best_w < 0 || vid[w] < best_w) best_w = vid[w];
    }
    if (best_w >= 0) {
      faces.push_back({vi, vj, best_w});
      face_edges.insert(edge_key(vi, vj));
      face_edges.insert(edge_key(vi, best_w));
      face_edges.insert(edge_key(vj, best_w));
    } else {
      extra_edges.push_back({std::min(vi, vj), std::max(vi, vj)});
    }
  }

  // Canonical face ordering: rotate so the lowest index leads, then sort.
  for (auto& f : faces) {
    int k = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
    std::rotate(f.begin(), f.begin() + k, f.end());
  }
  std::sort(faces.begin(), faces.end());
  faces.erase(std::unique(faces.begin(), faces.end()), faces.end());
  graph.faces = std::move(faces);

  std::vector<std::array<int, 2>> edges;
  for (uint64_t key : face_edges) {
    edges.push_back({static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu)});
  }
  edges.insert(edges.end(), extra_edges.begin(), extra_edges.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  graph.edges = std::move(edges);

  graph.build_neighbors();
  return graph;
}

IsometryStats isometry_report(const IsoGraph& graph) {
  if (graph.edges.empty()) throw InvalidArgumentError("graph has no edges");
  double sum = 0.0, sum2 = 0.0;
  for (const auto& e : graph.edges) {
    double len = (graph.vertices[e[0]] - graph.vertices[e[1]]).norm();
    sum += len;
    sum2 += len * len;
  }
  double n = static_cast<double>(graph.edges.size());
  IsometryStats s;
  s.mean = sum / n;
  double var = std::max(0.0, sum2 / n - s.mean * s.mean);
  s.stddev = std::sqrt(var);
  s.cv = s.mean > 0.0 ? s.stddev / s.mean : 0.0;
  return s;
}

IsoGraph remesh(const TriangleMesh& mesh, double voxel_size, uint64_t seed) {
  VoxelGrid grid = voxelize(mesh, voxel_size);
  std::vector<VoxelCoord> shell = surface_voxels(grid);
  return diffusion_wrap(shell, grid.origin, grid.voxel_size, seed);
}

double default_voxel_size(const TriangleMesh& mesh) {
  Vec3 lo, hi;
  mesh.bounding_box(lo, hi);
  return (hi - lo).norm() / 200.0;
}

double voxel_size_for_vertex_count(const TriangleMesh& mesh, int target_vertices) {
  if (target_vertices < 1) throw InvalidArgumentError("target vertex count must be >= 1");
  double area = mesh.total_area();
  if (area <= 0.0) throw DegenerateMeshError("mesh has zero surface area");
  return std::sqrt(area / static_cast<double>(target_vertices));
}

}  // namespace wcp
