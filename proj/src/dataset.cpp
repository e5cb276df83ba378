#include "wcp/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wcp/errors.hpp"
#include "wcp/mesh_io.hpp"

namespace wcp {

Dataset build_bar_dataset(const BarDatasetSpec& spec) {
  spec.chamber.validate();
  if (spec.grid_nx < 1 || spec.grid_ny < 1) throw InvalidArgumentError("grid must be >= 1x1");

  // One canonical bar, remeshed once; every placement reuses the graph.
  TriangleMesh bar = make_box_mesh(-0.5 * spec.bar_size, 0.5 * spec.bar_size);
  double voxel = voxel_size_for_vertex_count(bar, spec.target_vertices);
  IsoGraph canonical = remesh(bar, voxel, spec.seed);

  WarpSpec warp = spec.warp;
  warp.chamber = spec.chamber;
  if (warp.wavelength <= 0.0) warp.wavelength = spec.bar_size.x();

  const Vec3 lo = spec.chamber.min_corner;
  const Vec3 hi = spec.chamber.max_corner;
  const double m = spec.margin;
  const double z_center = spec.chamber.center().z();

  Dataset dataset;
  for (int gy = 0; gy < spec.grid_ny; ++gy) {
    for (int gx = 0; gx < spec.grid_nx; ++gx) {
      double fx = spec.grid_nx == 1 ? 0.5 : static_cast<double>(gx) / (spec.grid_nx - 1);
      double fy = spec.grid_ny == 1 ? 0.5 : static_cast<double>(gy) / (spec.grid_ny - 1);
      double cx = lo.x() + m + 0.5 * spec.bar_size.x() +
                  fx * (hi.x() - lo.x() - 2.0 * m - spec.bar_size.x());
      double cy = lo.y() + m + 0.5 * spec.bar_size.y() +
                  fy * (hi.y() - lo.y() - 2.0 * m - spec.bar_size.y());

      Sample s;
      int part = gy * spec.grid_nx + gx;
      s.id = "part" + std::to_string(part);
      s.placement.translation = Vec3(cx, cy, z_center);
      s.graph = canonical;
      PointCloud base(canonical.vertices);
      s.cad = apply_placement(base, s.placement);
      s.graph.vertices = s.cad.points;

      WarpSpec part_warp = warp.with_part_center(s.cad.centroid());
      part_warp.seed = warp.seed + 7919ull * static_cast<uint64_t>(part + 1);
      s.scan = simulate_print(s.cad, part_warp);

      int idx = static_cast<int>(dataset.samples.size());
      if (std::find(spec.val_parts.begin(), spec.val_parts.end(), part) != spec.val_parts.end()) {
        dataset.val_indices.push_back(idx);
      } else {
        dataset.train_indices.push_back(idx);
      }
      dataset.samples.push_back(std::move(s));
    }
  }
  dataset.validate();
  return dataset;
}

Dataset recenter_dataset(const Dataset& dataset, const ChamberSpec& chamber) {
  Dataset out = dataset;
  for (Sample& s : out.samples) {
    Vec3 shift = chamber.center() - s.cad.centroid();
    Placement t;
    t.translation = shift;
    s.cad = apply_placement(s.cad, t);
    s.scan = apply_placement(s.scan, t);
    s.graph.vertices = s.cad.points;
    s.placement.translation += shift;
  }
  return out;
}

void save_placement(const Placement& placement, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  char buf[400];
  const Mat3& r = placement.rotation;
  const Vec3& t = placement.translation;
  std::snprintf(buf, sizeof(buf),
                "%.17g %.17g %.17g\n%.17g %.17g %.17g\n%.17g %.17g %.17g\n%.17g %.17g %.17g\n",
                r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2),
                t.x(), t.y(), t.z());
  out << buf;
}

Placement load_placement(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  Placement p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (!(in >> p.rotation(r, c))) throw IoError("truncated placement file: " + path);
    }
  }
  if (!(in >> p.translation.x() >> p.translation.y() >> p.translation.z())) {
    throw IoError("truncated placement file: " + path);
  }
  return p;
}

void save_dataset(const Dataset& dataset, const ChamberSpec& chamber, const std::string& dir) {
  dataset.validate();
  std::filesystem::create_directories(dir);
  std::ofstream index(dir + "/dataset.txt");
  if (!index) throw IoError("cannot open for writing: " + dir + "/dataset.txt");
  char buf[256];
  std::snprintf(buf, sizeof(buf), "chamber_min=%.17g %.17g %.17g\nchamber_max=%.17g %.17g %.17g\n",
                chamber.min_corner.x(), chamber.min_corner.y(), chamber.min_corner.z(),
                chamber.max_corner.x(), chamber.max_corner.y(), chamber.max_corner.z());
  index << buf;

  std::vector<int> split(dataset.samples.size(), 0);  // 0 train, 1 val
  for (int i : dataset.val_indices) split[i] = 1;
  for (size_t i = 0; i < dataset.samples.size(); ++i) {
    const Sample& s = dataset.samples[i];
    index << "sample=" << s.id << ' ' << (split[i] ? "val" : "train") << '\n';
    std::string base = dir + "/" + s.id;
    write_ply_cloud(s.cad, base + "_cad.ply");
    write_ply_cloud(s.scan, base + "_scan.ply");
    write_ply_mesh(s.graph.vertices, s.graph.faces, base + "_graph.ply");
    write_edge_list(s.graph.edges, base + "_graph.edges");
    save_placement(s.placement, base + "_placement.txt");
  }
}

Dataset load_dataset(const std::string& dir, ChamberSpec* chamber) {
  std::ifstream index(dir + "/dataset.txt");
  if (!index) throw IoError("cannot open dataset index: " + dir + "/dataset.txt");
  Dataset dataset;
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed dataset index line: " + line);
    std::string key = line.substr(0, eq);
    std::istringstream val(line.substr(eq + 1));
    if (key == "chamber_min" && chamber) {
      val >> chamber->min_corner.x() >> chamber->min_corner.y() >> chamber->min_corner.z();
    } else if (key == "chamber_max" && chamber) {
      val >> chamber->max_corner.x() >> chamber->max_corner.y() >> chamber->max_corner.z();
    } else if (key == "sample") {
      std::string id, splitname;
      val >> id >> splitname;
      std::string base = dir + "/" + id;
      Sample s;
      s.id = id;
      s.cad = read_ply_cloud(base + "_cad.ply").cloud;
      s.scan = read_ply_cloud(base + "_scan.ply").cloud;
      PlyMesh mesh = read_ply_mesh(base + "_graph.ply");
      s.graph.vertices = std::move(mesh.vertices);
      s.graph.faces = std::move(mesh.faces);
      s.graph.edges = read_edge_list(base + "_graph.edges");
      s.graph.build_neighbors();
      s.placement = load_placement(base + "_placement.txt");
      int idx = static_cast<int>(dataset.samples.size());
      if (splitname == "val") dataset.val_indices.push_back(idx);
      else dataset.train_indices.push_back(idx);
      dataset.samples.push_back(std::move(s));
    }
  }
  dataset.validate();
  return dataset;
}

}  // namespace wcp
