#include "wcp/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "wcp/errors.hpp"

namespace wcp {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in = open_in(path);
  TriangleMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (!ss) throw IoError("malformed OBJ vertex line: " + line);
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      for (int i = 0; i < 3; ++i) {
        std::string tok;
        ss >> tok;
        if (tok.empty()) throw IoError("malformed OBJ face line: " + line);
        // Indices may carry /vt/vn suffixes; keep the vertex index only.
        f[i] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      mesh.faces.push_back(f);
    }
  }
  mesh.validate();
  return mesh;
}

void write_obj(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Vec3& v : mesh.vertices) {
    out << "v " << fmt9(v.x()) << ' ' << fmt9(v.y()) << ' ' << fmt9(v.z()) << '\n';
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

namespace {

struct PlyHeader {
  int vertex_count = 0;
  int face_count = 0;
  std::vector<std::string> vertex_props;
};

PlyHeader read_ply_header(std::ifstream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw IoError("not a PLY file: " + path);
  PlyHeader h;
  std::string element;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "end_header") return h;
    if (tag == "comment") continue;
    if (tag == "format") {
      std::string kind;
      ss >> kind;
      if (kind != "ascii") throw IoError("only ascii PLY is supported: " + path);
    } else if (tag == "element") {
      int count = 0;
      ss >> element >> count;
      if (element == "vertex") h.vertex_count = count;
      else if (element == "face") h.face_count = count;
      else throw IoError("unsupported PLY element '" + element + "': " + path);
    } else if (tag == "property") {
      if (element == "vertex") {
        std::string type, name;
        ss >> type >> name;
        if (type == "list") throw IoError("unexpected list property on vertices: " + path);
        h.vertex_props.push_back(name);
      }
      // face list property is assumed to be vertex indices
    }
  }
  throw IoError("PLY header missing end_header: " + path);
}

}  // namespace

PlyCloud read_ply_cloud(const std::string& path) {
  std::ifstream in = open_in(path);
  PlyHeader h = read_ply_header(in, path);
  int xi = -1, yi = -1, zi = -1, di = -1;
  for (size_t i = 0; i < h.vertex_props.size(); ++i) {
    if (h.vertex_props[i] == "x") xi = static_cast<int>(i);
    else if (h.vertex_props[i] == "y") yi = static_cast<int>(i);
    else if (h.vertex_props[i] == "z") zi = static_cast<int>(i);
    else if (h.vertex_props[i] == "deviation") di = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0 || zi < 0) throw IoError("PLY missing x/y/z properties: " + path);

  PlyCloud out;
  if (di >= 0) out.deviation.emplace();
  std::vector<double> row(h.vertex_props.size());
  for (int v = 0; v < h.vertex_count; ++v) {
    for (double& val : row) {
      if (!(in >> val)) throw IoError("truncated PLY vertex data: " + path);
    }
    out.cloud.points.emplace_back(row[xi], row[yi], row[zi]);
    if (di >= 0) out.deviation->push_back(row[di]);
  }
  return out;
}

void write_ply_cloud(const PointCloud& cloud, const std::string& path,
                     const std::vector<double>* deviation,
                     const std::vector<std::string>& header_comments) {
  if (deviation && static_cast<int>(deviation->size()) != cloud.size()) {
    throw ShapeError("deviation count does not match cloud size");
  }
  std::ofstream out = open_out(path);
  out << "ply\nformat ascii 1.0\n";
  for (const std::string& c : header_comments) out << "comment " << c << '\n';
  out << "element vertex " << cloud.size() << '\n';
  out << "property float x\nproperty float y\nproperty float z\n";
  if (deviation) out << "property float deviation\n";
  out << "end_header\n";
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << fmt9(p.x()) << ' ' << fmt9(p.y()) << ' ' << fmt9(p.z());
    if (deviation) out << ' ' << fmt9((*deviation)[i]);
    out << '\n';
  }
}

PlyMesh read_ply_mesh(const std::string& path) {
  std::ifstream in = open_in(path);
  PlyHeader h = read_ply_header(in, path);
  int xi = -1, yi = -1, zi = -1;
  for (size_t i = 0; i < h.vertex_props.size(); ++i) {
    if (h.vertex_props[i] == "x") xi = static_cast<int>(i);
    else if (h.vertex_props[i] == "y") yi = static_cast<int>(i);
    else if (h.vertex_props[i] == "z") zi = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0 || zi < 0) throw IoError("PLY missing x/y/z properties: " + path);

  PlyMesh mesh;
  std::vector<double> row(h.vertex_props.size());
  for (int v = 0; v < h.vertex_count; ++v) {
    for (double& val : row) {
      if (!(in >> val)) throw IoError("truncated PLY vertex data: " + path);
    }
    mesh.vertices.emplace_back(row[xi], row[yi], row[zi]);
  }
  for (int f = 0; f < h.face_count; ++f) {
    int count = 0;
    if (!(in >> count) || count != 3) throw IoError("non-triangular PLY face: " + path);
    std::array<int, 3> face{};
    in >> face[0] >> face[1] >> face[2];
    if (!in) throw IoError("truncated PLY face data: " + path);
    mesh.faces.push_back(face);
  }
  return mesh;
}

void write_ply_mesh(const std::vector<Vec3>& vertices,
                    const std::vector<std::array<int, 3>>& faces, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << vertices.size() << '\n';
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "element face " << faces.size() << '\n';
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  for (const Vec3& v : vertices) {
    out << fmt9(v.x()) << ' ' << fmt9(v.y()) << ' ' << fmt9(v.z()) << '\n';
  }
  for (const auto& f : faces) {
    out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
}

std::vector<std::array<int, 2>> read_edge_list(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<std::array<int, 2>> edges;
  int i = 0, j = 0;
  while (in >> i >> j) edges.push_back({i, j});
  return edges;
}

void write_edge_list(const std::vector<std::array<int, 2>>& edges, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const auto& e : edges) out << e[0] << ' ' << e[1] << '\n';
}

}  // namespace wcp
