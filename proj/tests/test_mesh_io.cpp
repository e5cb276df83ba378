#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "wcp/errors.hpp"
#include "wcp/mesh_io.hpp"

using namespace wcp;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("wcp_mesh_io_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("obj round trip preserves vertices and faces") {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.123456789, -2.5, 3e-7}};
  mesh.faces = {{0, 1, 2}, {1, 3, 2}};
  std::string path = temp_path("roundtrip.obj");
  write_obj(mesh, path);
  TriangleMesh back = read_obj(path);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.faces == mesh.faces);
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK((back.vertices[i] - mesh.vertices[i]).norm() < 1e-9);
  }
}

TEST_CASE("obj reader handles comments and negative/short face syntax") {
  std::string path = temp_path("mixed.obj");
  {
    std::ofstream out(path);
    out << "# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 3\n";
  }
  TriangleMesh mesh = read_obj(path);
  CHECK(mesh.vertices.size() == 3);
  REQUIRE(mesh.faces.size() == 1);
  CHECK(mesh.faces[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("missing files raise io errors") {
  CHECK_THROWS_AS(read_obj(temp_path("nope.obj")), IoError);
  CHECK_THROWS_AS(read_ply_cloud(temp_path("nope.ply")), IoError);
  CHECK_THROWS_AS(read_ply_mesh(temp_path("nope.ply")), IoError);
  CHECK_THROWS_AS(read_edge_list(temp_path("nope.edges")), IoError);
}

TEST_CASE("ply cloud round trip without deviation") {
  PointCloud cloud({{0.1, 0.2, 0.3}, {-7, 8.25, 1e-5}});
  std::string path = temp_path("cloud.ply");
  write_ply_cloud(cloud, path);
  PlyCloud back = read_ply_cloud(path);
  CHECK(!back.deviation.has_value());
  REQUIRE(back.cloud.size() == cloud.size());
  for (int i = 0; i < cloud.size(); ++i) {
    CHECK((back.cloud.points[i] - cloud.points[i]).norm() < 1e-9);
  }
}

TEST_CASE("ply cloud round trip with deviation and header comments") {
  PointCloud cloud({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  std::vector<double> dev{-0.5, 0.0, 1.25};
  std::string path = temp_path("cloud_dev.ply");
  write_ply_cloud(cloud, path, &dev, {"range -1.25 1.25"});
  PlyCloud back = read_ply_cloud(path);
  REQUIRE(back.deviation.has_value());
  REQUIRE(back.deviation->size() == dev.size());
  for (size_t i = 0; i < dev.size(); ++i) CHECK((*back.deviation)[i] == doctest::Approx(dev[i]));
  CHECK(slurp(path).find("comment range -1.25 1.25") != std::string::npos);
}

TEST_CASE("ply write is deterministic byte for byte") {
  PointCloud cloud({{0.123456789123, 4.5, -6.75}});
  std::string a = temp_path("det_a.ply");
  std::string b = temp_path("det_b.ply");
  write_ply_cloud(cloud, a);
  write_ply_cloud(cloud, b);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("ply mesh round trip preserves faces") {
  std::vector<Vec3> verts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<std::array<int, 3>> faces{{0, 1, 2}, {0, 1, 3}, {1, 2, 3}};
  std::string path = temp_path("mesh.ply");
  write_ply_mesh(verts, faces, path);
  PlyMesh back = read_ply_mesh(path);
  REQUIRE(back.vertices.size() == verts.size());
  CHECK(back.faces == faces);
}

TEST_CASE("edge list round trip") {
  std::vector<std::array<int, 2>> edges{{0, 1}, {1, 2}, {0, 5}};
  std::string path = temp_path("edges.txt");
  write_edge_list(edges, path);
  CHECK(read_edge_list(path) == edges);
}
