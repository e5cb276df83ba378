#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "wcp/dataset.hpp"
#include "wcp/errors.hpp"
#include "wcp/evaluate.hpp"
#include "wcp/mesh_io.hpp"
#include "wcp/print_oracle.hpp"
#include "wcp/remesh.hpp"

using namespace wcp;

namespace {

IsoGraph cube_graph() {
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Constant(10.0));
  return remesh(cube, 1.0, 3);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("wcp_eval_" + name)).string();
}

}  // namespace

TEST_CASE("identical clouds report all zeros") {
  IsoGraph graph = cube_graph();
  PointCloud cad(graph.vertices);
  SignedDeviationField field;
  DeviationReport report = deviation_report(cad, cad, graph, &field);
  CHECK(report.min == 0.0);
  CHECK(report.max == 0.0);
  CHECK(report.stddev == 0.0);
  CHECK(report.abs_mean == 0.0);
  CHECK(!report.improvement.has_value());
  for (double v : field.values) CHECK(v == 0.0);
}

TEST_CASE("improvement reproduces the published reference rows") {
  // 0.76 -> 0.26 and 0.65 -> 0.27 at one-decimal rounding.
  CHECK(std::round(improvement_percent(0.76, 0.26) * 10.0) / 10.0 == 65.8);
  CHECK(std::round(improvement_percent(0.65, 0.27) * 10.0) / 10.0 == 58.5);
  CHECK(improvement_percent(1.23, 1.23) == 0.0);
  // Strictly decreasing in the post-compensation abs-mean.
  CHECK(improvement_percent(0.5, 0.1) > improvement_percent(0.5, 0.2));
  CHECK_THROWS_AS(improvement_percent(0.0, 0.1), InvalidArgumentError);
}

TEST_CASE("outward normals on a cube shell point away from the centroid") {
  IsoGraph graph = cube_graph();
  std::vector<Vec3> normals = outward_vertex_normals(graph);
  Vec3 centroid = Vec3::Constant(5.0);
  int outward = 0;
  for (size_t i = 0; i < normals.size(); ++i) {
    if (normals[i].dot(graph.vertices[i] - centroid) > 0.0) ++outward;
  }
  CHECK(outward == static_cast<int>(normals.size()));
}

TEST_CASE("sign convention follows the outward normal") {
  IsoGraph graph = cube_graph();
  PointCloud cad(graph.vertices);
  // Inflate: every point moves outward -> strictly positive deviations.
  PointCloud inflated = cad;
  Vec3 centroid = cad.centroid();
  for (Vec3& p : inflated.points) p += 0.2 * (p - centroid).normalized();
  SignedDeviationField field;
  DeviationReport report = deviation_report(cad, inflated, graph, &field);
  CHECK(report.min > 0.0);
  // Deflate -> negative.
  PointCloud deflated = cad;
  for (Vec3& p : deflated.points) p -= 0.2 * (p - centroid).normalized();
  DeviationReport dreport = deviation_report(cad, deflated, graph);
  CHECK(dreport.max < 0.0);
}

TEST_CASE("baseline comparison fills the improvement column") {
  IsoGraph graph = cube_graph();
  PointCloud cad(graph.vertices);
  PointCloud bad = cad;
  for (Vec3& p : bad.points) p += Vec3(0, 0, 0.4);
  PointCloud better = cad;
  for (Vec3& p : better.points) p += Vec3(0, 0, 0.1);
  DeviationReport baseline = deviation_report(cad, bad, graph);
  DeviationReport report = deviation_report(cad, better, graph, nullptr, &baseline);
  REQUIRE(report.improvement.has_value());
  CHECK(*report.improvement == doctest::Approx(75.0).epsilon(0.05));
}

TEST_CASE("noiseless oracle deviation matches the analytic abs-mean within 1%") {
  BarDatasetSpec spec;
  spec.grid_nx = 1;
  spec.grid_ny = 1;
  spec.target_vertices = 250;
  spec.seed = 9;
  Dataset dataset = build_bar_dataset(spec);
  const Sample& s = dataset.samples[0];
  DeviationReport report = deviation_report(s.cad, s.scan, s.graph);
  // Analytic |d| averaged over the part's own vertices.
  WarpSpec warp = spec.warp;
  warp.chamber = spec.chamber;
  warp.wavelength = spec.bar_size.x();
  WarpSpec centered = warp.with_part_center(s.cad.centroid());
  double want = 0.0;
  for (const Vec3& p : s.cad.points) want += warp_displacement(p, centered).norm();
  want /= s.cad.size();
  CHECK(report.abs_mean == doctest::Approx(want).epsilon(0.01));
}

TEST_CASE("heatmap export writes the symmetric range and round-trips") {
  PointCloud cloud({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  SignedDeviationField field;
  field.values = {0.0, 1.0, -0.25};
  std::string path = temp_path("heatmap.ply");
  export_heatmap(field, cloud, path);
  std::ifstream in(path);
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  CHECK(text.find("comment range -1 1") != std::string::npos);
  PlyCloud back = read_ply_cloud(path);
  REQUIRE(back.deviation.has_value());
  CHECK((*back.deviation)[1] == doctest::Approx(1.0));
  CHECK((*back.deviation)[2] == doctest::Approx(-0.25));

  SignedDeviationField zero;
  zero.values = {0.0, 0.0, 0.0};
  export_heatmap(zero, cloud, path);
  PlyCloud zback = read_ply_cloud(path);
  for (double v : *zback.deviation) CHECK(v == 0.0);

  SignedDeviationField wrong;
  wrong.values = {1.0};
  CHECK_THROWS_AS(export_heatmap(wrong, cloud, path), AlignmentError);
}

TEST_CASE("report csv uses four decimal places and a header") {
  DeviationReport a{-0.1234567, 0.9876543, 0.5, 0.25, std::nullopt};
  DeviationReport b{-1, 1, 0.5, 0.26, 65.81234};
  std::string path = temp_path("report.csv");
  write_report_csv({"part0", "part1"}, {a, b}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "part,min,max,std,abs_mean,improvement");
  std::getline(in, line);
  CHECK(line == "part0,-0.1235,0.9877,0.5000,0.2500,");
  std::getline(in, line);
  CHECK(line == "part1,-1.0000,1.0000,0.5000,0.2600,65.8");
}
