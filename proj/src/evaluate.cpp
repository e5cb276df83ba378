#include "wcp/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "wcp/errors.hpp"
#include "wcp/mesh_io.hpp"

namespace wcp {

std::vector<Vec3> outward_vertex_normals(const IsoGraph& graph) {
  if (graph.vertices.empty()) throw EmptyCloudError("graph has no vertices");
  if (graph.faces.empty()) throw DegenerateMeshError("graph has no faces; normals undefined");
  std::vector<Vec3> normals(graph.vertices.size(), Vec3::Zero());
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& v : graph.vertices) centroid += v;
  centroid /= static_cast<double>(graph.vertices.size());

  // Face windings from the wrap are not globally consistent, so orient each
  // face normal away from the centroid before accumulating; otherwise
  // opposite windings cancel at shared vertices.
  for (const auto& f : graph.faces) {
    const Vec3& a = graph.vertices[f[0]];
    const Vec3& b = graph.vertices[f[1]];
    const Vec3& c = graph.vertices[f[2]];
    Vec3 n = (b - a).cross(c - a);  // magnitude = 2*area, the weighting
    Vec3 face_center = (a + b + c) / 3.0;
    if (n.dot(face_center - centroid) < 0.0) n = -n;
    normals[f[0]] += n;
    normals[f[1]] += n;
    normals[f[2]] += n;
  }
  for (size_t i = 0; i < normals.size(); ++i) {
    double len = normals[i].norm();
    if (len < 1e-12) {
      // Degenerate accumulation (e.g. only slivers); fall back to the radial
      // direction so the sign convention stays outward.
      Vec3 radial = graph.vertices[i] - centroid;
      double rlen = radial.norm();
      normals[i] = rlen > 1e-12 ? Vec3(radial / rlen) : Vec3::Zero();
      continue;
    }
    normals[i] /= len;
    if (normals[i].dot(graph.vertices[i] - centroid) < 0.0) normals[i] = -normals[i];
  }
  return normals;
}

DeviationReport deviation_report(const PointCloud& cad, const PointCloud& scan,
                                 const IsoGraph& graph, SignedDeviationField* field,
                                 const DeviationReport* baseline) {
  if (cad.size() != graph.vertex_count()) {
    throw AlignmentError("CAD cloud count != graph vertex count");
  }
  Correspondence corr = correspond(cad, scan);
  std::vector<Vec3> normals = outward_vertex_normals(graph);

  std::vector<double> signed_dev(cad.size());
  for (int i = 0; i < cad.size(); ++i) {
    const Vec3& d = corr.displacements[i];
    double sign = d.dot(normals[i]) < 0.0 ? -1.0 : 1.0;
    signed_dev[i] = sign * d.norm();
  }

  DeviationReport report;
  report.min = *std::min_element(signed_dev.begin(), signed_dev.end());
  report.max = *std::max_element(signed_dev.begin(), signed_dev.end());
  double mean = 0.0, abs_mean = 0.0;
  for (double v : signed_dev) {
    mean += v;
    abs_mean += std::abs(v);
  }
  double n = static_cast<double>(signed_dev.size());
  mean /= n;
  abs_mean /= n;
  double var = 0.0;
  for (double v : signed_dev) var += (v - mean) * (v - mean);
  report.stddev = std::sqrt(var / n);
  report.abs_mean = abs_mean;
  if (baseline) report.improvement = improvement_percent(baseline->abs_mean, abs_mean);
  if (field) field->values = std::move(signed_dev);
  return report;
}

double improvement_percent(double baseline_abs_mean, double abs_mean) {
  if (baseline_abs_mean <= 0.0) {
    throw InvalidArgumentError("baseline abs-mean must be positive for improvement");
  }
  return (baseline_abs_mean - abs_mean) / baseline_abs_mean * 100.0;
}

void export_heatmap(const SignedDeviationField& field, const PointCloud& cloud,
                    const std::string& path) {
  if (static_cast<int>(field.values.size()) != cloud.size()) {
    throw AlignmentError("deviation field size != cloud size");
  }
  double c = 0.0;
  for (double v : field.values) c = std::max(c, std::abs(v));
  char range[96];
  std::snprintf(range, sizeof(range), "range %.9g %.9g", -c, c);
  write_ply_cloud(cloud, path, &field.values, {range});
}

void write_report_csv(const std::vector<std::string>& part_ids,
                      const std::vector<DeviationReport>& reports, const std::string& path) {
  if (part_ids.size() != reports.size()) {
    throw AlignmentError("part id count != report count");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "part,min,max,std,abs_mean,improvement\n";
  for (size_t i = 0; i < reports.size(); ++i) {
    const DeviationReport& r = reports[i];
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.4f", part_ids[i].c_str(), r.min, r.max,
                  r.stddev, r.abs_mean);
    out << buf;
    if (r.improvement) {
      std::snprintf(buf, sizeof(buf), ",%.1f", *r.improvement);
      out << buf;
    } else {
      out << ',';
    }
    out << '\n';
  }
}

}  // namespace wcp
