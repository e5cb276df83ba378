#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wcp/registration.hpp"
#include "wcp/remesh.hpp"

namespace wcp {

// Per-part deviation metric bundle. All lengths in mm.
struct DeviationReport {
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;
  double abs_mean = 0.0;
  std::optional<double> improvement;  // percent, vs a baseline report
};

// Per-vertex signed deviation: displacement magnitude with the sign of
// its projection on the outward vertex normal.
struct SignedDeviationField {
  std::vector<double> values;
};

// Area-weighted vertex normals, globally flipped (if needed) so they point
// away from the centroid on average.
std::vector<Vec3> outward_vertex_normals(const IsoGraph& graph);

DeviationReport deviation_report(const PointCloud& cad, const PointCloud& scan,
                                 const IsoGraph& graph, SignedDeviationField* field = nullptr,
                                 const DeviationReport* baseline = nullptr);

// (baseline_abs_mean - abs_mean) / baseline_abs_mean * 100.
double improvement_percent(double baseline_abs_mean, double abs_mean);

// ASCII PLY with a per-vertex `deviation` property; the header records the
// symmetric color range (-c, +c), c = max |deviation|.
void export_heatmap(const SignedDeviationField& field, const PointCloud& cloud,
                    const std::string& path);

// CSV: part,min,max,std,abs_mean,improvement (4 decimal places, mm;
// improvement blank when absent).
void write_report_csv(const std::vector<std::string>& part_ids,
                      const std::vector<DeviationReport>& reports, const std::string& path);

}  // namespace wcp
