#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wcp/cli.hpp"
#include "wcp/dataset.hpp"
#include "wcp/errors.hpp"
#include "wcp/evaluate.hpp"
#include "wcp/graphnet.hpp"
#include "wcp/losses.hpp"
#include "wcp/print_oracle.hpp"
#include "wcp/registration.hpp"
#include "wcp/remesh.hpp"
#include "wcp/trainer.hpp"

namespace py = pybind11;
using namespace wcp;

namespace {

PointCloud cloud_from_array(const py::array_t<double>& arr) {
  auto buf = arr.unchecked<2>();
  if (buf.shape(1) != 3) throw std::invalid_argument("expected an (n, 3) array");
  std::vector<Vec3> pts;
  pts.reserve(buf.shape(0));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    pts.emplace_back(buf(i, 0), buf(i, 1), buf(i, 2));
  }
  return PointCloud(std::move(pts));
}

py::array_t<double> cloud_to_array(const PointCloud& cloud) {
  py::array_t<double> arr({static_cast<py::ssize_t>(cloud.size()), py::ssize_t(3)});
  auto buf = arr.mutable_unchecked<2>();
  for (int i = 0; i < cloud.size(); ++i) {
    buf(i, 0) = cloud.points[i].x();
    buf(i, 1) = cloud.points[i].y();
    buf(i, 2) = cloud.points[i].z();
  }
  return arr;
}

TriangleMesh mesh_from_arrays(const py::array_t<double>& vertices, const py::array_t<int>& faces) {
  TriangleMesh mesh;
  auto v = vertices.unchecked<2>();
  auto f = faces.unchecked<2>();
  if (v.shape(1) != 3 || f.shape(1) != 3) throw std::invalid_argument("expected (n, 3) arrays");
  for (py::ssize_t i = 0; i < v.shape(0); ++i) mesh.vertices.emplace_back(v(i, 0), v(i, 1), v(i, 2));
  for (py::ssize_t i = 0; i < f.shape(0); ++i) mesh.faces.push_back({f(i, 0), f(i, 1), f(i, 2)});
  mesh.validate();
  return mesh;
}

ChamberSpec chamber_from_tuples(const std::array<double, 3>& lo, const std::array<double, 3>& hi) {
  ChamberSpec chamber{Vec3(lo[0], lo[1], lo[2]), Vec3(hi[0], hi[1], hi[2])};
  chamber.validate();
  return chamber;
}

WarpSpec warp_from_kwargs(double amplitude, double edge_gain, double wavelength,
                          double noise_sigma, const std::array<double, 3>& chamber_lo,
                          const std::array<double, 3>& chamber_hi, uint64_t seed) {
  WarpSpec spec;
  spec.amplitude = amplitude;
  spec.edge_gain = edge_gain;
  spec.wavelength = wavelength;
  spec.noise_sigma = noise_sigma;
  spec.chamber = chamber_from_tuples(chamber_lo, chamber_hi);
  spec.seed = seed;
  spec.validate();
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Position-aware warp prediction and compensation for powder-bed printing";

  py::register_exception<Error>(m, "PipelineError");

  py::class_<IsoGraph>(m, "IsoGraph")
      .def_property_readonly("vertices",
                             [](const IsoGraph& g) { return cloud_to_array(PointCloud(g.vertices)); })
      .def_property_readonly("edges", [](const IsoGraph& g) { return g.edges; })
      .def_property_readonly("faces", [](const IsoGraph& g) { return g.faces; })
      .def("connected", &IsoGraph::connected)
      .def("__len__", &IsoGraph::vertex_count);

  py::class_<Engine>(m, "Engine")
      .def_property_readonly("kind", [](const Engine& e) { return engine_kind_name(e.kind); })
      .def_property_readonly("widths", [](const Engine& e) { return e.config.widths; });

  py::class_<DeviationReport>(m, "DeviationReport")
      .def_readonly("min", &DeviationReport::min)
      .def_readonly("max", &DeviationReport::max)
      .def_readonly("std", &DeviationReport::stddev)
      .def_readonly("abs_mean", &DeviationReport::abs_mean)
      .def_property_readonly("improvement", [](const DeviationReport& r) {
        return r.improvement ? py::cast(*r.improvement) : py::none().cast<py::object>();
      });

  m.def(
      "remesh",
      [](const py::array_t<double>& vertices, const py::array_t<int>& faces, double voxel_size,
         uint64_t seed) { return remesh(mesh_from_arrays(vertices, faces), voxel_size, seed); },
      py::arg("vertices"), py::arg("faces"), py::arg("voxel_size"), py::arg("seed") = 0,
      "Voxel-wrap a triangle mesh into a near-isometric surface graph.");

  m.def(
      "simulate_print",
      [](const py::array_t<double>& cad, double amplitude, double edge_gain, double wavelength,
         double noise_sigma, const std::array<double, 3>& chamber_lo,
         const std::array<double, 3>& chamber_hi, uint64_t seed) {
        WarpSpec spec = warp_from_kwargs(amplitude, edge_gain, wavelength, noise_sigma,
                                         chamber_lo, chamber_hi, seed);
        return cloud_to_array(simulate_print(cloud_from_array(cad), spec));
      },
      py::arg("cad"), py::arg("amplitude") = 1.0, py::arg("edge_gain") = 2.0,
      py::arg("wavelength") = 100.0, py::arg("noise_sigma") = 0.0,
      py::arg("chamber_lo") = std::array<double, 3>{0, 0, 0},
      py::arg("chamber_hi") = std::array<double, 3>{400, 300, 120}, py::arg("seed") = 0,
      "Apply the deterministic synthetic print oracle to a CAD cloud.");

  m.def(
      "chamfer_loss",
      [](const py::array_t<double>& a, const py::array_t<double>& b) {
        return chamfer_loss(cloud_from_array(a), cloud_from_array(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "l2_loss",
      [](const py::array_t<double>& pred, const py::array_t<double>& target) {
        return l2_loss(cloud_from_array(pred), cloud_from_array(target));
      },
      py::arg("pred"), py::arg("target"));

  m.def(
      "icp_align",
      [](const py::array_t<double>& scan, const py::array_t<double>& cad) {
        RigidFit fit = icp_align(cloud_from_array(scan), cloud_from_array(cad));
        py::array_t<double> rotation({py::ssize_t(3), py::ssize_t(3)});
        auto r = rotation.mutable_unchecked<2>();
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) r(i, j) = fit.placement.rotation(i, j);
        }
        return py::make_tuple(rotation,
                              std::array<double, 3>{fit.placement.translation.x(),
                                                    fit.placement.translation.y(),
                                                    fit.placement.translation.z()},
                              fit.rms, fit.iterations);
      },
      py::arg("scan"), py::arg("cad"),
      "Trimmed ICP; returns (rotation, translation, rms, iterations).");

  m.def(
      "train_predictor",
      [](const std::string& dataset_dir, std::vector<int> widths, int epochs, double lr,
         uint64_t seed) {
        ChamberSpec chamber;
        Dataset dataset = load_dataset(dataset_dir, &chamber);
        NetworkConfig net;
        net.widths = std::move(widths);
        TrainingConfig training;
        training.epochs = epochs;
        training.learning_rate = lr;
        training.seed = seed;
        TrainResult result = train_predictor(dataset, net, chamber, training);
        std::vector<double> curve;
        for (const EpochLoss& e : result.history) curve.push_back(e.train.total);
        return py::make_tuple(result.engine, curve, result.best_epoch);
      },
      py::arg("dataset_dir"), py::arg("widths") = std::vector<int>{16, 16},
      py::arg("epochs") = 100, py::arg("lr") = 1e-3, py::arg("seed") = 0,
      "Stage-1 training over a saved dataset directory; returns (engine, loss curve, best epoch).");

  m.def(
      "train_compensator",
      [](const std::string& dataset_dir, const Engine& predictor, int epochs, double lr,
         uint64_t seed) {
        Dataset dataset = load_dataset(dataset_dir);
        TrainingConfig training;
        training.epochs = epochs;
        training.learning_rate = lr;
        training.seed = seed;
        TrainResult result = train_compensator(dataset, predictor, training);
        std::vector<double> curve;
        for (const EpochLoss& e : result.history) curve.push_back(e.train.total);
        return py::make_tuple(result.engine, curve, result.best_epoch);
      },
      py::arg("dataset_dir"), py::arg("predictor"), py::arg("epochs") = 100, py::arg("lr") = 1e-3,
      py::arg("seed") = 0);

  m.def(
      "forward",
      [](const Engine& engine, const py::array_t<double>& cloud, const IsoGraph& graph) {
        return cloud_to_array(engine_forward(engine, cloud_from_array(cloud), graph));
      },
      py::arg("engine"), py::arg("cloud"), py::arg("graph"));

  m.def("save_model", &save_model, py::arg("engine"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));

  m.def(
      "make_bar_dataset",
      [](const std::string& dir, int grid_nx, int grid_ny, int target_vertices,
         double noise_sigma, uint64_t seed, std::vector<int> val_parts) {
        BarDatasetSpec spec;
        spec.grid_nx = grid_nx;
        spec.grid_ny = grid_ny;
        spec.target_vertices = target_vertices;
        spec.warp.noise_sigma = noise_sigma;
        spec.seed = seed;
        spec.val_parts = std::move(val_parts);
        Dataset dataset = build_bar_dataset(spec);
        save_dataset(dataset, spec.chamber, dir);
        return static_cast<int>(dataset.samples.size());
      },
      py::arg("dir"), py::arg("grid_nx") = 3, py::arg("grid_ny") = 4,
      py::arg("target_vertices") = 800, py::arg("noise_sigma") = 0.02, py::arg("seed") = 0,
      py::arg("val_parts") = std::vector<int>{},
      "Build and save the synthetic bar nesting dataset; returns the part count.");

  m.def(
      "deviation_report",
      [](const py::array_t<double>& cad, const py::array_t<double>& scan, const IsoGraph& graph) {
        return deviation_report(cloud_from_array(cad), cloud_from_array(scan), graph);
      },
      py::arg("cad"), py::arg("scan"), py::arg("graph"));

  m.def("improvement_percent", &improvement_percent, py::arg("baseline_abs_mean"),
        py::arg("abs_mean"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"wcp"};
        for (const std::string& a : args) argv.push_back(a.c_str());
        return cli_dispatch(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Invoke the command-line pipeline in-process; returns the exit code.");
}
