#include "wcp/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "wcp/config.hpp"
#include "wcp/dataset.hpp"
#include "wcp/errors.hpp"
#include "wcp/evaluate.hpp"
#include "wcp/graphnet.hpp"
#include "wcp/losses.hpp"
#include "wcp/mesh_io.hpp"
#include "wcp/print_oracle.hpp"
#include "wcp/remesh.hpp"
#include "wcp/trainer.hpp"

namespace wcp {

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Seed for all randomness in this run");
  cmd->add_option("--config", opts.config_path, "key=value config file");
  cmd->add_option("--out", opts.out_dir, "Output directory");
}

KeyValueConfig load_config(const CommonOpts& opts) {
  if (opts.config_path.empty()) return {};
  return KeyValueConfig::from_file(opts.config_path);
}

std::string fmtd(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// manifest.txt: command, seed, every effective flag value, and an FNV-1a
// hash per input file so a run can be reproduced and verified exactly.
void emit_manifest(const CommonOpts& opts, const std::string& command,
                   std::map<std::string, std::string> entries,
                   const std::vector<std::pair<std::string, std::string>>& inputs) {
  entries["command"] = command;
  entries["seed"] = std::to_string(opts.seed);
  entries["out"] = opts.out_dir;
  if (!opts.config_path.empty()) {
    entries["config"] = opts.config_path;
    entries["input.config.hash"] = file_hash(opts.config_path);
  }
  for (const auto& [name, path] : inputs) {
    entries["input." + name] = path;
    entries["input." + name + ".hash"] = file_hash(path);
  }
  write_manifest(entries, opts.out_dir + "/manifest.txt");
}

ChamberSpec parse_chamber(const std::vector<double>& v) {
  if (v.size() != 6) throw InvalidArgumentError("chamber needs 6 numbers: x0 y0 z0 x1 y1 z1");
  ChamberSpec chamber{Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])};
  chamber.validate();
  return chamber;
}

// Chamber that comfortably contains the cloud plus the worst-case warp,
// used when the caller gives none.
ChamberSpec chamber_around(const PointCloud& cloud, const WarpSpec& warp) {
  Vec3 lo = cloud.points.front();
  Vec3 hi = lo;
  for (const Vec3& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double pad = std::abs(warp.amplitude) * (1.0 + warp.edge_gain) + 1.0;
  return {lo - Vec3::Constant(pad), hi + Vec3::Constant(pad)};
}

std::vector<std::array<int, 2>> edges_from_faces(const std::vector<std::array<int, 3>>& faces) {
  std::set<std::array<int, 2>> unique;
  for (const auto& f : faces) {
    for (int k = 0; k < 3; ++k) {
      int a = f[k], b = f[(k + 1) % 3];
      unique.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return {unique.begin(), unique.end()};
}

IsoGraph load_graph(const std::string& graph_path, const std::string& edges_path) {
  PlyMesh mesh = read_ply_mesh(graph_path);
  IsoGraph graph;
  graph.vertices = std::move(mesh.vertices);
  graph.faces = std::move(mesh.faces);
  graph.edges = edges_path.empty() ? edges_from_faces(graph.faces) : read_edge_list(edges_path);
  graph.build_neighbors();
  return graph;
}

TrainingConfig training_from(const CommonOpts& opts, const KeyValueConfig& cfg, int epochs,
                             double lr, int batch) {
  TrainingConfig training;
  training.epochs = epochs > 0 ? epochs : cfg.get_int("epochs", 1000);
  training.learning_rate = lr > 0.0 ? lr : cfg.get_double("learning_rate", 1e-3);
  training.batch_size = batch >= 0 ? batch : cfg.get_int("batch_size", 0);
  training.w_l2 = cfg.get_double("w_l2", 1.0);
  training.w_chamfer = cfg.get_double("w_chamfer", 1.0);
  training.seed = opts.seed;
  return training;
}

NetworkConfig network_from(const KeyValueConfig& cfg, const std::string& widths_flag) {
  NetworkConfig net;
  std::string widths = widths_flag;
  if (widths.empty() && cfg.has("widths")) widths = cfg.get("widths");
  if (!widths.empty()) {
    net.widths.clear();
    std::istringstream ss(widths);
    int w;
    while (ss >> w) net.widths.push_back(w);
  }
  net.validate();
  return net;
}

int run_remesh(const CommonOpts& opts, const std::string& mesh_path, double voxel_size,
               int target_vertices) {
  TriangleMesh mesh = read_obj(mesh_path);
  double voxel = voxel_size;
  if (voxel <= 0.0) {
    voxel = target_vertices > 0 ? voxel_size_for_vertex_count(mesh, target_vertices)
                                : default_voxel_size(mesh);
  }
  IsoGraph graph = remesh(mesh, voxel, opts.seed);
  write_ply_mesh(graph.vertices, graph.faces, opts.out_dir + "/graph.ply");
  write_edge_list(graph.edges, opts.out_dir + "/graph.edges");
  IsometryStats stats = isometry_report(graph);
  std::printf("vertices=%d edges=%zu mean_edge=%.6g cv=%.6g\n", graph.vertex_count(),
              graph.edges.size(), stats.mean, stats.cv);
  emit_manifest(opts, "remesh",
                {{"voxel_size", fmtd(voxel)}, {"target_vertices", std::to_string(target_vertices)}},
                {{"mesh", mesh_path}});
  return 0;
}

int run_simulate(const CommonOpts& opts, const std::string& cloud_path, WarpSpec warp,
                 const std::vector<double>& chamber_flag) {
  PointCloud cad = read_ply_cloud(cloud_path).cloud;
  cad.validate();
  if (warp.wavelength <= 0.0) {
    double lo = cad.points.front().x(), hi = lo;
    for (const Vec3& p : cad.points) {
      lo = std::min(lo, p.x());
      hi = std::max(hi, p.x());
    }
    warp.wavelength = std::max(hi - lo, 1e-9);
  }
  warp.chamber = chamber_flag.empty() ? chamber_around(cad, warp) : parse_chamber(chamber_flag);
  warp.seed = opts.seed;
  warp.validate();
  PointCloud scan = simulate_print(cad, warp);
  write_ply_cloud(scan, opts.out_dir + "/scan.ply");
  emit_manifest(opts, "simulate",
                {{"amplitude", fmtd(warp.amplitude)},
                 {"edge_gain", fmtd(warp.edge_gain)},
                 {"wavelength", fmtd(warp.wavelength)},
                 {"noise_sigma", fmtd(warp.noise_sigma)},
                 {"chamber_min", fmtd(warp.chamber.min_corner.x()) + " " +
                                     fmtd(warp.chamber.min_corner.y()) + " " +
                                     fmtd(warp.chamber.min_corner.z())},
                 {"chamber_max", fmtd(warp.chamber.max_corner.x()) + " " +
                                     fmtd(warp.chamber.max_corner.y()) + " " +
                                     fmtd(warp.chamber.max_corner.z())}},
                {{"cloud", cloud_path}});
  return 0;
}

int run_train_predict(const CommonOpts& opts, const std::string& dataset_dir, int epochs,
                      double lr, int batch, const std::string& widths) {
  KeyValueConfig cfg = load_config(opts);
  ChamberSpec chamber;
  Dataset dataset = load_dataset(dataset_dir, &chamber);
  TrainingConfig training = training_from(opts, cfg, epochs, lr, batch);
  NetworkConfig net = network_from(cfg, widths);
  TrainResult result = train_predictor(dataset, net, chamber, training);
  save_model(result.engine, opts.out_dir + "/predictor.wcp");
  write_loss_csv(result.history, opts.out_dir + "/loss_train.csv", false);
  write_loss_csv(result.history, opts.out_dir + "/loss_val.csv", true);
  std::printf("best_epoch=%d best_val=%.9g\n", result.best_epoch, result.best_val);
  emit_manifest(opts, "train-predict",
                {{"dataset", dataset_dir},
                 {"epochs", std::to_string(training.epochs)},
                 {"learning_rate", fmtd(training.learning_rate)},
                 {"batch_size", std::to_string(training.batch_size)},
                 {"w_l2", fmtd(training.w_l2)},
                 {"w_chamfer", fmtd(training.w_chamfer)}},
                {{"dataset_index", dataset_dir + "/dataset.txt"}});
  return 0;
}

int run_train_compensate(const CommonOpts& opts, const std::string& dataset_dir,
                         const std::string& predictor_path, int epochs, double lr, int batch) {
  KeyValueConfig cfg = load_config(opts);
  Dataset dataset = load_dataset(dataset_dir);
  Engine predictor = load_model(predictor_path);
  TrainingConfig training = training_from(opts, cfg, epochs, lr, batch);
  TrainResult result = train_compensator(dataset, predictor, training);
  save_model(result.engine, opts.out_dir + "/compensator.wcp");
  write_loss_csv(result.history, opts.out_dir + "/loss_train.csv", false);
  write_loss_csv(result.history, opts.out_dir + "/loss_val.csv", true);
  std::printf("best_epoch=%d best_val=%.9g\n", result.best_epoch, result.best_val);
  emit_manifest(opts, "train-compensate",
                {{"dataset", dataset_dir},
                 {"epochs", std::to_string(training.epochs)},
                 {"learning_rate", fmtd(training.learning_rate)},
                 {"batch_size", std::to_string(training.batch_size)},
                 {"w_l2", fmtd(training.w_l2)},
                 {"w_chamfer", fmtd(training.w_chamfer)}},
                {{"dataset_index", dataset_dir + "/dataset.txt"},
                 {"predictor", predictor_path}});
  return 0;
}

int run_compensate(const CommonOpts& opts, const std::string& model_path,
                   const std::string& cad_path, const std::string& graph_path,
                   const std::string& edges_path) {
  Engine engine = load_model(model_path);
  PointCloud cad = read_ply_cloud(cad_path).cloud;
  IsoGraph graph = load_graph(graph_path, edges_path);
  PointCloud compensated = engine_forward(engine, cad, graph);
  write_ply_cloud(compensated, opts.out_dir + "/compensated.ply");
  std::vector<std::pair<std::string, std::string>> inputs = {
      {"model", model_path}, {"cad", cad_path}, {"graph", graph_path}};
  if (!edges_path.empty()) inputs.push_back({"edges", edges_path});
  emit_manifest(opts, "compensate", {}, inputs);
  return 0;
}

int run_evaluate(const CommonOpts& opts, const std::string& cad_path, const std::string& scan_path,
                 const std::string& graph_path, const std::string& baseline_scan_path,
                 const std::string& part_id) {
  PointCloud cad = read_ply_cloud(cad_path).cloud;
  PointCloud scan = read_ply_cloud(scan_path).cloud;
  IsoGraph graph = load_graph(graph_path, "");
  DeviationReport baseline;
  const DeviationReport* baseline_ptr = nullptr;
  if (!baseline_scan_path.empty()) {
    PointCloud baseline_scan = read_ply_cloud(baseline_scan_path).cloud;
    baseline = deviation_report(cad, baseline_scan, graph);
    baseline_ptr = &baseline;
  }
  SignedDeviationField field;
  DeviationReport report = deviation_report(cad, scan, graph, &field, baseline_ptr);
  write_report_csv({part_id}, {report}, opts.out_dir + "/report.csv");
  export_heatmap(field, cad, opts.out_dir + "/heatmap.ply");
  std::printf("min=%.4f max=%.4f std=%.4f abs_mean=%.4f", report.min, report.max, report.stddev,
              report.abs_mean);
  if (report.improvement) std::printf(" improvement=%.1f%%", *report.improvement);
  std::printf("\n");
  std::vector<std::pair<std::string, std::string>> inputs = {
      {"cad", cad_path}, {"scan", scan_path}, {"graph", graph_path}};
  if (!baseline_scan_path.empty()) inputs.push_back({"baseline_scan", baseline_scan_path});
  emit_manifest(opts, "evaluate", {{"part", part_id}}, inputs);
  return 0;
}

int run_gradcheck(const CommonOpts& opts, double eps, double threshold) {
  // Small random engine over a coarse cube shell; random head so the
  // residual path is exercised.
  TriangleMesh cube = make_box_mesh(Vec3::Zero(), Vec3::Constant(10.0));
  IsoGraph graph = remesh(cube, 2.5, opts.seed);
  ChamberSpec chamber{Vec3::Constant(-5.0), Vec3::Constant(15.0)};

  NetworkConfig net;
  net.widths = {8, 8};
  Engine engine;
  engine.config = net;
  engine.chamber = chamber;
  engine.params = init_params(net, opts.seed, /*zero_head=*/false);

  PointCloud cad(graph.vertices);
  WarpSpec warp;
  warp.chamber = chamber;
  warp.wavelength = 10.0;
  warp.amplitude = 0.5;
  warp.seed = opts.seed + 1;
  PointCloud target = simulate_print(cad, warp.with_part_center(cad.centroid()));

  EdgeStructure edges = EdgeStructure::from(graph);
  Matrix input = cloud_to_matrix(cad);

  Tape tape;
  std::vector<int> param_nodes;
  int out = engine_forward_node(tape, tape.leaf(input), edges, engine, false, &param_nodes);
  LossNodes loss = deformation_loss_node(tape, out, target);
  tape.backward(loss.total);
  Vector analytic(engine.params.flat_size());
  int at = 0;
  for (int node : param_nodes) {
    const Matrix& g = tape.grad(node);
    for (int r = 0; r < g.rows(); ++r) {
      for (int c = 0; c < g.cols(); ++c) analytic[at++] = g(r, c);
    }
  }

  auto loss_fn = [&](const ParamSet& params) {
    Engine probe = engine;
    probe.params = params;
    PointCloud pred = engine_forward(probe, cad, graph);
    return deformation_loss(pred, target).total;
  };
  double err = grad_check(loss_fn, engine.params, analytic, eps);
  std::printf("max_relative_error=%.6g threshold=%.6g\n", err, threshold);
  return err <= threshold ? 0 : 1;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Position-aware warp prediction and compensation pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto* remesh_cmd = app.add_subcommand("remesh", "Voxel-wrap a CAD mesh into an isometric graph");
  std::string mesh_path;
  double voxel_size = 0.0;
  int target_vertices = 0;
  remesh_cmd->add_option("--mesh", mesh_path, "Input OBJ mesh")->required();
  remesh_cmd->add_option("--voxel-size", voxel_size, "Grid resolution in mm (0 = auto)");
  remesh_cmd->add_option("--target-vertices", target_vertices, "Approximate shell vertex budget");
  add_common(remesh_cmd, opts);

  auto* simulate_cmd = app.add_subcommand("simulate", "Run the synthetic print oracle on a cloud");
  std::string cloud_path;
  WarpSpec warp_flags;
  warp_flags.wavelength = 0.0;  // 0 = derive from the part length
  std::vector<double> chamber_flag;
  simulate_cmd->add_option("--cloud", cloud_path, "Input PLY cloud")->required();
  simulate_cmd->add_option("--amplitude", warp_flags.amplitude, "Warp amplitude, mm");
  simulate_cmd->add_option("--edge-gain", warp_flags.edge_gain, "Radial gain factor");
  simulate_cmd->add_option("--wavelength", warp_flags.wavelength,
                           "Warp wavelength, mm (0 = part length)");
  simulate_cmd->add_option("--noise-sigma", warp_flags.noise_sigma, "Gaussian noise sigma, mm");
  simulate_cmd->add_option("--chamber", chamber_flag, "Chamber corners: x0 y0 z0 x1 y1 z1")
      ->expected(6);
  add_common(simulate_cmd, opts);

  auto* tp_cmd = app.add_subcommand("train-predict", "Stage 1: fit the deformation predictor");
  std::string dataset_dir, widths;
  int epochs = 0, batch = -1;
  double lr = 0.0;
  tp_cmd->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  tp_cmd->add_option("--epochs", epochs, "Training epochs");
  tp_cmd->add_option("--lr", lr, "Learning rate");
  tp_cmd->add_option("--batch-size", batch, "Parts per update (0 = full batch)");
  tp_cmd->add_option("--widths", widths, "Layer widths, space-separated");
  add_common(tp_cmd, opts);

  auto* tc_cmd =
      app.add_subcommand("train-compensate", "Stage 2: fit the compensator through the predictor");
  std::string predictor_path;
  tc_cmd->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  tc_cmd->add_option("--predictor", predictor_path, "Trained predictor model file")->required();
  tc_cmd->add_option("--epochs", epochs, "Training epochs");
  tc_cmd->add_option("--lr", lr, "Learning rate");
  tc_cmd->add_option("--batch-size", batch, "Parts per update (0 = full batch)");
  add_common(tc_cmd, opts);

  auto* comp_cmd = app.add_subcommand("compensate", "Apply a compensator model to a CAD cloud");
  std::string model_path, cad_path, graph_path, edges_path;
  comp_cmd->add_option("--model", model_path, "Compensator model file")->required();
  comp_cmd->add_option("--cad", cad_path, "Input PLY cloud")->required();
  comp_cmd->add_option("--graph", graph_path, "Isometric graph PLY")->required();
  comp_cmd->add_option("--edges", edges_path, "Edge-list sidecar (default: from faces)");
  add_common(comp_cmd, opts);

  auto* eval_cmd = app.add_subcommand("evaluate", "Deviation report and heatmap for a scan");
  std::string scan_path, baseline_scan_path, part_id = "part";
  eval_cmd->add_option("--cad", cad_path, "Designed PLY cloud")->required();
  eval_cmd->add_option("--scan", scan_path, "Measured PLY cloud")->required();
  eval_cmd->add_option("--graph", graph_path, "Isometric graph PLY")->required();
  eval_cmd->add_option("--baseline-scan", baseline_scan_path,
                       "Uncompensated scan for the improvement column");
  eval_cmd->add_option("--part", part_id, "Part id for the report row");
  add_common(eval_cmd, opts);

  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of engine gradients");
  double eps = 1e-5, threshold = 1e-4;
  gc_cmd->add_option("--eps", eps, "Central-difference step");
  gc_cmd->add_option("--threshold", threshold, "Pass threshold on max relative error");
  add_common(gc_cmd, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    fs::create_directories(opts.out_dir);
    if (remesh_cmd->parsed()) return run_remesh(opts, mesh_path, voxel_size, target_vertices);
    if (simulate_cmd->parsed()) return run_simulate(opts, cloud_path, warp_flags, chamber_flag);
    if (tp_cmd->parsed()) return run_train_predict(opts, dataset_dir, epochs, lr, batch, widths);
    if (tc_cmd->parsed()) {
      return run_train_compensate(opts, dataset_dir, predictor_path, epochs, lr, batch);
    }
    if (comp_cmd->parsed()) {
      return run_compensate(opts, model_path, cad_path, graph_path, edges_path);
    }
    if (eval_cmd->parsed()) {
      return run_evaluate(opts, cad_path, scan_path, graph_path, baseline_scan_path, part_id);
    }
    if (gc_cmd->parsed()) return run_gradcheck(opts, eps, threshold);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace wcp
