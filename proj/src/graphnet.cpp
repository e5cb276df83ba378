#include "wcp/graphnet.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "wcp/errors.hpp"
#include "wcp/losses.hpp"
#include "wcp/rng.hpp"

namespace wcp {

void NetworkConfig::validate() const {
  if (widths.empty()) throw InvalidArgumentError("network needs at least one edge conv layer");
  for (int w : widths) {
    if (w < 1) throw InvalidArgumentError("layer width must be >= 1");
  }
  if (input_width < 1 || output_width < 1) throw InvalidArgumentError("invalid i/o width");
}

std::string engine_kind_name(EngineKind kind) {
  return kind == EngineKind::Predictor ? "predictor" : "compensator";
}

EngineKind engine_kind_from_name(const std::string& name) {
  if (name == "predictor") return EngineKind::Predictor;
  if (name == "compensator") return EngineKind::Compensator;
  throw InvalidArgumentError("unknown engine kind: " + name);
}

ParamSet init_params(const NetworkConfig& config, uint64_t seed, bool zero_head) {
  config.validate();
  Rng rng(seed);
  ParamSet params;
  int in = config.input_width;
  for (size_t l = 0; l < config.widths.size(); ++l) {
    int out = config.widths[l];
    int fan_in = 2 * in;
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + out));
    Matrix w(out, fan_in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    params.add("edge" + std::to_string(l) + "_w", std::move(w), 2);
    params.add("edge" + std::to_string(l) + "_b", Matrix::Zero(1, out), 1);
    in = out;
  }
  double bound = std::sqrt(6.0 / static_cast<double>(in + config.output_width));
  Matrix head(config.output_width, in);
  if (zero_head) {
    head.setZero();
  } else {
    for (int r = 0; r < head.rows(); ++r) {
      for (int c = 0; c < head.cols(); ++c) head(r, c) = rng.uniform(-bound, bound);
    }
  }
  params.add("head_w", std::move(head), 2);
  params.add("head_b", Matrix::Zero(1, config.output_width), 1);
  return params;
}

Matrix edge_conv(const Matrix& features, const IsoGraph& graph, const Matrix& theta,
                 const Matrix& bias) {
  EdgeStructure edges = EdgeStructure::from(graph);
  Tape tape;
  int x = tape.leaf(features);
  int e = tape.edge_concat(x, edges);
  int w = tape.leaf(theta);
  int b = tape.leaf(bias);
  int h = tape.affine(e, w, b);
  int m = tape.neighbor_mean(h, edges);
  int y = tape.relu(m);
  return tape.value(y);
}

int engine_forward_node(Tape& tape, int input_node, const EdgeStructure& edges,
                        const Engine& engine, bool frozen, std::vector<int>* param_nodes) {
  engine.config.validate();
  engine.chamber.validate();
  if (tape.value(input_node).rows() != edges.vertex_count) {
    throw AlignmentError("cloud vertex count does not match graph vertex count");
  }

  Vec3 extent = engine.chamber.extent();
  Vec3 scale(1.0 / extent.x(), 1.0 / extent.y(), 1.0 / extent.z());
  Vec3 shift = -engine.chamber.min_corner.cwiseProduct(scale);
  int x = tape.scale_shift(input_node, scale, shift);

  std::vector<int> pnodes;
  pnodes.reserve(engine.params.count());
  for (int i = 0; i < engine.params.count(); ++i) {
    pnodes.push_back(tape.leaf(engine.params.entry(i).value, !frozen));
  }
  if (param_nodes) *param_nodes = pnodes;

  const size_t layers = engine.config.widths.size();
  if (engine.params.count() != static_cast<int>(2 * layers + 2)) {
    throw ContractError("parameter set does not match network config");
  }
  for (size_t l = 0; l < layers; ++l) {
    int e = tape.edge_concat(x, edges);
    int h = tape.affine(e, pnodes[2 * l], pnodes[2 * l + 1]);
    int m = tape.neighbor_mean(h, edges);
    x = tape.relu(m);
  }
  int residual = tape.affine(x, pnodes[2 * layers], pnodes[2 * layers + 1]);
  return tape.add(input_node, residual);
}

PointCloud engine_forward(const Engine& engine, const PointCloud& cloud, const IsoGraph& graph) {
  EdgeStructure edges = EdgeStructure::from(graph);
  Tape tape;
  int input = tape.leaf(cloud_to_matrix(cloud));
  int out = engine_forward_node(tape, input, edges, engine, /*frozen=*/true);
  return matrix_to_cloud(tape.value(out));
}

PointCloud compose_comp_pred(const Engine& comp, const Engine& pred, bool pred_frozen,
                             const PointCloud& cloud, const IsoGraph& graph) {
  if (!pred_frozen) {
    throw ContractError("predictor must be frozen while composing with the compensator");
  }
  EdgeStructure edges = EdgeStructure::from(graph);
  Tape tape;
  int input = tape.leaf(cloud_to_matrix(cloud));
  int compensated = engine_forward_node(tape, input, edges, comp, /*frozen=*/true);
  int predicted = engine_forward_node(tape, compensated, edges, pred, /*frozen=*/true);
  return matrix_to_cloud(tape.value(predicted));
}

void save_model(const Engine& engine, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "wcpnet_model 1\n";
  out << "kind " << engine_kind_name(engine.kind) << '\n';
  out << "widths";
  for (int w : engine.config.widths) out << ' ' << w;
  out << '\n';
  out << "input_width " << engine.config.input_width << '\n';
  out << "output_width " << engine.config.output_width << '\n';
  char buf[256];
  std::snprintf(buf, sizeof(buf), "chamber_min %.17g %.17g %.17g\n", engine.chamber.min_corner.x(),
                engine.chamber.min_corner.y(), engine.chamber.min_corner.z());
  out << buf;
  std::snprintf(buf, sizeof(buf), "chamber_max %.17g %.17g %.17g\n", engine.chamber.max_corner.x(),
                engine.chamber.max_corner.y(), engine.chamber.max_corner.z());
  out << buf;
  out << "end_header\n";
  engine.params.save(out);
}

Engine load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("wcpnet_model", 0) != 0) {
    throw IoError("not a model file: " + path);
  }
  Engine engine;
  engine.config.widths.clear();
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "kind") {
      std::string name;
      ss >> name;
      engine.kind = engine_kind_from_name(name);
    } else if (key == "widths") {
      int w;
      while (ss >> w) engine.config.widths.push_back(w);
    } else if (key == "input_width") {
      ss >> engine.config.input_width;
    } else if (key == "output_width") {
      ss >> engine.config.output_width;
    } else if (key == "chamber_min") {
      ss >> engine.chamber.min_corner.x() >> engine.chamber.min_corner.y() >>
          engine.chamber.min_corner.z();
    } else if (key == "chamber_max") {
      ss >> engine.chamber.max_corner.x() >> engine.chamber.max_corner.y() >>
          engine.chamber.max_corner.z();
    } else {
      throw IoError("unknown model header key '" + key + "': " + path);
    }
  }
  engine.params = ParamSet::load(in);
  engine.config.validate();
  engine.chamber.validate();
  return engine;
}

}  // namespace wcp
