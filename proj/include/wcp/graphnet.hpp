#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wcp/autodiff.hpp"
#include "wcp/geometry.hpp"
#include "wcp/remesh.hpp"

namespace wcp {

struct NetworkConfig {
  std::vector<int> widths{64, 64, 64, 64};  // four edge-convolution layers
  int input_width = 3;                      // xyz, chamber frame
  int output_width = 3;

  void validate() const;
};

enum class EngineKind { Predictor, Compensator };

std::string engine_kind_name(EngineKind kind);
EngineKind engine_kind_from_name(const std::string& name);

// One trained engine: EdgeConv stack plus residual head. Input coordinates
// are scaled to [0,1]^3 by the chamber extents; the output adds the
// predicted offset (mm) to the input, so zero head weights give an exact
// identity.
struct Engine {
  NetworkConfig config;
  EngineKind kind = EngineKind::Predictor;
  ChamberSpec chamber;
  ParamSet params;
};

// Layer parameters: edge<l>_w (widths[l] x 2*in), edge<l>_b, head_w
// (3 x widths.back()), head_b. Hidden layers get Glorot-uniform init in
// +-sqrt(6/(fan_in+fan_out)); the head starts at zero unless zero_head is
// false (gradient checking wants a fully random net).
ParamSet init_params(const NetworkConfig& config, uint64_t seed, bool zero_head = true);

// One edge convolution (forward only): per vertex, the neighbor mean of
// theta * (x_i || x_i - x_j) plus bias, then ReLU.
Matrix edge_conv(const Matrix& features, const IsoGraph& graph, const Matrix& theta,
                 const Matrix& bias);

// Tape-recorded engine pass. `param_nodes` (aligned with params entries)
// receives the leaf ids so the caller can read gradients; pass frozen=true
// to keep parameter gradients at exactly zero.
int engine_forward_node(Tape& tape, int input_node, const EdgeStructure& edges,
                        const Engine& engine, bool frozen, std::vector<int>* param_nodes = nullptr);

// Convenience forward pass (no gradients).
PointCloud engine_forward(const Engine& engine, const PointCloud& cloud, const IsoGraph& graph);

// s' = D(G(c)) with the predictor frozen. Throws ContractError unless
// pred_frozen is true.
PointCloud compose_comp_pred(const Engine& comp, const Engine& pred, bool pred_frozen,
                             const PointCloud& cloud, const IsoGraph& graph);

// Model file: text header (network config, chamber scaling constants,
// engine kind) terminated by `end_header`, then the ParamSet binary.
void save_model(const Engine& engine, const std::string& path);
Engine load_model(const std::string& path);

}  // namespace wcp
