#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wcp/graphnet.hpp"
#include "wcp/losses.hpp"
#include "wcp/print_oracle.hpp"

namespace wcp {

struct TrainingConfig {
  double learning_rate = 1e-3;
  int epochs = 1000;
  int batch_size = 0;  // 0 = full batch over parts
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double w_l2 = 1.0;
  double w_chamfer = 1.0;
  std::string checkpoint_dir;  // empty disables checkpoint files
  int round_index = 1;         // used in checkpoint names

  void validate() const;
};

// One training sample: the isometric graph with its placed CAD vertices and
// the corresponding scan, all in the chamber frame and index-aligned.
struct Sample {
  std::string id;
  IsoGraph graph;
  PointCloud cad;
  PointCloud scan;
  Placement placement;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<int> train_indices;
  std::vector<int> val_indices;

  void validate() const;  // counts aligned, split disjoint
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
};

// Standard Adam update with bias correction. Throws NumericFaultError on
// NaN gradients.
void adam_step(ParamSet& params, const Vector& grad, AdamState& state,
               const TrainingConfig& config);

struct EpochLoss {
  LossBreakdown train;  // at the parameters entering the epoch
  LossBreakdown val;    // after the epoch's update
};

struct TrainResult {
  Engine engine;  // best-validation parameters
  std::vector<EpochLoss> history;
  int best_epoch = -1;
  double best_val = 0.0;
};

// Stage 1: minimize deformation_loss(D(cad_i), scan_i) over training
// samples; returns the best-validation parameters.
TrainResult train_predictor(const Dataset& dataset, const NetworkConfig& config,
                            const ChamberSpec& chamber, const TrainingConfig& training);

// Stage 2: with the predictor frozen, minimize
// deformation_loss(D(G(cad_i)), cad_i). Gradients update theta_comp only.
TrainResult train_compensator(const Dataset& dataset, const Engine& predictor,
                              const TrainingConfig& training);

struct RoundResult {
  TrainResult predictor;
  TrainResult compensator;
};

// Alternates stage 1 and stage 2 for `rounds` rounds. When `oracle` is set
// and augment is true, each round appends freshly simulated
// (compensated CAD, simulated scan) training pairs before the next round.
std::vector<RoundResult> iterate_loop(Dataset dataset, const NetworkConfig& config,
                                      const ChamberSpec& chamber, const TrainingConfig& training,
                                      int rounds, bool augment = false,
                                      const std::optional<WarpSpec>& oracle = std::nullopt);

// Deformation loss of an engine over a set of samples (predictor target =
// scan; compensator target handled by the trainer itself).
LossBreakdown predictor_loss(const Engine& engine, const Sample& sample, double w_l2 = 1.0,
                             double w_chamfer = 1.0);

// Loss curve CSV (epoch, l2, chamfer, total); set validation=true for the
// per-epoch validation curve.
void write_loss_csv(const std::vector<EpochLoss>& history, const std::string& path,
                    bool validation = false);

}  // namespace wcp
