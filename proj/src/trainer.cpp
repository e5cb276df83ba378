#include "wcp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "wcp/errors.hpp"

namespace wcp {

void TrainingConfig::validate() const {
  if (learning_rate <= 0.0) throw InvalidArgumentError("learning rate must be positive");
  if (epochs < 1) throw InvalidArgumentError("epochs must be >= 1");
  if (batch_size < 0) throw InvalidArgumentError("batch size must be >= 0");
}

void Dataset::validate() const {
  if (samples.empty()) throw InvalidArgumentError("dataset is empty");
  for (const Sample& s : samples) {
    if (s.cad.size() != s.graph.vertex_count()) {
      throw AlignmentError("sample '" + s.id + "': CAD cloud count != graph vertex count");
    }
    if (s.scan.empty()) throw EmptyCloudError("sample '" + s.id + "' has an empty scan");
  }
  std::unordered_set<int> train(train_indices.begin(), train_indices.end());
  for (int i : val_indices) {
    if (train.count(i)) throw InvalidArgumentError("train/validation split is not disjoint");
  }
  for (int i : train_indices) {
    if (i < 0 || i >= static_cast<int>(samples.size())) {
      throw IndexError("train index out of range");
    }
  }
  for (int i : val_indices) {
    if (i < 0 || i >= static_cast<int>(samples.size())) {
      throw IndexError("validation index out of range");
    }
  }
}

void adam_step(ParamSet& params, const Vector& grad, AdamState& state,
               const TrainingConfig& config) {
  config.validate();
  const int n = params.flat_size();
  if (grad.size() != n) throw ShapeError("gradient length does not match parameters");
  if (!grad.allFinite()) {
    throw NumericFaultError("NaN or Inf in gradients; aborting the run");
  }
  if (state.step == 0) {
    state.m = Vector::Zero(n);
    state.v = Vector::Zero(n);
  }
  state.step += 1;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  state.v = config.beta2 * state.v.array().matrix() +
            (1.0 - config.beta2) * grad.cwiseProduct(grad);
  double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  Vector flat = params.flatten();
  for (int i = 0; i < n; ++i) {
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    flat[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
  }
  params.set_flat(flat);
}

namespace {

struct SampleCache {
  EdgeStructure edges;
  Matrix cad;
};

std::vector<SampleCache> build_caches(const Dataset& dataset) {
  std::vector<SampleCache> caches;
  caches.reserve(dataset.samples.size());
  for (const Sample& s : dataset.samples) {
    caches.push_back({EdgeStructure::from(s.graph), cloud_to_matrix(s.cad)});
  }
  return caches;
}

// Per-sample loss + flat parameter gradient for either training stage.
// For stage 2, `frozen_pred` is the fixed predictor; gradients flow to the
// engine under training only.
LossBreakdown sample_loss_and_grad(const Engine& engine, const Engine* frozen_pred,
                                   const Sample& sample, const SampleCache& cache,
                                   const TrainingConfig& cfg, Vector* grad_out) {
  Tape tape;
  int input = tape.leaf(cache.cad);
  std::vector<int> param_nodes;
  int out = engine_forward_node(tape, input, cache.edges, engine, /*frozen=*/grad_out == nullptr,
                                grad_out ? &param_nodes : nullptr);
  const PointCloud* target = &sample.scan;
  if (frozen_pred) {
    out = engine_forward_node(tape, out, cache.edges, *frozen_pred, /*frozen=*/true);
    target = &sample.cad;  // compensated-then-predicted shape must match the CAD
  }
  LossNodes loss = deformation_loss_node(tape, out, *target, cfg.w_l2, cfg.w_chamfer);
  if (grad_out) {
    tape.backward(loss.total);
    Vector grad(engine.params.flat_size());
    int at = 0;
    for (size_t i = 0; i < param_nodes.size(); ++i) {
      const Matrix& g = tape.grad(param_nodes[i]);
      const Matrix& v = tape.value(param_nodes[i]);
      if (g.size() == 0) {
        for (int k = 0; k < v.size(); ++k) grad[at++] = 0.0;
      } else {
        for (int r = 0; r < g.rows(); ++r) {
          for (int c = 0; c < g.cols(); ++c) grad[at++] = g(r, c);
        }
      }
    }
    *grad_out = grad;
  }
  return loss.values;
}

LossBreakdown mean_loss(const Engine& engine, const Engine* frozen_pred, const Dataset& dataset,
                        const std::vector<SampleCache>& caches, const std::vector<int>& indices,
                        const TrainingConfig& cfg) {
  LossBreakdown acc;
  if (indices.empty()) return acc;
  for (int i : indices) {
    LossBreakdown l =
        sample_loss_and_grad(engine, frozen_pred, dataset.samples[i], caches[i], cfg, nullptr);
    acc.l2 += l.l2;
    acc.chamfer += l.chamfer;
    acc.total += l.total;
  }
  double n = static_cast<double>(indices.size());
  acc.l2 /= n;
  acc.chamfer /= n;
  acc.total /= n;
  return acc;
}

std::string checkpoint_path(const TrainingConfig& cfg, EngineKind kind, int epoch) {
  return cfg.checkpoint_dir + "/" + engine_kind_name(kind) + "_" +
         std::to_string(cfg.round_index) + "_" + std::to_string(epoch) + ".wcp";
}

TrainResult train_engine(const Dataset& dataset, Engine engine, const Engine* frozen_pred,
                         const TrainingConfig& training) {
  training.validate();
  dataset.validate();
  std::vector<SampleCache> caches = build_caches(dataset);
  const std::vector<int>& train_idx = dataset.train_indices;
  if (train_idx.empty()) throw InvalidArgumentError("no training samples");
  // Model selection falls back to the training loss when no validation
  // samples are provided.
  const std::vector<int>& sel_idx =
      dataset.val_indices.empty() ? dataset.train_indices : dataset.val_indices;

  TrainResult result;
  result.engine = engine;
  result.best_val = std::numeric_limits<double>::infinity();

  AdamState state;
  const int n_params = engine.params.flat_size();
  const int batch =
      training.batch_size > 0 ? training.batch_size : static_cast<int>(train_idx.size());

  for (int epoch = 0; epoch < training.epochs; ++epoch) {
    EpochLoss epoch_loss;
    LossBreakdown train_acc;

    for (size_t start = 0; start < train_idx.size(); start += batch) {
      size_t stop = std::min(train_idx.size(), start + batch);
      Vector grad_sum = Vector::Zero(n_params);
      Vector grad(n_params);
      // Gradients reduced in part order for reproducibility.
      for (size_t k = start; k < stop; ++k) {
        int i = train_idx[k];
        LossBreakdown l = sample_loss_and_grad(engine, frozen_pred, dataset.samples[i], caches[i],
                                               training, &grad);
        grad_sum += grad;
        train_acc.l2 += l.l2;
        train_acc.chamfer += l.chamfer;
        train_acc.total += l.total;
      }
      grad_sum /= static_cast<double>(stop - start);
      adam_step(engine.params, grad_sum, state, training);
    }

    double n = static_cast<double>(train_idx.size());
    epoch_loss.train = {train_acc.l2 / n, train_acc.chamfer / n, train_acc.total / n};
    epoch_loss.val = mean_loss(engine, frozen_pred, dataset, caches, sel_idx, training);
    result.history.push_back(epoch_loss);

    if (epoch_loss.val.total < result.best_val) {
      result.best_val = epoch_loss.val.total;
      result.best_epoch = epoch;
      result.engine = engine;
    }
  }

  if (!training.checkpoint_dir.empty()) {
    save_model(result.engine, checkpoint_path(training, engine.kind, result.best_epoch));
  }
  return result;
}

}  // namespace

TrainResult train_predictor(const Dataset& dataset, const NetworkConfig& config,
                            const ChamberSpec& chamber, const TrainingConfig& training) {
  Engine engine;
  engine.config = config;
  engine.kind = EngineKind::Predictor;
  engine.chamber = chamber;
  engine.params = init_params(config, training.seed);
  return train_engine(dataset, std::move(engine), nullptr, training);
}

TrainResult train_compensator(const Dataset& dataset, const Engine& predictor,
                              const TrainingConfig& training) {
  if (predictor.kind != EngineKind::Predictor) {
    throw ContractError("stage 2 requires a trained predictor engine");
  }
  Engine engine;
  engine.config = predictor.config;
  engine.kind = EngineKind::Compensator;
  engine.chamber = predictor.chamber;
  engine.params = init_params(engine.config, training.seed + 1);
  return train_engine(dataset, std::move(engine), &predictor, training);
}

std::vector<RoundResult> iterate_loop(Dataset dataset, const NetworkConfig& config,
                                      const ChamberSpec& chamber, const TrainingConfig& training,
                                      int rounds, bool augment,
                                      const std::optional<WarpSpec>& oracle) {
  if (rounds < 1) throw InvalidArgumentError("rounds must be >= 1");
  if (augment && !oracle.has_value()) {
    throw InvalidArgumentError("dataset augmentation needs a print oracle spec");
  }
  std::vector<RoundResult> results;
  for (int round = 1; round <= rounds; ++round) {
    TrainingConfig cfg = training;
    cfg.round_index = round;
    RoundResult rr;
    rr.predictor = train_predictor(dataset, config, chamber, cfg);
    rr.compensator = train_compensator(dataset, rr.predictor.engine, cfg);

    if (augment && round < rounds) {
      // Feed freshly simulated (compensated CAD, simulated scan) pairs back
      // into the training set.
      size_t base = dataset.samples.size();
      std::vector<Sample> extra;
      for (int i : dataset.train_indices) {
        const Sample& s = dataset.samples[i];
        Sample aug = s;
        aug.id = s.id + "_aug" + std::to_string(round);
        aug.cad = engine_forward(rr.compensator.engine, s.cad, s.graph);
        aug.graph.vertices = aug.cad.points;
        WarpSpec spec = oracle->with_part_center(s.cad.centroid());
        spec.seed = oracle->seed + 7919 * (base + extra.size());
        aug.scan = simulate_print(aug.cad, spec);
        extra.push_back(std::move(aug));
      }
      for (size_t k = 0; k < extra.size(); ++k) {
        dataset.train_indices.push_back(static_cast<int>(base + k));
        dataset.samples.push_back(std::move(extra[k]));
      }
    }
    results.push_back(std::move(rr));
  }
  return results;
}

LossBreakdown predictor_loss(const Engine& engine, const Sample& sample, double w_l2,
                             double w_chamfer) {
  PointCloud pred = engine_forward(engine, sample.cad, sample.graph);
  return deformation_loss(pred, sample.scan, w_l2, w_chamfer);
}

void write_loss_csv(const std::vector<EpochLoss>& history, const std::string& path,
                    bool validation) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "epoch,l2,chamfer,total\n";
  for (size_t e = 0; e < history.size(); ++e) {
    const LossBreakdown& l = validation ? history[e].val : history[e].train;
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g\n", e, l.l2, l.chamfer, l.total);
    out << buf;
  }
}

}  // namespace wcp
