#pragma once

#include "pedcross/metrics.hpp"
#include "pedcross/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace pedcross {

struct TrainConfig {
  double learning_rate = 5e-4;
  int epochs = 30;
  int batch_size = 128;
  double l1_lstm = 0.01;
  double l2_ic_stream = 0.05;
  double l2_lc_stream = 0.001;
  double traj_loss_weight = 1.0;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct Checkpoint {
  ModelConfig config;
  TrainConfig train_config;
  ModelParams params;
  int epoch = 0;
};

// Learning-rate set {5e-4, 7e-4, 1e-3}, keyed to the rounded mean real
// node count of the training scenes: <=3 -> 1e-3, 4..6 -> 7e-4, >=7 -> 5e-4.
double resolve_learning_rate(const std::vector<SceneSequence>& train_set);

// BCE + traj_weight * trajectory MSE + l1 |lstm| + l2_ic ic^2 + l2_lc lc^2.
DiffTensor total_loss(const DiffTensor& y_hat, int y, const DiffTensor& traj_hat,
                      const Array& traj_true, const BoundParams& params,
                      const TrainConfig& cfg);

// theta' = theta - lr * theta.grad for every parameter; aborts with the
// parameter's name if its gradient is not finite.
void sgd_step(ModelParams& params, double lr);

Checkpoint train(const std::vector<SceneSequence>& train_set,
                 const std::vector<SceneSequence>& val_set, const ModelConfig& mcfg,
                 const TrainConfig& tcfg, std::vector<EpochLog>* log = nullptr,
                 std::ostream* progress = nullptr);

// Forward over every scene, threshold at config.threshold (ties resolve to
// not-crossing), Table-style metrics plus mean ADE/FDE on absolute positions.
MetricsReport evaluate(const Checkpoint& ckpt,
                       const std::vector<SceneSequence>& scenes);

}  // namespace pedcross
