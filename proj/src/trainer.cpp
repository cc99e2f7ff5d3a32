#include "pedcross/trainer.hpp"

#include "pedcross/rng.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace pedcross {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Array traj_target(const SceneSequence& seq) {
  const Eigen::Vector2d origin = seq.last_target_center();
  Array t(2 * seq.horizon());
  for (int k = 0; k < seq.horizon(); ++k) {
    t[2 * k] = seq.label_future[static_cast<std::size_t>(k)].x() - origin.x();
    t[2 * k + 1] = seq.label_future[static_cast<std::size_t>(k)].y() - origin.y();
  }
  return t;
}

DiffTensor group_penalty(Tape& tape, const BoundParams& p,
                         const std::vector<int>& group, double coef, bool l1) {
  DiffTensor acc = tape.constant_scalar(0.0);
  if (coef == 0.0) return acc;
  for (int idx : group) {
    const DiffTensor& t = p.t[static_cast<std::size_t>(idx)];
    acc = add(acc, l1 ? l1_sum(t) : sq_sum(t));
  }
  return scale(acc, coef);
}

}  // namespace

void TrainConfig::validate() const {
  check(learning_rate >= 0.0, "TrainConfig: learning_rate must be >= 0");
  check(epochs >= 1, "TrainConfig: epochs must be >= 1");
  check(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
  check(l1_lstm >= 0.0 && l2_ic_stream >= 0.0 && l2_lc_stream >= 0.0,
        "TrainConfig: regularization coefficients must be >= 0");
  check(traj_loss_weight >= 0.0, "TrainConfig: traj_loss_weight must be >= 0");
}

double resolve_learning_rate(const std::vector<SceneSequence>& train_set) {
  check(!train_set.empty(), "resolve_learning_rate: empty dataset");
  long long total = 0, frames = 0;
  for (const auto& seq : train_set) {
    for (const auto& frame : seq.frames) {
      total += static_cast<long long>(frame.size());
      ++frames;
    }
  }
  const long long mean_nodes =
      static_cast<long long>(std::llround(static_cast<double>(total) /
                                          static_cast<double>(frames)));
  if (mean_nodes <= 3) return 1e-3;
  if (mean_nodes <= 6) return 7e-4;
  return 5e-4;
}

DiffTensor total_loss(const DiffTensor& y_hat, int y, const DiffTensor& traj_hat,
                      const Array& traj_true, const BoundParams& params,
                      const TrainConfig& cfg) {
  Tape& tape = *y_hat.tape;
  DiffTensor loss = bce_loss(y_hat, y);
  if (cfg.traj_loss_weight != 0.0) {
    loss = add(loss, scale(mse_rows(traj_hat, traj_true), cfg.traj_loss_weight));
  }
  check(params.source != nullptr, "total_loss: parameters are not bound");
  loss = add(loss, group_penalty(tape, params, params.source->lstm_group,
                                 cfg.l1_lstm, /*l1=*/true));
  loss = add(loss, group_penalty(tape, params, params.source->ic_group,
                                 cfg.l2_ic_stream, /*l1=*/false));
  loss = add(loss, group_penalty(tape, params, params.source->lc_group,
                                 cfg.l2_lc_stream, /*l1=*/false));
  return loss;
}

void sgd_step(ModelParams& params, double lr) {
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    DiffTensor& t = params.tensors[i];
    check(t.grad.has_value() && t.grad->size() == t.values.size(),
          "sgd_step: missing gradient for parameter '" + params.names[i] + "'");
    if (!t.grad->allFinite())
      throw std::runtime_error("sgd_step: non-finite gradient for parameter '" +
                               params.names[i] + "'");
    t.values -= lr * *t.grad;
  }
}

namespace {

struct ExampleLoss {
  double value = 0.0;
};

// Forward + loss for one scene; when accumulate is non-null the parameter
// gradients are added into it (index-aligned with ModelParams).
ExampleLoss run_example(const SceneSequence& seq, const ModelParams& params,
                        const ModelConfig& mcfg, const TrainConfig& tcfg,
                        std::vector<Array>* accumulate) {
  Tape tape;
  tape.reserve(512);
  BoundParams bound = bind_params(tape, params);
  ForwardTensors f = forward_tape(tape, seq, bound, mcfg);
  DiffTensor loss = total_loss(f.y_hat, seq.label_crossing, f.traj_offsets,
                               traj_target(seq), bound, tcfg);
  if (accumulate != nullptr) {
    tape.backward(loss);
    for (std::size_t i = 0; i < bound.t.size(); ++i)
      (*accumulate)[i] += tape.grad(bound.t[i]);
  }
  return ExampleLoss{loss.scalar_value()};
}

}  // namespace

Checkpoint train(const std::vector<SceneSequence>& train_set,
                 const std::vector<SceneSequence>& val_set, const ModelConfig& mcfg,
                 const TrainConfig& tcfg, std::vector<EpochLog>* log,
                 std::ostream* progress) {
  mcfg.validate();
  tcfg.validate();
  check(!train_set.empty(), "train: empty dataset");
  for (const auto& seq : train_set) {
    check(seq.horizon() == mcfg.horizon,
          "train: scene horizon " + std::to_string(seq.horizon()) +
              " does not match model horizon " + std::to_string(mcfg.horizon));
  }

  ModelParams params = ModelParams::init(mcfg, tcfg.seed);
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  const int n = static_cast<int>(train_set.size());
  for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    if (tcfg.shuffle) {
      Rng rng(split_seed(tcfg.seed, 0x9000 + static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order);
    }
    // Per-example losses are re-summed in dataset order so the logged loss
    // does not depend on the shuffle's floating-point summation order.
    std::vector<double> example_loss(static_cast<std::size_t>(n), 0.0);
    for (int start = 0; start < n; start += tcfg.batch_size) {
      const int count = std::min(tcfg.batch_size, n - start);
      std::vector<Array> grads;
      grads.reserve(params.tensors.size());
      for (const auto& t : params.tensors) grads.push_back(Array::Zero(t.size()));

      for (int i = 0; i < count; ++i) {
        const int idx = order[static_cast<std::size_t>(start + i)];
        const SceneSequence& seq = train_set[static_cast<std::size_t>(idx)];
        example_loss[static_cast<std::size_t>(idx)] =
            run_example(seq, params, mcfg, tcfg, &grads).value;
      }
      for (std::size_t i = 0; i < params.tensors.size(); ++i)
        params.tensors[i].grad = grads[i] / count;
      sgd_step(params, tcfg.learning_rate);
    }
    double epoch_loss = 0.0;
    for (double v : example_loss) epoch_loss += v;

    double val_loss = 0.0;
    for (const auto& seq : val_set)
      val_loss += run_example(seq, params, mcfg, tcfg, nullptr).value;
    if (!val_set.empty()) val_loss /= static_cast<double>(val_set.size());

    const double train_loss = epoch_loss / n;
    if (!std::isfinite(train_loss))
      throw std::runtime_error("train: non-finite training loss at epoch " +
                               std::to_string(epoch));
    if (log != nullptr) log->push_back(EpochLog{epoch, train_loss, val_loss});
    if (progress != nullptr) {
      (*progress) << "epoch " << epoch << " train_loss " << train_loss
                  << " val_loss " << val_loss << "\n";
    }
  }
  return Checkpoint{mcfg, tcfg, std::move(params), tcfg.epochs};
}

MetricsReport evaluate(const Checkpoint& ckpt,
                       const std::vector<SceneSequence>& scenes) {
  check(!scenes.empty(), "evaluate: empty dataset");
  std::vector<int> preds, labels;
  double ade_sum = 0.0, fde_sum = 0.0;
  for (const auto& seq : scenes) {
    check(seq.horizon() == ckpt.config.horizon,
          "evaluate: scene horizon " + std::to_string(seq.horizon()) +
              " does not match model horizon " + std::to_string(ckpt.config.horizon));
    Prediction p = forward(seq, ckpt.params, ckpt.config);
    preds.push_back(p.decision);
    labels.push_back(seq.label_crossing);
    RowMat truth(seq.horizon(), 2);
    for (int k = 0; k < seq.horizon(); ++k) {
      truth(k, 0) = seq.label_future[static_cast<std::size_t>(k)].x();
      truth(k, 1) = seq.label_future[static_cast<std::size_t>(k)].y();
    }
    ade_sum += ade(p.traj_absolute, truth);
    fde_sum += fde(p.traj_absolute, truth);
  }
  MetricsReport r = classification_metrics(preds, labels);
  r.ade = ade_sum / static_cast<double>(scenes.size());
  r.fde = fde_sum / static_cast<double>(scenes.size());
  return r;
}

}  // namespace pedcross
