#include "pedcross/rng.hpp"
#include "pedcross/synthworld.hpp"
#include "pedcross/trainer.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace pedcross;
using pedcross::testing::make_scene;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.appearance_dim = 3;
  cfg.enc_channels1 = 1;
  cfg.enc_channels2 = 1;
  cfg.ic_hidden = {4, 4};
  cfg.lc_hidden = {4, 4};
  cfg.tmp_kernel = 2;
  cfg.lstm_hidden = 5;
  cfg.fcn_hidden = 8;
  cfg.horizon = 3;
  cfg.n_slots = 2;
  return cfg;
}

std::vector<SceneSequence> tiny_dataset(int n, int frames, int horizon) {
  std::vector<SceneSequence> out;
  for (int i = 0; i < n; ++i) {
    SceneSequence seq = make_scene(frames, horizon,
                                   /*with_light=*/true,
                                   i % 2 ? SignalState::Red : SignalState::Green);
    seq.label_crossing = i % 2;
    if (seq.label_crossing == 1) {
      for (int k = 0; k < horizon; ++k)
        seq.label_future[static_cast<std::size_t>(k)].y() -= 6.0 * (k + 1);
    }
    // Vary geometry a little so scenes are not identical.
    for (auto& frame : seq.frames) {
      frame[0].bbox.x1 += i;
      frame[0].bbox.x2 += i;
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace

TEST_CASE("resolve_learning_rate follows the node-count rule") {
  // Two-object scenes (target + light) -> mean 2 -> 1e-3.
  auto small = tiny_dataset(4, 3, 2);
  CHECK(resolve_learning_rate(small) == 1e-3);

  // Mean around 5 -> 7e-4.
  WorldConfig wcfg;
  auto mid = generate_dataset(wcfg, 40, 3);
  CHECK(resolve_learning_rate(mid) == 7e-4);

  // Seven or more -> 5e-4.
  auto big = tiny_dataset(4, 3, 2);
  for (auto& seq : big) {
    for (auto& frame : seq.frames) {
      for (int extra = 0; extra < 6; ++extra) {
        frame.push_back(pedcross::testing::make_object(
            100 + extra, ObjectKind::Vehicle, {10.0 + 20 * extra, 150, 25.0 + 20 * extra, 170}));
      }
    }
  }
  CHECK(resolve_learning_rate(big) == 5e-4);
}

TEST_CASE("total_loss: reductions and hand-computed regularization") {
  ModelConfig mcfg = tiny_config();
  ModelParams zeros = ModelParams::zeros(mcfg);
  TrainConfig tcfg;
  tcfg.l1_lstm = 0.0;
  tcfg.l2_ic_stream = 0.0;
  tcfg.l2_lc_stream = 0.0;

  // Perfect predictions with zero parameters: loss ~ 0.
  {
    Tape tape;
    BoundParams p = bind_params(tape, zeros);
    DiffTensor y_hat = tape.leaf(DiffTensor::scalar(1.0 - 1e-7));
    DiffTensor traj = tape.leaf(DiffTensor::zeros({3, 2}));
    DiffTensor loss = total_loss(y_hat, 1, traj, Array::Zero(6), p, tcfg);
    CHECK(loss.scalar_value() < 1e-6);
  }

  // traj weight 0 and zero regularization reduce exactly to BCE.
  {
    Tape tape;
    BoundParams p = bind_params(tape, zeros);
    TrainConfig no_traj = tcfg;
    no_traj.traj_loss_weight = 0.0;
    DiffTensor y_hat = tape.leaf(DiffTensor::scalar(0.25));
    Array target = Array::Constant(6, 100.0);  // would dominate if included
    DiffTensor traj = tape.leaf(DiffTensor::zeros({3, 2}));
    DiffTensor loss = total_loss(y_hat, 1, traj, target, p, no_traj);
    CHECK(loss.scalar_value() == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }

  // One LSTM weight at 2.0 with l1 = 0.01 adds exactly 0.02.
  {
    ModelParams params = ModelParams::zeros(mcfg);
    params.at("lstm.w_i").values[0] = 2.0;
    TrainConfig reg;
    reg.l1_lstm = 0.01;
    reg.l2_ic_stream = 0.0;
    reg.l2_lc_stream = 0.0;
    reg.traj_loss_weight = 0.0;
    Tape tape;
    BoundParams p = bind_params(tape, params);
    DiffTensor y_hat = tape.leaf(DiffTensor::scalar(0.5));
    DiffTensor traj = tape.leaf(DiffTensor::zeros({3, 2}));
    DiffTensor loss = total_loss(y_hat, 0, traj, Array::Zero(6), p, reg);
    CHECK(loss.scalar_value() ==
          doctest::Approx(std::log(2.0) + 0.02).epsilon(1e-12));
  }
}

TEST_CASE("regularization gradients: 2*coef*theta and coef*sign(theta)") {
  ModelConfig mcfg = tiny_config();
  ModelParams params = ModelParams::zeros(mcfg);
  params.at("lstm.w_i").values[0] = -1.5;
  params.at("ic.l0.fc.w").values[0] = 0.75;
  params.at("lc.l0.fc.w").values[0] = -0.5;

  TrainConfig tcfg;  // defaults: l1 0.01, l2_ic 0.05, l2_lc 0.001
  tcfg.traj_loss_weight = 0.0;

  Tape tape;
  BoundParams p = bind_params(tape, params);
  DiffTensor y_hat = tape.leaf(DiffTensor::scalar(0.5));
  DiffTensor traj = tape.leaf(DiffTensor::zeros({3, 2}));
  DiffTensor loss = total_loss(y_hat, 0, traj, Array::Zero(6), p, tcfg);
  tape.backward(loss);

  CHECK(tape.grad(p.at("lstm.w_i"))[0] == doctest::Approx(-0.01).epsilon(1e-12));
  CHECK(tape.grad(p.at("ic.l0.fc.w"))[0] ==
        doctest::Approx(2.0 * 0.05 * 0.75).epsilon(1e-12));
  CHECK(tape.grad(p.at("lc.l0.fc.w"))[0] ==
        doctest::Approx(2.0 * 0.001 * -0.5).epsilon(1e-12));
  // L1 subgradient at zero is zero.
  CHECK(tape.grad(p.at("lstm.w_f"))[0] == 0.0);
}

TEST_CASE("sgd_step arithmetic and error handling") {
  ModelConfig mcfg = tiny_config();
  ModelParams params = ModelParams::zeros(mcfg);
  params.at("fcn.b").values[0] = 1.0;
  for (auto& t : params.tensors) t.grad = Array::Zero(t.size());
  (*params.at("fcn.b").grad)[0] = 2.0;

  ModelParams copy = params;
  sgd_step(copy, 0.5);
  CHECK(copy.at("fcn.b").values[0] == 0.0);  // 1 - 0.5 * 2

  ModelParams frozen = params;
  sgd_step(frozen, 0.0);
  CHECK(frozen.at("fcn.b").values[0] == 1.0);

  // Two steps on the quadratic loss 0.5 * theta^2 from theta = 1, lr 0.1.
  double theta = 1.0;
  for (int i = 0; i < 2; ++i) theta -= 0.1 * theta;
  CHECK(theta == doctest::Approx(0.81).epsilon(1e-15));

  ModelParams bad = params;
  (*bad.at("fcn.b").grad)[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    sgd_step(bad, 0.1);
    CHECK(false);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("fcn.b") != std::string::npos);
  }
}

TEST_CASE("train: seeded determinism, lr=0 stasis, loss decrease") {
  ModelConfig mcfg = tiny_config();
  auto data = tiny_dataset(6, 4, mcfg.horizon);

  TrainConfig tcfg;
  tcfg.epochs = 3;
  tcfg.batch_size = 4;
  tcfg.learning_rate = 1e-3;
  tcfg.seed = 5;

  std::vector<EpochLog> log1, log2;
  Checkpoint c1 = train(data, {}, mcfg, tcfg, &log1, nullptr);
  Checkpoint c2 = train(data, {}, mcfg, tcfg, &log2, nullptr);
  REQUIRE(log1.size() == log2.size());
  for (std::size_t i = 0; i < log1.size(); ++i) {
    CHECK(log1[i].train_loss == log2[i].train_loss);
  }
  for (int i = 0; i < c1.params.count(); ++i) {
    CHECK((c1.params.tensors[i].values - c2.params.tensors[i].values)
              .abs()
              .maxCoeff() == 0.0);
  }

  TrainConfig still = tcfg;
  still.learning_rate = 0.0;
  std::vector<EpochLog> log3;
  train(data, {}, mcfg, still, &log3, nullptr);
  for (std::size_t i = 1; i < log3.size(); ++i) {
    CHECK(log3[i].train_loss == log3[0].train_loss);
  }

  // Repeated full-batch steps on a fixed set reduce the loss.
  TrainConfig fit = tcfg;
  fit.epochs = 100;
  fit.batch_size = static_cast<int>(data.size());
  fit.shuffle = false;
  std::vector<EpochLog> log4;
  train(data, {}, mcfg, fit, &log4, nullptr);
  CHECK(log4.back().train_loss < log4.front().train_loss);
}

TEST_CASE("batch gradient is invariant to summation order") {
  ModelConfig mcfg = tiny_config();
  auto data = tiny_dataset(5, 4, mcfg.horizon);
  ModelParams params = ModelParams::init(mcfg, 2);
  TrainConfig tcfg;

  // Per-example gradients, then the two accumulation orders.
  std::vector<std::vector<Array>> per_example;
  for (const auto& seq : data) {
    Tape tape;
    BoundParams p = bind_params(tape, params);
    ForwardTensors f = forward_tape(tape, seq, p, mcfg);
    Array target(2 * mcfg.horizon);
    const Eigen::Vector2d c = seq.last_target_center();
    for (int k = 0; k < mcfg.horizon; ++k) {
      target[2 * k] = seq.label_future[k].x() - c.x();
      target[2 * k + 1] = seq.label_future[k].y() - c.y();
    }
    DiffTensor loss =
        total_loss(f.y_hat, seq.label_crossing, f.traj_offsets, target, p, tcfg);
    tape.backward(loss);
    std::vector<Array> g;
    for (const auto& b : p.t) g.push_back(tape.grad(b));
    per_example.push_back(std::move(g));
  }

  for (std::size_t pi = 0; pi < per_example[0].size(); ++pi) {
    Array fwd = Array::Zero(per_example[0][pi].size());
    Array rev = fwd;
    for (std::size_t e = 0; e < per_example.size(); ++e) fwd += per_example[e][pi];
    for (std::size_t e = per_example.size(); e-- > 0;) rev += per_example[e][pi];
    CHECK((fwd - rev).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("evaluate: tie rule, oracle case, report consistency") {
  ModelConfig mcfg = tiny_config();
  ModelParams zeros = ModelParams::zeros(mcfg);

  // Balanced labels, constant-0.5 predictor: ties classify as not-crossing,
  // so accuracy equals the not-crossing fraction.
  auto data = tiny_dataset(8, 4, mcfg.horizon);
  Checkpoint ckpt{mcfg, TrainConfig{}, std::move(zeros), 0};
  MetricsReport r = evaluate(ckpt, data);
  CHECK(r.accuracy == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.tp == 0);
  CHECK(r.fp == 0);
  CHECK(r.f1 == doctest::Approx(f1_score(r.precision, r.recall)).epsilon(1e-15));

  // Oracle case: all labels 0 with exact standstill futures -> accuracy 1,
  // ADE and FDE exactly 0 for the zero model.
  std::vector<SceneSequence> oracle;
  for (int i = 0; i < 4; ++i) {
    SceneSequence seq = make_scene(4, mcfg.horizon);
    seq.label_crossing = 0;
    oracle.push_back(std::move(seq));
  }
  MetricsReport r2 = evaluate(ckpt, oracle);
  CHECK(r2.accuracy == 1.0);
  CHECK(r2.ade == 0.0);
  CHECK(r2.fde == 0.0);

  // Horizon mismatch rejected.
  auto bad = tiny_dataset(2, 4, mcfg.horizon + 1);
  CHECK_THROWS_AS(evaluate(ckpt, bad), std::invalid_argument);
}
