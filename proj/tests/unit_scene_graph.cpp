#include "pedcross/graph.hpp"
#include "pedcross/rng.hpp"
#include "pedcross/scene.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace pedcross;
using pedcross::testing::make_object;
using pedcross::testing::make_scene;

TEST_CASE("encode_class one-hot layout") {
  SceneObject ped = make_object(0, ObjectKind::Pedestrian, {0, 0, 10, 10});
  Eigen::VectorXd v = encode_class(ped);
  Eigen::VectorXd expect(7);
  expect << 1, 0, 0, 0, 0, 0, 0;
  CHECK((v - expect).cwiseAbs().maxCoeff() == 0.0);

  SceneObject light =
      make_object(1, ObjectKind::TrafficLight, {0, 0, 10, 10}, SignalState::Red);
  expect << 0, 1, 0, 0, 1, 0, 0;
  CHECK((encode_class(light) - expect).cwiseAbs().maxCoeff() == 0.0);

  SceneObject car = make_object(2, ObjectKind::Vehicle, {0, 0, 10, 10});
  expect << 0, 0, 1, 0, 0, 0, 0;
  CHECK((encode_class(car) - expect).cwiseAbs().maxCoeff() == 0.0);

  // Signal block zeroed under ablation; kind block untouched.
  Eigen::VectorXd ab = encode_class(light, /*ablate_signals=*/true);
  expect << 0, 1, 0, 0, 0, 0, 0;
  CHECK((ab - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encode_class rejects invalid kind/signal combinations") {
  SceneObject ped =
      make_object(0, ObjectKind::Pedestrian, {0, 0, 10, 10}, SignalState::Green);
  CHECK_THROWS_AS(encode_class(ped), std::invalid_argument);
  SceneObject light = make_object(1, ObjectKind::TrafficLight, {0, 0, 10, 10},
                                  SignalState::NotApplicable);
  CHECK_THROWS_AS(encode_class(light), std::invalid_argument);
}

TEST_CASE("class one-hot block sums") {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const auto kind = static_cast<ObjectKind>(rng.uniform_int(4));
    SceneObject o = make_object(0, kind, {0, 0, 10, 10},
                                kind == ObjectKind::TrafficLight
                                    ? static_cast<SignalState>(rng.uniform_int(3))
                                    : SignalState::NotApplicable);
    Eigen::VectorXd v = encode_class(o);
    CHECK(v.segment(0, 4).sum() == 1.0);
    CHECK(v.segment(4, 3).sum() <= 1.0);
  }
}

TEST_CASE("location_features hand cases") {
  Eigen::VectorXd full = location_features({0, 0, 100, 100}, 100, 100);
  Eigen::VectorXd expect(5);
  expect << 0.5, 0.5, 1.0, 1.0, 1.0;
  CHECK((full - expect).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::VectorXd v = location_features({10, 10, 30, 50}, 100, 100);
  expect << 0.2, 0.3, 0.2, 0.4, 0.08;
  CHECK((v - expect).cwiseAbs().maxCoeff() < 1e-15);

  CHECK_THROWS_AS(location_features({30, 10, 10, 50}, 100, 100),
                  std::invalid_argument);
  CHECK_THROWS_AS(location_features({10, 10, 30, 120}, 100, 100),
                  std::invalid_argument);
}

TEST_CASE("location_features stay in [0,1]; growing boxes grow in area") {
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const double x1 = rng.uniform(0, 500), y1 = rng.uniform(0, 380);
    const double x2 = x1 + rng.uniform(1, 640 - x1), y2 = y1 + rng.uniform(1, 480 - y1);
    Eigen::VectorXd v = location_features({x1, y1, x2, y2}, 640, 480);
    CHECK(v.minCoeff() >= 0.0);
    CHECK(v.maxCoeff() <= 1.0);
  }

  double prev_area = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double half = 10.0 * std::pow(1.02, t);
    Eigen::VectorXd v = location_features(
        {320 - half, 240 - half, 320 + half, 240 + half}, 640, 480);
    CHECK(v[4] > prev_area);
    prev_area = v[4];
  }
}

TEST_CASE("build_adjacency basic shapes") {
  RowMat a1 = build_adjacency(1, {1}, false);
  CHECK(a1(0, 0) == 0.0);

  RowMat a2 = build_adjacency(2, {1, 1}, false);
  CHECK(a2(0, 1) == 1.0);
  CHECK(a2(1, 0) == 1.0);
  CHECK(a2(0, 0) == 0.0);
  CHECK(a2(1, 1) == 0.0);

  RowMat a3 = build_adjacency(3, {1, 1, 0}, false);
  for (int i = 0; i < 3; ++i) {
    CHECK(a3(2, i) == 0.0);
    CHECK(a3(i, 2) == 0.0);
  }
  CHECK(a3(0, 1) == 1.0);

  RowMat with_loops = build_adjacency(2, {1, 1}, true);
  CHECK(with_loops(0, 0) == 1.0);
}

TEST_CASE("normalize_adjacency hand oracles") {
  // Single node: A=[[0]] -> [[1]].
  RowMat a1 = build_adjacency(1, {1}, false);
  RowMat n1 = normalize_adjacency(a1, {1});
  CHECK(n1(0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  // Two nodes: all entries 0.5.
  RowMat a2 = build_adjacency(2, {1, 1}, false);
  RowMat n2 = normalize_adjacency(a2, {1, 1});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(n2(i, j) == doctest::Approx(0.5).epsilon(1e-14));

  // Path graph 1-2-3: diagonal (1/2, 1/3, 1/2), adjacent entries 1/sqrt(6).
  RowMat path = RowMat::Zero(3, 3);
  path(0, 1) = path(1, 0) = 1.0;
  path(1, 2) = path(2, 1) = 1.0;
  RowMat np = normalize_adjacency(path, {1, 1, 1});
  CHECK(np(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(np(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(np(2, 2) == doctest::Approx(0.5).epsilon(1e-14));
  const double adj = 1.0 / std::sqrt(6.0);
  CHECK(np(0, 1) == doctest::Approx(adj).epsilon(1e-12));
  CHECK(np(1, 2) == doctest::Approx(adj).epsilon(1e-12));
  CHECK(np(0, 2) == 0.0);

  // Asymmetric input rejected.
  RowMat bad = RowMat::Zero(2, 2);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(normalize_adjacency(bad, {1, 1}), std::invalid_argument);
}

TEST_CASE("normalized adjacency: symmetry, range, spectral radius vs eigensolver") {
  Rng rng(33);
  for (int it = 0; it < 60; ++it) {
    const int n = 2 + static_cast<int>(rng.uniform_int(7));  // up to 8
    std::vector<char> real(static_cast<std::size_t>(n), 1);
    // Random symmetric 0/1 graph over the real nodes.
    RowMat a = RowMat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.bernoulli(0.5)) a(i, j) = a(j, i) = 1.0;
    RowMat norm = normalize_adjacency(a, real);

    CHECK((norm - RowMat(norm.transpose())).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(norm.minCoeff() >= 0.0);
    CHECK(norm.maxCoeff() <= 1.0 + 1e-12);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(norm);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("compute_slots puts the target first and masks padding") {
  SceneSequence seq = make_scene(3, 2);
  SlotLayout layout = compute_slots(seq, 4);
  CHECK(layout.t_frames == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(layout.object_at[t][0] == seq.target_index);
    CHECK(layout.mask[t][0] == 1);
    CHECK(layout.mask[t][1] == 1);
    CHECK(layout.mask[t][2] == 0);
    CHECK(layout.mask[t][3] == 0);
  }
  CHECK_THROWS_AS(compute_slots(seq, 1), std::invalid_argument);
}

TEST_CASE("assemble_streams dimensions and padding") {
  // Single pedestrian, appearance_dim 8: rows are 8+7 and 5+7 wide.
  SceneSequence seq = make_scene(15, 15, /*with_light=*/false);
  auto app = [](const SceneObject&, int) {
    return Eigen::VectorXd::Constant(8, 0.5).eval();
  };
  StreamAssembly s = assemble_streams(seq, 8, app, 1);
  CHECK(s.x_ic.rows() == 15);
  CHECK(s.x_ic.cols() == 15);
  CHECK(s.x_lc.rows() == 15);
  CHECK(s.x_lc.cols() == 12);

  // Padded slots are all-zero rows in both streams.
  StreamAssembly padded = assemble_streams(seq, 8, app, 3);
  for (int t = 0; t < padded.t_frames; ++t) {
    for (int slot = 1; slot < 3; ++slot) {
      CHECK(padded.x_ic.row(t * 3 + slot).cwiseAbs().maxCoeff() == 0.0);
      CHECK(padded.x_lc.row(t * 3 + slot).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  CHECK(padded.adj.normalized[0](0, 0) == doctest::Approx(1.0));
}

TEST_CASE("assemble_streams: non-target order permutation keeps target features") {
  SceneSequence seq = make_scene(4, 3);
  for (auto& frame : seq.frames) {
    frame.push_back(make_object(20, ObjectKind::Vehicle, {200, 150, 280, 190}));
  }

  auto app = [](const SceneObject& o, int) {
    return Eigen::VectorXd::Constant(4, 0.1 * o.id).eval();
  };
  StreamAssembly a = assemble_streams(seq, 4, app, 3);

  SceneSequence swapped = seq;
  for (auto& frame : swapped.frames) std::swap(frame[1], frame[2]);
  StreamAssembly b = assemble_streams(swapped, 4, app, 3);

  for (int t = 0; t < 4; ++t) {
    CHECK((a.x_ic.row(t * 3) - b.x_ic.row(t * 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.x_lc.row(t * 3) - b.x_lc.row(t * 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.slots.mask[t] == b.slots.mask[t]);
  }
}

TEST_CASE("adjacency stack construction is deterministic") {
  SceneSequence seq = make_scene(5, 3);
  AdjacencyStack s1 = build_adjacency_stack(seq, 4);
  AdjacencyStack s2 = build_adjacency_stack(seq, 4);
  REQUIRE(s1.normalized.size() == s2.normalized.size());
  for (std::size_t t = 0; t < s1.normalized.size(); ++t) {
    CHECK((s1.normalized[t] - s2.normalized[t]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s1.mask[t] == s2.mask[t]);
  }
}

TEST_CASE("validate_scene reports field paths") {
  SceneSequence seq = make_scene(3, 2);
  seq.frames[1][0].bbox.x2 = seq.frames[1][0].bbox.x1 - 1.0;
  try {
    validate_scene(seq);
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("frames[1].objects[0].bbox") != std::string::npos);
  }

  SceneSequence missing = make_scene(3, 2);
  missing.frames[2][0].kind = ObjectKind::Vehicle;
  missing.frames[2][0].signal = SignalState::NotApplicable;
  CHECK_THROWS_AS(validate_scene(missing), std::invalid_argument);
}
