#include "pedcross/rng.hpp"
#include "pedcross/synthworld.hpp"

#include <doctest.h>

#include <set>

using namespace pedcross;

namespace {

bool scenes_equal(const SceneSequence& a, const SceneSequence& b) {
  if (a.image_w != b.image_w || a.image_h != b.image_h ||
      a.target_index != b.target_index || a.label_crossing != b.label_crossing ||
      a.frames.size() != b.frames.size() ||
      a.label_future.size() != b.label_future.size())
    return false;
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    if (a.frames[t].size() != b.frames[t].size()) return false;
    for (std::size_t i = 0; i < a.frames[t].size(); ++i) {
      const SceneObject &x = a.frames[t][i], &y = b.frames[t][i];
      if (x.id != y.id || x.kind != y.kind || x.signal != y.signal) return false;
      if (x.bbox.x1 != y.bbox.x1 || x.bbox.y1 != y.bbox.y1 ||
          x.bbox.x2 != y.bbox.x2 || x.bbox.y2 != y.bbox.y2)
        return false;
      if (x.appearance != y.appearance) return false;
    }
  }
  for (std::size_t k = 0; k < a.label_future.size(); ++k) {
    if (a.label_future[k] != b.label_future[k]) return false;
  }
  return true;
}

const SceneObject* find_light(const SceneSequence& seq, int frame) {
  for (const auto& o : seq.frames[static_cast<std::size_t>(frame)]) {
    if (o.kind == ObjectKind::TrafficLight) return &o;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("signal_state phase boundaries and periodicity") {
  SignalFsm fsm;  // 60 / 15 / 45
  CHECK(signal_state(fsm, 0) == SignalState::Green);
  CHECK(signal_state(fsm, 59) == SignalState::Green);
  CHECK(signal_state(fsm, 60) == SignalState::Yellow);
  CHECK(signal_state(fsm, 74) == SignalState::Yellow);
  CHECK(signal_state(fsm, 75) == SignalState::Red);
  CHECK(signal_state(fsm, 119) == SignalState::Red);

  Rng rng(1);
  for (int it = 0; it < 30; ++it) {
    const int t = static_cast<int>(rng.uniform_int(10000));
    CHECK(signal_state(fsm, t) == signal_state(fsm, t + fsm.cycle()));
  }

  SignalFsm offset = fsm;
  offset.offset = 75;
  CHECK(signal_state(offset, 0) == SignalState::Red);
  CHECK_THROWS_AS(signal_state(fsm, -1), std::invalid_argument);
}

TEST_CASE("world config validation") {
  WorldConfig bad;
  bad.noise = 0.6;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = WorldConfig{};
  bad.max_bystanders = 5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(WorldConfig{}.slot_capacity() == 7);
}

TEST_CASE("generate_scene: noiseless labels follow the final-frame signal") {
  WorldConfig cfg;
  cfg.noise = 0.0;
  int crossings = 0;
  for (int i = 0; i < 200; ++i) {
    SceneSequence seq = generate_scene(cfg, split_seed(7, i));
    const SceneObject* light = find_light(seq, seq.num_frames() - 1);
    REQUIRE(light != nullptr);
    const int expect = light->signal == SignalState::Red ? 1 : 0;
    CHECK(seq.label_crossing == expect);
    crossings += seq.label_crossing;

    // Crossing scenes advance into the road; the rest hold position.
    const Eigen::Vector2d c = seq.last_target_center();
    const double final_dist = (seq.label_future.back() - c).norm();
    if (seq.label_crossing == 1) {
      CHECK(final_dist > 30.0);
    } else {
      CHECK(final_dist < 2.0);
    }
  }
  CHECK(crossings > 60);
  CHECK(crossings < 140);
}

TEST_CASE("generate_scene: determinism and target box growth") {
  WorldConfig cfg;
  SceneSequence a = generate_scene(cfg, 12345);
  SceneSequence b = generate_scene(cfg, 12345);
  CHECK(scenes_equal(a, b));
  SceneSequence c = generate_scene(cfg, 12346);
  CHECK(!scenes_equal(a, c));

  double prev = 0.0;
  for (int t = 0; t < a.num_frames(); ++t) {
    const double area = a.target(t).bbox.area();
    CHECK(area > prev);
    prev = area;
  }
}

TEST_CASE("generate_scene honors frame and horizon settings") {
  WorldConfig cfg;
  cfg.frames = 8;
  cfg.horizon = 5;
  SceneSequence seq = generate_scene(cfg, 3);
  CHECK(seq.num_frames() == 8);
  CHECK(seq.horizon() == 5);
}

TEST_CASE("generate_dataset: balance, validity, distinctness") {
  WorldConfig cfg;
  auto scenes = generate_dataset(cfg, 1000, 99);
  int ones = 0;
  std::set<std::pair<double, double>> signatures;
  for (const auto& s : scenes) {
    ones += s.label_crossing;
    validate_scene(s);  // every generated scene satisfies scene invariants
    signatures.insert({s.target(0).bbox.x1, s.label_future.back().y()});
  }
  const double balance = static_cast<double>(ones) / 1000.0;
  CHECK(balance >= 0.45);
  CHECK(balance <= 0.55);
  // Distinct seeds give distinct sequences.
  CHECK(signatures.size() == 1000);
}

TEST_CASE("approach dynamics carry no label information") {
  // The generator draws approach speed and box growth independently of the
  // signal phase: compare their distributions across the two label groups.
  WorldConfig cfg;
  cfg.noise = 0.0;
  double mean_growth[2] = {0, 0};
  int count[2] = {0, 0};
  for (int i = 0; i < 400; ++i) {
    SceneSequence s = generate_scene(cfg, split_seed(55, i));
    const double g =
        s.target(s.num_frames() - 1).bbox.area() / s.target(0).bbox.area();
    mean_growth[s.label_crossing] += g;
    ++count[s.label_crossing];
  }
  mean_growth[0] /= count[0];
  mean_growth[1] /= count[1];
  // Equal in expectation; allow a loose tolerance for the finite sample.
  CHECK(std::abs(mean_growth[0] - mean_growth[1]) <
        0.1 * std::max(mean_growth[0], mean_growth[1]));
}
