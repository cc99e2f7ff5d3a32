#pragma once

#include "pedcross/scene.hpp"

#include <cstdint>
#include <vector>

namespace pedcross {

// Deterministic green -> yellow -> red cycle; the state at frame t is a pure
// function of (t + offset) mod (green + yellow + red).
struct SignalFsm {
  int green = 60;
  int yellow = 15;
  int red = 45;
  int offset = 0;

  int cycle() const { return green + yellow + red; }
};

SignalState signal_state(const SignalFsm& fsm, int t);

struct WorldConfig {
  int image_w = 640;
  int image_h = 480;
  int frames = 15;
  int horizon = 15;
  // Probability that the crossing label is flipped away from the signal rule.
  double noise = 0.05;
  int max_bystanders = 2;  // sampled per scene in [0, max]
  int max_vehicles = 2;
  // Per-frame relative growth of the target's bounding-box area.
  double bbox_growth = 0.02;

  void validate() const;
  // 1 target + bystanders + 1 light + vehicles + 1 crosswalk.
  int slot_capacity() const { return 3 + max_bystanders + max_vehicles; }
};

// One scene: the target pedestrian approaches the curb while the vehicle-facing
// signal runs its cycle. Ground truth crossing = (signal red at the final
// observed frame), flipped with probability `noise`; the future trajectory
// follows the (possibly flipped) label. Approach dynamics and bystander or
// vehicle motion are sampled independently of the signal phase, so signal
// state is the only observable route to the label.
SceneSequence generate_scene(const WorldConfig& cfg, std::uint64_t scene_seed);

// Scene i uses split_seed(seed, i). Phase offsets are sampled so that labels
// stay balanced near 50/50 before noise.
std::vector<SceneSequence> generate_dataset(const WorldConfig& cfg, int n,
                                            std::uint64_t seed);

}  // namespace pedcross
