#pragma once

#include "pedcross/scene.hpp"

#include <vector>

namespace pedcross::testing {

inline std::vector<double> flat_patch(double v = 0.25) {
  return std::vector<double>(static_cast<std::size_t>(kPatchSize), v);
}

inline SceneObject make_object(int id, ObjectKind kind, BoundingBox bbox,
                               SignalState signal = SignalState::NotApplicable,
                               double patch_value = 0.25) {
  SceneObject o;
  o.id = id;
  o.kind = kind;
  o.bbox = bbox;
  o.signal = signal;
  o.appearance = flat_patch(patch_value);
  return o;
}

// Minimal valid scene: target pedestrian plus optional traffic light, with a
// standstill future of the given horizon.
inline SceneSequence make_scene(int frames, int horizon, bool with_light = true,
                                SignalState light_state = SignalState::Red) {
  SceneSequence seq;
  seq.image_w = 640;
  seq.image_h = 480;
  seq.target_index = 0;
  seq.label_crossing = 0;
  for (int t = 0; t < frames; ++t) {
    std::vector<SceneObject> objs;
    objs.push_back(make_object(
        0, ObjectKind::Pedestrian,
        {300.0 + t, 380.0, 320.0 + t, 430.0}, SignalState::NotApplicable, 0.3));
    if (with_light) {
      objs.push_back(make_object(10, ObjectKind::TrafficLight,
                                 {100, 50, 118, 96}, light_state, 0.7));
    }
    seq.frames.push_back(std::move(objs));
  }
  const Eigen::Vector2d c = seq.last_target_center();
  for (int k = 0; k < horizon; ++k) seq.label_future.push_back(c);
  return seq;
}

}  // namespace pedcross::testing
