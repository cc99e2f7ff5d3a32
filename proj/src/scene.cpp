#include "pedcross/scene.hpp"

#include <stdexcept>

namespace pedcross {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

const char* kind_name(ObjectKind k) {
  switch (k) {
    case ObjectKind::Pedestrian: return "pedestrian";
    case ObjectKind::TrafficLight: return "traffic_light";
    case ObjectKind::Vehicle: return "vehicle";
    case ObjectKind::Crosswalk: return "crosswalk";
  }
  throw std::invalid_argument("kind_name: invalid ObjectKind");
}

const char* signal_name(SignalState s) {
  switch (s) {
    case SignalState::Red: return "red";
    case SignalState::Yellow: return "yellow";
    case SignalState::Green: return "green";
    case SignalState::NotApplicable: return "none";
  }
  throw std::invalid_argument("signal_name: invalid SignalState");
}

ObjectKind kind_from_name(const std::string& name) {
  if (name == "pedestrian") return ObjectKind::Pedestrian;
  if (name == "traffic_light") return ObjectKind::TrafficLight;
  if (name == "vehicle") return ObjectKind::Vehicle;
  if (name == "crosswalk") return ObjectKind::Crosswalk;
  throw std::invalid_argument("unknown object kind '" + name + "'");
}

SignalState signal_from_name(const std::string& name) {
  if (name == "red") return SignalState::Red;
  if (name == "yellow") return SignalState::Yellow;
  if (name == "green") return SignalState::Green;
  if (name == "none") return SignalState::NotApplicable;
  throw std::invalid_argument("unknown signal state '" + name + "'");
}

const SceneObject& SceneSequence::target(int frame) const {
  return frames[static_cast<std::size_t>(frame)]
               [static_cast<std::size_t>(target_index)];
}

Eigen::Vector2d SceneSequence::last_target_center() const {
  return target(num_frames() - 1).bbox.center();
}

namespace {

void validate_bbox(const BoundingBox& b, int w, int h, const std::string& path) {
  check(b.x1 < b.x2 && b.y1 < b.y2, path + ": degenerate box [" +
                                        std::to_string(b.x1) + "," +
                                        std::to_string(b.y1) + "," +
                                        std::to_string(b.x2) + "," +
                                        std::to_string(b.y2) + "]");
  check(b.x1 >= 0 && b.y1 >= 0 && b.x2 <= w && b.y2 <= h,
        path + ": box outside image " + std::to_string(w) + "x" + std::to_string(h));
}

void validate_object(const SceneObject& obj, int w, int h, const std::string& path) {
  validate_bbox(obj.bbox, w, h, path + ".bbox");
  if (obj.kind == ObjectKind::TrafficLight) {
    check(obj.signal != SignalState::NotApplicable,
          path + ".signal: traffic light must carry a signal state");
  } else {
    check(obj.signal == SignalState::NotApplicable,
          path + ".signal: " + kind_name(obj.kind) + " cannot carry a signal state");
  }
  check(!obj.appearance.empty(), path + ".appearance: missing");
  check(static_cast<int>(obj.appearance.size()) == kPatchSize,
        path + ".appearance: expected " + std::to_string(kPatchSize) +
            " values, got " + std::to_string(obj.appearance.size()));
}

}  // namespace

void validate_scene(const SceneSequence& seq) {
  check(seq.image_w > 0 && seq.image_h > 0, "image_dims: must be positive");
  check(!seq.frames.empty(), "frames: empty sequence");
  check(seq.label_crossing == 0 || seq.label_crossing == 1,
        "label.crossing: must be 0 or 1");
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    const auto& objs = seq.frames[t];
    const std::string fpath = "frames[" + std::to_string(t) + "]";
    check(!objs.empty(), fpath + ".objects: empty frame");
    check(seq.target_index >= 0 &&
              seq.target_index < static_cast<int>(objs.size()),
          fpath + ": target_index " + std::to_string(seq.target_index) +
              " out of range");
    check(objs[static_cast<std::size_t>(seq.target_index)].kind ==
              ObjectKind::Pedestrian,
          fpath + ".objects[" + std::to_string(seq.target_index) +
              "]: target must be a pedestrian");
    for (std::size_t i = 0; i < objs.size(); ++i) {
      validate_object(objs[i], seq.image_w, seq.image_h,
                      fpath + ".objects[" + std::to_string(i) + "]");
      for (std::size_t j = i + 1; j < objs.size(); ++j) {
        check(objs[i].id != objs[j].id,
              fpath + ".objects[" + std::to_string(j) + "].id: duplicate id " +
                  std::to_string(objs[j].id));
      }
    }
  }
  check(!seq.label_future.empty(), "label.future: empty horizon");
}

Eigen::VectorXd encode_class(const SceneObject& obj, bool ablate_signals) {
  if (obj.kind == ObjectKind::TrafficLight) {
    check(obj.signal != SignalState::NotApplicable,
          "encode_class: traffic light must carry a signal state");
  } else {
    check(obj.signal == SignalState::NotApplicable,
          std::string("encode_class: ") + kind_name(obj.kind) +
              " cannot carry a signal state");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kClassFeatureDim);
  v[static_cast<int>(obj.kind)] = 1.0;
  if (!ablate_signals && obj.signal != SignalState::NotApplicable)
    v[4 + static_cast<int>(obj.signal)] = 1.0;
  return v;
}

Eigen::VectorXd location_features(const BoundingBox& bbox, int image_w, int image_h) {
  validate_bbox(bbox, image_w, image_h, "location_features");
  const Eigen::Vector2d c = bbox.center();
  Eigen::VectorXd v(kLocationFeatureDim);
  v[0] = c.x() / image_w;
  v[1] = c.y() / image_h;
  v[2] = bbox.width() / image_w;
  v[3] = bbox.height() / image_h;
  v[4] = bbox.area() / (static_cast<double>(image_w) * image_h);
  return v;
}

}  // namespace pedcross
