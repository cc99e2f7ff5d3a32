#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pedcross {

// One-hot encoding order is fixed: pedestrian, traffic_light, vehicle,
// crosswalk. Serialized names match the lower-case snake strings.
enum class ObjectKind { Pedestrian = 0, TrafficLight = 1, Vehicle = 2, Crosswalk = 3 };

// One-hot order red, yellow, green; NotApplicable encodes as all zeros and is
// required for every kind except TrafficLight.
enum class SignalState { Red = 0, Yellow = 1, Green = 2, NotApplicable = 3 };

const char* kind_name(ObjectKind k);
const char* signal_name(SignalState s);
ObjectKind kind_from_name(const std::string& name);
SignalState signal_from_name(const std::string& name);

// Pixel-space box, x1 < x2 and y1 < y2, contained in the image.
struct BoundingBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const { return {0.5 * (x1 + x2), 0.5 * (y1 + y2)}; }
};

struct SceneObject {
  int id = 0;
  ObjectKind kind = ObjectKind::Pedestrian;
  BoundingBox bbox;
  SignalState signal = SignalState::NotApplicable;
  // Grayscale 32x32 patch in [0,1], row-major (1024 values).
  std::vector<double> appearance;
};

struct SceneSequence {
  int image_w = 0, image_h = 0;
  // Index of the target pedestrian within each frame's object list.
  int target_index = 0;
  std::vector<std::vector<SceneObject>> frames;
  int label_crossing = 0;
  std::vector<Eigen::Vector2d> label_future;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int horizon() const { return static_cast<int>(label_future.size()); }
  const SceneObject& target(int frame) const;
  // Center of the target's box in the last observed frame; trajectory
  // offsets are relative to this point.
  Eigen::Vector2d last_target_center() const;
};

// Throws std::invalid_argument with a field path on the first violated
// invariant (box geometry, signal/kind consistency, target presence, ...).
void validate_scene(const SceneSequence& seq);

// [kind one-hot (4) || signal one-hot (3)]. When ablate_signals is set the
// signal block is zeroed for every object.
Eigen::VectorXd encode_class(const SceneObject& obj, bool ablate_signals = false);
constexpr int kClassFeatureDim = 7;

// [cx/W, cy/H, w/W, h/H, area/(W*H)], all in [0,1].
Eigen::VectorXd location_features(const BoundingBox& bbox, int image_w, int image_h);
constexpr int kLocationFeatureDim = 5;

constexpr int kPatchSide = 32;
constexpr int kPatchSize = kPatchSide * kPatchSide;

}  // namespace pedcross
