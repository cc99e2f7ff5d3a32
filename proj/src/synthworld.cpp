#include "pedcross/synthworld.hpp"

#include "pedcross/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pedcross {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double quantize(double v) {
  // Textures live on a 1/128 grid: exact in binary and compact in JSON.
  return std::round(std::clamp(v, 0.0, 1.0) * 128.0) / 128.0;
}

// Procedural 32x32 texture, distinct per kind, with per-object noise. The
// texture never encodes the signal state.
std::vector<double> make_patch(ObjectKind kind, Rng& rng) {
  std::vector<double> p(static_cast<std::size_t>(kPatchSize));
  for (int y = 0; y < kPatchSide; ++y) {
    for (int x = 0; x < kPatchSide; ++x) {
      double v = 0.0;
      switch (kind) {
        case ObjectKind::Pedestrian:
          v = 0.5 + 0.4 * std::sin(x * 0.8);
          break;
        case ObjectKind::TrafficLight:
          v = (x > 12 && x < 20) ? 0.9 : 0.15;
          break;
        case ObjectKind::Vehicle:
          v = static_cast<double>(y) / kPatchSide;
          break;
        case ObjectKind::Crosswalk:
          v = ((x / 4 + y / 4) % 2 == 0) ? 0.85 : 0.2;
          break;
      }
      v += rng.uniform(-0.08, 0.08);
      p[static_cast<std::size_t>(y * kPatchSide + x)] = quantize(v);
    }
  }
  return p;
}

BoundingBox box_around(double cx, double cy, double w, double h, int image_w,
                       int image_h) {
  BoundingBox b;
  b.x1 = std::clamp(cx - 0.5 * w, 0.0, image_w - 2.0);
  b.y1 = std::clamp(cy - 0.5 * h, 0.0, image_h - 2.0);
  b.x2 = std::clamp(cx + 0.5 * w, b.x1 + 1.0, static_cast<double>(image_w));
  b.y2 = std::clamp(cy + 0.5 * h, b.y1 + 1.0, static_cast<double>(image_h));
  return b;
}

}  // namespace

SignalState signal_state(const SignalFsm& fsm, int t) {
  check(t >= 0, "signal_state: negative frame");
  check(fsm.green >= 1 && fsm.yellow >= 1 && fsm.red >= 1,
        "signal_state: phase durations must be >= 1");
  const int phase = (t + fsm.offset) % fsm.cycle();
  if (phase < fsm.green) return SignalState::Green;
  if (phase < fsm.green + fsm.yellow) return SignalState::Yellow;
  return SignalState::Red;
}

void WorldConfig::validate() const {
  check(image_w >= 64 && image_h >= 64, "WorldConfig: image dims too small");
  check(frames >= 2, "WorldConfig: need at least 2 frames");
  check(horizon >= 1, "WorldConfig: horizon must be >= 1");
  check(noise >= 0.0 && noise < 0.5, "WorldConfig: noise must lie in [0, 0.5)");
  check(max_bystanders >= 0 && max_bystanders <= 2,
        "WorldConfig: max_bystanders must be in [0, 2]");
  check(max_vehicles >= 0 && max_vehicles <= 2,
        "WorldConfig: max_vehicles must be in [0, 2]");
  check(bbox_growth > 0.0 && bbox_growth < 0.2,
        "WorldConfig: bbox_growth must lie in (0, 0.2)");
}

SceneSequence generate_scene(const WorldConfig& cfg, std::uint64_t scene_seed) {
  cfg.validate();
  Rng rng(scene_seed);
  const int T = cfg.frames;
  const double W = cfg.image_w, H = cfg.image_h;

  // Road band across the middle, sidewalk below; the curb is the band's
  // lower edge.
  const double road_top = 0.25 * H;
  const double curb = 0.625 * H;

  SignalFsm fsm;
  // Balanced label prior: half the scenes get an offset that puts the final
  // observed frame in the red phase, half outside it.
  const bool want_red = rng.bernoulli(0.5);
  const int last = T - 1;
  const int red_start = fsm.green + fsm.yellow;
  if (want_red) {
    const int pick = red_start + static_cast<int>(rng.uniform_int(
                                     static_cast<std::uint64_t>(fsm.red)));
    fsm.offset = ((pick - last) % fsm.cycle() + fsm.cycle()) % fsm.cycle();
  } else {
    const int pick = static_cast<int>(
        rng.uniform_int(static_cast<std::uint64_t>(red_start)));
    fsm.offset = ((pick - last) % fsm.cycle() + fsm.cycle()) % fsm.cycle();
  }

  const bool red_final = signal_state(fsm, last) == SignalState::Red;
  int label = red_final ? 1 : 0;
  if (rng.bernoulli(cfg.noise)) label = 1 - label;

  const int n_byst = static_cast<int>(
      rng.uniform_int(static_cast<std::uint64_t>(cfg.max_bystanders + 1)));
  const int n_veh = static_cast<int>(
      rng.uniform_int(static_cast<std::uint64_t>(cfg.max_vehicles + 1)));

  // Target pedestrian: walks toward the curb; box area grows every frame
  // (approaching the camera), independent of the signal phase.
  const double tx0 = rng.uniform(0.3 * W, 0.7 * W);
  const double ty0 = rng.uniform(curb + 0.08 * H, curb + 0.2 * H);
  const double approach = rng.uniform(1.0, 3.0);
  const double growth = cfg.bbox_growth * rng.uniform(0.5, 1.5);
  const double th0 = rng.uniform(40.0, 56.0);
  Rng tex_target(split_seed(scene_seed, 101));
  const std::vector<double> target_patch = make_patch(ObjectKind::Pedestrian, tex_target);

  struct Extra {
    SceneObject base;
    double cx, cy, vx, vy, w, h;
  };
  std::vector<Extra> extras;

  for (int i = 0; i < n_byst; ++i) {
    Extra e;
    e.w = rng.uniform(14.0, 22.0);
    e.h = rng.uniform(30.0, 50.0);
    e.cx = rng.uniform(0.1 * W, 0.9 * W);
    e.cy = rng.uniform(curb + 0.15 * H, 0.95 * H - e.h);
    e.vx = rng.uniform(-0.4, 0.4);
    e.vy = 0.0;
    e.base.id = 1 + i;
    e.base.kind = ObjectKind::Pedestrian;
    Rng tex(split_seed(scene_seed, 201 + static_cast<std::uint64_t>(i)));
    e.base.appearance = make_patch(ObjectKind::Pedestrian, tex);
    extras.push_back(std::move(e));
  }
  for (int i = 0; i < n_veh; ++i) {
    Extra e;
    e.w = rng.uniform(60.0, 100.0);
    e.h = 0.5 * e.w;
    const double span = 6.0 * T;
    e.cx = rng.uniform(0.5 * e.w + span + 2.0, W - 0.5 * e.w - span - 2.0);
    e.cy = rng.uniform(road_top + 0.5 * e.h + 4.0, curb - 0.5 * e.h - 4.0);
    e.vx = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(2.0, 6.0);
    e.vy = 0.0;
    e.base.id = 20 + i;
    e.base.kind = ObjectKind::Vehicle;
    Rng tex(split_seed(scene_seed, 301 + static_cast<std::uint64_t>(i)));
    e.base.appearance = make_patch(ObjectKind::Vehicle, tex);
    extras.push_back(std::move(e));
  }

  SceneObject light;
  light.id = 10;
  light.kind = ObjectKind::TrafficLight;
  const double lx = rng.uniform(0.15 * W, 0.85 * W);
  const double ly = rng.uniform(0.08 * H, 0.18 * H);
  Rng tex_light(split_seed(scene_seed, 401));
  light.appearance = make_patch(ObjectKind::TrafficLight, tex_light);

  SceneObject walk;
  walk.id = 30;
  walk.kind = ObjectKind::Crosswalk;
  const double wx = tx0 + rng.uniform(-30.0, 30.0);
  Rng tex_walk(split_seed(scene_seed, 501));
  walk.appearance = make_patch(ObjectKind::Crosswalk, tex_walk);

  SceneSequence seq;
  seq.image_w = cfg.image_w;
  seq.image_h = cfg.image_h;
  seq.target_index = 0;
  seq.label_crossing = label;

  double tx = tx0, ty = ty0;
  for (int t = 0; t < T; ++t) {
    std::vector<SceneObject> objs;

    SceneObject target;
    target.id = 0;
    target.kind = ObjectKind::Pedestrian;
    target.appearance = target_patch;
    const double s = std::pow(1.0 + growth, 0.5 * t);
    target.bbox = box_around(tx, ty, 0.4 * th0 * s, th0 * s, cfg.image_w, cfg.image_h);
    objs.push_back(std::move(target));

    for (const Extra& e : extras) {
      SceneObject o = e.base;
      const double jx = o.kind == ObjectKind::Pedestrian ? rng.uniform(-0.3, 0.3) : 0.0;
      o.bbox = box_around(e.cx + e.vx * t + jx, e.cy + e.vy * t, e.w, e.h,
                          cfg.image_w, cfg.image_h);
      objs.push_back(std::move(o));
    }

    SceneObject lt = light;
    lt.signal = signal_state(fsm, t);
    lt.bbox = box_around(lx, ly, 18.0, 46.0, cfg.image_w, cfg.image_h);
    objs.push_back(std::move(lt));

    SceneObject cw = walk;
    cw.bbox = box_around(wx, 0.5 * (road_top + curb), 80.0, curb - road_top,
                         cfg.image_w, cfg.image_h);
    objs.push_back(std::move(cw));

    seq.frames.push_back(std::move(objs));
    ty -= approach;
    tx += rng.uniform(-0.3, 0.3);
  }

  // Future: crossing advances into the road at constant speed; otherwise the
  // target holds position with jitter.
  const Eigen::Vector2d last_center = seq.last_target_center();
  const double cross_speed = rng.uniform(4.0, 8.0);
  for (int k = 1; k <= cfg.horizon; ++k) {
    Eigen::Vector2d pt = last_center;
    if (label == 1) {
      pt.y() -= cross_speed * k;
      pt.x() += rng.uniform(-0.3, 0.3);
    } else {
      pt.x() += rng.uniform(-0.5, 0.5);
      pt.y() += rng.uniform(-0.5, 0.5);
    }
    seq.label_future.push_back(pt);
  }

  validate_scene(seq);
  return seq;
}

std::vector<SceneSequence> generate_dataset(const WorldConfig& cfg, int n,
                                            std::uint64_t seed) {
  check(n >= 1, "generate_dataset: n must be >= 1");
  std::vector<SceneSequence> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.push_back(generate_scene(cfg, split_seed(seed, static_cast<std::uint64_t>(i))));
  return out;
}

}  // namespace pedcross
