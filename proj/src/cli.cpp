#include "pedcross/cli.hpp"

#include "pedcross/dataio.hpp"
#include "pedcross/model.hpp"
#include "pedcross/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

namespace pedcross::cli {

namespace fs = std::filesystem;
using nlohmann::json;

WorldConfig load_world_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw IoError("cannot open world config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("parse error in '" + path + "': " + e.what());
  }
  const std::set<std::string> known{"image_dims",     "frames",       "horizon",
                                    "noise",          "max_bystanders",
                                    "max_vehicles",   "bbox_growth"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!known.count(it.key()))
      throw IoError("world config: unknown field '" + it.key() + "'");
  }
  WorldConfig cfg;
  if (doc.contains("image_dims")) {
    const json& d = doc["image_dims"];
    if (!d.is_array() || d.size() != 2)
      throw IoError("world config: image_dims must be [W,H]");
    cfg.image_w = d[0].get<int>();
    cfg.image_h = d[1].get<int>();
  }
  if (doc.contains("frames")) cfg.frames = doc["frames"].get<int>();
  if (doc.contains("horizon")) cfg.horizon = doc["horizon"].get<int>();
  if (doc.contains("noise")) cfg.noise = doc["noise"].get<double>();
  if (doc.contains("max_bystanders"))
    cfg.max_bystanders = doc["max_bystanders"].get<int>();
  if (doc.contains("max_vehicles")) cfg.max_vehicles = doc["max_vehicles"].get<int>();
  if (doc.contains("bbox_growth")) cfg.bbox_growth = doc["bbox_growth"].get<double>();
  return cfg;
}

void gen_data(const GenDataOpts& opts, std::ostream& out) {
  WorldConfig cfg = opts.config ? load_world_config(*opts.config) : WorldConfig{};
  if (opts.noise) cfg.noise = *opts.noise;
  cfg.validate();
  if (opts.num < 1) throw std::invalid_argument("gen-data: --num must be >= 1");

  std::vector<SceneSequence> scenes = generate_dataset(cfg, opts.num, opts.seed);
  write_dataset(opts.out_dir, scenes, opts.seed);
  out << "wrote " << opts.num << " scenes to " << opts.out_dir << "\n";
}

namespace {

// Node slots must cover the busiest frame; the horizon must match the labels.
void derive_dims_from_data(const std::vector<SceneSequence>& scenes,
                           ModelConfig& cfg) {
  int max_nodes = 0;
  for (const auto& seq : scenes) {
    for (const auto& frame : seq.frames)
      max_nodes = std::max(max_nodes, static_cast<int>(frame.size()));
  }
  cfg.n_slots = max_nodes;
  cfg.horizon = scenes.front().horizon();
}

}  // namespace

void train_command(const TrainOpts& opts, std::ostream& out) {
  std::vector<SceneSequence> train_set = load_split(opts.data_dir, "train");
  std::vector<SceneSequence> val_set;
  try {
    val_set = load_split(opts.data_dir, "val");
  } catch (const IoError&) {
    // Tiny datasets may have an empty validation split.
  }

  ModelConfig mcfg;
  derive_dims_from_data(train_set, mcfg);
  mcfg.ablate_signals = opts.ablate_signals;

  TrainConfig tcfg;
  tcfg.learning_rate = opts.lr ? *opts.lr : resolve_learning_rate(train_set);
  tcfg.epochs = opts.epochs;
  tcfg.batch_size = opts.batch_size;
  tcfg.seed = opts.seed;

  out << "training on " << train_set.size() << " scenes (val " << val_set.size()
      << "), lr " << tcfg.learning_rate << ", batch " << tcfg.batch_size << "\n";
  std::vector<EpochLog> log;
  Checkpoint ckpt = train(train_set, val_set, mcfg, tcfg, &log, &out);

  save_checkpoint(opts.out_checkpoint, ckpt);
  write_loss_csv(fs::path(opts.out_checkpoint).string() + ".loss.csv", log);
  out << "checkpoint written to " << opts.out_checkpoint << "\n";
}

void eval_command(const EvalOpts& opts, std::ostream& out) {
  if (opts.split != "train" && opts.split != "val" && opts.split != "test")
    throw std::invalid_argument("eval: --split must be train, val, or test");
  Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  std::vector<SceneSequence> scenes = load_split(opts.data_dir, opts.split);
  MetricsReport report = evaluate(ckpt, scenes);
  out << report.to_kv();
  if (opts.report) {
    std::string csv = MetricsReport::csv_header() + "\n" +
                      report.csv_row(ckpt.config.ablate_signals ? "stgcn-ablated"
                                                                : "stgcn-full") +
                      "\n";
    std::ofstream f(*opts.report, std::ios::binary | std::ios::trunc);
    if (!f.good()) throw IoError("cannot open report file '" + *opts.report + "'");
    f << csv;
  }
}

void predict_command(const PredictOpts& opts, std::ostream& out) {
  Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  SceneSequence seq = load_scene(opts.scene);
  Prediction p = forward(seq, ckpt.params, ckpt.config);

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", p.y_hat);
  out << "p_crossing=" << buf << "\n";
  out << "decision=" << (p.decision == 1 ? "CROSS" : "NOT-CROSS") << "\n";
  for (Eigen::Index t = 0; t < p.traj_absolute.rows(); ++t) {
    std::snprintf(buf, sizeof(buf), "%.3f %.3f", p.traj_absolute(t, 0),
                  p.traj_absolute(t, 1));
    out << "future[" << t + 1 << "]=" << buf << "\n";
  }
}

}  // namespace pedcross::cli
