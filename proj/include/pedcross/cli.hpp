#pragma once

#include "pedcross/synthworld.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace pedcross::cli {

struct GenDataOpts {
  std::string out_dir;
  int num = 100;
  std::uint64_t seed = 0;
  std::optional<double> noise;       // overrides the world config
  std::optional<std::string> config; // world config JSON file
};

struct TrainOpts {
  std::string data_dir;
  std::string out_checkpoint;
  int epochs = 30;
  std::optional<double> lr;  // default: resolved from the node-count rule
  int batch_size = 128;
  std::uint64_t seed = 0;
  bool ablate_signals = false;
};

struct EvalOpts {
  std::string checkpoint;
  std::string data_dir;
  std::string split = "test";
  std::optional<std::string> report;  // CSV output path
};

struct PredictOpts {
  std::string checkpoint;
  std::string scene;
};

// Command bodies shared by the binary and the acceptance suite. They throw
// on failure; the binary maps exceptions to a nonzero exit code.
void gen_data(const GenDataOpts& opts, std::ostream& out);
void train_command(const TrainOpts& opts, std::ostream& out);
void eval_command(const EvalOpts& opts, std::ostream& out);
void predict_command(const PredictOpts& opts, std::ostream& out);

// Parses a world-config JSON document ({image_dims, frames, horizon, noise,
// max_bystanders, max_vehicles, bbox_growth}; all fields optional).
WorldConfig load_world_config(const std::string& path);

}  // namespace pedcross::cli
