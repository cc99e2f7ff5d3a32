#pragma once

#include "pedcross/graph.hpp"
#include "pedcross/scene.hpp"
#include "pedcross/tensor.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace pedcross {

struct ModelConfig {
  int appearance_dim = 8;
  int enc_channels1 = 2;
  int enc_channels2 = 4;
  // One hidden width per ST-Graph layer, per stream; both streams carry the
  // same number of layers.
  std::vector<int> ic_hidden = {24, 24};
  std::vector<int> lc_hidden = {24, 24};
  int tmp_kernel = 3;
  int lstm_hidden = 32;
  int fcn_hidden = 4096;
  int horizon = 15;
  int n_slots = 7;
  double threshold = 0.5;
  bool ablate_signals = false;

  int st_layers() const { return static_cast<int>(ic_hidden.size()); }
  void validate() const;
};

// Named parameter collection in a fixed construction order; the order is the
// serialization and update order, so runs are reproducible.
struct ModelParams {
  std::vector<std::string> names;
  std::vector<DiffTensor> tensors;
  std::map<std::string, int> index;
  // Regularization groups: L1 over the LSTM cell, L2 over each stream's
  // ST-Graph layer weights.
  std::vector<int> lstm_group, ic_group, lc_group;

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);
  static ModelParams zeros(const ModelConfig& cfg);

  DiffTensor& at(const std::string& name);
  const DiffTensor& at(const std::string& name) const;
  int count() const { return static_cast<int>(tensors.size()); }
  long long scalar_count() const;
};

// Parameters bound as leaves on one tape, aligned with ModelParams order.
struct BoundParams {
  std::vector<DiffTensor> t;
  const ModelParams* source = nullptr;

  const DiffTensor& at(const std::string& name) const;
};

BoundParams bind_params(Tape& tape, const ModelParams& params);

// --- Layer building blocks (frame-major features, rows = t * N + n) -------

// Two 3x3 conv + ReLU + 2x2 mean-pool stages and a linear projection from a
// 32x32 grayscale patch to the appearance feature vector.
DiffTensor appearance_encoder(Tape& tape, const std::vector<double>& patch,
                              const BoundParams& p, const ModelConfig& cfg);

// Per-position linear map plus bias on real slots, then ReLU.
DiffTensor feature_convolution(const DiffTensor& x, const DiffTensor& w,
                               const DiffTensor& b, const std::vector<char>& mask);

// H' = ReLU((W_imp .* A_norm[t]) H W + bias on real slots).
DiffTensor spatial_message_pass(const DiffTensor& x, const DiffTensor& w_imp,
                                const DiffTensor& w, const DiffTensor& b,
                                std::shared_ptr<const std::vector<RowMat>> adj,
                                const std::vector<char>& mask);

// Causal temporal convolution per node slot, then ReLU.
DiffTensor temporal_message_pass(const DiffTensor& x, const DiffTensor& w,
                                 int t_frames, int n_slots);

// FC -> SMP -> TMP.
struct StLayerWeights {
  const DiffTensor& fc_w;
  const DiffTensor& fc_b;
  const DiffTensor& smp_w;
  const DiffTensor& smp_b;
  const DiffTensor& tmp_w;
};
DiffTensor st_graph_layer(const DiffTensor& x, const StLayerWeights& w,
                          const DiffTensor& w_imp,
                          std::shared_ptr<const std::vector<RowMat>> adj,
                          const std::vector<char>& mask, int t_frames, int n_slots);

// Per-frame concatenation of the target slot's row from both streams.
// The target occupies slot 0; it must be unmasked in every frame.
std::vector<DiffTensor> fuse_streams(const DiffTensor& h_ic, const DiffTensor& h_lc,
                                     const std::vector<std::vector<char>>& mask,
                                     int t_frames, int n_slots);

// LSTM unrolled from zero state over the fused sequence; returns final h.
DiffTensor temporal_encoder(Tape& tape, const std::vector<DiffTensor>& fused,
                            const BoundParams& p, const ModelConfig& cfg);

DiffTensor predict_intention(const DiffTensor& h, const DiffTensor& w,
                             const DiffTensor& b);

// Linear map to horizon x 2 trajectory offsets (pixels, relative to the last
// observed target center).
DiffTensor predict_trajectory(const DiffTensor& h, const DiffTensor& w_o,
                              int horizon);

// --- Full pipeline ---------------------------------------------------------

struct ForwardTensors {
  DiffTensor y_hat;          // scalar crossing probability
  DiffTensor traj_offsets;   // [horizon x 2] pixel offsets
  Eigen::Vector2d last_center;
};

ForwardTensors forward_tape(Tape& tape, const SceneSequence& seq,
                            const BoundParams& p, const ModelConfig& cfg);

struct Prediction {
  double y_hat = 0.0;
  int decision = 0;  // 1 = crossing; ties at the threshold resolve to 0
  RowMat traj_offsets;    // horizon x 2
  RowMat traj_absolute;   // horizon x 2
};

Prediction forward(const SceneSequence& seq, const ModelParams& params,
                   const ModelConfig& cfg);

}  // namespace pedcross
