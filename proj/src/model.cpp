#include "pedcross/model.hpp"

#include "pedcross/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace pedcross {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void ModelConfig::validate() const {
  check(appearance_dim >= 1, "ModelConfig: appearance_dim must be >= 1");
  check(enc_channels1 >= 1 && enc_channels2 >= 1,
        "ModelConfig: encoder channel counts must be >= 1");
  check(!ic_hidden.empty() && ic_hidden.size() == lc_hidden.size(),
        "ModelConfig: streams must have the same (nonzero) layer count");
  for (int d : ic_hidden) check(d >= 1, "ModelConfig: ic_hidden entries must be >= 1");
  for (int d : lc_hidden) check(d >= 1, "ModelConfig: lc_hidden entries must be >= 1");
  check(tmp_kernel >= 1, "ModelConfig: tmp_kernel must be >= 1");
  check(lstm_hidden >= 1, "ModelConfig: lstm_hidden must be >= 1");
  check(fcn_hidden >= 1, "ModelConfig: fcn_hidden must be >= 1");
  check(horizon >= 1, "ModelConfig: horizon must be >= 1");
  check(n_slots >= 1, "ModelConfig: n_slots must be >= 1");
  check(threshold > 0.0 && threshold < 1.0, "ModelConfig: threshold must be in (0,1)");
}

namespace {

enum class Group { None, Lstm, Ic, Lc };

struct ParamBuilder {
  ModelParams params;
  Rng rng;
  bool zero_init;

  ParamBuilder(std::uint64_t seed, bool zeros) : rng(seed), zero_init(zeros) {}

  // Seeded uniform fan-in init for every parameter; explicit overrides use
  // `fill`.
  void tensor(const std::string& name, Shape shape, int fan_in, Group group,
              double* fill = nullptr) {
    const int n = numel(shape);
    Array v(n);
    if (fill != nullptr) {
      v.setConstant(*fill);
    } else if (zero_init) {
      v.setZero();
    } else {
      // ReLU-gain uniform fan-in init: plain 1/sqrt(fan_in) shrinks the
      // feature scale roughly 2.5x per layer, which the small fixed SGD
      // rates cannot recover within the training budget.
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (int i = 0; i < n; ++i) v[i] = rng.uniform(-bound, bound);
    }
    const int idx = static_cast<int>(params.tensors.size());
    params.names.push_back(name);
    params.tensors.emplace_back(std::move(shape), std::move(v));
    params.index[name] = idx;
    switch (group) {
      case Group::Lstm: params.lstm_group.push_back(idx); break;
      case Group::Ic: params.ic_group.push_back(idx); break;
      case Group::Lc: params.lc_group.push_back(idx); break;
      case Group::None: break;
    }
  }
};

ModelParams build_params(const ModelConfig& cfg, std::uint64_t seed, bool zeros) {
  cfg.validate();
  ParamBuilder b(seed, zeros);

  // Appearance encoder: 1 -> c1 -> c2 channels, then linear to appearance_dim.
  const int c1 = cfg.enc_channels1, c2 = cfg.enc_channels2;
  b.tensor("enc.conv1.w", {c1, 1, 3, 3}, 9, Group::None);
  b.tensor("enc.conv1.b", {c1}, 9, Group::None);
  b.tensor("enc.conv2.w", {c2, c1, 3, 3}, 9 * c1, Group::None);
  b.tensor("enc.conv2.b", {c2}, 9 * c1, Group::None);
  const int enc_flat = c2 * (kPatchSide / 4) * (kPatchSide / 4);
  b.tensor("enc.fc.w", {cfg.appearance_dim, enc_flat}, enc_flat, Group::None);
  b.tensor("enc.fc.b", {cfg.appearance_dim}, enc_flat, Group::None);

  // Importance matrix starts at all-ones so step 0 reduces to the plain
  // normalized adjacency.
  double one = 1.0;
  b.tensor("imp.w", {cfg.n_slots, cfg.n_slots}, cfg.n_slots, Group::None, &one);

  auto stream = [&](const char* prefix, int d_in, const std::vector<int>& hidden,
                    Group group) {
    int d = d_in;
    for (std::size_t l = 0; l < hidden.size(); ++l) {
      const int d_out = hidden[l];
      const std::string base = std::string(prefix) + ".l" + std::to_string(l);
      b.tensor(base + ".fc.w", {d, d_out}, d, group);
      b.tensor(base + ".fc.b", {d_out}, d, group);
      b.tensor(base + ".smp.w", {d_out, d_out}, d_out, group);
      b.tensor(base + ".smp.b", {d_out}, d_out, group);
      b.tensor(base + ".tmp.w", {cfg.tmp_kernel, d_out, d_out},
               cfg.tmp_kernel * d_out, group);
      d = d_out;
    }
  };
  stream("ic", cfg.appearance_dim + kClassFeatureDim, cfg.ic_hidden, Group::Ic);
  stream("lc", kLocationFeatureDim + kClassFeatureDim, cfg.lc_hidden, Group::Lc);

  const int d_fused = cfg.ic_hidden.back() + cfg.lc_hidden.back();
  const int d_h = cfg.lstm_hidden;
  const int d_gate = d_fused + d_h;
  for (const char* g : {"i", "f", "o", "g"}) {
    b.tensor(std::string("lstm.w_") + g, {d_h, d_gate}, d_gate, Group::Lstm);
    b.tensor(std::string("lstm.b_") + g, {d_h}, d_gate, Group::Lstm);
  }

  b.tensor("fcn.w", {cfg.fcn_hidden, d_h}, d_h, Group::None);
  b.tensor("fcn.b", {cfg.fcn_hidden}, d_h, Group::None);
  b.tensor("head.int.w", {1, cfg.fcn_hidden}, cfg.fcn_hidden, Group::None);
  double zero = 0.0;
  b.tensor("head.int.b", {1}, cfg.fcn_hidden, Group::None, &zero);
  b.tensor("head.traj.w", {2 * cfg.horizon, cfg.fcn_hidden}, cfg.fcn_hidden,
           Group::None);

  return std::move(b.params);
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  return build_params(cfg, seed, /*zeros=*/false);
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  return build_params(cfg, /*seed=*/0, /*zeros=*/true);
}

DiffTensor& ModelParams::at(const std::string& name) {
  auto it = index.find(name);
  check(it != index.end(), "ModelParams: unknown parameter '" + name + "'");
  return tensors[static_cast<std::size_t>(it->second)];
}

const DiffTensor& ModelParams::at(const std::string& name) const {
  auto it = index.find(name);
  check(it != index.end(), "ModelParams: unknown parameter '" + name + "'");
  return tensors[static_cast<std::size_t>(it->second)];
}

long long ModelParams::scalar_count() const {
  long long n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

const DiffTensor& BoundParams::at(const std::string& name) const {
  check(source != nullptr, "BoundParams: not bound");
  auto it = source->index.find(name);
  check(it != source->index.end(), "BoundParams: unknown parameter '" + name + "'");
  return t[static_cast<std::size_t>(it->second)];
}

BoundParams bind_params(Tape& tape, const ModelParams& params) {
  BoundParams b;
  b.source = &params;
  b.t.reserve(params.tensors.size());
  for (const auto& p : params.tensors) b.t.push_back(tape.leaf(p));
  return b;
}

DiffTensor appearance_encoder(Tape& tape, const std::vector<double>& patch,
                              const BoundParams& p, const ModelConfig& cfg) {
  check(static_cast<int>(patch.size()) == kPatchSize,
        "appearance_encoder: patch must be " + std::to_string(kPatchSide) + "x" +
            std::to_string(kPatchSide) + ", got " + std::to_string(patch.size()) +
            " values");
  Array v = Eigen::Map<const Array>(patch.data(), kPatchSize);
  check(v.minCoeff() >= 0.0 && v.maxCoeff() <= 1.0,
        "appearance_encoder: patch values must lie in [0,1]");
  DiffTensor x = tape.constant({1, kPatchSide, kPatchSide}, std::move(v));
  x = meanpool_2x2(relu(conv2d_3x3_same(x, p.at("enc.conv1.w"), p.at("enc.conv1.b"))));
  x = meanpool_2x2(relu(conv2d_3x3_same(x, p.at("enc.conv2.w"), p.at("enc.conv2.b"))));
  x = reshape(x, {x.size()});
  DiffTensor out = add(matmul(p.at("enc.fc.w"), x), p.at("enc.fc.b"));
  check(out.dim(0) == cfg.appearance_dim,
        "appearance_encoder: projection width does not match appearance_dim");
  return out;
}

DiffTensor feature_convolution(const DiffTensor& x, const DiffTensor& w,
                               const DiffTensor& b, const std::vector<char>& mask) {
  return relu(add_rowwise(matmul(x, w), b, mask));
}

DiffTensor spatial_message_pass(const DiffTensor& x, const DiffTensor& w_imp,
                                const DiffTensor& w, const DiffTensor& b,
                                std::shared_ptr<const std::vector<RowMat>> adj,
                                const std::vector<char>& mask) {
  DiffTensor mixed = graph_mix(w_imp, x, std::move(adj));
  return relu(add_rowwise(matmul(mixed, w), b, mask));
}

DiffTensor temporal_message_pass(const DiffTensor& x, const DiffTensor& w,
                                 int t_frames, int n_slots) {
  return relu(temporal_conv(x, w, t_frames, n_slots));
}

DiffTensor st_graph_layer(const DiffTensor& x, const StLayerWeights& w,
                          const DiffTensor& w_imp,
                          std::shared_ptr<const std::vector<RowMat>> adj,
                          const std::vector<char>& mask, int t_frames, int n_slots) {
  DiffTensor h = feature_convolution(x, w.fc_w, w.fc_b, mask);
  h = spatial_message_pass(h, w_imp, w.smp_w, w.smp_b, std::move(adj), mask);
  return temporal_message_pass(h, w.tmp_w, t_frames, n_slots);
}

std::vector<DiffTensor> fuse_streams(const DiffTensor& h_ic, const DiffTensor& h_lc,
                                     const std::vector<std::vector<char>>& mask,
                                     int t_frames, int n_slots) {
  check(h_ic.rank() == 2 && h_lc.rank() == 2 &&
            h_ic.dim(0) == t_frames * n_slots && h_lc.dim(0) == t_frames * n_slots,
        "fuse_streams: stream shapes " + shape_str(h_ic.shape) + " and " +
            shape_str(h_lc.shape) + " do not cover " + std::to_string(t_frames) +
            " frames of " + std::to_string(n_slots) + " slots");
  std::vector<DiffTensor> fused;
  fused.reserve(static_cast<std::size_t>(t_frames));
  for (int t = 0; t < t_frames; ++t) {
    check(mask[static_cast<std::size_t>(t)][0],
          "fuse_streams: target slot masked in frame " + std::to_string(t));
    fused.push_back(concat_vec({row(h_ic, t * n_slots), row(h_lc, t * n_slots)}));
  }
  return fused;
}

DiffTensor temporal_encoder(Tape& tape, const std::vector<DiffTensor>& fused,
                            const BoundParams& p, const ModelConfig& cfg) {
  check(!fused.empty(), "temporal_encoder: empty sequence");
  LstmWeights w{p.at("lstm.w_i"), p.at("lstm.w_f"), p.at("lstm.w_o"),
                p.at("lstm.w_g"), p.at("lstm.b_i"), p.at("lstm.b_f"),
                p.at("lstm.b_o"), p.at("lstm.b_g")};
  DiffTensor h = tape.constant({cfg.lstm_hidden}, Array::Zero(cfg.lstm_hidden));
  DiffTensor c = tape.constant({cfg.lstm_hidden}, Array::Zero(cfg.lstm_hidden));
  for (const DiffTensor& x : fused) {
    LstmState s = lstm_cell(x, h, c, w);
    h = std::move(s.h);
    c = std::move(s.c);
  }
  return h;
}

DiffTensor predict_intention(const DiffTensor& h, const DiffTensor& w,
                             const DiffTensor& b) {
  return sigmoid(add(matmul(w, h), b));
}

DiffTensor predict_trajectory(const DiffTensor& h, const DiffTensor& w_o,
                              int horizon) {
  return reshape(matmul(w_o, h), {horizon, 2});
}

ForwardTensors forward_tape(Tape& tape, const SceneSequence& seq,
                            const BoundParams& p, const ModelConfig& cfg) {
  cfg.validate();
  const int t_frames = seq.num_frames();
  const int n_slots = cfg.n_slots;

  // The data-side stream features, slot layout, and adjacency stack come from
  // assemble_streams; only the appearance block is rebuilt on the tape so
  // that gradients reach the encoder.
  StreamAssembly asm_data = assemble_streams(
      seq, cfg.appearance_dim,
      [&](const SceneObject&, int) {
        return Eigen::VectorXd::Zero(cfg.appearance_dim).eval();
      },
      n_slots, cfg.ablate_signals);
  const SlotLayout& slots = asm_data.slots;
  auto adj =
      std::make_shared<const std::vector<RowMat>>(std::move(asm_data.adj.normalized));

  // Appearance features, encoded once per distinct patch and reused; the
  // backward pass accumulates through shared nodes.
  std::map<std::vector<double>, DiffTensor> enc_cache;
  const int d_ic = cfg.appearance_dim + kClassFeatureDim;
  const int d_lc = kLocationFeatureDim + kClassFeatureDim;
  DiffTensor zero_app = tape.constant({cfg.appearance_dim},
                                      Array::Zero(cfg.appearance_dim));
  std::vector<DiffTensor> ic_rows;
  ic_rows.reserve(static_cast<std::size_t>(t_frames * n_slots));
  for (int t = 0; t < t_frames; ++t) {
    const auto& objs = seq.frames[static_cast<std::size_t>(t)];
    for (int s = 0; s < n_slots; ++s) {
      const int oi = slots.object_at[static_cast<std::size_t>(t)]
                                    [static_cast<std::size_t>(s)];
      if (oi < 0) {
        ic_rows.push_back(zero_app);
        continue;
      }
      const SceneObject& obj = objs[static_cast<std::size_t>(oi)];
      auto it = enc_cache.find(obj.appearance);
      if (it == enc_cache.end()) {
        it = enc_cache.emplace(obj.appearance,
                               appearance_encoder(tape, obj.appearance, p, cfg))
                 .first;
      }
      ic_rows.push_back(it->second);
    }
  }

  RowMat cls_block =
      asm_data.x_ic.rightCols(kClassFeatureDim);
  DiffTensor x_ic = hstack(
      concat_rows(ic_rows),
      tape.constant({t_frames * n_slots, kClassFeatureDim},
                    Eigen::Map<const Array>(cls_block.data(), cls_block.size())));
  check(x_ic.dim(1) == d_ic, "forward: image-class stream width mismatch");
  DiffTensor x_lc =
      tape.constant({t_frames * n_slots, d_lc},
                    Eigen::Map<const Array>(asm_data.x_lc.data(),
                                            asm_data.x_lc.size()));

  auto run_stream = [&](const char* prefix, DiffTensor x) {
    for (int l = 0; l < cfg.st_layers(); ++l) {
      const std::string base = std::string(prefix) + ".l" + std::to_string(l);
      StLayerWeights w{p.at(base + ".fc.w"), p.at(base + ".fc.b"),
                       p.at(base + ".smp.w"), p.at(base + ".smp.b"),
                       p.at(base + ".tmp.w")};
      x = st_graph_layer(x, w, p.at("imp.w"), adj, slots.flat_mask, t_frames,
                         n_slots);
    }
    return x;
  };
  DiffTensor h_ic = run_stream("ic", std::move(x_ic));
  DiffTensor h_lc = run_stream("lc", std::move(x_lc));

  std::vector<DiffTensor> fused =
      fuse_streams(h_ic, h_lc, slots.mask, t_frames, n_slots);
  DiffTensor h = temporal_encoder(tape, fused, p, cfg);
  DiffTensor h_fcn = relu(add(matmul(p.at("fcn.w"), h), p.at("fcn.b")));

  ForwardTensors out{
      predict_intention(h_fcn, p.at("head.int.w"), p.at("head.int.b")),
      predict_trajectory(h_fcn, p.at("head.traj.w"), cfg.horizon),
      seq.last_target_center()};
  return out;
}

Prediction forward(const SceneSequence& seq, const ModelParams& params,
                   const ModelConfig& cfg) {
  Tape tape;
  BoundParams p = bind_params(tape, params);
  ForwardTensors f = forward_tape(tape, seq, p, cfg);

  Prediction pred;
  pred.y_hat = f.y_hat.scalar_value();
  pred.decision = pred.y_hat > cfg.threshold ? 1 : 0;
  pred.traj_offsets = RowMat(cfg.horizon, 2);
  for (int t = 0; t < cfg.horizon; ++t) {
    pred.traj_offsets(t, 0) = f.traj_offsets.values[2 * t];
    pred.traj_offsets(t, 1) = f.traj_offsets.values[2 * t + 1];
  }
  pred.traj_absolute = pred.traj_offsets;
  pred.traj_absolute.col(0).array() += f.last_center.x();
  pred.traj_absolute.col(1).array() += f.last_center.y();
  return pred;
}

}  // namespace pedcross
