#include "pedcross/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace pedcross {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

RowMat build_adjacency(int n_slots, const std::vector<char>& real, bool self_loops) {
  check(n_slots >= 1, "build_adjacency: need at least one slot");
  check(static_cast<int>(real.size()) == n_slots,
        "build_adjacency: mask length does not match slot count");
  RowMat a = RowMat::Zero(n_slots, n_slots);
  for (int u = 0; u < n_slots; ++u) {
    if (!real[static_cast<std::size_t>(u)]) continue;
    for (int v = 0; v < n_slots; ++v) {
      if (!real[static_cast<std::size_t>(v)]) continue;
      if (u == v) {
        if (self_loops) a(u, v) = 1.0;
      } else {
        a(u, v) = 1.0;
      }
    }
  }
  return a;
}

RowMat normalize_adjacency(const RowMat& a, const std::vector<char>& real) {
  const int n = static_cast<int>(a.rows());
  check(a.cols() == n, "normalize_adjacency: matrix is not square");
  check(static_cast<int>(real.size()) == n,
        "normalize_adjacency: mask length does not match matrix size");
  check((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
        "normalize_adjacency: input is not symmetric");
  check(a.minCoeff() >= 0.0, "normalize_adjacency: negative entries");

  RowMat a_tilde = a;
  for (int i = 0; i < n; ++i) {
    if (real[static_cast<std::size_t>(i)]) a_tilde(i, i) += 1.0;
  }
  Eigen::VectorXd d_inv_sqrt(n);
  for (int i = 0; i < n; ++i) {
    const double deg = a_tilde.row(i).sum();
    if (real[static_cast<std::size_t>(i)]) {
      check(deg > 0.0, "normalize_adjacency: zero-degree real node");
      d_inv_sqrt[i] = 1.0 / std::sqrt(deg);
    } else {
      check(deg == 0.0, "normalize_adjacency: padded slot has edges");
      d_inv_sqrt[i] = 0.0;
    }
  }
  return d_inv_sqrt.asDiagonal() * a_tilde * d_inv_sqrt.asDiagonal();
}

SlotLayout compute_slots(const SceneSequence& seq, int n_slots) {
  SlotLayout layout;
  layout.t_frames = seq.num_frames();
  layout.n_slots = n_slots;
  layout.object_at.assign(static_cast<std::size_t>(layout.t_frames),
                          std::vector<int>(static_cast<std::size_t>(n_slots), -1));
  layout.mask.assign(static_cast<std::size_t>(layout.t_frames),
                     std::vector<char>(static_cast<std::size_t>(n_slots), 0));
  layout.flat_mask.assign(static_cast<std::size_t>(layout.t_frames * n_slots), 0);

  for (int t = 0; t < layout.t_frames; ++t) {
    const auto& objs = seq.frames[static_cast<std::size_t>(t)];
    check(static_cast<int>(objs.size()) <= n_slots,
          "compute_slots: frame " + std::to_string(t) + " has " +
              std::to_string(objs.size()) + " objects but only " +
              std::to_string(n_slots) + " slots");
    check(seq.target_index >= 0 &&
              seq.target_index < static_cast<int>(objs.size()),
          "compute_slots: target pedestrian absent from frame " + std::to_string(t));
    auto& slot_of = layout.object_at[static_cast<std::size_t>(t)];
    auto& mask = layout.mask[static_cast<std::size_t>(t)];
    int next = 0;
    slot_of[static_cast<std::size_t>(next)] = seq.target_index;
    mask[static_cast<std::size_t>(next)] = 1;
    ++next;
    for (int i = 0; i < static_cast<int>(objs.size()); ++i) {
      if (i == seq.target_index) continue;
      slot_of[static_cast<std::size_t>(next)] = i;
      mask[static_cast<std::size_t>(next)] = 1;
      ++next;
    }
    for (int s = 0; s < n_slots; ++s)
      layout.flat_mask[static_cast<std::size_t>(t * n_slots + s)] =
          mask[static_cast<std::size_t>(s)];
  }
  return layout;
}

AdjacencyStack build_adjacency_stack(const SceneSequence& seq, int n_slots) {
  SlotLayout layout = compute_slots(seq, n_slots);
  AdjacencyStack stack;
  stack.n_slots = n_slots;
  stack.mask = layout.mask;
  stack.normalized.reserve(static_cast<std::size_t>(layout.t_frames));
  for (int t = 0; t < layout.t_frames; ++t) {
    const auto& mask = layout.mask[static_cast<std::size_t>(t)];
    RowMat a = build_adjacency(n_slots, mask, /*self_loops=*/false);
    stack.normalized.push_back(normalize_adjacency(a, mask));
  }
  return stack;
}

StreamAssembly assemble_streams(const SceneSequence& seq, int appearance_dim,
                                const AppearanceFn& appearance, int n_slots,
                                bool ablate_signals) {
  check(appearance_dim >= 1, "assemble_streams: appearance_dim must be >= 1");
  StreamAssembly out;
  out.slots = compute_slots(seq, n_slots);
  out.t_frames = out.slots.t_frames;
  out.n_slots = n_slots;
  out.adj = build_adjacency_stack(seq, n_slots);

  const int d_ic = appearance_dim + kClassFeatureDim;
  const int d_lc = kLocationFeatureDim + kClassFeatureDim;
  out.x_ic = RowMat::Zero(out.t_frames * n_slots, d_ic);
  out.x_lc = RowMat::Zero(out.t_frames * n_slots, d_lc);

  for (int t = 0; t < out.t_frames; ++t) {
    const auto& objs = seq.frames[static_cast<std::size_t>(t)];
    for (int s = 0; s < n_slots; ++s) {
      const int oi = out.slots.object_at[static_cast<std::size_t>(t)]
                                        [static_cast<std::size_t>(s)];
      if (oi < 0) continue;
      const SceneObject& obj = objs[static_cast<std::size_t>(oi)];
      const Eigen::VectorXd app = appearance(obj, t);
      check(static_cast<int>(app.size()) == appearance_dim,
            "assemble_streams: appearance feature has size " +
                std::to_string(app.size()) + ", expected " +
                std::to_string(appearance_dim));
      const Eigen::VectorXd cls = encode_class(obj, ablate_signals);
      const Eigen::VectorXd loc =
          location_features(obj.bbox, seq.image_w, seq.image_h);
      const int r = t * n_slots + s;
      out.x_ic.row(r).segment(0, appearance_dim) = app.transpose();
      out.x_ic.row(r).segment(appearance_dim, kClassFeatureDim) = cls.transpose();
      out.x_lc.row(r).segment(0, kLocationFeatureDim) = loc.transpose();
      out.x_lc.row(r).segment(kLocationFeatureDim, kClassFeatureDim) =
          cls.transpose();
    }
  }
  return out;
}

}  // namespace pedcross
