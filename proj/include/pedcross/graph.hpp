#pragma once

#include "pedcross/scene.hpp"
#include "pedcross/tensor.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace pedcross {

// Per-frame symmetric-normalized adjacency over a fixed number of node slots,
// plus the per-frame real/padded mask. The learnable importance matrix that
// modulates these lives in ModelParams and is applied at graph_mix time.
struct AdjacencyStack {
  int n_slots = 0;
  std::vector<RowMat> normalized;        // T matrices, n_slots x n_slots
  std::vector<std::vector<char>> mask;   // T x n_slots, 1 = real node
};

// Complete graph among real slots: A[u][v] = 1 for u != v real, diagonal
// self_loops ? 1 : 0 on real slots, padded rows/columns all zero.
RowMat build_adjacency(int n_slots, const std::vector<char>& real, bool self_loops);

// A_tilde = A + I on real diagonal entries, D = diag(row sums), result
// D^{-1/2} A_tilde D^{-1/2}. Padded rows/columns stay zero. A must be
// symmetric and nonnegative.
RowMat normalize_adjacency(const RowMat& a, const std::vector<char>& real);

// Frame-by-frame slot assignment: target pedestrian always in slot 0,
// remaining objects in frame order, -1 for padding.
struct SlotLayout {
  int t_frames = 0;
  int n_slots = 0;
  std::vector<std::vector<int>> object_at;  // T x n_slots, index into frame or -1
  std::vector<std::vector<char>> mask;      // T x n_slots
  std::vector<char> flat_mask;              // (T*n_slots), frame-major
};

SlotLayout compute_slots(const SceneSequence& seq, int n_slots);

AdjacencyStack build_adjacency_stack(const SceneSequence& seq, int n_slots);

// Maps an object in a given frame to its appearance feature vector.
using AppearanceFn =
    std::function<Eigen::VectorXd(const SceneObject& obj, int frame)>;

// Assembled per-stream node features with frame-major rows (t * N + n).
// x_ic rows are [appearance || class one-hot]; x_lc rows are
// [location features || class one-hot]; padded slots are all-zero rows.
struct StreamAssembly {
  int t_frames = 0;
  int n_slots = 0;
  RowMat x_ic;  // (T*N) x (appearance_dim + 7)
  RowMat x_lc;  // (T*N) x 12
  AdjacencyStack adj;
  SlotLayout slots;
};

StreamAssembly assemble_streams(const SceneSequence& seq, int appearance_dim,
                                const AppearanceFn& appearance, int n_slots,
                                bool ablate_signals = false);

}  // namespace pedcross
