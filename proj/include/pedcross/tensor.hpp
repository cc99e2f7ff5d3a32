#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pedcross {

using Array = Eigen::ArrayXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

using Shape = std::vector<int>;

int numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

/// Dense double tensor in row-major order, optionally bound to a node on a
/// Tape for reverse-mode differentiation. `grad` is filled by the trainer for
/// parameter tensors after a backward pass; intermediate gradients live on
/// the tape itself.
struct DiffTensor {
  Shape shape;
  Array values;
  std::optional<Array> grad;
  Tape* tape = nullptr;
  int node_id = -1;

  DiffTensor() = default;
  DiffTensor(Shape s, Array v);

  static DiffTensor zeros(Shape s);
  static DiffTensor scalar(double v);

  int size() const { return static_cast<int>(values.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  bool is_scalar() const { return values.size() == 1; }
  double scalar_value() const;

  // Rank-2 view of the flat storage.
  ConstMatMap mat() const;
};

/// Records the forward computation as a topologically ordered list of op
/// nodes. Nodes are appended as ops execute, so every input id precedes its
/// consumer; backward() walks the list once in reverse.
class Tape {
 public:
  using Pull = std::function<void(Tape&, const Array& out_grad)>;

  DiffTensor leaf(const DiffTensor& t);
  DiffTensor leaf(Shape shape, Array values);
  // Same mechanics as leaf; named separately where the value is data rather
  // than a parameter and its gradient is never read.
  DiffTensor constant(Shape shape, Array values);
  DiffTensor constant_scalar(double v);

  // Seeds `loss` (which must have exactly one element) with gradient 1 and
  // accumulates gradients into every node. Callable once per tape.
  void backward(const DiffTensor& loss);

  const Array& grad(const DiffTensor& t) const;

  int size() const { return static_cast<int>(nodes_.size()); }
  void reserve(int n) { nodes_.reserve(static_cast<std::size_t>(n)); }

  // Implementation hooks for op definitions.
  DiffTensor emit(const char* op, Shape shape, Array values,
                  std::vector<int> inputs, Pull pull);
  Array& grad_buf(int id);

 private:
  struct Node {
    const char* op;
    int out_size;
    std::vector<int> inputs;
    Array grad;
    Pull pull;
  };
  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Each takes tensors bound to the same tape and
// appends one node. Validation failures throw std::invalid_argument naming
// the offending shapes.

// Standard matrix product [m x k] * [k x n] -> [m x n]. A rank-1 right-hand
// side of length k is treated as a column and yields a rank-1 result.
DiffTensor matmul(const DiffTensor& a, const DiffTensor& b);

DiffTensor add(const DiffTensor& a, const DiffTensor& b);        // same shape
DiffTensor sub(const DiffTensor& a, const DiffTensor& b);        // same shape
DiffTensor mul(const DiffTensor& a, const DiffTensor& b);        // elementwise
DiffTensor scale(const DiffTensor& a, double c);

// Adds a length-n bias row to every row of X [m x n]. When `row_on` is
// non-empty it must have m entries; rows with a zero entry are left alone
// (bias is applied only to real node slots, never to padding).
DiffTensor add_rowwise(const DiffTensor& x, const DiffTensor& bias,
                       const std::vector<char>& row_on = {});

DiffTensor sigmoid(const DiffTensor& x);
DiffTensor relu(const DiffTensor& x);
DiffTensor tanh(const DiffTensor& x);

// Causal 1-D convolution along the time axis. x is [C x T], weights are
// [k x C_out x C]; output [C_out x T] with y[:,t] = sum_tau W_tau x[:,t-tau]
// and implicit zero padding for t-tau < 0. k > T is pure padding; k <= 0 is
// a parameter error.
DiffTensor conv1d_time(const DiffTensor& x, const DiffTensor& weights, int k);

// 3x3 convolution with zero same-padding over x [C_in x H x W] with kernels
// w [C_out x C_in x 3 x 3] and per-channel bias b [C_out].
DiffTensor conv2d_3x3_same(const DiffTensor& x, const DiffTensor& w,
                           const DiffTensor& b);

// 2x2 mean pooling over x [C x H x W]; H and W must be even.
DiffTensor meanpool_2x2(const DiffTensor& x);

DiffTensor reshape(const DiffTensor& x, Shape shape);
DiffTensor row(const DiffTensor& x, int r);                       // rank-1
DiffTensor concat_vec(const std::vector<DiffTensor>& parts);      // rank-1
DiffTensor concat_rows(const std::vector<DiffTensor>& rows);      // [R x d]
DiffTensor hstack(const DiffTensor& a, const DiffTensor& b);      // columns

DiffTensor sum(const DiffTensor& x);      // -> scalar
DiffTensor l1_sum(const DiffTensor& x);   // sum |x|, subgradient 0 at 0
DiffTensor sq_sum(const DiffTensor& x);   // sum x^2

// Binary cross-entropy on a scalar probability. y must be 0 or 1. The
// probability is clamped to [eps, 1-eps] with eps = 1e-7 before the log, and
// the gradient is taken on the clamped value.
DiffTensor bce_loss(const DiffTensor& y_hat, int y);

// Mean over rows of the squared Euclidean distance between pred [R x c] and
// a constant target of the same flat size.
DiffTensor mse_rows(const DiffTensor& pred, const Array& target);

struct LstmWeights {
  const DiffTensor& w_i;
  const DiffTensor& w_f;
  const DiffTensor& w_o;
  const DiffTensor& w_g;
  const DiffTensor& b_i;
  const DiffTensor& b_f;
  const DiffTensor& b_o;
  const DiffTensor& b_g;
};

struct LstmState {
  DiffTensor h;
  DiffTensor c;
};

// Standard LSTM cell: i,f,o = sigmoid(W [x;h] + b), g = tanh(W_g [x;h] + b_g),
// c' = f*c + i*g, h' = o * tanh(c'). Weight matrices are [d_h x (d_in + d_h)].
LstmState lstm_cell(const DiffTensor& x, const DiffTensor& h_prev,
                    const DiffTensor& c_prev, const LstmWeights& w);

// Per-frame graph mixing for stacked frame-major features. X is [(T*N) x d]
// with frame t occupying rows [t*N, (t+1)*N); adjacency holds T constant
// N x N matrices. Output rows Y_t = (W_imp .* adj[t]) * X_t.
DiffTensor graph_mix(const DiffTensor& w_imp, const DiffTensor& x,
                     std::shared_ptr<const std::vector<RowMat>> adjacency);

// Batched causal temporal convolution for frame-major features: every node
// slot n is convolved independently along t with kernels w [k x d_out x d_in].
// Equivalent to conv1d_time applied per node.
DiffTensor temporal_conv(const DiffTensor& x, const DiffTensor& w, int t_frames,
                         int n_slots);

}  // namespace pedcross
