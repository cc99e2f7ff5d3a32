#include "pedcross/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace pedcross {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Tape* common_tape(const std::vector<const DiffTensor*>& ts, const char* op) {
  Tape* tape = nullptr;
  for (const DiffTensor* t : ts) {
    require(t->tape != nullptr && t->node_id >= 0,
            std::string(op) + ": input tensor is not bound to a tape");
    if (tape == nullptr) tape = t->tape;
    require(t->tape == tape, std::string(op) + ": inputs live on different tapes");
  }
  return tape;
}

}  // namespace

int numel(const Shape& shape) {
  int n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

DiffTensor::DiffTensor(Shape s, Array v) : shape(std::move(s)), values(std::move(v)) {
  require(numel(shape) == static_cast<int>(values.size()),
          "DiffTensor: shape " + shape_str(shape) + " does not match " +
              std::to_string(values.size()) + " values");
}

DiffTensor DiffTensor::zeros(Shape s) {
  int n = numel(s);
  return DiffTensor(std::move(s), Array::Zero(n));
}

DiffTensor DiffTensor::scalar(double v) {
  Array a(1);
  a[0] = v;
  return DiffTensor({1}, std::move(a));
}

double DiffTensor::scalar_value() const {
  require(is_scalar(), "scalar_value: tensor has shape " + shape_str(shape));
  return values[0];
}

ConstMatMap DiffTensor::mat() const {
  require(rank() == 2, "mat: tensor has shape " + shape_str(shape));
  return ConstMatMap(values.data(), shape[0], shape[1]);
}

// ---------------------------------------------------------------------------
// Tape

DiffTensor Tape::emit(const char* op, Shape shape, Array values,
                      std::vector<int> inputs, Pull pull) {
  DiffTensor out(std::move(shape), std::move(values));
  out.tape = this;
  out.node_id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{op, out.size(), std::move(inputs), Array(), std::move(pull)});
  return out;
}

DiffTensor Tape::leaf(const DiffTensor& t) { return leaf(t.shape, t.values); }

DiffTensor Tape::leaf(Shape shape, Array values) {
  return emit("leaf", std::move(shape), std::move(values), {}, nullptr);
}

DiffTensor Tape::constant(Shape shape, Array values) {
  return emit("const", std::move(shape), std::move(values), {}, nullptr);
}

DiffTensor Tape::constant_scalar(double v) {
  Array a(1);
  a[0] = v;
  return constant({1}, std::move(a));
}

Array& Tape::grad_buf(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

void Tape::backward(const DiffTensor& loss) {
  require(loss.tape == this && loss.node_id >= 0,
          "backward: loss is not bound to this tape");
  require(loss.is_scalar(), "backward: seed must be scalar, got shape " +
                                shape_str(loss.shape));
  require(!ran_backward_, "backward: tape already differentiated");
  ran_backward_ = true;

  for (Node& n : nodes_) n.grad = Array::Zero(n.out_size);
  nodes_[static_cast<std::size_t>(loss.node_id)].grad[0] = 1.0;

  for (int i = loss.node_id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.pull) n.pull(*this, n.grad);
  }
}

const Array& Tape::grad(const DiffTensor& t) const {
  require(t.tape == this && t.node_id >= 0, "grad: tensor is not bound to this tape");
  require(ran_backward_, "grad: backward has not been run");
  return nodes_[static_cast<std::size_t>(t.node_id)].grad;
}

// ---------------------------------------------------------------------------
// Ops

DiffTensor matmul(const DiffTensor& a, const DiffTensor& b) {
  Tape* tape = common_tape({&a, &b}, "matmul");
  require(a.rank() == 2, "matmul: left operand must be rank-2, got " +
                             shape_str(a.shape));
  const bool vec = b.rank() == 1;
  require(vec || b.rank() == 2,
          "matmul: right operand must be rank-1 or rank-2, got " + shape_str(b.shape));
  const int m = a.dim(0), k = a.dim(1);
  const int bk = b.dim(0), n = vec ? 1 : b.dim(1);
  require(k == bk, "matmul: inner dimensions disagree: " + shape_str(a.shape) +
                       " vs " + shape_str(b.shape));

  ConstMatMap am(a.values.data(), m, k);
  ConstMatMap bm(b.values.data(), k, n);
  Array out(m * n);
  MatMap(out.data(), m, n) = am * bm;

  Shape out_shape = vec ? Shape{m} : Shape{m, n};
  const int a_id = a.node_id, b_id = b.node_id;
  Array av = a.values, bv = b.values;
  return tape->emit(
      "matmul", std::move(out_shape), std::move(out), {a_id, b_id},
      [a_id, b_id, m, k, n, av = std::move(av), bv = std::move(bv)](
          Tape& t, const Array& g) {
        ConstMatMap gm(g.data(), m, n);
        ConstMatMap am2(av.data(), m, k);
        ConstMatMap bm2(bv.data(), k, n);
        MatMap(t.grad_buf(a_id).data(), m, k) += gm * bm2.transpose();
        MatMap(t.grad_buf(b_id).data(), k, n) += am2.transpose() * gm;
      });
}

DiffTensor add(const DiffTensor& a, const DiffTensor& b) {
  Tape* tape = common_tape({&a, &b}, "add");
  require(a.shape == b.shape, "add: shape mismatch " + shape_str(a.shape) +
                                  " vs " + shape_str(b.shape));
  const int a_id = a.node_id, b_id = b.node_id;
  return tape->emit("add", a.shape, a.values + b.values, {a_id, b_id},
                    [a_id, b_id](Tape& t, const Array& g) {
                      t.grad_buf(a_id) += g;
                      t.grad_buf(b_id) += g;
                    });
}

DiffTensor sub(const DiffTensor& a, const DiffTensor& b) {
  Tape* tape = common_tape({&a, &b}, "sub");
  require(a.shape == b.shape, "sub: shape mismatch " + shape_str(a.shape) +
                                  " vs " + shape_str(b.shape));
  const int a_id = a.node_id, b_id = b.node_id;
  return tape->emit("sub", a.shape, a.values - b.values, {a_id, b_id},
                    [a_id, b_id](Tape& t, const Array& g) {
                      t.grad_buf(a_id) += g;
                      t.grad_buf(b_id) -= g;
                    });
}

DiffTensor mul(const DiffTensor& a, const DiffTensor& b) {
  Tape* tape = common_tape({&a, &b}, "mul");
  require(a.shape == b.shape, "mul: shape mismatch " + shape_str(a.shape) +
                                  " vs " + shape_str(b.shape));
  const int a_id = a.node_id, b_id = b.node_id;
  Array av = a.values, bv = b.values;
  return tape->emit("mul", a.shape, a.values * b.values, {a_id, b_id},
                    [a_id, b_id, av = std::move(av), bv = std::move(bv)](
                        Tape& t, const Array& g) {
                      t.grad_buf(a_id) += g * bv;
                      t.grad_buf(b_id) += g * av;
                    });
}

DiffTensor scale(const DiffTensor& a, double c) {
  Tape* tape = common_tape({&a}, "scale");
  const int a_id = a.node_id;
  return tape->emit("scale", a.shape, a.values * c, {a_id},
                    [a_id, c](Tape& t, const Array& g) { t.grad_buf(a_id) += g * c; });
}

DiffTensor add_rowwise(const DiffTensor& x, const DiffTensor& bias,
                       const std::vector<char>& row_on) {
  Tape* tape = common_tape({&x, &bias}, "add_rowwise");
  require(x.rank() == 2 && bias.rank() == 1 && x.dim(1) == bias.dim(0),
          "add_rowwise: shapes " + shape_str(x.shape) + " and " +
              shape_str(bias.shape) + " are incompatible");
  const int m = x.dim(0), n = x.dim(1);
  require(row_on.empty() || static_cast<int>(row_on.size()) == m,
          "add_rowwise: row mask length does not match row count");

  Array out = x.values;
  for (int r = 0; r < m; ++r) {
    if (!row_on.empty() && !row_on[static_cast<std::size_t>(r)]) continue;
    out.segment(r * n, n) += bias.values;
  }
  const int x_id = x.node_id, b_id = bias.node_id;
  std::vector<char> mask = row_on;
  return tape->emit("add_rowwise", x.shape, std::move(out), {x_id, b_id},
                    [x_id, b_id, m, n, mask = std::move(mask)](Tape& t, const Array& g) {
                      t.grad_buf(x_id) += g;
                      Array& db = t.grad_buf(b_id);
                      for (int r = 0; r < m; ++r) {
                        if (!mask.empty() && !mask[static_cast<std::size_t>(r)]) continue;
                        db += g.segment(r * n, n);
                      }
                    });
}

DiffTensor sigmoid(const DiffTensor& x) {
  Tape* tape = common_tape({&x}, "sigmoid");
  Array out(x.values.size());
  for (int i = 0; i < x.values.size(); ++i) {
    const double v = x.values[i];
    const double e = std::exp(-std::abs(v));
    out[i] = v >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  }
  const int x_id = x.node_id;
  Array y = out;
  return tape->emit("sigmoid", x.shape, std::move(out), {x_id},
                    [x_id, y = std::move(y)](Tape& t, const Array& g) {
                      t.grad_buf(x_id) += g * y * (1.0 - y);
                    });
}

DiffTensor relu(const DiffTensor& x) {
  Tape* tape = common_tape({&x}, "relu");
  const int x_id = x.node_id;
  Array xv = x.values;
  return tape->emit("relu", x.shape, x.values.max(0.0), {x_id},
                    [x_id, xv = std::move(xv)](Tape& t, const Array& g) {
                      t.grad_buf(x_id) += g * (xv > 0.0).cast<double>();
                    });
}

DiffTensor tanh(const DiffTensor& x) {
  Tape* tape = common_tape({&x}, "tanh");
  Array out = x.values.tanh();
  const int x_id = x.node_id;
  Array y = out;
  return tape->emit("tanh", x.shape, std::move(out), {x_id},
                    [x_id, y = std::move(y)](Tape& t, const Array& g) {
                      t.grad_buf(x_id) += g * (1.0 - y * y);
                    });
}

DiffTensor conv1d_time(const DiffTensor& x, const DiffTensor& weights, int k) {
  Tape* tape = common_tape({&x, &weights}, "conv1d_time");
  require(k >= 1, "conv1d_time: kernel size must be >= 1, got " + std::to_string(k));
  require(x.rank() == 2, "conv1d_time: x must be [C x T], got " + shape_str(x.shape));
  require(weights.rank() == 3 && weights.dim(0) == k,
          "conv1d_time: weights must be [k x C_out x C] with k = " +
              std::to_string(k) + ", got " + shape_str(weights.shape));
  const int c_in = x.dim(0), t_len = x.dim(1);
  const int c_out = weights.dim(1);
  require(weights.dim(2) == c_in,
          "conv1d_time: channel mismatch " + shape_str(x.shape) + " vs " +
              shape_str(weights.shape));

  Array out = Array::Zero(c_out * t_len);
  {
    ConstMatMap xm(x.values.data(), c_in, t_len);
    MatMap ym(out.data(), c_out, t_len);
    for (int tau = 0; tau < std::min(k, t_len); ++tau) {
      ConstMatMap wt(weights.values.data() + tau * c_out * c_in, c_out, c_in);
      ym.block(0, tau, c_out, t_len - tau) += wt * xm.block(0, 0, c_in, t_len - tau);
    }
  }
  const int x_id = x.node_id, w_id = weights.node_id;
  Array xv = x.values, wv = weights.values;
  return tape->emit(
      "conv1d_time", {c_out, t_len}, std::move(out), {x_id, w_id},
      [x_id, w_id, k, c_in, c_out, t_len, xv = std::move(xv), wv = std::move(wv)](
          Tape& t, const Array& g) {
        ConstMatMap gm(g.data(), c_out, t_len);
        ConstMatMap xm(xv.data(), c_in, t_len);
        MatMap dx(t.grad_buf(x_id).data(), c_in, t_len);
        for (int tau = 0; tau < std::min(k, t_len); ++tau) {
          ConstMatMap wt(wv.data() + tau * c_out * c_in, c_out, c_in);
          MatMap dw(t.grad_buf(w_id).data() + tau * c_out * c_in, c_out, c_in);
          dx.block(0, 0, c_in, t_len - tau) +=
              wt.transpose() * gm.block(0, tau, c_out, t_len - tau);
          dw += gm.block(0, tau, c_out, t_len - tau) *
                xm.block(0, 0, c_in, t_len - tau).transpose();
        }
      });
}

DiffTensor conv2d_3x3_same(const DiffTensor& x, const DiffTensor& w,
                           const DiffTensor& b) {
  Tape* tape = common_tape({&x, &w, &b}, "conv2d_3x3_same");
  require(x.rank() == 3, "conv2d_3x3_same: x must be [C x H x W], got " +
                             shape_str(x.shape));
  require(w.rank() == 4 && w.dim(2) == 3 && w.dim(3) == 3,
          "conv2d_3x3_same: weights must be [C_out x C_in x 3 x 3], got " +
              shape_str(w.shape));
  const int c_in = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int c_out = w.dim(0);
  require(w.dim(1) == c_in && b.rank() == 1 && b.dim(0) == c_out,
          "conv2d_3x3_same: channel mismatch between " + shape_str(x.shape) +
              ", " + shape_str(w.shape) + ", " + shape_str(b.shape));

  Array out(c_out * h * wd);
  for (int co = 0; co < c_out; ++co)
    out.segment(co * h * wd, h * wd) = b.values[co];
  {
    for (int co = 0; co < c_out; ++co) {
      MatMap ym(out.data() + co * h * wd, h, wd);
      for (int ci = 0; ci < c_in; ++ci) {
        ConstMatMap xm(x.values.data() + ci * h * wd, h, wd);
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) {
            const double wk = w.values[((co * c_in + ci) * 3 + ky) * 3 + kx];
            const int oy0 = std::max(0, 1 - ky), oy1 = std::min(h, h + 1 - ky);
            const int ox0 = std::max(0, 1 - kx), ox1 = std::min(wd, wd + 1 - kx);
            if (oy1 <= oy0 || ox1 <= ox0) continue;
            ym.block(oy0, ox0, oy1 - oy0, ox1 - ox0) +=
                wk * xm.block(oy0 + ky - 1, ox0 + kx - 1, oy1 - oy0, ox1 - ox0);
          }
        }
      }
    }
  }
  const int x_id = x.node_id, w_id = w.node_id, b_id = b.node_id;
  Array xv = x.values, wv = w.values;
  return tape->emit(
      "conv2d_3x3_same", {c_out, h, wd}, std::move(out), {x_id, w_id, b_id},
      [x_id, w_id, b_id, c_in, c_out, h, wd, xv = std::move(xv), wv = std::move(wv)](
          Tape& t, const Array& g) {
        for (int co = 0; co < c_out; ++co) {
          ConstMatMap gm(g.data() + co * h * wd, h, wd);
          t.grad_buf(b_id)[co] += gm.sum();
          for (int ci = 0; ci < c_in; ++ci) {
            ConstMatMap xm(xv.data() + ci * h * wd, h, wd);
            MatMap dxm(t.grad_buf(x_id).data() + ci * h * wd, h, wd);
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int wi = ((co * c_in + ci) * 3 + ky) * 3 + kx;
                const double wk = wv[wi];
                const int oy0 = std::max(0, 1 - ky), oy1 = std::min(h, h + 1 - ky);
                const int ox0 = std::max(0, 1 - kx), ox1 = std::min(wd, wd + 1 - kx);
                if (oy1 <= oy0 || ox1 <= ox0) continue;
                auto gblk = gm.block(oy0, ox0, oy1 - oy0, ox1 - ox0);
                dxm.block(oy0 + ky - 1, ox0 + kx - 1, oy1 - oy0, ox1 - ox0) +=
                    wk * gblk;
                t.grad_buf(w_id)[wi] +=
                    (gblk.array() *
                     xm.block(oy0 + ky - 1, ox0 + kx - 1, oy1 - oy0, ox1 - ox0).array())
                        .sum();
              }
            }
          }
        }
      });
}

DiffTensor meanpool_2x2(const DiffTensor& x) {
  Tape* tape = common_tape({&x}, "meanpool_2x2");
  require(x.rank() == 3 && x.dim(1) % 2 == 0 && x.dim(2) % 2 == 0,
          "meanpool_2x2: x must be [C x H x W] with even H, W, got " +
              shape_str(x.shape));
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = h / 2, ow = w / 2;

  Array out(c * oh * ow);
  for (int ch = 0; ch < c; ++ch) {
    ConstMatMap xm(x.values.data() + ch * h * w, h, w);
    MatMap ym(out.data() + ch * oh * ow, oh, ow);
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j)
        ym(i, j) = 0.25 * xm.block(2 * i, 2 * j, 2, 2).sum();
  }
  const int x_id = x.node_id;
  return tape->emit("meanpool_2x2", {c, oh, ow}, std::move(out), {x_id},
                    [x_id, c, h, w, oh, ow](Tape& t, const Array& g) {
                      for (int ch = 0; ch < c; ++ch) {
                        ConstMatMap gm(g.data() + ch * oh * ow, oh, ow);
                        MatMap dxm(t.grad_buf(x_id).data() + ch * h * w, h, w);
                        for (int i = 0; i < oh; ++i)
                          for (int j = 0; j < ow; ++j)
                            dxm.block(2 * i, 2 * j, 2, 2).array() += 0.25 * gm(i, j);
                      }
                    });
}

DiffTensor reshape(const DiffTensor& x, Shape shape) {
  Tape* tape = common_tape({&x}, "reshape");
  require(numel(shape) == x.size(), "reshape: cannot view " + shape_str(x.shape) +
                                        " as " + shape_str(shape));
  const int x_id = x.node_id;
  return tape->emit("reshape", std::move(shape), x.values, {x_id},
                    [x_id](Tape& t, const Array& g) { t.grad_buf(x_id) += g; });
}

DiffTensor row(const DiffTensor& x, int r) {
  Tape* tape = common_tape({&x}, "row");
  require(x.rank() == 2 && r >= 0 && r < x.dim(0),
          "row: index " + std::to_string(r) + " out of range for " +
              shape_str(x.shape));
  const int n = x.dim(1);
  const int x_id = x.node_id;
  return tape->emit("row", {n}, x.values.segment(r * n, n), {x_id},
                    [x_id, r, n](Tape& t, const Array& g) {
                      t.grad_buf(x_id).segment(r * n, n) += g;
                    });
}

DiffTensor concat_vec(const std::vector<DiffTensor>& parts) {
  require(!parts.empty(), "concat_vec: no inputs");
  std::vector<const DiffTensor*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  Tape* tape = common_tape(ptrs, "concat_vec");

  int total = 0;
  std::vector<int> ids, sizes;
  for (const auto& p : parts) {
    require(p.rank() == 1, "concat_vec: inputs must be rank-1, got " +
                               shape_str(p.shape));
    ids.push_back(p.node_id);
    sizes.push_back(p.size());
    total += p.size();
  }
  Array out(total);
  int off = 0;
  for (const auto& p : parts) {
    out.segment(off, p.size()) = p.values;
    off += p.size();
  }
  return tape->emit("concat_vec", {total}, std::move(out), ids,
                    [ids, sizes](Tape& t, const Array& g) {
                      int o = 0;
                      for (std::size_t i = 0; i < ids.size(); ++i) {
                        t.grad_buf(ids[i]) += g.segment(o, sizes[i]);
                        o += sizes[i];
                      }
                    });
}

DiffTensor concat_rows(const std::vector<DiffTensor>& rows) {
  require(!rows.empty(), "concat_rows: no inputs");
  std::vector<const DiffTensor*> ptrs;
  for (const auto& r : rows) ptrs.push_back(&r);
  Tape* tape = common_tape(ptrs, "concat_rows");

  const int d = rows.front().size();
  std::vector<int> ids;
  for (const auto& r : rows) {
    require(r.rank() == 1 && r.size() == d,
            "concat_rows: all rows must be rank-1 of equal length");
    ids.push_back(r.node_id);
  }
  const int m = static_cast<int>(rows.size());
  Array out(m * d);
  for (int i = 0; i < m; ++i)
    out.segment(i * d, d) = rows[static_cast<std::size_t>(i)].values;
  return tape->emit("concat_rows", {m, d}, std::move(out), ids,
                    [ids, d](Tape& t, const Array& g) {
                      for (std::size_t i = 0; i < ids.size(); ++i)
                        t.grad_buf(ids[i]) += g.segment(static_cast<int>(i) * d, d);
                    });
}

DiffTensor hstack(const DiffTensor& a, const DiffTensor& b) {
  Tape* tape = common_tape({&a, &b}, "hstack");
  require(a.rank() == 2 && b.rank() == 2 && a.dim(0) == b.dim(0),
          "hstack: row counts differ: " + shape_str(a.shape) + " vs " +
              shape_str(b.shape));
  const int m = a.dim(0), p = a.dim(1), q = b.dim(1);
  Array out(m * (p + q));
  for (int r = 0; r < m; ++r) {
    out.segment(r * (p + q), p) = a.values.segment(r * p, p);
    out.segment(r * (p + q) + p, q) = b.values.segment(r * q, q);
  }
  const int a_id = a.node_id, b_id = b.node_id;
  return tape->emit("hstack", {m, p + q}, std::move(out), {a_id, b_id},
                    [a_id, b_id, m, p, q](Tape& t, const Array& g) {
                      Array& da = t.grad_buf(a_id);
                      Array& db = t.grad_buf(b_id);
                      for (int r = 0; r < m; ++r) {
                        da.segment(r * p, p) += g.segment(r * (p + q), p);
                        db.segment(r * q, q) += g.segment(r * (p + q) + p, q);
                      }
                    });
}

DiffTensor sum(const DiffTensor& x) {
  Tape* tape = common_tape({&x}, "sum");
  const int x_id = x.node_id;
  Array out(1);
  out[0] = x.values.sum();
  return tape->emit("sum", {1}, std::move(out), {x_id},
                    [x_id](Tape& t, const Array& g) { t.grad_buf(x_id) += g[0]; });
}

DiffTensor l1_sum(const DiffTensor& x) {
  Tape* tape = common_tape({&x}, "l1_sum");
  const int x_id = x.node_id;
  Array xv = x.values;
  Array out(1);
  out[0] = x.values.abs().sum();
  return tape->emit("l1_sum", {1}, std::move(out), {x_id},
                    [x_id, xv = std::move(xv)](Tape& t, const Array& g) {
                      t.grad_buf(x_id) += g[0] * xv.sign();
                    });
}

DiffTensor sq_sum(const DiffTensor& x) {
  Tape* tape = common_tape({&x}, "sq_sum");
  const int x_id = x.node_id;
  Array xv = x.values;
  Array out(1);
  out[0] = x.values.square().sum();
  return tape->emit("sq_sum", {1}, std::move(out), {x_id},
                    [x_id, xv = std::move(xv)](Tape& t, const Array& g) {
                      t.grad_buf(x_id) += g[0] * 2.0 * xv;
                    });
}

DiffTensor bce_loss(const DiffTensor& y_hat, int y) {
  Tape* tape = common_tape({&y_hat}, "bce_loss");
  require(y_hat.is_scalar(), "bce_loss: prediction must be scalar, got " +
                                 shape_str(y_hat.shape));
  require(y == 0 || y == 1, "bce_loss: label must be 0 or 1, got " + std::to_string(y));
  constexpr double kEps = 1e-7;
  const double p = std::min(std::max(y_hat.values[0], kEps), 1.0 - kEps);
  Array out(1);
  out[0] = -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
  const int x_id = y_hat.node_id;
  return tape->emit("bce_loss", {1}, std::move(out), {x_id},
                    [x_id, p, y](Tape& t, const Array& g) {
                      t.grad_buf(x_id)[0] += g[0] * (p - y) / (p * (1.0 - p));
                    });
}

DiffTensor mse_rows(const DiffTensor& pred, const Array& target) {
  Tape* tape = common_tape({&pred}, "mse_rows");
  require(pred.rank() == 2, "mse_rows: prediction must be rank-2, got " +
                                shape_str(pred.shape));
  require(pred.size() == static_cast<int>(target.size()),
          "mse_rows: target size " + std::to_string(target.size()) +
              " does not match prediction " + shape_str(pred.shape));
  const int rows = pred.dim(0);
  Array diff = pred.values - target;
  Array out(1);
  out[0] = diff.square().sum() / rows;
  const int x_id = pred.node_id;
  return tape->emit("mse_rows", {1}, std::move(out), {x_id},
                    [x_id, rows, diff = std::move(diff)](Tape& t, const Array& g) {
                      t.grad_buf(x_id) += g[0] * 2.0 / rows * diff;
                    });
}

LstmState lstm_cell(const DiffTensor& x, const DiffTensor& h_prev,
                    const DiffTensor& c_prev, const LstmWeights& w) {
  require(x.rank() == 1 && h_prev.rank() == 1 && c_prev.rank() == 1,
          "lstm_cell: state tensors must be rank-1");
  const int d_h = h_prev.dim(0);
  require(c_prev.dim(0) == d_h, "lstm_cell: h and c sizes differ");
  const int d_in = x.dim(0);
  for (const DiffTensor* m : {&w.w_i, &w.w_f, &w.w_o, &w.w_g}) {
    require(m->rank() == 2 && m->dim(0) == d_h && m->dim(1) == d_in + d_h,
            "lstm_cell: gate matrix shape " + shape_str(m->shape) +
                " does not match inputs [" + std::to_string(d_h) + "x" +
                std::to_string(d_in + d_h) + "]");
  }
  for (const DiffTensor* v : {&w.b_i, &w.b_f, &w.b_o, &w.b_g}) {
    require(v->rank() == 1 && v->dim(0) == d_h, "lstm_cell: gate bias shape " +
                                                    shape_str(v->shape));
  }

  DiffTensor xh = concat_vec({x, h_prev});
  DiffTensor i = sigmoid(add(matmul(w.w_i, xh), w.b_i));
  DiffTensor f = sigmoid(add(matmul(w.w_f, xh), w.b_f));
  DiffTensor o = sigmoid(add(matmul(w.w_o, xh), w.b_o));
  DiffTensor g = tanh(add(matmul(w.w_g, xh), w.b_g));
  DiffTensor c = add(mul(f, c_prev), mul(i, g));
  DiffTensor h = mul(o, tanh(c));
  return LstmState{std::move(h), std::move(c)};
}

DiffTensor graph_mix(const DiffTensor& w_imp, const DiffTensor& x,
                     std::shared_ptr<const std::vector<RowMat>> adjacency) {
  Tape* tape = common_tape({&w_imp, &x}, "graph_mix");
  require(adjacency && !adjacency->empty(), "graph_mix: no adjacency frames");
  const int t_frames = static_cast<int>(adjacency->size());
  const int n = static_cast<int>(adjacency->front().rows());
  require(w_imp.rank() == 2 && w_imp.dim(0) == n && w_imp.dim(1) == n,
          "graph_mix: importance matrix " + shape_str(w_imp.shape) +
              " does not match " + std::to_string(n) + " node slots");
  require(x.rank() == 2 && x.dim(0) == t_frames * n,
          "graph_mix: features " + shape_str(x.shape) + " do not match " +
              std::to_string(t_frames) + " frames of " + std::to_string(n) +
              " slots");
  const int d = x.dim(1);

  Array out(x.size());
  {
    ConstMatMap wm(w_imp.values.data(), n, n);
    for (int t = 0; t < t_frames; ++t) {
      RowMat mixed = wm.cwiseProduct((*adjacency)[static_cast<std::size_t>(t)]);
      ConstMatMap xt(x.values.data() + t * n * d, n, d);
      MatMap(out.data() + t * n * d, n, d) = mixed * xt;
    }
  }
  const int w_id = w_imp.node_id, x_id = x.node_id;
  Array wv = w_imp.values, xv = x.values;
  return tape->emit(
      "graph_mix", x.shape, std::move(out), {w_id, x_id},
      [w_id, x_id, t_frames, n, d, adjacency, wv = std::move(wv),
       xv = std::move(xv)](Tape& t, const Array& g) {
        ConstMatMap wm(wv.data(), n, n);
        MatMap dw(t.grad_buf(w_id).data(), n, n);
        for (int f = 0; f < t_frames; ++f) {
          const RowMat& a = (*adjacency)[static_cast<std::size_t>(f)];
          ConstMatMap gt(g.data() + f * n * d, n, d);
          ConstMatMap xt(xv.data() + f * n * d, n, d);
          dw += (gt * xt.transpose()).cwiseProduct(a);
          RowMat mixed = wm.cwiseProduct(a);
          MatMap(t.grad_buf(x_id).data() + f * n * d, n, d) +=
              mixed.transpose() * gt;
        }
      });
}

DiffTensor temporal_conv(const DiffTensor& x, const DiffTensor& w, int t_frames,
                         int n_slots) {
  Tape* tape = common_tape({&x, &w}, "temporal_conv");
  require(x.rank() == 2 && x.dim(0) == t_frames * n_slots,
          "temporal_conv: features " + shape_str(x.shape) + " do not match " +
              std::to_string(t_frames) + " frames of " + std::to_string(n_slots) +
              " slots");
  require(w.rank() == 3, "temporal_conv: weights must be [k x d_out x d_in], got " +
                             shape_str(w.shape));
  const int k = w.dim(0), d_out = w.dim(1), d_in = w.dim(2);
  require(k >= 1, "temporal_conv: kernel size must be >= 1");
  require(x.dim(1) == d_in, "temporal_conv: feature width " + shape_str(x.shape) +
                                " vs weights " + shape_str(w.shape));

  Array out = Array::Zero(t_frames * n_slots * d_out);
  {
    ConstMatMap xm(x.values.data(), t_frames * n_slots, d_in);
    MatMap ym(out.data(), t_frames * n_slots, d_out);
    for (int tau = 0; tau < std::min(k, t_frames); ++tau) {
      ConstMatMap wt(w.values.data() + tau * d_out * d_in, d_out, d_in);
      const int rows = (t_frames - tau) * n_slots;
      ym.middleRows(tau * n_slots, rows) += xm.topRows(rows) * wt.transpose();
    }
  }
  const int x_id = x.node_id, w_id = w.node_id;
  Array xv = x.values, wv = w.values;
  return tape->emit(
      "temporal_conv", {t_frames * n_slots, d_out}, std::move(out), {x_id, w_id},
      [x_id, w_id, k, d_in, d_out, t_frames, n_slots, xv = std::move(xv),
       wv = std::move(wv)](Tape& t, const Array& g) {
        ConstMatMap gm(g.data(), t_frames * n_slots, d_out);
        ConstMatMap xm(xv.data(), t_frames * n_slots, d_in);
        MatMap dx(t.grad_buf(x_id).data(), t_frames * n_slots, d_in);
        for (int tau = 0; tau < std::min(k, t_frames); ++tau) {
          ConstMatMap wt(wv.data() + tau * d_out * d_in, d_out, d_in);
          MatMap dw(t.grad_buf(w_id).data() + tau * d_out * d_in, d_out, d_in);
          const int rows = (t_frames - tau) * n_slots;
          dx.topRows(rows) += gm.middleRows(tau * n_slots, rows) * wt;
          dw += gm.middleRows(tau * n_slots, rows).transpose() * xm.topRows(rows);
        }
      });
}

}  // namespace pedcross
