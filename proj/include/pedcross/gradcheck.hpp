#pragma once

#include "pedcross/tensor.hpp"

#include <functional>
#include <vector>

namespace pedcross {

// Builds a scalar loss on the given tape from leaves already bound there, in
// the same order as the input list passed to gradcheck.
using LossBuilder =
    std::function<DiffTensor(Tape&, const std::vector<DiffTensor>&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  // Flat index of the worst component, as (input index, component index).
  int worst_input = -1;
  int worst_component = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences against the tape's reverse pass. The numeric
// side re-runs the builder as a pure forward evaluation at perturbed inputs,
// so it is independent of every backward rule it checks. Relative error uses
// a unit floor: |a - n| / max(1, |a|, |n|).
inline GradCheckResult gradcheck(const LossBuilder& build,
                                 const std::vector<DiffTensor>& inputs,
                                 double h = 1e-6) {
  auto eval = [&](const std::vector<DiffTensor>& at) {
    Tape tape;
    std::vector<DiffTensor> bound;
    bound.reserve(at.size());
    for (const DiffTensor& t : at) bound.push_back(tape.leaf(t));
    return build(tape, bound).scalar_value();
  };

  // Analytic gradients.
  Tape tape;
  std::vector<DiffTensor> bound;
  bound.reserve(inputs.size());
  for (const DiffTensor& t : inputs) bound.push_back(tape.leaf(t));
  DiffTensor loss = build(tape, bound);
  tape.backward(loss);

  GradCheckResult res;
  std::vector<DiffTensor> at = inputs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Array& analytic = tape.grad(bound[i]);
    for (int j = 0; j < inputs[i].size(); ++j) {
      const double orig = at[i].values[j];
      at[i].values[j] = orig + h;
      const double up = eval(at);
      at[i].values[j] = orig - h;
      const double down = eval(at);
      at[i].values[j] = orig;

      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[j];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_input = static_cast<int>(i);
        res.worst_component = j;
        res.analytic = a;
        res.numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace pedcross
