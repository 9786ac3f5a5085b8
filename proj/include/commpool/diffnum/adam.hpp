#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "commpool/diffnum/tape.hpp"

namespace commpool::diffnum {

struct AdamState {
  double learning_rate = 0.005;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// One bias-corrected Adam update using each parameter's accumulated grad.
// Weight decay enters as an L2 term added to the gradient.
inline void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (state.first_moment.empty()) {
    for (Parameter* p : params) {
      state.first_moment.emplace_back(p->value.rows(), p->value.cols());
      state.second_moment.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.first_moment.size() != params.size())
    throw ContractError("adam_step: parameter count changed between steps");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    require_same_shape("adam_step", p.value, p.grad);
    require_same_shape("adam_step", p.value, m);
    auto x = p.value.data();
    auto g = p.grad.data();
    auto md = m.data();
    auto vd = v.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g[i] + state.weight_decay * x[i];
      md[i] = state.beta1 * md[i] + (1.0 - state.beta1) * gi;
      vd[i] = state.beta2 * vd[i] + (1.0 - state.beta2) * gi * gi;
      const double mhat = md[i] / c1;
      const double vhat = vd[i] / c2;
      x[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace commpool::diffnum
