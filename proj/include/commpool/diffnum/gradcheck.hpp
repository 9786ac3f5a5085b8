#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "commpool/diffnum/tape.hpp"

namespace commpool::diffnum {

// Central differences (f(x+h) - f(x-h)) / 2h for every entry of every
// parameter. `loss` must be deterministic in the parameter values.
inline std::vector<Matrix> finite_difference_gradient(const std::function<double()>& loss,
                                                      std::span<Parameter* const> params,
                                                      double step = 1e-5) {
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (Parameter* p : params) {
    Matrix g(p->value.rows(), p->value.cols());
    auto v = p->value.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double orig = v[i];
      v[i] = orig + step;
      const double up = loss();
      v[i] = orig - step;
      const double down = loss();
      v[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw NumericError("finite_difference_gradient: non-finite loss probing " + p->name);
      g.data()[i] = (up - down) / (2.0 * step);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// max |a-b| over the largest magnitude present; entries that are all tiny
// compare absolutely against `floor`.
inline double relative_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  require_same_shape("relative_error", a, b);
  double diff = 0.0, mag = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
    mag = std::max({mag, std::abs(a.data()[i]), std::abs(b.data()[i])});
  }
  return diff / mag;
}

struct GradCheckResult {
  std::string name;
  double max_relative_error = 0.0;
};

// Runs backward on `root` and compares every parameter gradient against
// finite differences of tape.forward(root).
inline std::vector<GradCheckResult> check_tape_gradients(Tape& tape, NodeRef root,
                                                         std::span<Parameter* const> params,
                                                         double step = 1e-5) {
  tape.forward(root);
  tape.backward(root);
  std::vector<Matrix> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad);
  auto numeric = finite_difference_gradient([&] { return tape.forward(root)(0, 0); }, params, step);
  tape.forward(root);
  std::vector<GradCheckResult> out;
  for (std::size_t i = 0; i < params.size(); ++i)
    out.push_back({params[i]->name, relative_error(analytic[i], numeric[i])});
  return out;
}

}  // namespace commpool::diffnum
