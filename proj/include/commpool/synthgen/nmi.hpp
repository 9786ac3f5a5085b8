#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "commpool/errors.hpp"

namespace commpool::synthgen {

// I(A;B) / sqrt(H(A) H(B)) with natural logs. When either entropy is zero
// the score is 1 if the partitions agree up to relabeling, else 0.
template <class LabelA, class LabelB>
double nmi(std::span<const LabelA> a, std::span<const LabelB> b) {
  if (a.size() != b.size()) throw ContractError("nmi: label vectors differ in length");
  if (a.empty()) throw ContractError("nmi: empty labelings");
  const double n = static_cast<double>(a.size());
  std::map<LabelA, double> ca;
  std::map<LabelB, double> cb;
  std::map<std::pair<LabelA, LabelB>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    joint[{a[i], b[i]}] += 1;
  }
  // Terms are summed in sorted order so the result does not depend on
  // label names or argument order.
  auto sorted_sum = [](std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  };
  auto entropy = [&](const auto& counts) {
    std::vector<double> terms;
    for (const auto& [k, c] : counts) terms.push_back(-(c / n) * std::log(c / n));
    return sorted_sum(std::move(terms));
  };
  const double ha = entropy(ca), hb = entropy(cb);
  if (ha == 0.0 || hb == 0.0) {
    // Identical up to relabeling iff the joint table is a bijection.
    return (joint.size() == ca.size() && joint.size() == cb.size()) ? 1.0 : 0.0;
  }
  std::vector<double> terms;
  for (const auto& [k, c] : joint) terms.push_back((c / n) * std::log(c * n / (ca[k.first] * cb[k.second])));
  const double mi = sorted_sum(std::move(terms));
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

template <class LabelA, class LabelB>
double nmi(const std::vector<LabelA>& a, const std::vector<LabelB>& b) {
  return nmi(std::span<const LabelA>(a), std::span<const LabelB>(b));
}

}  // namespace commpool::synthgen
