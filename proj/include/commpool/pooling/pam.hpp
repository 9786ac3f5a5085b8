#pragma once

// Partitioning Around Medoids under the L1 metric, plus the exhaustive
// oracle and the random-medoid ablation that share its cost function.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "commpool/diffnum/matrix.hpp"
#include "commpool/errors.hpp"
#include "commpool/random.hpp"

namespace commpool::pooling {

using diffnum::Matrix;

struct CommunityAssignment {
  std::vector<std::size_t> medoids;     // ascending node indices, one per community
  std::vector<std::size_t> membership;  // node -> community index into medoids
  double cost = 0.0;                    // Σ L1 distance of non-medoids to their medoid

  std::size_t community_count() const noexcept { return medoids.size(); }

  // Member node indices of community c, ascending, excluding the medoid.
  std::vector<std::size_t> members(std::size_t c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < membership.size(); ++i)
      if (membership[i] == c && i != medoids[c]) out.push_back(i);
    return out;
  }
};

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

inline Matrix l1_distance_matrix(const Matrix& z) {
  const std::size_t n = z.rows();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = l1_distance(z.row_span(i), z.row_span(j));
  return d;
}

// Assigns every node to its nearest medoid (ties to the lowest medoid index;
// medoids always to themselves) and sums the non-medoid distances in
// ascending node order.
inline CommunityAssignment assign_to_medoids(const Matrix& dist, std::vector<std::size_t> medoids) {
  std::sort(medoids.begin(), medoids.end());
  const std::size_t n = dist.rows();
  CommunityAssignment a;
  a.membership.assign(n, 0);
  std::vector<bool> is_medoid(n, false);
  for (std::size_t c = 0; c < medoids.size(); ++c) {
    is_medoid[medoids[c]] = true;
    a.membership[medoids[c]] = c;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (is_medoid[i]) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < medoids.size(); ++c)
      if (dist(i, medoids[c]) < dist(i, medoids[best])) best = c;
    a.membership[i] = best;
    a.cost += dist(i, medoids[best]);
  }
  a.medoids = std::move(medoids);
  return a;
}

inline void require_community_count(std::size_t n, std::size_t l, const char* op) {
  if (l < 1 || l > n)
    throw ContractError(std::string(op) + ": need 1 <= L <= N, got L=" + std::to_string(l) +
                        " N=" + std::to_string(n));
}

namespace detail {

// Nearest and second-nearest medoid distance for every node.
struct NearestCache {
  std::vector<std::size_t> nearest;  // position in the medoid list
  std::vector<double> d1, d2;

  void rebuild(const Matrix& dist, const std::vector<std::size_t>& medoids) {
    const std::size_t n = dist.rows();
    nearest.assign(n, 0);
    d1.assign(n, std::numeric_limits<double>::infinity());
    d2.assign(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < medoids.size(); ++p) {
        const double d = dist(i, medoids[p]);
        if (d < d1[i]) {
          d2[i] = d1[i];
          d1[i] = d;
          nearest[i] = p;
        } else if (d < d2[i]) {
          d2[i] = d;
        }
      }
  }
};

// Greedy best-improvement swaps until no medoid/non-medoid exchange lowers
// the cost. Swap deltas are evaluated in O(N) from the nearest cache.
inline void swap_until_optimal(const Matrix& dist, std::vector<std::size_t>& medoids) {
  const std::size_t n = dist.rows();
  NearestCache cache;
  std::vector<bool> is_medoid(n, false);
  for (std::size_t m : medoids) is_medoid[m] = true;
  while (true) {
    cache.rebuild(dist, medoids);
    double scale = 0.0;
    for (double d : cache.d1) scale += d;
    const double tol = 1e-12 * std::max(1.0, scale);
    double best_delta = -tol;
    std::size_t best_pos = 0, best_in = n;
    for (std::size_t p = 0; p < medoids.size(); ++p)
      for (std::size_t o = 0; o < n; ++o) {
        if (is_medoid[o]) continue;
        double delta = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double keep = cache.nearest[j] == p ? cache.d2[j] : cache.d1[j];
          delta += std::min(keep, dist(o, j)) - cache.d1[j];
        }
        if (delta < best_delta) {
          best_delta = delta;
          best_pos = p;
          best_in = o;
        }
      }
    if (best_in == n) return;
    is_medoid[medoids[best_pos]] = false;
    is_medoid[best_in] = true;
    medoids[best_pos] = best_in;
  }
}

}  // namespace detail

// PAM over the rows of z: `restarts` random initializations, each driven to
// swap-optimality; the lowest-cost result wins (earliest on ties).
inline CommunityAssignment pam_cluster(const Matrix& z, std::size_t l, Rng& rng, std::size_t restarts = 5) {
  require_community_count(z.rows(), l, "pam_cluster");
  if (!z.all_finite()) throw ContractError("pam_cluster: non-finite embedding");
  const Matrix dist = l1_distance_matrix(z);
  CommunityAssignment best;
  bool have = false;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    std::vector<std::size_t> medoids = rng.sample_without_replacement(z.rows(), l);
    detail::swap_until_optimal(dist, medoids);
    CommunityAssignment a = assign_to_medoids(dist, std::move(medoids));
    if (!have || a.cost < best.cost) {
      best = std::move(a);
      have = true;
    }
  }
  return best;
}

// True when no single medoid/non-medoid exchange lowers the cost by more
// than a relative tolerance. Exhaustive; intended for verification.
inline bool is_swap_optimal(const Matrix& z, const CommunityAssignment& a, double rel_tol = 1e-9) {
  const Matrix dist = l1_distance_matrix(z);
  const double tol = rel_tol * std::max(1.0, a.cost);
  std::vector<bool> is_medoid(z.rows(), false);
  for (std::size_t m : a.medoids) is_medoid[m] = true;
  for (std::size_t p = 0; p < a.medoids.size(); ++p)
    for (std::size_t o = 0; o < z.rows(); ++o) {
      if (is_medoid[o]) continue;
      auto trial = a.medoids;
      trial[p] = o;
      if (assign_to_medoids(dist, trial).cost < a.cost - tol) return false;
    }
  return true;
}

inline constexpr double kBruteForceLimit = 1e5;

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Globally cost-minimal medoid set by enumerating all C(N, L) subsets in
// lexicographic order; the first minimum found is kept.
inline CommunityAssignment brute_force_medoids(const Matrix& z, std::size_t l) {
  require_community_count(z.rows(), l, "brute_force_medoids");
  if (binomial(z.rows(), l) > kBruteForceLimit)
    throw GuardError("brute_force_medoids: C(" + std::to_string(z.rows()) + ", " + std::to_string(l) +
                     ") exceeds enumeration limit");
  const Matrix dist = l1_distance_matrix(z);
  const std::size_t n = z.rows();
  std::vector<std::size_t> combo(l);
  std::iota(combo.begin(), combo.end(), 0);
  CommunityAssignment best = assign_to_medoids(dist, combo);
  while (true) {
    std::size_t i = l;
    while (i > 0 && combo[i - 1] == n - l + i - 1) --i;
    if (i == 0) break;
    ++combo[i - 1];
    for (std::size_t j = i; j < l; ++j) combo[j] = combo[j - 1] + 1;
    CommunityAssignment a = assign_to_medoids(dist, combo);
    if (a.cost < best.cost) best = std::move(a);
  }
  return best;
}

// Ablation: uniformly random medoids, nearest-medoid assignment, no swaps.
inline CommunityAssignment semi_random_assign(const Matrix& z, std::size_t l, Rng& rng) {
  require_community_count(z.rows(), l, "semi_random_assign");
  return assign_to_medoids(l1_distance_matrix(z), rng.sample_without_replacement(z.rows(), l));
}

}  // namespace commpool::pooling
