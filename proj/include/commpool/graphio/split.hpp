#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "commpool/errors.hpp"
#include "commpool/random.hpp"

namespace commpool::graphio {

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  bool operator==(const Split&) const = default;
};

// 80/10/10 random split: val and test each get max(1, floor(n/10)) graphs and train
// takes the remainder. Index lists are returned sorted.
inline Split split_dataset(std::size_t graph_count, std::uint64_t seed) {
  if (graph_count < 3) throw ContractError("split_dataset: need at least 3 graphs");
  std::vector<std::size_t> order(graph_count);
  for (std::size_t i = 0; i < graph_count; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t held = std::max<std::size_t>(1, graph_count / 10);
  const std::size_t train = graph_count - 2 * held;
  Split s;
  s.seed = seed;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(train),
               order.begin() + static_cast<std::ptrdiff_t>(train + held));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(train + held), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace commpool::graphio
