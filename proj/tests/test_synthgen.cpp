#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "commpool/pooling/ep_module.hpp"
#include "commpool/synthgen/generators.hpp"
#include "commpool/synthgen/nmi.hpp"

using namespace commpool;
using namespace commpool::synthgen;

namespace {

SynthConfig config(Generator g, double p_in, double p_out) {
  SynthConfig c = default_config(g);
  c.p_in = p_in;
  c.p_out = p_out;
  return c;
}

void expect_valid(const LabeledGraph& lg) {
  EXPECT_NO_THROW(lg.graph.validate());
  ASSERT_TRUE(lg.graph.communities.has_value());
  EXPECT_EQ(*lg.graph.communities, lg.partition);
  const int top = *std::max_element(lg.partition.begin(), lg.partition.end());
  for (int c = 0; c <= top; ++c) EXPECT_NE(std::find(lg.partition.begin(), lg.partition.end(), c), lg.partition.end());
}

// Connected components by label propagation over A.
std::vector<int> components(const graphio::Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = next;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v)
        if (g.has_edge(u, v) && comp[v] < 0) {
          comp[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  return comp;
}

}  // namespace

TEST(RandomPartition, CliquesInTheLimit) {
  Rng rng(1);
  const auto lg = gen_random_partition(config(Generator::random_partition, 1.0, 0.0), rng);
  expect_valid(lg);
  for (std::size_t i = 0; i < 24; ++i)
    for (std::size_t j = 0; j < 24; ++j)
      EXPECT_EQ(lg.graph.has_edge(i, j), i != j && lg.partition[i] == lg.partition[j]);
}

TEST(RandomPartition, EmptyInTheLimit) {
  Rng rng(2);
  EXPECT_EQ(gen_random_partition(config(Generator::random_partition, 0.0, 0.0), rng).graph.edge_count(), 0u);
}

TEST(RandomPartition, IntraDensityMonteCarlo) {
  Rng rng(3);
  double edges = 0.0, pairs = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto lg = gen_random_partition(config(Generator::random_partition, 0.9, 0.05), rng);
    expect_valid(lg);
    for (std::size_t i = 0; i < 24; ++i)
      for (std::size_t j = i + 1; j < 24; ++j)
        if (lg.partition[i] == lg.partition[j]) {
          pairs += 1.0;
          edges += lg.graph.has_edge(i, j) ? 1.0 : 0.0;
        }
  }
  EXPECT_NEAR(edges / pairs, 0.9, 0.1);
}

TEST(RelaxedCaveman, NoRewiringGivesCliques) {
  Rng rng(4);
  const auto lg = gen_relaxed_caveman(config(Generator::relaxed_caveman, 1.0, 0.0), rng);
  expect_valid(lg);
  EXPECT_EQ(lg.graph.edge_count(), 4u * 15u);
  EXPECT_EQ(components(lg.graph), lg.partition);
}

TEST(RelaxedCaveman, FullRewiringConservesEdges) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto lg = gen_relaxed_caveman(config(Generator::relaxed_caveman, 1.0, 1.0), rng);
    expect_valid(lg);
    EXPECT_EQ(lg.graph.edge_count(), 60u);  // rejected rewires keep the original edge
  }
}

TEST(RelaxedCaveman, InterCommunityFractionMonteCarlo) {
  Rng rng(6);
  double inter = 0.0, total = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto lg = gen_relaxed_caveman(default_config(Generator::relaxed_caveman), rng);
    expect_valid(lg);
    for (std::size_t i = 0; i < 24; ++i)
      for (std::size_t j = i + 1; j < 24; ++j)
        if (lg.graph.has_edge(i, j)) {
          total += 1.0;
          inter += lg.partition[i] != lg.partition[j] ? 1.0 : 0.0;
        }
  }
  EXPECT_NEAR(inter / total, 0.1, 0.06);
}

TEST(GaussianPartition, ZeroSpreadMatchesFixedBlocks) {
  Rng rng(7);
  SynthConfig c = default_config(Generator::gaussian_partition);
  c.size_std = 0.0;
  const auto lg = gen_gaussian_partition(c, rng);
  expect_valid(lg);
  std::vector<int> counts(4, 0);
  for (int l : lg.partition) ++counts[static_cast<std::size_t>(l)];
  EXPECT_EQ(counts, std::vector<int>(4, 6));
}

TEST(GaussianPartition, TotalNodesMonteCarlo) {
  Rng rng(8);
  double total = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto lg = gen_gaussian_partition(default_config(Generator::gaussian_partition), rng);
    expect_valid(lg);
    total += static_cast<double>(lg.graph.node_count());
  }
  EXPECT_NEAR(total / 100.0, 24.0, 2.0);
}

TEST(GaussianPartition, BlocksNeverBelowTwo) {
  Rng rng(9);
  SynthConfig c = default_config(Generator::gaussian_partition);
  c.size_std = 4.0;
  for (int t = 0; t < 200; ++t) {
    const auto sizes = gaussian_block_sizes(c, rng);
    EXPECT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), 24u);
    for (std::size_t s : sizes) EXPECT_GE(s, 2u);
  }
}

TEST(GaussianPartition, ComponentsEqualCommunitiesInTheLimit) {
  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    const auto lg = gen_gaussian_partition(config(Generator::gaussian_partition, 1.0, 0.0), rng);
    EXPECT_DOUBLE_EQ(nmi(components(lg.graph), lg.partition), 1.0);
  }
}

TEST(SimulationDataset, Balanced) {
  SimulationSpec spec;
  spec.graphs_per_class = 300;
  const auto ds = build_simulation_dataset(0, spec);
  EXPECT_EQ(ds.size(), 900u);
  std::vector<int> counts(3, 0);
  for (const auto& g : ds.graphs) ++counts[static_cast<std::size_t>(*g.label)];
  EXPECT_EQ(counts, std::vector<int>(3, 300));
  EXPECT_TRUE(ds.has_communities());
}

TEST(SimulationDataset, OnePerClass) {
  SimulationSpec spec;
  spec.graphs_per_class = 1;
  const auto ds = build_simulation_dataset(0, spec);
  ASSERT_EQ(ds.size(), 3u);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(ds.graphs[static_cast<std::size_t>(c)].label, c);
}

TEST(SimulationDataset, Deterministic) {
  SimulationSpec spec;
  spec.graphs_per_class = 5;
  const auto a = build_simulation_dataset(12, spec);
  const auto b = build_simulation_dataset(12, spec);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.graphs[i].adjacency, b.graphs[i].adjacency);
    EXPECT_EQ(a.graphs[i].features, b.graphs[i].features);
  }
}

TEST(SynthConfigValidate, RejectsBadProbability) {
  SynthConfig c;
  c.p_in = 1.5;
  EXPECT_THROW(c.validate(), ContractError);
}

TEST(Nmi, Identical) {
  const std::vector<int> a{0, 0, 1, 1, 2};
  EXPECT_DOUBLE_EQ(nmi(a, a), 1.0);
}

TEST(Nmi, RelabeledIsOne) { EXPECT_DOUBLE_EQ(nmi(std::vector<int>{0, 0, 1, 1, 2}, std::vector<int>{5, 5, 3, 3, 9}), 1.0); }

TEST(Nmi, IndependentTableIsZero) {
  EXPECT_DOUBLE_EQ(nmi(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 0, 1}), 0.0);
}

TEST(Nmi, HandComputedValue) {
  // Contingency {{2,0},{1,1}} over 4 items; I and H evaluated by hand.
  const std::vector<int> a{0, 0, 1, 1}, b{0, 0, 0, 1};
  const double ha = std::log(2.0);
  const double hb = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
  const double i = 0.5 * std::log(0.5 / (0.5 * 0.75)) + 0.25 * std::log(0.25 / (0.5 * 0.75)) +
                   0.25 * std::log(0.25 / (0.5 * 0.25));
  EXPECT_NEAR(nmi(a, b), i / std::sqrt(ha * hb), 1e-15);
}

TEST(Nmi, ZeroEntropyConvention) {
  EXPECT_DOUBLE_EQ(nmi(std::vector<int>{4, 4, 4}, std::vector<int>{1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(nmi(std::vector<int>{4, 4, 4}, std::vector<int>{1, 2, 1}), 0.0);
}

TEST(Nmi, LengthMismatch) { EXPECT_THROW(nmi(std::vector<int>{0, 1}, std::vector<int>{0}), ContractError); }

TEST(NmiProperty, SymmetricAndRelabelingInvariant) {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.index(30);
    const std::size_t ka = 1 + rng.index(5), kb = 1 + rng.index(5);
    std::vector<int> a(n), b(n);
    for (auto& x : a) x = static_cast<int>(rng.index(ka));
    for (auto& x : b) x = static_cast<int>(rng.index(kb));
    const double ab = nmi(a, b);
    EXPECT_EQ(ab, nmi(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    std::vector<int> perm(ka);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<int> a2(n);
    for (std::size_t i = 0; i < n; ++i) a2[i] = 100 + perm[static_cast<std::size_t>(a[i])];
    EXPECT_NEAR(nmi(a2, b), ab, 1e-14);
    EXPECT_NEAR(nmi(b, a2), ab, 1e-14);
  }
}

TEST(Pipeline, StructureNotFeaturesCarriesCommunities) {
  // Raw N(0, I) features carry no community signal; the VGAE embedding does.
  Rng rng(14);
  std::vector<graphio::Graph> graphs;
  for (int t = 0; t < 30; ++t) graphs.push_back(gen_random_partition(config(Generator::random_partition, 1.0, 0.0), rng).graph);
  std::vector<const graphio::Graph*> ptrs;
  for (const auto& g : graphs) ptrs.push_back(&g);
  encoder::VgaeConfig vc;
  const auto params = encoder::train_vgae(ptrs, {}, vc, rng).params;
  double raw = 0.0, full = 0.0;
  for (const auto& g : graphs) {
    Rng r1(1), r2(1);
    const auto a_raw = pooling::pam_cluster(g.features, 4, r1);
    const auto a_full = pooling::pam_cluster(encoder::embed_mean(g, params), 4, r2);
    raw += nmi(a_raw.membership, *g.communities);
    full += nmi(a_full.membership, *g.communities);
  }
  EXPECT_GT(full / 30.0, raw / 30.0);
  EXPECT_GT(full / 30.0, 0.7);
}
