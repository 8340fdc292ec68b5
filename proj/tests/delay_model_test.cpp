#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "flagswap/delay_model.hpp"

namespace flagswap {
namespace {

ClientSpec client(ClientId id, double mdatasize, double pspeed, double memcap = 30.0) {
  return ClientSpec{id, memcap, mdatasize, pspeed};
}

TEST(ClusterDelay, HandEvaluations) {
  const std::vector<ClientSpec> two{client(1, 5, 7), client(2, 5, 9)};
  EXPECT_DOUBLE_EQ(cluster_delay(client(0, 5, 5), two), 3.0);
  EXPECT_DOUBLE_EQ(cluster_delay(client(0, 5, 10), {}), 0.5);
  EXPECT_DOUBLE_EQ(cluster_delay(client(0, 5, 10), two), 1.5);
}

TEST(ClusterDelay, RejectsNonPositiveSpeed) {
  EXPECT_THROW(cluster_delay(client(0, 5, 0), {}), ValidationError);
  EXPECT_THROW(cluster_delay(client(0, 5, -2), {}), ValidationError);
}

TEST(MemoryConsumption, NumeratorOfClusterDelay) {
  const std::vector<ClientSpec> two{client(1, 5, 7), client(2, 5, 9)};
  EXPECT_DOUBLE_EQ(memory_consumption(client(0, 5, 5), two), 15.0);
  EXPECT_DOUBLE_EQ(memory_consumption(client(0, 5, 5), {}), 5.0);
  const std::vector<ClientSpec> five(5, client(1, 5, 7));
  EXPECT_DOUBLE_EQ(memory_consumption(client(0, 5, 5), five), 30.0);
}

// Root 0 (pspeed 10) over leaves 1, 2 (pspeed 5); trainers 3..6 dealt two
// per leaf.
ClientPool worked_pool() {
  return {client(0, 5, 10), client(1, 5, 5), client(2, 5, 5), client(3, 5, 8),
          client(4, 5, 8),  client(5, 5, 8), client(6, 5, 8)};
}

TEST(TotalProcessingDelay, WorkedDepthTwoExample) {
  const ClientPool pool = worked_pool();
  const DelayReport r = total_processing_delay(build_hierarchy({2, 2, 2}, std::vector<ClientId>{0, 1, 2}, pool));
  ASSERT_EQ(r.per_level_max.size(), 2u);
  EXPECT_DOUBLE_EQ(r.per_level_max[0], 1.5);
  EXPECT_DOUBLE_EQ(r.per_level_max[1], 3.0);
  EXPECT_DOUBLE_EQ(r.tpd, 4.5);
  EXPECT_DOUBLE_EQ(r.per_node.at(1).cluster_delay, 3.0);
  EXPECT_DOUBLE_EQ(r.per_node.at(0).memory_consumption, 15.0);
  EXPECT_EQ(r.per_node.size(), 3u);
  EXPECT_FALSE(r.memory_violation);
}

TEST(TotalProcessingDelay, DepthOneIsRootClusterDelay) {
  const ClientPool pool{client(0, 5, 7), client(1, 5, 11), client(2, 5, 6)};
  const Hierarchy h = build_hierarchy({1, 1, 0}, std::vector<ClientId>{1}, pool);
  const DelayReport r = total_processing_delay(h);
  const std::vector<ClientSpec> trainers{pool[0], pool[2]};
  EXPECT_DOUBLE_EQ(r.tpd, cluster_delay(pool[1], trainers));
}

TEST(TotalProcessingDelay, MemoryPenaltyIsOptIn) {
  ClientPool pool = worked_pool();
  pool[1].memcap = 10.0;  // leaf 1 needs 15
  const Hierarchy h = build_hierarchy({2, 2, 2}, std::vector<ClientId>{0, 1, 2}, pool);
  const DelayReport plain = total_processing_delay(h);
  EXPECT_TRUE(plain.memory_violation);
  EXPECT_DOUBLE_EQ(plain.tpd, 4.5);
  const DelayReport penalized = total_processing_delay(h, {true, 100.0});
  EXPECT_DOUBLE_EQ(penalized.penalty, 100.0);
  EXPECT_DOUBLE_EQ(penalized.tpd, 104.5);
}

TEST(Fitness, NegatedDelay) {
  EXPECT_EQ(fitness_of(4.5).value, -4.5);
  EXPECT_EQ(fitness_of(0.0).value, 0.0);
  EXPECT_GT(fitness_of(1.0), fitness_of(2.0));
  EXPECT_LT(fitness_of(3.0), fitness_of(2.5));
}

struct RandomInstance {
  HierarchySpec spec;
  ClientPool pool;
  std::vector<ClientId> placement;
};

RandomInstance random_instance(std::mt19937_64& rng) {
  RandomInstance in;
  in.spec = {1 + static_cast<int>(rng() % 3), 1 + static_cast<int>(rng() % 3), 0};
  const std::size_t slots = count_aggregator_slots(in.spec.depth, in.spec.width);
  in.pool = generate_random_pool(slots + rng() % 8, rng());
  std::vector<ClientId> ids(in.pool.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(slots);
  in.placement = ids;
  return in;
}

TEST(TotalProcessingDelayProperties, LevelMaximaSumToTpd) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const RandomInstance in = random_instance(rng);
    const DelayReport r = total_processing_delay(build_hierarchy(in.spec, in.placement, in.pool));
    ASSERT_EQ(r.per_level_max.size(), static_cast<std::size_t>(in.spec.depth));
    double sum = 0.0;
    for (std::size_t l = r.per_level_max.size(); l-- > 0;) sum += r.per_level_max[l];
    EXPECT_EQ(sum, r.tpd);
    for (const auto& [id, load] : r.per_node) EXPECT_GE(load.cluster_delay, 0.0);
  }
}

TEST(TotalProcessingDelayProperties, FasterAggregatorNeverHurts) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    RandomInstance in = random_instance(rng);
    const double before = total_processing_delay(build_hierarchy(in.spec, in.placement, in.pool)).tpd;
    const ClientId target = in.placement[rng() % in.placement.size()];
    in.pool[static_cast<std::size_t>(target)].pspeed *= 1.0 + static_cast<double>(rng() % 100) / 25.0;
    const double after = total_processing_delay(build_hierarchy(in.spec, in.placement, in.pool)).tpd;
    EXPECT_LE(after, before);
  }
}

TEST(TotalProcessingDelayProperties, IdenticalSiblingSwapIsInvariant) {
  // Leaves 1 and 2 share (mdatasize, pspeed) and their trainer multisets
  // are identical, so swapping them leaves tpd unchanged.
  const ClientPool pool = worked_pool();
  const double a = total_processing_delay(build_hierarchy({2, 2, 2}, std::vector<ClientId>{0, 1, 2}, pool)).tpd;
  const double b = total_processing_delay(build_hierarchy({2, 2, 2}, std::vector<ClientId>{0, 2, 1}, pool)).tpd;
  EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace flagswap
