#include <gtest/gtest.h>

#include <cstdint>
#include <limits>
#include <random>
#include <set>

#include "flagswap/pso.hpp"
#include "flagswap/round_engine.hpp"
#include "flagswap/snapshot.hpp"

namespace flagswap {
namespace {

// Replays a fixed sequence of 64-bit words, wrapping around at the end.
struct TapeRng {
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  std::vector<result_type> tape;
  std::size_t cursor = 0;

  result_type operator()() {
    const result_type v = tape[cursor];
    cursor = (cursor + 1) % tape.size();
    return v;
  }
};

Particle particle(std::vector<ClientId> x, std::vector<double> v, std::vector<ClientId> pbest) {
  Particle p;
  p.position = std::move(x);
  p.velocity = std::move(v);
  p.pbest_position = std::move(pbest);
  return p;
}

SwarmConfig paper_config(std::size_t particles, std::uint64_t seed = 1) {
  SwarmConfig c;
  c.particles = particles;
  c.iterations = 100;
  c.inertia_weight = 0.01;
  c.cognitive_coeff = 0.01;
  c.social_coeff = 1.0;
  c.velocity_factor = 0.1;
  c.seed = seed;
  return c;
}

TEST(MaxVelocity, ClampBound) {
  EXPECT_DOUBLE_EQ(max_velocity(31, 0.1), 3.1);
  EXPECT_EQ(max_velocity(31, 0.01), 1.0);
  EXPECT_DOUBLE_EQ(max_velocity(156, 0.1), 15.6);
}

TEST(UnitUniform, HalfFromTopBit) {
  TapeRng tape{{std::uint64_t{1} << 63, 0, ~std::uint64_t{0}}};
  EXPECT_EQ(unit_uniform(tape), 0.5);
  EXPECT_EQ(unit_uniform(tape), 0.0);
  EXPECT_LT(unit_uniform(tape), 1.0);
}

TEST(UpdateVelocity, PinnedRandomsHandEvaluation) {
  const Particle p = particle({2}, {0.0}, {2});
  const std::vector<ClientId> g{7};
  const std::vector<double> half{0.5};
  const auto v = update_velocity(p, g, paper_config(1), half, half, 3.1);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_DOUBLE_EQ(v[0], 2.5);
}

TEST(UpdateVelocity, PinnedRandomsThroughGenerator) {
  const Particle p = particle({2}, {0.0}, {2});
  const std::vector<ClientId> g{7};
  TapeRng tape{{std::uint64_t{1} << 63}};
  const auto v = update_velocity(p, g, paper_config(1), tape);
  // vmax for one dimension is max(1, 0.1) = 1.
  EXPECT_EQ(v[0], 1.0);
}

TEST(UpdateVelocity, AttractionVanishesAtFixedPoint) {
  const Particle p = particle({4, 1}, {0.7, -3.0}, {4, 1});
  const std::vector<ClientId> g{4, 1};
  const std::vector<double> r{0.9, 0.3};
  const auto v = update_velocity(p, g, paper_config(1), r, r, 10.0);
  EXPECT_DOUBLE_EQ(v[0], 0.01 * 0.7);
  EXPECT_DOUBLE_EQ(v[1], 0.01 * -3.0);
}

TEST(UpdateVelocity, ClampedToBound) {
  const Particle p = particle({0, 50}, {0.0, 0.0}, {0, 50});
  const std::vector<ClientId> g{50, 0};
  const std::vector<double> one{1.0, 1.0};
  const auto v = update_velocity(p, g, paper_config(1), one, one, 3.1);
  EXPECT_EQ(v[0], 3.1);
  EXPECT_EQ(v[1], -3.1);
}

TEST(UpdateVelocity, DegenerateSocialOnlyJumpsToGbest) {
  SwarmConfig c = paper_config(1);
  c.inertia_weight = 0.0;
  c.cognitive_coeff = 0.0;
  c.social_coeff = 1.0;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 20;
    std::vector<ClientId> x(5), g(5), pb(5);
    std::vector<double> v0(5), r1(5), r2(5, 1.0);
    for (std::size_t j = 0; j < 5; ++j) {
      x[j] = static_cast<ClientId>(rng() % n);
      g[j] = static_cast<ClientId>(rng() % n);
      pb[j] = static_cast<ClientId>(rng() % n);
      v0[j] = static_cast<double>(rng() % 7) - 3.0;
      r1[j] = unit_uniform(rng);
    }
    const Particle p = particle(x, v0, pb);
    const auto v = update_velocity(p, g, c, r1, r2, 1e9);
    EXPECT_EQ(apply_velocity(x, v, n), g);
  }
}

TEST(UpdatePosition, RoundingAndWrap) {
  EXPECT_EQ(apply_velocity(std::vector<ClientId>{2}, std::vector<double>{2.5}, 10), (std::vector<ClientId>{5}));
  EXPECT_EQ(apply_velocity(std::vector<ClientId>{9}, std::vector<double>{3.0}, 10), (std::vector<ClientId>{2}));
  EXPECT_EQ(apply_velocity(std::vector<ClientId>{1}, std::vector<double>{-3.0}, 10), (std::vector<ClientId>{8}));
  EXPECT_EQ(apply_velocity(std::vector<ClientId>{5}, std::vector<double>{-2.5}, 10), (std::vector<ClientId>{2}));
  EXPECT_EQ(apply_velocity(std::vector<ClientId>{5}, std::vector<double>{0.49}, 10), (std::vector<ClientId>{5}));
}

TEST(UpdatePosition, RepairsAfterStep) {
  const Particle p = particle({1, 2, 5}, {1.0, 0.0, 0.0}, {1, 2, 5});
  EXPECT_EQ(update_position(p, 6), (std::vector<ClientId>{2, 3, 5}));
}

TEST(RepairDuplicates, Examples) {
  EXPECT_EQ(repair_duplicates(std::vector<ClientId>{2, 2, 5}, 6), (std::vector<ClientId>{2, 3, 5}));
  EXPECT_EQ(repair_duplicates(std::vector<ClientId>{0, 1, 2}, 6), (std::vector<ClientId>{0, 1, 2}));
  EXPECT_EQ(repair_duplicates(std::vector<ClientId>{5, 5, 5}, 6), (std::vector<ClientId>{5, 0, 1}));
  EXPECT_EQ(repair_duplicates(std::vector<ClientId>{1, 1, 1}, 3), (std::vector<ClientId>{1, 2, 0}));
}

TEST(RepairDuplicates, RejectsTooManySlots) {
  EXPECT_THROW(repair_duplicates(std::vector<ClientId>{0, 1, 2, 3}, 3), ValidationError);
}

TEST(RepairDuplicates, IdempotentAndValid) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const std::size_t len = 1 + rng() % n;
    std::vector<ClientId> raw(len);
    for (auto& id : raw) id = static_cast<ClientId>(rng() % n);
    const auto once = repair_duplicates(raw, n);
    EXPECT_TRUE(is_valid_placement(once, len, n));
    EXPECT_EQ(repair_duplicates(once, n), once);
  }
}

// Oracle with a known optimum: sum of placement ids weighted by slot.
struct WeightedSum {
  double operator()(std::span<const ClientId> p) const {
    double s = 1.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += static_cast<double>(p[j]) * static_cast<double>(j + 1);
    return s;
  }
};

TEST(InitSwarm, ShapeAndZeroVelocity) {
  WeightedSum oracle;
  const Swarm s = init_swarm(paper_config(5), 31, 81, oracle);
  ASSERT_EQ(s.particles().size(), 5u);
  for (const Particle& p : s.particles()) {
    EXPECT_TRUE(is_valid_placement(p.position, 31, 81));
    EXPECT_EQ(p.velocity, std::vector<double>(31, 0.0));
    EXPECT_EQ(p.pbest_position, p.position);
    EXPECT_TRUE(p.evaluated);
    EXPECT_EQ(p.pbest_fitness, -oracle(p.position));
    EXPECT_LE(p.pbest_fitness, s.gbest_fitness());
  }
}

TEST(InitSwarm, SingleParticleIsGlobalBest) {
  WeightedSum oracle;
  const Swarm s = init_swarm(paper_config(1), 4, 9, oracle);
  EXPECT_EQ(s.gbest_position(), s.particle(0).position);
}

TEST(InitSwarm, SeedDeterminism) {
  WeightedSum oracle;
  const Swarm a = init_swarm(paper_config(5, 77), 7, 20, oracle);
  const Swarm b = init_swarm(paper_config(5, 77), 7, 20, oracle);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a.particle(i).position, b.particle(i).position);
  const Swarm c = init_swarm(paper_config(5, 78), 7, 20, oracle);
  bool differs = false;
  for (std::size_t i = 0; i < 5; ++i) differs = differs || a.particle(i).position != c.particle(i).position;
  EXPECT_TRUE(differs);
}

TEST(InitSwarm, RejectsTooFewClients) {
  WeightedSum oracle;
  EXPECT_THROW(init_swarm(paper_config(2), 5, 4, oracle), ValidationError);
  SwarmConfig bad = paper_config(0);
  EXPECT_THROW(init_swarm(bad, 2, 4, oracle), ValidationError);
}

TEST(StepBatch, BestsAreMonotone) {
  WeightedSum oracle;
  Swarm s = init_swarm(paper_config(6, 5), 4, 15, oracle);
  double previous = s.gbest_fitness();
  std::vector<double> pbest(6);
  for (std::size_t i = 0; i < 6; ++i) pbest[i] = s.particle(i).pbest_fitness;
  for (std::size_t it = 1; it <= 60; ++it) {
    const IterationRecord r = step_batch(s, oracle, it);
    EXPECT_GE(s.gbest_fitness(), previous);
    previous = s.gbest_fitness();
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_GE(s.gbest_fitness(), fitness_of(r.particle_tpd[i]).value);
      EXPECT_GE(s.particle(i).pbest_fitness, pbest[i]);
      pbest[i] = s.particle(i).pbest_fitness;
      EXPECT_TRUE(is_valid_placement(s.particle(i).position, 4, 15));
      EXPECT_LE(std::abs(s.particle(i).velocity[0]), s.vmax());
    }
    EXPECT_LE(r.best, r.average);
    EXPECT_LE(r.average, r.worst);
  }
}

TEST(StepBatch, OracleFailureNamesPlacement) {
  WeightedSum good;
  Swarm s = init_swarm(paper_config(2, 9), 3, 8, good);
  auto bad = [](std::span<const ClientId>) -> double { throw std::runtime_error("broker down"); };
  try {
    step_batch(s, bad, 1);
    FAIL() << "expected OracleFailure";
  } catch (const OracleFailure& e) {
    EXPECT_TRUE(is_valid_placement(e.placement(), 3, 8));
    EXPECT_NE(std::string(e.what()).find("broker down"), std::string::npos);
  }
}

TEST(StepStreaming, ModularSchedule) {
  WeightedSum oracle;
  Swarm s(paper_config(5, 3), 3, 10, std::mt19937_64(3));
  for (std::size_t r = 0; r < 5; ++r) {
    const Placement initial{s.particle(r).position};
    const StreamingRecord rec = step_streaming(s, oracle, r);
    EXPECT_EQ(rec.particle, r);
    EXPECT_EQ(rec.placement, initial.slots);
  }
  for (std::size_t r = 5; r < 20; ++r) EXPECT_EQ(step_streaming(s, oracle, r).particle, r % 5);
}

TEST(StepStreaming, MatchesBatchUnderSharedTape) {
  std::mt19937_64 words(123);
  TapeRng tape;
  for (int i = 0; i < 257; ++i) tape.tape.push_back(words());

  const std::vector<ClientSpec> pool = generate_random_pool(10, 5);
  AnalyticOracle oracle(pool, {2, 2, 0});
  for (std::size_t k : {1u, 3u}) {
    auto batch = init_swarm(paper_config(4), 3, 10, oracle, tape);
    auto stream = init_swarm(paper_config(4), 3, 10, oracle, tape);
    for (std::size_t it = 1; it <= k; ++it) step_batch(batch, oracle, it);
    for (std::size_t r = 0; r < k * 4; ++r) step_streaming(stream, oracle, r);
    EXPECT_EQ(batch.gbest_position(), stream.gbest_position());
    EXPECT_EQ(batch.gbest_fitness(), stream.gbest_fitness());
  }
}

TEST(Snapshot, ResumeContinuesIdentically) {
  WeightedSum oracle;
  Swarm original = init_swarm(paper_config(4, 21), 5, 30, oracle);
  for (std::size_t it = 1; it <= 3; ++it) step_batch(original, oracle, it);

  const nlohmann::json snap = swarm_snapshot(original);
  Swarm resumed = swarm_from_snapshot(nlohmann::json::parse(snap.dump()));
  for (std::size_t it = 4; it <= 10; ++it) {
    step_batch(original, oracle, it);
    step_batch(resumed, oracle, it);
  }
  EXPECT_EQ(swarm_snapshot(original), swarm_snapshot(resumed));
}

TEST(Snapshot, UnevaluatedSwarmRoundTrips) {
  const Swarm fresh(paper_config(3, 2), 3, 10, std::mt19937_64(2));
  const Swarm back = swarm_from_snapshot(swarm_snapshot(fresh));
  EXPECT_FALSE(back.has_gbest());
  EXPECT_EQ(back.particle(1).position, fresh.particle(1).position);
  EXPECT_EQ(swarm_snapshot(back), swarm_snapshot(fresh));
}

TEST(Snapshot, RejectsMalformed) {
  EXPECT_THROW(swarm_from_snapshot(nlohmann::json::object()), ValidationError);
}

}  // namespace
}  // namespace flagswap
