#ifndef FLAGSWAP_PSO_HPP
#define FLAGSWAP_PSO_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flagswap/delay_model.hpp"
#include "flagswap/error.hpp"
#include "flagswap/topology.hpp"

namespace flagswap {

/// Anything that maps a placement to an observed round delay. The swarm
/// never sees more than this number.
template <class F>
concept PlacementOracle = std::invocable<F&, std::span<const ClientId>> &&
                          std::convertible_to<std::invoke_result_t<F&, std::span<const ClientId>>, double>;

/// Thrown when the oracle fails while evaluating `placement`.
class OracleFailure : public RuntimeFailure {
 public:
  OracleFailure(std::vector<ClientId> placement, const std::string& cause)
      : RuntimeFailure("oracle failed on placement [" + join(placement) + "]: " + cause),
        placement_(std::move(placement)) {}

  const std::vector<ClientId>& placement() const { return placement_; }

 private:
  static std::string join(const std::vector<ClientId>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out += ';';
      out += std::to_string(ids[i]);
    }
    return out;
  }

  std::vector<ClientId> placement_;
};

struct SwarmConfig {
  std::size_t particles = 10;
  std::size_t iterations = 100;
  double inertia_weight = 0.01;
  double cognitive_coeff = 0.01;
  double social_coeff = 1.0;
  double velocity_factor = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (particles < 1) throw ValidationError("swarm needs at least one particle");
    if (iterations < 1) throw ValidationError("swarm needs at least one iteration");
    if (!(velocity_factor > 0.0) || !std::isfinite(velocity_factor)) {
      throw ValidationError("velocity_factor must be > 0");
    }
    if (!std::isfinite(inertia_weight) || !std::isfinite(cognitive_coeff) || !std::isfinite(social_coeff)) {
      throw ValidationError("swarm coefficients must be finite");
    }
  }

  friend bool operator==(const SwarmConfig&, const SwarmConfig&) = default;
};

struct Particle {
  std::vector<ClientId> position;
  std::vector<double> velocity;
  std::vector<ClientId> pbest_position;
  double pbest_fitness = -std::numeric_limits<double>::infinity();
  // Delay observed at the most recent evaluation of `position`.
  double last_tpd = std::numeric_limits<double>::quiet_NaN();
  bool evaluated = false;
};

/// Velocity clamp bound: max(1, slot_count * velocity_factor).
inline double max_velocity(std::size_t slot_count, double velocity_factor) {
  return std::max(1.0, static_cast<double>(slot_count) * velocity_factor);
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit generator.
template <std::uniform_random_bit_generator Rng>
double unit_uniform(Rng& rng) {
  static_assert(Rng::min() == 0 && Rng::max() == std::numeric_limits<std::uint64_t>::max(),
                "unit_uniform expects a full-range 64-bit generator");
  return static_cast<double>(static_cast<std::uint64_t>(rng()) >> 11) * 0x1.0p-53;
}

/// Velocity update with caller-supplied random factors, clamped to
/// [-vmax, vmax] per component.
inline std::vector<double> update_velocity(const Particle& p, std::span<const ClientId> gbest,
                                           const SwarmConfig& config, std::span<const double> r1,
                                           std::span<const double> r2, double vmax) {
  const std::size_t n = p.position.size();
  if (p.velocity.size() != n || p.pbest_position.size() != n || gbest.size() != n || r1.size() != n ||
      r2.size() != n) {
    throw ValidationError("update_velocity: vector lengths differ");
  }
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = p.position[j];
    const double next = config.inertia_weight * p.velocity[j] +
                        config.cognitive_coeff * r1[j] * (static_cast<double>(p.pbest_position[j]) - x) +
                        config.social_coeff * r2[j] * (static_cast<double>(gbest[j]) - x);
    v[j] = std::clamp(next, -vmax, vmax);
  }
  return v;
}

/// Draws r1[j], r2[j] per dimension (interleaved, dimension order) and
/// applies the update.
template <std::uniform_random_bit_generator Rng>
std::vector<double> update_velocity(const Particle& p, std::span<const ClientId> gbest, const SwarmConfig& config,
                                    Rng& rng) {
  const std::size_t n = p.position.size();
  std::vector<double> r1(n), r2(n);
  for (std::size_t j = 0; j < n; ++j) {
    r1[j] = unit_uniform(rng);
    r2[j] = unit_uniform(rng);
  }
  return update_velocity(p, gbest, config, r1, r2, max_velocity(n, config.velocity_factor));
}

/// Modulo that always lands in [0, m).
inline std::int64_t wrap_index(std::int64_t value, std::int64_t m) {
  const std::int64_t r = value % m;
  return r < 0 ? r + m : r;
}

/// Makes every component unique: scanning left to right, a component that
/// collides with an earlier one is incremented (mod client_count) until free.
inline std::vector<ClientId> repair_duplicates(std::span<const ClientId> raw, std::size_t client_count) {
  if (raw.size() > client_count) {
    throw ValidationError("cannot repair " + std::to_string(raw.size()) + " slots with only " +
                          std::to_string(client_count) + " clients");
  }
  std::vector<bool> taken(client_count, false);
  std::vector<ClientId> out;
  out.reserve(raw.size());
  const auto m = static_cast<std::int64_t>(client_count);
  for (ClientId id : raw) {
    auto candidate = wrap_index(id, m);
    while (taken[static_cast<std::size_t>(candidate)]) candidate = (candidate + 1) % m;
    taken[static_cast<std::size_t>(candidate)] = true;
    out.push_back(static_cast<ClientId>(candidate));
  }
  return out;
}

/// Raw position step: (x + round(v)) mod client_count, rounding half away
/// from zero. No duplicate repair.
inline std::vector<ClientId> apply_velocity(std::span<const ClientId> position, std::span<const double> velocity,
                                            std::size_t client_count) {
  if (position.size() != velocity.size()) throw ValidationError("apply_velocity: vector lengths differ");
  const auto m = static_cast<std::int64_t>(client_count);
  std::vector<ClientId> raw(position.size());
  for (std::size_t j = 0; j < position.size(); ++j) {
    raw[j] = static_cast<ClientId>(wrap_index(position[j] + std::llround(velocity[j]), m));
  }
  return raw;
}

inline std::vector<ClientId> update_position(std::span<const ClientId> position, std::span<const double> velocity,
                                             std::size_t client_count) {
  return repair_duplicates(apply_velocity(position, velocity, client_count), client_count);
}

inline std::vector<ClientId> update_position(const Particle& p, std::size_t client_count) {
  return update_position(p.position, p.velocity, client_count);
}

/// Per-iteration view of the swarm: one tpd per particle plus the curves
/// plotted against PSO iterations.
struct IterationRecord {
  std::size_t iteration = 0;
  std::vector<double> particle_tpd;
  std::vector<double> particle_pbest_tpd;
  double best = 0.0;
  double worst = 0.0;
  double average = 0.0;
  double gbest_tpd = 0.0;
};

/// One FL round in streaming mode.
struct StreamingRecord {
  std::size_t round_index = 0;
  std::size_t particle = 0;
  std::vector<ClientId> placement;
  double tpd = 0.0;
  double gbest_tpd = 0.0;
};

/// Swarm state. `Rng` must be a full-range 64-bit generator; the default
/// is std::mt19937_64, tests substitute a replayed tape.
template <std::uniform_random_bit_generator Rng = std::mt19937_64>
class BasicSwarm {
 public:
  /// Random distinct-id positions, zero velocities, nothing evaluated yet.
  BasicSwarm(const SwarmConfig& config, std::size_t slot_count, std::size_t client_count, Rng rng)
      : config_(config), slot_count_(slot_count), client_count_(client_count), rng_(std::move(rng)) {
    config_.validate();
    if (slot_count < 1) throw ValidationError("slot_count must be >= 1");
    if (client_count < slot_count) {
      throw ValidationError("not enough clients (" + std::to_string(client_count) + ") to fill " +
                            std::to_string(slot_count) + " aggregator slots");
    }
    particles_.resize(config_.particles);
    std::vector<ClientId> ids(client_count);
    for (Particle& p : particles_) {
      std::iota(ids.begin(), ids.end(), ClientId{0});
      // Partial Fisher-Yates: the first slot_count entries become a uniform
      // ordered sample without replacement.
      for (std::size_t j = 0; j < slot_count; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, client_count - 1);
        std::swap(ids[j], ids[pick(rng_)]);
      }
      p.position.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(slot_count));
      p.velocity.assign(slot_count, 0.0);
      p.pbest_position = p.position;
    }
  }

  /// Restores a previously captured state verbatim.
  BasicSwarm(const SwarmConfig& config, std::size_t slot_count, std::size_t client_count, Rng rng,
             std::vector<Particle> particles, std::vector<ClientId> gbest_position, double gbest_fitness)
      : config_(config),
        slot_count_(slot_count),
        client_count_(client_count),
        rng_(std::move(rng)),
        particles_(std::move(particles)),
        gbest_position_(std::move(gbest_position)),
        gbest_fitness_(gbest_fitness) {
    config_.validate();
  }

  const SwarmConfig& config() const { return config_; }
  std::size_t slot_count() const { return slot_count_; }
  std::size_t client_count() const { return client_count_; }
  const std::vector<Particle>& particles() const { return particles_; }
  const Particle& particle(std::size_t i) const { return particles_.at(i); }
  const std::vector<ClientId>& gbest_position() const { return gbest_position_; }
  double gbest_fitness() const { return gbest_fitness_; }
  double gbest_tpd() const { return -gbest_fitness_; }
  bool has_gbest() const { return !gbest_position_.empty(); }
  const Rng& rng() const { return rng_; }
  double vmax() const { return max_velocity(slot_count_, config_.velocity_factor); }

  /// Deploys particle i's current position, then folds the observation into
  /// its personal best and the global best (strict improvement only).
  template <PlacementOracle Oracle>
  double evaluate(std::size_t i, Oracle& oracle) {
    Particle& p = particles_.at(i);
    double tpd = 0.0;
    try {
      tpd = static_cast<double>(oracle(std::span<const ClientId>(p.position)));
    } catch (const std::exception& e) {
      throw OracleFailure(p.position, e.what());
    }
    if (std::isnan(tpd)) throw OracleFailure(p.position, "oracle returned NaN");
    const double f = fitness_of(tpd).value;
    p.last_tpd = tpd;
    p.evaluated = true;
    if (f > p.pbest_fitness) {
      p.pbest_fitness = f;
      p.pbest_position = p.position;
    }
    if (!has_gbest() || f > gbest_fitness_) {
      gbest_fitness_ = f;
      gbest_position_ = p.position;
    }
    return tpd;
  }

  /// Velocity then position update of particle i toward the current bests.
  void move(std::size_t i) {
    if (!has_gbest()) throw ValidationError("cannot move a particle before any evaluation");
    Particle& p = particles_.at(i);
    p.velocity = update_velocity(p, gbest_position_, config_, rng_);
    p.position = update_position(p, client_count_);
  }

  IterationRecord snapshot_record(std::size_t iteration) const {
    IterationRecord r;
    r.iteration = iteration;
    r.best = std::numeric_limits<double>::infinity();
    r.worst = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const Particle& p : particles_) {
      r.particle_tpd.push_back(p.last_tpd);
      r.particle_pbest_tpd.push_back(-p.pbest_fitness);
      r.best = std::min(r.best, p.last_tpd);
      r.worst = std::max(r.worst, p.last_tpd);
      sum += p.last_tpd;
    }
    r.average = sum / static_cast<double>(particles_.size());
    r.gbest_tpd = gbest_tpd();
    return r;
  }

 private:
  SwarmConfig config_;
  std::size_t slot_count_ = 0;
  std::size_t client_count_ = 0;
  Rng rng_;
  std::vector<Particle> particles_;
  std::vector<ClientId> gbest_position_;
  double gbest_fitness_ = -std::numeric_limits<double>::infinity();
};

using Swarm = BasicSwarm<std::mt19937_64>;

/// Creates the swarm and evaluates every initial position once.
template <std::uniform_random_bit_generator Rng, PlacementOracle Oracle>
BasicSwarm<Rng> init_swarm(const SwarmConfig& config, std::size_t slot_count, std::size_t client_count,
                           Oracle& oracle, Rng rng) {
  BasicSwarm<Rng> swarm(config, slot_count, client_count, std::move(rng));
  for (std::size_t i = 0; i < swarm.particles().size(); ++i) swarm.evaluate(i, oracle);
  return swarm;
}

template <PlacementOracle Oracle>
Swarm init_swarm(const SwarmConfig& config, std::size_t slot_count, std::size_t client_count, Oracle& oracle) {
  return init_swarm(config, slot_count, client_count, oracle, std::mt19937_64(config.seed));
}

/// One PSO iteration: every particle, in index order, moves and is
/// re-evaluated.
template <std::uniform_random_bit_generator Rng, PlacementOracle Oracle>
IterationRecord step_batch(BasicSwarm<Rng>& swarm, Oracle& oracle, std::size_t iteration) {
  for (std::size_t i = 0; i < swarm.particles().size(); ++i) {
    if (!swarm.particle(i).evaluated) {
      swarm.evaluate(i, oracle);
      continue;
    }
    swarm.move(i);
    swarm.evaluate(i, oracle);
  }
  return swarm.snapshot_record(iteration);
}

/// One FL round: particle (round_index mod particles) is deployed. A
/// particle's first turn deploys its initial position; later turns move it
/// toward the current bests first, so k full sweeps of rounds replay k batch
/// iterations.
template <std::uniform_random_bit_generator Rng, PlacementOracle Oracle>
StreamingRecord step_streaming(BasicSwarm<Rng>& swarm, Oracle& oracle, std::size_t round_index) {
  const std::size_t i = round_index % swarm.particles().size();
  if (swarm.particle(i).evaluated) swarm.move(i);
  StreamingRecord r;
  r.round_index = round_index;
  r.particle = i;
  r.placement = swarm.particle(i).position;
  r.tpd = swarm.evaluate(i, oracle);
  r.gbest_tpd = swarm.gbest_tpd();
  return r;
}

}  // namespace flagswap

#endif  // FLAGSWAP_PSO_HPP
