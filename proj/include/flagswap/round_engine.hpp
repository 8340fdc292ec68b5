#ifndef FLAGSWAP_ROUND_ENGINE_HPP
#define FLAGSWAP_ROUND_ENGINE_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flagswap/baselines.hpp"
#include "flagswap/delay_model.hpp"
#include "flagswap/error.hpp"
#include "flagswap/io.hpp"
#include "flagswap/pso.hpp"
#include "flagswap/topology.hpp"

namespace flagswap {

/// What the coordinator measures for one deployed placement.
struct Observation {
  double tpd = 0.0;
  std::vector<double> per_level_max;
};

/// Black-box evaluation channel: placement in, round delay out.
class DelayOracle {
 public:
  virtual ~DelayOracle() = default;

  virtual Observation observe(std::span<const ClientId> placement) = 0;
  virtual std::size_t slot_count() const = 0;
  virtual std::size_t client_count() const = 0;

  double operator()(std::span<const ClientId> placement) { return observe(placement).tpd; }
};

/// Builds the hierarchy for each placement and returns its analytic tpd.
class AnalyticOracle final : public DelayOracle {
 public:
  AnalyticOracle(ClientPool pool, const HierarchySpec& spec, DelayOptions options = {})
      : pool_(std::move(pool)), spec_(spec), options_(options) {
    spec_.validate();
    validate_pool(pool_);
    slots_ = count_aggregator_slots(spec_.depth, spec_.width);
    if (pool_.size() < slots_) {
      throw ValidationError("pool of " + std::to_string(pool_.size()) + " clients cannot fill " +
                            std::to_string(slots_) + " aggregator slots");
    }
  }

  Observation observe(std::span<const ClientId> placement) override {
    DelayReport report = total_processing_delay(build_hierarchy(spec_, placement, pool_), options_);
    return Observation{report.tpd, std::move(report.per_level_max)};
  }

  DelayReport report(std::span<const ClientId> placement) const {
    return total_processing_delay(build_hierarchy(spec_, placement, pool_), options_);
  }

  std::size_t slot_count() const override { return slots_; }
  std::size_t client_count() const override { return pool_.size(); }
  const ClientPool& pool() const { return pool_; }
  const HierarchySpec& spec() const { return spec_; }

 private:
  ClientPool pool_;
  HierarchySpec spec_;
  DelayOptions options_;
  std::size_t slots_ = 0;
};

inline AnalyticOracle analytic_oracle(ClientPool pool, const HierarchySpec& spec, DelayOptions options = {}) {
  return AnalyticOracle(std::move(pool), spec, options);
}

/// Multiplicative noise on top of another oracle: tpd * (1 + e), e uniform
/// in [-amplitude, +amplitude].
class JitteredOracle final : public DelayOracle {
 public:
  JitteredOracle(DelayOracle& inner, double amplitude, std::uint64_t seed)
      : inner_(inner), amplitude_(amplitude), rng_(seed) {
    if (!(amplitude >= 0.0) || amplitude >= 1.0) throw ValidationError("jitter amplitude must be in [0, 1)");
  }

  Observation observe(std::span<const ClientId> placement) override {
    Observation o = inner_.observe(placement);
    const double eps = amplitude_ * (2.0 * unit_uniform(rng_) - 1.0);
    o.tpd *= 1.0 + eps;
    for (double& m : o.per_level_max) m *= 1.0 + eps;
    return o;
  }

  std::size_t slot_count() const override { return inner_.slot_count(); }
  std::size_t client_count() const override { return inner_.client_count(); }

 private:
  DelayOracle& inner_;
  double amplitude_;
  std::mt19937_64 rng_;
};

struct RoundRow {
  std::size_t round_index = 0;
  StrategyKind strategy = StrategyKind::pso;
  Placement placement;
  double tpd = 0.0;
  double fitness = 0.0;
  std::vector<double> per_level_max;
  bool stabilized = false;
};

struct RoundTrace {
  std::vector<RoundRow> rows;
  double cumulative_tpd = 0.0;

  void append(RoundRow row) {
    row.fitness = fitness_of(row.tpd).value;
    row.stabilized = !rows.empty() && rows.back().placement == row.placement;
    cumulative_tpd += row.tpd;
    rows.push_back(std::move(row));
  }

  /// First round of the final run of identical deployed placements, when
  /// that run spans at least two rounds.
  std::optional<std::size_t> stabilization_round() const {
    if (rows.size() < 2 || !rows.back().stabilized) return std::nullopt;
    std::size_t r = rows.size() - 1;
    while (r > 0 && rows[r].stabilized) --r;
    return rows[r].round_index;
  }

  std::string to_csv() const {
    std::string out = "round_index,strategy,tpd,fitness,stabilized,placement\n";
    for (const RoundRow& row : rows) {
      out += std::to_string(row.round_index);
      out += ',';
      out += to_string(row.strategy);
      out += ',';
      out += format_double(row.tpd);
      out += ',';
      out += format_double(row.fitness);
      out += ',';
      out += row.stabilized ? "true" : "false";
      out += ',';
      out += join_ids(row.placement.slots);
      out += '\n';
    }
    return out;
  }
};

/// Replays the observations of a recorded trace. Placements that were never
/// recorded are an error.
class ReplayOracle final : public DelayOracle {
 public:
  ReplayOracle(const RoundTrace& trace, std::size_t slot_count, std::size_t client_count)
      : slots_(slot_count), clients_(client_count) {
    for (const RoundRow& row : trace.rows) {
      recorded_.try_emplace(row.placement.slots, Observation{row.tpd, row.per_level_max});
    }
  }

  Observation observe(std::span<const ClientId> placement) override {
    const auto it = recorded_.find(std::vector<ClientId>(placement.begin(), placement.end()));
    if (it == recorded_.end()) {
      throw RuntimeFailure("replay oracle has no record for placement [" +
                           join_ids(std::vector<ClientId>(placement.begin(), placement.end())) + "]");
    }
    return it->second;
  }

  std::size_t slot_count() const override { return slots_; }
  std::size_t client_count() const override { return clients_; }

 private:
  std::size_t slots_;
  std::size_t clients_;
  std::map<std::vector<ClientId>, Observation> recorded_;
};

struct StrategyConfig {
  StrategyKind kind = StrategyKind::pso;
  // Used by the pso strategy only; its seed is replaced by the run seed.
  SwarmConfig swarm;
};

/// Thrown when a run aborts; carries every row completed before the failure.
class RoundsAborted : public RuntimeFailure {
 public:
  RoundsAborted(RoundTrace partial, const std::string& cause)
      : RuntimeFailure("run aborted after " + std::to_string(partial.rows.size()) + " rounds: " + cause),
        partial_(std::move(partial)) {}

  const RoundTrace& partial_trace() const { return partial_; }

 private:
  RoundTrace partial_;
};

/// Runs `rounds` FL rounds: the strategy proposes a placement, the oracle
/// measures it, the row is recorded. Only pso reads the measurement back.
inline RoundTrace run_rounds(const StrategyConfig& strategy, DelayOracle& oracle, std::size_t rounds,
                             std::uint64_t seed) {
  if (rounds < 1) throw ValidationError("rounds must be >= 1");
  const std::size_t slots = oracle.slot_count();
  const std::size_t clients = oracle.client_count();

  RoundTrace trace;
  auto measure = [&](std::size_t round, Placement placement) {
    Observation o;
    try {
      o = oracle.observe(placement.slots);
    } catch (const std::exception& e) {
      throw RoundsAborted(trace, e.what());
    }
    RoundRow row;
    row.round_index = round;
    row.strategy = strategy.kind;
    row.placement = std::move(placement);
    row.tpd = o.tpd;
    row.per_level_max = std::move(o.per_level_max);
    trace.append(std::move(row));
  };

  switch (strategy.kind) {
    case StrategyKind::pso: {
      SwarmConfig config = strategy.swarm;
      config.seed = seed;
      Swarm swarm(config, slots, clients, std::mt19937_64(seed));
      // The swarm sees only the scalar delay; the full observation is kept
      // for the trace.
      Observation last;
      auto channel = [&](std::span<const ClientId> p) {
        last = oracle.observe(p);
        return last.tpd;
      };
      for (std::size_t r = 0; r < rounds; ++r) {
        StreamingRecord rec;
        try {
          rec = step_streaming(swarm, channel, r);
        } catch (const std::exception& e) {
          throw RoundsAborted(trace, e.what());
        }
        RoundRow row;
        row.round_index = r;
        row.strategy = StrategyKind::pso;
        row.placement = Placement{std::move(rec.placement)};
        row.tpd = rec.tpd;
        row.per_level_max = std::move(last.per_level_max);
        trace.append(std::move(row));
      }
      break;
    }
    case StrategyKind::random: {
      std::mt19937_64 rng(seed);
      for (std::size_t r = 0; r < rounds; ++r) measure(r, random_placement(clients, slots, rng));
      break;
    }
    case StrategyKind::round_robin: {
      for (std::size_t r = 0; r < rounds; ++r) measure(r, round_robin_placement(clients, slots, r));
      break;
    }
  }
  return trace;
}

}  // namespace flagswap

#endif  // FLAGSWAP_ROUND_ENGINE_HPP
