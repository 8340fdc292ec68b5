#ifndef FLAGSWAP_EXPERIMENT_HPP
#define FLAGSWAP_EXPERIMENT_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flagswap/baselines.hpp"
#include "flagswap/delay_model.hpp"
#include "flagswap/error.hpp"
#include "flagswap/io.hpp"
#include "flagswap/pso.hpp"
#include "flagswap/round_engine.hpp"
#include "flagswap/snapshot.hpp"
#include "flagswap/topology.hpp"

namespace flagswap {

// ---------------------------------------------------------------------------
// Brute-force optimum

struct BruteForceResult {
  Placement placement;
  double tpd = 0.0;
  std::uint64_t candidates = 0;
};

/// Number of ordered placements, or nullopt once it exceeds `cap`.
inline std::optional<std::uint64_t> count_ordered_placements(std::size_t client_count, std::size_t slot_count,
                                                             std::uint64_t cap) {
  if (slot_count > client_count) return 0;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < slot_count; ++i) {
    const std::uint64_t factor = client_count - i;
    if (total > cap / factor) return std::nullopt;
    total *= factor;
  }
  if (total > cap) return std::nullopt;
  return total;
}

/// Exhaustive search over every ordered slot assignment, visited in
/// lexicographic order; the first strict minimum wins ties.
inline BruteForceResult brute_force_optimum(std::span<const ClientSpec> pool, const HierarchySpec& spec,
                                            std::uint64_t cap = 1'000'000, DelayOptions options = {}) {
  spec.validate();
  validate_pool(pool);
  const std::size_t slots = count_aggregator_slots(spec.depth, spec.width);
  if (pool.size() < slots) throw ValidationError("pool too small for the hierarchy");
  const auto count = count_ordered_placements(pool.size(), slots, cap);
  if (!count) {
    throw ValidationError("instance exceeds the enumeration cap of " + std::to_string(cap) + " placements");
  }

  BruteForceResult best;
  best.tpd = std::numeric_limits<double>::infinity();
  std::vector<ClientId> current;
  std::vector<bool> used(pool.size(), false);
  current.reserve(slots);

  auto recurse = [&](auto&& self) -> void {
    if (current.size() == slots) {
      ++best.candidates;
      const double tpd = total_processing_delay(build_hierarchy(spec, current, pool), options).tpd;
      if (tpd < best.tpd) {
        best.tpd = tpd;
        best.placement.slots = current;
      }
      return;
    }
    for (std::size_t id = 0; id < pool.size(); ++id) {
      if (used[id]) continue;
      used[id] = true;
      current.push_back(static_cast<ClientId>(id));
      self(self);
      current.pop_back();
      used[id] = false;
    }
  };
  recurse(recurse);
  return best;
}

// ---------------------------------------------------------------------------
// Summaries

struct IterationSummary {
  std::vector<double> best;
  std::vector<double> worst;
  std::vector<double> average;
  std::vector<double> best_so_far;
  // [iteration][particle]
  std::vector<std::vector<double>> particle_tpd;
  std::vector<std::vector<double>> particle_best_so_far;
  // Plot scale: every tpd divided by the largest tpd observed in the run.
  double normalizer = 1.0;

  double normalized(double tpd) const { return tpd / normalizer; }
};

inline IterationSummary summarize(std::span<const IterationRecord> records) {
  if (records.empty()) throw ValidationError("summarize needs at least one record");
  IterationSummary s;
  double running = std::numeric_limits<double>::infinity();
  double largest = 0.0;
  std::vector<double> particle_running(records.front().particle_tpd.size(), std::numeric_limits<double>::infinity());
  for (const IterationRecord& r : records) {
    s.best.push_back(r.best);
    s.worst.push_back(r.worst);
    s.average.push_back(r.average);
    running = std::min(running, r.best);
    s.best_so_far.push_back(running);
    largest = std::max(largest, r.worst);
    s.particle_tpd.push_back(r.particle_tpd);
    for (std::size_t i = 0; i < r.particle_tpd.size() && i < particle_running.size(); ++i) {
      particle_running[i] = std::min(particle_running[i], r.particle_tpd[i]);
    }
    s.particle_best_so_far.push_back(particle_running);
  }
  s.normalizer = largest > 0.0 ? largest : 1.0;
  return s;
}

/// A round trace summarized as one sample per round.
inline IterationSummary summarize(const RoundTrace& trace) {
  std::vector<IterationRecord> records;
  records.reserve(trace.rows.size());
  for (const RoundRow& row : trace.rows) {
    IterationRecord r;
    r.iteration = row.round_index;
    r.particle_tpd = {row.tpd};
    r.particle_pbest_tpd = {row.tpd};
    r.best = r.worst = r.average = r.gbest_tpd = row.tpd;
    records.push_back(std::move(r));
  }
  return summarize(records);
}

// ---------------------------------------------------------------------------
// Batch optimization run (per-iteration curves)

struct OptimizationRun {
  std::vector<IterationRecord> records;  // records[0] is the initial swarm
  std::vector<ClientId> gbest_position;
  double gbest_tpd = 0.0;
};

inline OptimizationRun run_optimization(const ClientPool& pool, const HierarchySpec& spec, const SwarmConfig& config,
                                        DelayOptions options = {}) {
  AnalyticOracle oracle(pool, spec, options);
  Swarm swarm = init_swarm(config, oracle.slot_count(), oracle.client_count(), oracle);
  OptimizationRun run;
  run.records.push_back(swarm.snapshot_record(0));
  for (std::size_t it = 1; it <= config.iterations; ++it) run.records.push_back(step_batch(swarm, oracle, it));
  run.gbest_position = swarm.gbest_position();
  run.gbest_tpd = swarm.gbest_tpd();
  return run;
}

// ---------------------------------------------------------------------------
// Scenarios

enum class ScenarioMode { optimize, compare };

inline std::string_view to_string(ScenarioMode m) { return m == ScenarioMode::optimize ? "optimize" : "compare"; }

struct ScenarioConfig {
  ScenarioMode mode = ScenarioMode::optimize;
  HierarchySpec hierarchy{3, 5, 2};
  // When set, the pool is read from this file instead of being generated
  // per seed.
  std::optional<std::string> pool_file;
  SwarmConfig swarm;
  std::vector<StrategyKind> strategies{StrategyKind::pso};
  std::size_t rounds = 50;
  std::vector<std::uint64_t> seeds{42};
  double jitter = 0.0;
  bool memory_penalty = false;
  std::string output_dir = "runs/out";

  void validate() const {
    hierarchy.validate();
    swarm.validate();
    if (seeds.empty()) throw ValidationError("at least one seed is required");
    if (strategies.empty()) throw ValidationError("at least one strategy is required");
    if (rounds < 1) throw ValidationError("rounds must be >= 1");
    if (!(jitter >= 0.0) || jitter >= 1.0) throw ValidationError("jitter must be in [0, 1)");
    if (output_dir.empty()) throw ValidationError("output directory must be set");
    if (mode == ScenarioMode::optimize &&
        std::any_of(strategies.begin(), strategies.end(), [](StrategyKind k) { return k != StrategyKind::pso; })) {
      throw ValidationError("optimize mode runs the pso strategy only");
    }
  }
};

inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json strategies = nlohmann::json::array();
  for (StrategyKind k : c.strategies) strategies.push_back(std::string(to_string(k)));
  nlohmann::json swarm = to_json(c.swarm);
  swarm.erase("seed");
  return {{"mode", std::string(to_string(c.mode))},
          {"hierarchy",
           {{"depth", c.hierarchy.depth},
            {"width", c.hierarchy.width},
            {"trainers_per_leaf", c.hierarchy.trainers_per_leaf}}},
          {"pool", c.pool_file ? nlohmann::json(*c.pool_file) : nlohmann::json(nullptr)},
          {"swarm", std::move(swarm)},
          {"run",
           {{"strategies", std::move(strategies)},
            {"rounds", c.rounds},
            {"seeds", c.seeds},
            {"jitter", c.jitter},
            {"memory_penalty", c.memory_penalty},
            {"out", c.output_dir}}}};
}

/// Reads a config document. Unknown keys are rejected so typos surface.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  auto check_keys = [](const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                       std::string_view where) {
    if (!obj.is_object()) throw ValidationError(std::string(where) + " must be an object");
    for (const auto& [key, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ValidationError("unknown config key '" + key + "' in " + std::string(where));
      }
    }
  };
  try {
    ScenarioConfig c;
    check_keys(j, {"mode", "hierarchy", "pool", "swarm", "run"}, "config");
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "optimize") c.mode = ScenarioMode::optimize;
      else if (m == "compare") c.mode = ScenarioMode::compare;
      else throw ValidationError("unknown mode '" + m + "'");
    }
    if (j.contains("hierarchy")) {
      const auto& h = j.at("hierarchy");
      check_keys(h, {"depth", "width", "trainers_per_leaf"}, "hierarchy");
      c.hierarchy.depth = h.value("depth", c.hierarchy.depth);
      c.hierarchy.width = h.value("width", c.hierarchy.width);
      c.hierarchy.trainers_per_leaf = h.value("trainers_per_leaf", c.hierarchy.trainers_per_leaf);
    }
    if (j.contains("pool") && !j.at("pool").is_null()) c.pool_file = j.at("pool").get<std::string>();
    if (j.contains("swarm")) {
      check_keys(j.at("swarm"),
                 {"particles", "iterations", "inertia_weight", "cognitive_coeff", "social_coeff", "velocity_factor"},
                 "swarm");
      c.swarm = swarm_config_from_json(j.at("swarm"));
    }
    if (j.contains("run")) {
      const auto& r = j.at("run");
      check_keys(r, {"strategies", "rounds", "seeds", "jitter", "memory_penalty", "out"}, "run");
      if (r.contains("strategies")) {
        c.strategies.clear();
        for (const auto& s : r.at("strategies")) {
          const auto kind = parse_strategy(s.get<std::string>());
          if (!kind) throw ValidationError("unknown strategy '" + s.get<std::string>() + "'");
          c.strategies.push_back(*kind);
        }
      }
      c.rounds = r.value("rounds", c.rounds);
      if (r.contains("seeds")) c.seeds = r.at("seeds").get<std::vector<std::uint64_t>>();
      c.jitter = r.value("jitter", c.jitter);
      c.memory_penalty = r.value("memory_penalty", c.memory_penalty);
      c.output_dir = r.value("out", c.output_dir);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
}

inline nlohmann::json to_json(const DelayReport& r) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& [id, load] : r.per_node) {
    nodes.push_back({{"client_id", id}, {"cluster_delay", load.cluster_delay}, {"memory", load.memory_consumption}});
  }
  return {{"tpd", r.tpd},
          {"per_level_max", r.per_level_max},
          {"per_node", std::move(nodes)},
          {"memory_violation", r.memory_violation},
          {"penalty", r.penalty}};
}

/// Result of one (strategy, seed) cell.
struct CellResult {
  StrategyKind strategy = StrategyKind::pso;
  std::uint64_t seed = 0;
  std::filesystem::path directory;
  std::string pool_hash;
  // optimize mode
  double initial_best_tpd = 0.0;
  double final_gbest_tpd = 0.0;
  std::vector<ClientId> gbest_position;
  // compare mode
  double cumulative_tpd = 0.0;
  std::optional<std::size_t> stabilization_round;
};

struct RunArtifacts {
  std::filesystem::path root;
  std::vector<CellResult> cells;
};

namespace detail {

inline std::string iterations_csv(const OptimizationRun& run, const IterationSummary& s) {
  std::string out = "iteration,particle,tpd,best_so_far,normalized_tpd\n";
  for (std::size_t it = 0; it < run.records.size(); ++it) {
    for (std::size_t p = 0; p < s.particle_tpd[it].size(); ++p) {
      out += std::to_string(it) + ',' + std::to_string(p) + ',' + format_double(s.particle_tpd[it][p]) + ',' +
             format_double(s.particle_best_so_far[it][p]) + ',' + format_double(s.normalized(s.particle_tpd[it][p])) +
             '\n';
    }
  }
  return out;
}

inline std::string summary_csv(const IterationSummary& s) {
  std::string out =
      "iteration,best,worst,average,best_so_far,normalized_best,normalized_worst,normalized_average,"
      "normalized_best_so_far\n";
  for (std::size_t it = 0; it < s.best.size(); ++it) {
    out += std::to_string(it) + ',' + format_double(s.best[it]) + ',' + format_double(s.worst[it]) + ',' +
           format_double(s.average[it]) + ',' + format_double(s.best_so_far[it]) + ',' +
           format_double(s.normalized(s.best[it])) + ',' + format_double(s.normalized(s.worst[it])) + ',' +
           format_double(s.normalized(s.average[it])) + ',' + format_double(s.normalized(s.best_so_far[it])) + '\n';
  }
  return out;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

}  // namespace detail

inline ClientPool scenario_pool(const ScenarioConfig& config, std::uint64_t seed) {
  if (config.pool_file) return load_pool(*config.pool_file);
  return generate_client_pool(config.hierarchy, seed);
}

/// Executes every (strategy, seed) cell and writes traces, summaries and
/// manifests below `config.output_dir`.
///
/// optimize: <out>/seed-<s>/{pool.csv, iterations.csv, summary.csv, manifest.json}
/// compare:  <out>/<strategy>/seed-<s>/{pool.csv, trace.csv, manifest.json}
/// Both write <out>/summary.json.
inline RunArtifacts run_scenario(const ScenarioConfig& config) {
  config.validate();
  // Fail on unreadable or undersized pools before any output is written.
  std::vector<ClientPool> pools;
  for (std::uint64_t seed : config.seeds) {
    pools.push_back(scenario_pool(config, seed));
    validate_pool(pools.back());
    if (pools.back().size() < count_aggregator_slots(config.hierarchy.depth, config.hierarchy.width)) {
      throw ValidationError("pool of " + std::to_string(pools.back().size()) + " clients cannot fill the hierarchy");
    }
  }

  RunArtifacts artifacts;
  artifacts.root = config.output_dir;
  const DelayOptions options{config.memory_penalty};
  const nlohmann::json effective = to_json(config);
  nlohmann::json summary = {{"config", effective}, {"cells", nlohmann::json::array()}};

  for (std::size_t k = 0; k < config.seeds.size(); ++k) {
    const std::uint64_t seed = config.seeds[k];
    const ClientPool& pool = pools[k];
    const std::string hash = pool_hash(pool);

    if (config.mode == ScenarioMode::optimize) {
      SwarmConfig swarm = config.swarm;
      swarm.seed = seed;
      const OptimizationRun run = run_optimization(pool, config.hierarchy, swarm, options);
      const IterationSummary s = summarize(run.records);

      CellResult cell;
      cell.strategy = StrategyKind::pso;
      cell.seed = seed;
      cell.directory = artifacts.root / ("seed-" + std::to_string(seed));
      cell.pool_hash = hash;
      cell.initial_best_tpd = s.best.front();
      cell.final_gbest_tpd = run.gbest_tpd;
      cell.gbest_position = run.gbest_position;

      save_pool(cell.directory / "pool.csv", pool);
      write_file(cell.directory / "iterations.csv", detail::iterations_csv(run, s));
      write_file(cell.directory / "summary.csv", detail::summary_csv(s));
      const nlohmann::json manifest = {{"config", effective},
                                       {"seed", seed},
                                       {"strategy", "pso"},
                                       {"pool_hash", hash},
                                       {"client_count", pool.size()},
                                       {"slot_count", count_aggregator_slots(config.hierarchy.depth,
                                                                             config.hierarchy.width)},
                                       {"initial_best_tpd", cell.initial_best_tpd},
                                       {"final_gbest_tpd", cell.final_gbest_tpd},
                                       {"gbest_position", cell.gbest_position},
                                       {"normalizer", s.normalizer}};
      detail::write_json(cell.directory / "manifest.json", manifest);
      summary["cells"].push_back({{"seed", seed},
                                  {"strategy", "pso"},
                                  {"initial_best_tpd", cell.initial_best_tpd},
                                  {"final_gbest_tpd", cell.final_gbest_tpd}});
      artifacts.cells.push_back(std::move(cell));
      continue;
    }

    for (StrategyKind kind : config.strategies) {
      AnalyticOracle analytic(pool, config.hierarchy, options);
      std::optional<JitteredOracle> jittered;
      DelayOracle* oracle = &analytic;
      if (config.jitter > 0.0) {
        // Noise stream independent of the strategy's own stream.
        jittered.emplace(analytic, config.jitter, seed ^ 0x9e3779b97f4a7c15ULL);
        oracle = &*jittered;
      }
      const RoundTrace trace = run_rounds(StrategyConfig{kind, config.swarm}, *oracle, config.rounds, seed);

      CellResult cell;
      cell.strategy = kind;
      cell.seed = seed;
      cell.directory = artifacts.root / std::string(to_string(kind)) / ("seed-" + std::to_string(seed));
      cell.pool_hash = hash;
      cell.cumulative_tpd = trace.cumulative_tpd;
      cell.stabilization_round = trace.stabilization_round();

      save_pool(cell.directory / "pool.csv", pool);
      write_file(cell.directory / "trace.csv", trace.to_csv());
      const nlohmann::json stab =
          cell.stabilization_round ? nlohmann::json(*cell.stabilization_round) : nlohmann::json(nullptr);
      const nlohmann::json manifest = {{"config", effective},
                                       {"seed", seed},
                                       {"strategy", std::string(to_string(kind))},
                                       {"pool_hash", hash},
                                       {"client_count", pool.size()},
                                       {"rounds", trace.rows.size()},
                                       {"cumulative_tpd", trace.cumulative_tpd},
                                       {"stabilization_round", stab}};
      detail::write_json(cell.directory / "manifest.json", manifest);
      summary["cells"].push_back({{"seed", seed},
                                  {"strategy", std::string(to_string(kind))},
                                  {"cumulative_tpd", trace.cumulative_tpd},
                                  {"stabilization_round", stab}});
      artifacts.cells.push_back(std::move(cell));
    }
  }
  detail::write_json(artifacts.root / "summary.json", summary);
  return artifacts;
}

// ---------------------------------------------------------------------------
// Heterogeneous 10-client pool: one fast, two medium, seven slow clients,
// loosely mirroring a 3-core / 1-core / memory-starved container mix.

inline ClientPool heterogeneous_pool() {
  ClientPool pool;
  for (ClientId id = 0; id < 10; ++id) {
    ClientSpec c{id, 12.0, 5.0, 1.0};
    if (id == 6) {
      c.memcap = 48.0;
      c.pspeed = 12.0;
    } else if (id == 2 || id == 8) {
      c.memcap = 32.0;
      c.pspeed = 4.0;
    }
    pool.push_back(c);
  }
  return pool;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
  std::vector<int> depths{3, 4, 5};
  std::vector<int> widths{4, 5};
  std::vector<std::size_t> particles{5, 10};
  // Template for every cell; hierarchy depth/width and particle count are
  // overridden per cell and output lands in <base.output_dir>/D<d>_W<w>_P<p>.
  ScenarioConfig base;
};

inline std::string sweep_cell_name(int depth, int width, std::size_t particles) {
  return "D" + std::to_string(depth) + "_W" + std::to_string(width) + "_P" + std::to_string(particles);
}

inline RunArtifacts run_sweep(const SweepConfig& sweep) {
  if (sweep.depths.empty() || sweep.widths.empty() || sweep.particles.empty()) {
    throw ValidationError("sweep grid must not be empty");
  }
  if (sweep.base.mode != ScenarioMode::optimize) throw ValidationError("sweeps run in optimize mode");
  // Validate every cell before running any of them.
  std::vector<ScenarioConfig> cells;
  for (int d : sweep.depths) {
    for (int w : sweep.widths) {
      for (std::size_t p : sweep.particles) {
        ScenarioConfig c = sweep.base;
        c.hierarchy.depth = d;
        c.hierarchy.width = w;
        c.swarm.particles = p;
        c.output_dir = (std::filesystem::path(sweep.base.output_dir) / sweep_cell_name(d, w, p)).string();
        c.validate();
        cells.push_back(std::move(c));
      }
    }
  }
  RunArtifacts all;
  all.root = sweep.base.output_dir;
  nlohmann::json index = nlohmann::json::array();
  for (const ScenarioConfig& c : cells) {
    RunArtifacts a = run_scenario(c);
    for (CellResult& cell : a.cells) {
      index.push_back({{"cell", sweep_cell_name(c.hierarchy.depth, c.hierarchy.width, c.swarm.particles)},
                       {"client_count", total_client_count(c.hierarchy)},
                       {"seed", cell.seed},
                       {"initial_best_tpd", cell.initial_best_tpd},
                       {"final_gbest_tpd", cell.final_gbest_tpd}});
      all.cells.push_back(std::move(cell));
    }
  }
  detail::write_json(all.root / "sweep.json", index);
  return all;
}

}  // namespace flagswap

#endif  // FLAGSWAP_EXPERIMENT_HPP
