// Command-line front end: simulate, sweep, compare, oracle, pool.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flagswap/flagswap.hpp"

namespace fs = std::filesystem;
using namespace flagswap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

constexpr const char* kOutputRootEnv = "FLAGSWAP_OUTPUT_ROOT";

// Flag values as parsed; unset flags leave the config file (or defaults)
// untouched.
struct ScenarioFlags {
  std::string config_file;
  std::optional<int> depth, width, trainers_per_leaf;
  std::optional<std::string> pool;
  std::optional<std::size_t> particles, iterations, rounds;
  std::optional<double> inertia_weight, cognitive_coeff, social_coeff, velocity_factor, jitter;
  std::vector<std::uint64_t> seeds;
  std::string strategies;
  bool memory_penalty = false;
  std::optional<std::string> out;
};

void add_common_flags(CLI::App* cmd, ScenarioFlags& f, bool with_particles) {
  cmd->add_option("--config", f.config_file, "JSON scenario config; flags override its values")
      ->check(CLI::ExistingFile);
  cmd->add_option("--depth", f.depth, "hierarchy depth D (>= 1)");
  cmd->add_option("--width", f.width, "hierarchy width W (>= 1)");
  cmd->add_option("--trainers-per-leaf", f.trainers_per_leaf, "trainers per leaf aggregator for generated pools");
  cmd->add_option("--pool", f.pool, "client pool CSV (client_id,memcap,mdatasize,pspeed); replaces generation");
  if (with_particles) cmd->add_option("--particles", f.particles, "swarm size");
  cmd->add_option("--iterations", f.iterations, "PSO iterations (batch mode)");
  cmd->add_option("--inertia-weight", f.inertia_weight, "inertia weight w (default 0.01)");
  cmd->add_option("--cognitive-coeff", f.cognitive_coeff, "cognitive coefficient c1 (default 0.01)");
  cmd->add_option("--social-coeff", f.social_coeff, "social coefficient c2 (default 1)");
  cmd->add_option("--velocity-factor", f.velocity_factor, "velocity clamp factor (default 0.1)");
  cmd->add_option("--seed", f.seeds, "seed; repeat or comma-separate for several runs")->delimiter(',');
  cmd->add_flag("--memory-penalty", f.memory_penalty, "penalize placements that exceed a node's memcap");
  cmd->add_option("--out", f.out, "output directory (relative paths resolve under $" + std::string(kOutputRootEnv) +
                                      " when set)");
}

void add_round_flags(CLI::App* cmd, ScenarioFlags& f) {
  cmd->add_option("--strategies", f.strategies, "comma-separated subset of pso,random,round_robin");
  cmd->add_option("--rounds", f.rounds, "FL rounds per strategy");
  cmd->add_option("--jitter", f.jitter, "multiplicative delay noise amplitude in [0, 1)");
}

std::string resolve_output(const std::string& out) {
  const fs::path p(out);
  if (p.is_absolute()) return out;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) return (fs::path(root) / p).string();
  return out;
}

ScenarioConfig build_config(const ScenarioFlags& f, ScenarioMode mode) {
  ScenarioConfig c;
  if (!f.config_file.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(f.config_file));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("cannot parse " + f.config_file + ": " + e.what());
    }
    c = scenario_from_json(j);
    // Pool paths in a config file are relative to that file.
    if (c.pool_file && std::filesystem::path(*c.pool_file).is_relative()) {
      c.pool_file = (std::filesystem::path(f.config_file).parent_path() / *c.pool_file).string();
    }
  }
  c.mode = mode;
  if (mode == ScenarioMode::optimize) c.strategies = {StrategyKind::pso};
  if (f.depth) c.hierarchy.depth = *f.depth;
  if (f.width) c.hierarchy.width = *f.width;
  if (f.trainers_per_leaf) c.hierarchy.trainers_per_leaf = *f.trainers_per_leaf;
  if (f.pool) c.pool_file = *f.pool;
  if (f.particles) c.swarm.particles = *f.particles;
  if (f.iterations) c.swarm.iterations = *f.iterations;
  if (f.inertia_weight) c.swarm.inertia_weight = *f.inertia_weight;
  if (f.cognitive_coeff) c.swarm.cognitive_coeff = *f.cognitive_coeff;
  if (f.social_coeff) c.swarm.social_coeff = *f.social_coeff;
  if (f.velocity_factor) c.swarm.velocity_factor = *f.velocity_factor;
  if (f.rounds) c.rounds = *f.rounds;
  if (f.jitter) c.jitter = *f.jitter;
  if (f.memory_penalty) c.memory_penalty = true;
  if (!f.seeds.empty()) c.seeds = f.seeds;
  if (!f.strategies.empty()) {
    c.strategies.clear();
    std::string rest = f.strategies;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string name = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      const auto kind = parse_strategy(name);
      if (!kind) throw ValidationError("unknown strategy '" + name + "'");
      c.strategies.push_back(*kind);
    }
  }
  if (f.out) c.output_dir = *f.out;
  c.output_dir = resolve_output(c.output_dir);
  c.validate();
  return c;
}

void print_optimize(const RunArtifacts& a) {
  for (const CellResult& cell : a.cells) {
    std::cout << "seed " << cell.seed << ": initial best tpd " << format_double(cell.initial_best_tpd)
              << ", final gbest tpd " << format_double(cell.final_gbest_tpd) << " -> " << cell.directory.string()
              << '\n';
  }
}

int run_simulate(const ScenarioFlags& f) {
  const RunArtifacts a = run_scenario(build_config(f, ScenarioMode::optimize));
  print_optimize(a);
  return kExitOk;
}

int run_compare(const ScenarioFlags& f) {
  const RunArtifacts a = run_scenario(build_config(f, ScenarioMode::compare));
  for (const CellResult& cell : a.cells) {
    std::cout << to_string(cell.strategy) << " seed " << cell.seed << ": cumulative tpd "
              << format_double(cell.cumulative_tpd) << ", stabilized at round "
              << (cell.stabilization_round ? std::to_string(*cell.stabilization_round) : std::string("-")) << '\n';
  }
  std::cout << "summary: " << (a.root / "summary.json").string() << '\n';
  return kExitOk;
}

int run_sweep_cmd(const ScenarioFlags& f, const std::vector<int>& depths, const std::vector<int>& widths,
                  const std::vector<std::size_t>& particles) {
  SweepConfig s;
  s.base = build_config(f, ScenarioMode::optimize);
  if (!depths.empty()) s.depths = depths;
  if (!widths.empty()) s.widths = widths;
  if (!particles.empty()) s.particles = particles;
  const RunArtifacts a = run_sweep(s);
  print_optimize(a);
  std::cout << "index: " << (a.root / "sweep.json").string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aggregation placement simulator for hierarchical federated learning"};
  app.require_subcommand(1);

  ScenarioFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "optimize placement with a batch PSO run per seed");
  add_common_flags(simulate, sim_flags, true);

  ScenarioFlags sweep_flags;
  std::vector<int> sweep_depths, sweep_widths;
  std::vector<std::size_t> sweep_particles;
  auto* sweep = app.add_subcommand("sweep", "run simulate over a depth x width x particles grid");
  add_common_flags(sweep, sweep_flags, false);
  sweep->add_option("--depths", sweep_depths, "grid depths (default 3,4,5)")->delimiter(',');
  sweep->add_option("--widths", sweep_widths, "grid widths (default 4,5)")->delimiter(',');
  sweep->add_option("--particles", sweep_particles, "grid swarm sizes (default 5,10)")->delimiter(',');

  ScenarioFlags cmp_flags;
  auto* compare = app.add_subcommand("compare", "run placement strategies head to head for a number of FL rounds");
  add_common_flags(compare, cmp_flags, true);
  add_round_flags(compare, cmp_flags);

  std::string oracle_pool;
  int oracle_depth = 0, oracle_width = 0;
  std::uint64_t oracle_cap = 1'000'000;
  bool oracle_penalty = false;
  auto* oracle = app.add_subcommand("oracle", "brute-force the optimal placement of a small instance");
  oracle->add_option("--pool", oracle_pool, "client pool CSV")->required()->check(CLI::ExistingFile);
  oracle->add_option("--depth", oracle_depth, "hierarchy depth")->required();
  oracle->add_option("--width", oracle_width, "hierarchy width")->required();
  oracle->add_option("--cap", oracle_cap, "maximum number of placements to enumerate (default 1000000)");
  oracle->add_flag("--memory-penalty", oracle_penalty, "penalize placements that exceed a node's memcap");

  auto* pool = app.add_subcommand("pool", "generate or inspect client pools");
  pool->require_subcommand(1);
  int gen_depth = 3, gen_width = 5, gen_tpl = 2;
  std::optional<std::size_t> gen_count;
  std::uint64_t gen_seed = 42;
  std::string gen_out;
  auto* generate = pool->add_subcommand("generate", "write a synthetic pool (stdout unless --out)");
  generate->add_option("--depth", gen_depth, "hierarchy depth (default 3)");
  generate->add_option("--width", gen_width, "hierarchy width (default 5)");
  generate->add_option("--trainers-per-leaf", gen_tpl, "trainers per leaf aggregator (default 2)");
  generate->add_option("--count", gen_count, "explicit client count; overrides the hierarchy-derived total");
  generate->add_option("--seed", gen_seed, "generator seed (default 42)");
  generate->add_option("--out", gen_out, "output CSV path");
  std::string inspect_pool;
  auto* inspect = pool->add_subcommand("inspect", "print size, hash and speed range of a pool file");
  inspect->add_option("--pool", inspect_pool, "client pool CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim_flags);
    if (*sweep) return run_sweep_cmd(sweep_flags, sweep_depths, sweep_widths, sweep_particles);
    if (*compare) return run_compare(cmp_flags);
    if (*oracle) {
      const ClientPool clients = load_pool(oracle_pool);
      const BruteForceResult r =
          brute_force_optimum(clients, {oracle_depth, oracle_width, 0}, oracle_cap, DelayOptions{oracle_penalty});
      std::cout << "placement: " << join_ids(r.placement.slots) << '\n'
                << "tpd: " << format_double(r.tpd) << '\n'
                << "candidates: " << r.candidates << '\n';
      return kExitOk;
    }
    if (*generate) {
      const HierarchySpec spec{gen_depth, gen_width, gen_tpl};
      const ClientPool clients =
          gen_count ? generate_random_pool(*gen_count, gen_seed) : generate_client_pool(spec, gen_seed);
      if (gen_out.empty()) {
        std::cout << pool_to_csv(clients);
      } else {
        save_pool(resolve_output(gen_out), clients);
        std::cout << "wrote " << clients.size() << " clients to " << resolve_output(gen_out) << '\n';
      }
      return kExitOk;
    }
    if (*inspect) {
      const ClientPool clients = load_pool(inspect_pool);
      double lo = clients.empty() ? 0.0 : clients.front().pspeed, hi = lo;
      for (const auto& c : clients) {
        lo = std::min(lo, c.pspeed);
        hi = std::max(hi, c.pspeed);
      }
      std::cout << "clients: " << clients.size() << '\n'
                << "hash: " << pool_hash(clients) << '\n'
                << "pspeed: [" << format_double(lo) << ", " << format_double(hi) << "]\n";
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
