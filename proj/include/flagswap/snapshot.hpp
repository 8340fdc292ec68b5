#ifndef FLAGSWAP_SNAPSHOT_HPP
#define FLAGSWAP_SNAPSHOT_HPP

#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flagswap/pso.hpp"

namespace flagswap {

// Pause/resume support. Non-finite doubles (an unevaluated particle's
// pbest) are encoded as null.

namespace detail {

inline nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline double value_or(const nlohmann::json& j, double fallback) {
  return j.is_null() ? fallback : j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const SwarmConfig& c) {
  return {{"particles", c.particles},
          {"iterations", c.iterations},
          {"inertia_weight", c.inertia_weight},
          {"cognitive_coeff", c.cognitive_coeff},
          {"social_coeff", c.social_coeff},
          {"velocity_factor", c.velocity_factor},
          {"seed", c.seed}};
}

inline SwarmConfig swarm_config_from_json(const nlohmann::json& j) {
  SwarmConfig c;
  c.particles = j.value("particles", c.particles);
  c.iterations = j.value("iterations", c.iterations);
  c.inertia_weight = j.value("inertia_weight", c.inertia_weight);
  c.cognitive_coeff = j.value("cognitive_coeff", c.cognitive_coeff);
  c.social_coeff = j.value("social_coeff", c.social_coeff);
  c.velocity_factor = j.value("velocity_factor", c.velocity_factor);
  c.seed = j.value("seed", c.seed);
  return c;
}

/// Full swarm state including the generator, so a resumed run continues
/// the exact random stream.
inline nlohmann::json swarm_snapshot(const Swarm& swarm) {
  nlohmann::json particles = nlohmann::json::array();
  for (const Particle& p : swarm.particles()) {
    particles.push_back({{"position", p.position},
                         {"velocity", p.velocity},
                         {"pbest_position", p.pbest_position},
                         {"pbest_fitness", detail::finite_or_null(p.pbest_fitness)},
                         {"last_tpd", detail::finite_or_null(p.last_tpd)},
                         {"evaluated", p.evaluated}});
  }
  std::ostringstream rng;
  rng << swarm.rng();
  return {{"config", to_json(swarm.config())},
          {"slot_count", swarm.slot_count()},
          {"client_count", swarm.client_count()},
          {"particles", std::move(particles)},
          {"gbest_position", swarm.gbest_position()},
          {"gbest_fitness", detail::finite_or_null(swarm.gbest_fitness())},
          {"rng_state", rng.str()}};
}

inline Swarm swarm_from_snapshot(const nlohmann::json& j) {
  try {
    const SwarmConfig config = swarm_config_from_json(j.at("config"));
    std::vector<Particle> particles;
    for (const auto& pj : j.at("particles")) {
      Particle p;
      p.position = pj.at("position").get<std::vector<ClientId>>();
      p.velocity = pj.at("velocity").get<std::vector<double>>();
      p.pbest_position = pj.at("pbest_position").get<std::vector<ClientId>>();
      p.pbest_fitness = detail::value_or(pj.at("pbest_fitness"), -std::numeric_limits<double>::infinity());
      p.last_tpd = detail::value_or(pj.at("last_tpd"), std::numeric_limits<double>::quiet_NaN());
      p.evaluated = pj.at("evaluated").get<bool>();
      particles.push_back(std::move(p));
    }
    std::mt19937_64 rng;
    std::istringstream in(j.at("rng_state").get<std::string>());
    in >> rng;
    if (!in) throw ValidationError("bad rng_state");
    return Swarm(config, j.at("slot_count").get<std::size_t>(), j.at("client_count").get<std::size_t>(),
                 std::move(rng), std::move(particles), j.at("gbest_position").get<std::vector<ClientId>>(),
                 detail::value_or(j.at("gbest_fitness"), -std::numeric_limits<double>::infinity()));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed swarm snapshot: ") + e.what());
  }
}

}  // namespace flagswap

#endif  // FLAGSWAP_SNAPSHOT_HPP
