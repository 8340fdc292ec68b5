#ifndef FLAGSWAP_BASELINES_HPP
#define FLAGSWAP_BASELINES_HPP

#include <cstddef>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "flagswap/error.hpp"
#include "flagswap/topology.hpp"

namespace flagswap {

enum class StrategyKind { pso, random, round_robin };

inline std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::pso:
      return "pso";
    case StrategyKind::random:
      return "random";
    case StrategyKind::round_robin:
      return "round_robin";
  }
  return "unknown";
}

inline std::optional<StrategyKind> parse_strategy(std::string_view name) {
  if (name == "pso") return StrategyKind::pso;
  if (name == "random") return StrategyKind::random;
  if (name == "round_robin") return StrategyKind::round_robin;
  return std::nullopt;
}

namespace detail {

inline void require_enough_clients(std::size_t client_count, std::size_t slot_count) {
  if (client_count < slot_count) {
    throw ValidationError("not enough clients (" + std::to_string(client_count) + ") for " +
                          std::to_string(slot_count) + " aggregator slots");
  }
}

}  // namespace detail

/// Uniform ordered sample of slot_count distinct ids, in draw order.
template <std::uniform_random_bit_generator Rng>
Placement random_placement(std::size_t client_count, std::size_t slot_count, Rng& rng) {
  detail::require_enough_clients(client_count, slot_count);
  std::vector<ClientId> ids(client_count);
  std::iota(ids.begin(), ids.end(), ClientId{0});
  for (std::size_t j = 0; j < slot_count; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, client_count - 1);
    std::swap(ids[j], ids[pick(rng)]);
  }
  ids.resize(slot_count);
  return Placement{std::move(ids)};
}

/// Slot j gets client (round_index + j) mod client_count.
inline Placement round_robin_placement(std::size_t client_count, std::size_t slot_count, std::size_t round_index) {
  detail::require_enough_clients(client_count, slot_count);
  Placement p;
  p.slots.reserve(slot_count);
  for (std::size_t j = 0; j < slot_count; ++j) {
    p.slots.push_back(static_cast<ClientId>((round_index + j) % client_count));
  }
  return p;
}

}  // namespace flagswap

#endif  // FLAGSWAP_BASELINES_HPP
