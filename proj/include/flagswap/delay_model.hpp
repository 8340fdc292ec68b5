#ifndef FLAGSWAP_DELAY_MODEL_HPP
#define FLAGSWAP_DELAY_MODEL_HPP

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flagswap/error.hpp"
#include "flagswap/topology.hpp"

namespace flagswap {

/// Cluster delay of an aggregator: its own model data plus that of every
/// child in its processing buffer, divided by its processing speed.
inline double cluster_delay(const ClientSpec& aggregator, std::span<const ClientSpec> children) {
  if (!(aggregator.pspeed > 0.0)) {
    throw ValidationError("aggregator " + std::to_string(aggregator.client_id) + " has pspeed <= 0");
  }
  double payload = aggregator.mdatasize;
  for (const ClientSpec& c : children) payload += c.mdatasize;
  return payload / aggregator.pspeed;
}

inline double memory_consumption(const ClientSpec& aggregator, std::span<const ClientSpec> children) {
  double payload = aggregator.mdatasize;
  for (const ClientSpec& c : children) payload += c.mdatasize;
  return payload;
}

struct NodeLoad {
  double cluster_delay = 0.0;
  double memory_consumption = 0.0;

  friend bool operator==(const NodeLoad&, const NodeLoad&) = default;
};

struct DelayReport {
  double tpd = 0.0;
  std::vector<double> per_level_max;
  std::map<ClientId, NodeLoad> per_node;
  // Some aggregator's memory consumption exceeds its memcap.
  bool memory_violation = false;
  // Added on top of the level sum; nonzero only with DelayOptions::memory_penalty.
  double penalty = 0.0;
};

/// Optional memory feasibility check. Off by default; when enabled a node
/// whose consumption exceeds its memcap adds `penalty` to the tpd once.
struct DelayOptions {
  bool memory_penalty = false;
  double penalty = 1e6;
};

/// Total processing delay: for each breadth-first level take the largest
/// cluster delay, then sum across levels (bottom to top).
inline DelayReport total_processing_delay(const Hierarchy& h, const DelayOptions& options = {}) {
  DelayReport report;
  const auto levels = levels_bft(h);
  report.per_level_max.assign(levels.size(), 0.0);

  std::vector<ClientSpec> children;
  for (std::size_t l = levels.size(); l-- > 0;) {
    double level_max = 0.0;
    for (std::size_t index : levels[l]) {
      const HierarchyNode& n = h.node(index);
      children.clear();
      for (std::size_t child : n.buffer) children.push_back(h.node(child).client);
      NodeLoad load{cluster_delay(n.client, children), memory_consumption(n.client, children)};
      level_max = std::max(level_max, load.cluster_delay);
      if (load.memory_consumption > n.client.memcap) report.memory_violation = true;
      report.per_node.emplace(n.client.client_id, load);
    }
    report.per_level_max[l] = level_max;
  }

  for (std::size_t l = levels.size(); l-- > 0;) report.tpd += report.per_level_max[l];
  if (options.memory_penalty && report.memory_violation) {
    report.penalty = options.penalty;
    report.tpd += report.penalty;
  }
  return report;
}

/// Fitness is the negated tpd; higher is better.
struct Fitness {
  double value = 0.0;

  friend auto operator<=>(const Fitness&, const Fitness&) = default;
};

inline Fitness fitness_of(double tpd) { return Fitness{-tpd}; }

}  // namespace flagswap

#endif  // FLAGSWAP_DELAY_MODEL_HPP
