#ifndef FLAGSWAP_TOPOLOGY_HPP
#define FLAGSWAP_TOPOLOGY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "flagswap/error.hpp"

namespace flagswap {

using ClientId = std::int32_t;

/// A simulated FL client. Sizes and speeds are abstract units.
struct ClientSpec {
  ClientId client_id = 0;
  double memcap = 0.0;
  double mdatasize = 0.0;
  double pspeed = 0.0;

  friend bool operator==(const ClientSpec&, const ClientSpec&) = default;
};

/// Client pools are indexed by id: pool[i].client_id == i.
using ClientPool = std::vector<ClientSpec>;

/// Shape of the aggregation tree.
///
/// `depth` levels of aggregators, each non-leaf aggregator having `width`
/// aggregator children. `trainers_per_leaf` only drives synthetic pool
/// generation; an explicit pool may hold any number of trainers.
struct HierarchySpec {
  int depth = 1;
  int width = 1;
  int trainers_per_leaf = 0;

  void validate() const {
    if (depth < 1) throw ValidationError("hierarchy depth must be >= 1, got " + std::to_string(depth));
    if (width < 1) throw ValidationError("hierarchy width must be >= 1, got " + std::to_string(width));
    if (trainers_per_leaf < 0) {
      throw ValidationError("trainers_per_leaf must be >= 0, got " + std::to_string(trainers_per_leaf));
    }
  }

  friend bool operator==(const HierarchySpec&, const HierarchySpec&) = default;
};

/// Number of aggregator slots in a depth x width tree: sum of width^i for
/// i in [0, depth).
inline std::size_t count_aggregator_slots(int depth, int width) {
  if (depth < 1 || width < 1) {
    throw ValidationError("count_aggregator_slots requires depth >= 1 and width >= 1");
  }
  std::size_t total = 0;
  std::size_t term = 1;
  for (int i = 0; i < depth; ++i) {
    total += term;
    term *= static_cast<std::size_t>(width);
  }
  return total;
}

inline std::size_t count_leaf_aggregators(int depth, int width) {
  std::size_t leaves = 1;
  for (int i = 1; i < depth; ++i) leaves *= static_cast<std::size_t>(width);
  return leaves;
}

inline std::size_t total_client_count(const HierarchySpec& spec) {
  spec.validate();
  return count_aggregator_slots(spec.depth, spec.width) +
         count_leaf_aggregators(spec.depth, spec.width) * static_cast<std::size_t>(spec.trainers_per_leaf);
}

namespace detail {

// Uniform draw from the open interval (lo, hi).
template <class Rng>
double open_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (;;) {
    const double x = dist(rng);
    if (x > lo && x < hi) return x;
  }
}

}  // namespace detail

/// Synthetic pool of `count` clients: memcap in (10, 50), pspeed in (5, 15),
/// mdatasize fixed at 5.
inline ClientPool generate_random_pool(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ClientPool pool;
  pool.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ClientSpec c;
    c.client_id = static_cast<ClientId>(i);
    c.memcap = detail::open_uniform(rng, 10.0, 50.0);
    c.pspeed = detail::open_uniform(rng, 5.0, 15.0);
    c.mdatasize = 5.0;
    pool.push_back(c);
  }
  return pool;
}

inline ClientPool generate_client_pool(const HierarchySpec& spec, std::uint64_t seed) {
  return generate_random_pool(total_client_count(spec), seed);
}

/// Checks the pool invariants: ids are exactly 0..n-1 in order and every
/// attribute is strictly positive.
inline void validate_pool(std::span<const ClientSpec> pool) {
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const ClientSpec& c = pool[i];
    if (c.client_id != static_cast<ClientId>(i)) {
      throw ValidationError("pool client ids must be 0..n-1 in order; position " + std::to_string(i) +
                            " holds id " + std::to_string(c.client_id));
    }
    if (!(c.pspeed > 0.0) || !std::isfinite(c.pspeed)) {
      throw ValidationError("client " + std::to_string(c.client_id) + " has non-positive pspeed");
    }
    if (!(c.mdatasize > 0.0) || !std::isfinite(c.mdatasize)) {
      throw ValidationError("client " + std::to_string(c.client_id) + " has non-positive mdatasize");
    }
    if (!(c.memcap > 0.0) || !std::isfinite(c.memcap)) {
      throw ValidationError("client " + std::to_string(c.client_id) + " has non-positive memcap");
    }
  }
}

/// Ordered assignment of client ids to aggregator slots in breadth-first
/// slot order (root first, then level 1 left to right, ...).
struct Placement {
  std::vector<ClientId> slots;

  std::size_t size() const { return slots.size(); }
  friend bool operator==(const Placement&, const Placement&) = default;
  friend auto operator<=>(const Placement&, const Placement&) = default;
};

inline void validate_placement(std::span<const ClientId> slots, std::size_t slot_count, std::size_t client_count) {
  if (slots.size() != slot_count) {
    throw ValidationError("placement has " + std::to_string(slots.size()) + " slots, expected " +
                          std::to_string(slot_count));
  }
  std::vector<bool> seen(client_count, false);
  for (ClientId id : slots) {
    if (id < 0 || static_cast<std::size_t>(id) >= client_count) {
      throw ValidationError("placement id " + std::to_string(id) + " outside [0, " + std::to_string(client_count) +
                            ")");
    }
    if (seen[static_cast<std::size_t>(id)]) {
      throw ValidationError("placement repeats client id " + std::to_string(id));
    }
    seen[static_cast<std::size_t>(id)] = true;
  }
}

inline bool is_valid_placement(std::span<const ClientId> slots, std::size_t slot_count, std::size_t client_count) {
  if (slots.size() != slot_count) return false;
  std::vector<bool> seen(client_count, false);
  for (ClientId id : slots) {
    if (id < 0 || static_cast<std::size_t>(id) >= client_count || seen[static_cast<std::size_t>(id)]) return false;
    seen[static_cast<std::size_t>(id)] = true;
  }
  return true;
}

enum class Role { aggregator, trainer };

struct HierarchyNode {
  ClientSpec client;
  Role role = Role::trainer;
  int level = 0;
  // Processing buffer: indices into Hierarchy::nodes(). Empty for trainers.
  std::vector<std::size_t> buffer;
};

/// A materialized aggregation tree.
///
/// Node 0 is the root. Aggregator nodes occupy indices [0, slot_count) in
/// breadth-first slot order, trainers follow in ascending client id.
class Hierarchy {
 public:
  const std::vector<HierarchyNode>& nodes() const { return nodes_; }
  const HierarchyNode& node(std::size_t index) const { return nodes_.at(index); }
  const HierarchyNode& root() const { return nodes_.front(); }
  const HierarchySpec& spec() const { return spec_; }
  std::size_t slot_count() const { return slot_count_; }
  std::size_t client_count() const { return nodes_.size(); }

  friend Hierarchy build_hierarchy(const HierarchySpec& spec, std::span<const ClientId> placement,
                                   std::span<const ClientSpec> pool);

 private:
  HierarchySpec spec_;
  std::size_t slot_count_ = 0;
  std::vector<HierarchyNode> nodes_;
};

/// Fills aggregator slots from `placement` and deals every remaining client,
/// ascending by id, round-robin over the leaf aggregators in slot order.
inline Hierarchy build_hierarchy(const HierarchySpec& spec, std::span<const ClientId> placement,
                                 std::span<const ClientSpec> pool) {
  spec.validate();
  const std::size_t slots = count_aggregator_slots(spec.depth, spec.width);
  validate_placement(placement, slots, pool.size());

  const auto width = static_cast<std::size_t>(spec.width);
  const std::size_t leaves = count_leaf_aggregators(spec.depth, spec.width);
  const std::size_t first_leaf = slots - leaves;

  Hierarchy h;
  h.spec_ = spec;
  h.slot_count_ = slots;
  h.nodes_.reserve(pool.size());

  int level = 0;
  std::size_t level_end = 1;
  for (std::size_t s = 0; s < slots; ++s) {
    if (s == level_end) {
      ++level;
      level_end = level_end * width + 1;
    }
    HierarchyNode n;
    n.client = pool[static_cast<std::size_t>(placement[s])];
    n.role = Role::aggregator;
    n.level = level;
    if (s < first_leaf) {
      n.buffer.reserve(width);
      for (std::size_t k = 1; k <= width; ++k) n.buffer.push_back(s * width + k);
    }
    h.nodes_.push_back(std::move(n));
  }

  std::vector<bool> is_aggregator(pool.size(), false);
  for (ClientId id : placement) is_aggregator[static_cast<std::size_t>(id)] = true;

  std::size_t dealt = 0;
  for (std::size_t id = 0; id < pool.size(); ++id) {
    if (is_aggregator[id]) continue;
    HierarchyNode n;
    n.client = pool[id];
    n.role = Role::trainer;
    n.level = spec.depth;
    const std::size_t parent = first_leaf + dealt % leaves;
    h.nodes_[parent].buffer.push_back(h.nodes_.size());
    h.nodes_.push_back(std::move(n));
    ++dealt;
  }
  return h;
}

inline Hierarchy build_hierarchy(const HierarchySpec& spec, const Placement& placement,
                                 std::span<const ClientSpec> pool) {
  return build_hierarchy(spec, std::span<const ClientId>(placement.slots), pool);
}

/// Breadth-first level decomposition of the aggregator nodes. Each level
/// lists node indices; trainers are excluded.
inline std::vector<std::vector<std::size_t>> levels_bft(const Hierarchy& h) {
  std::vector<std::vector<std::size_t>> levels;
  if (h.nodes().empty()) return levels;
  std::deque<std::pair<std::size_t, std::size_t>> queue{{0, 0}};
  while (!queue.empty()) {
    const auto [index, depth] = queue.front();
    queue.pop_front();
    const HierarchyNode& n = h.node(index);
    if (n.role != Role::aggregator) continue;
    if (levels.size() <= depth) levels.resize(depth + 1);
    levels[depth].push_back(index);
    for (std::size_t child : n.buffer) queue.emplace_back(child, depth + 1);
  }
  return levels;
}

}  // namespace flagswap

#endif  // FLAGSWAP_TOPOLOGY_HPP
