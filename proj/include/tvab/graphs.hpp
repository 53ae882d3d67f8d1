#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tvab {

/// A directed link: `from` can send information to `to`.
///
/// Agents are 0-based. In matrix terms the link occupies entry (to, from) of
/// both the row-stochastic and the column-stochastic weight matrix.
struct Edge {
  std::size_t to = 0;
  std::size_t from = 0;

  auto operator<=>(const Edge&) const = default;
};

enum class SelfLoops { kAdd, kAsGiven };

/// Dense directed graph on n agents.
///
/// Graphs built with `SelfLoops::kAdd` (the default) always contain every
/// self-loop. `SelfLoops::kAsGiven` exists so that user-provided edge lists
/// can be represented verbatim and rejected later by weight construction.
class Digraph {
 public:
  explicit Digraph(std::size_t n);
  Digraph(std::size_t n, std::span<const Edge> edges,
          SelfLoops loops = SelfLoops::kAdd);

  std::size_t size() const { return n_; }

  bool has_edge(std::size_t to, std::size_t from) const {
    return adj_[to * n_ + from] != 0;
  }
  void add_edge(std::size_t to, std::size_t from);

  bool has_all_self_loops() const;

  /// Number of agents `to` hears from, counting itself.
  std::size_t in_degree(std::size_t to) const;
  /// Number of agents that hear `from`, counting itself.
  std::size_t out_degree(std::size_t from) const;

  /// Edges in (to, from) lexicographic order.
  std::vector<Edge> edges() const;
  /// Non-loop edges only.
  std::vector<Edge> links() const;

  bool operator==(const Digraph&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint8_t> adj_;
};

/// Parses "a->b c->d ..." (agent a sends to agent b). Self-loops are added.
Digraph parse_edge_list(std::size_t n, std::string_view text);
std::string format_edge_list(const Digraph& g);

Digraph complete_digraph(std::size_t n);
Digraph directed_ring(std::size_t n);

/// Set union of edge sets. Throws std::invalid_argument on an empty list or
/// mismatched agent counts.
Digraph union_of(std::span<const Digraph> graphs);

bool is_strongly_connected(const Digraph& g);

// --- Graph sequences -------------------------------------------------------

struct StaticTopology {
  Digraph graph;
};

struct PeriodicTopology {
  std::vector<Digraph> graphs;
};

/// Clusters are internally strongly connected at every iteration; a
/// strongly connected inter-cluster layer is switched on when k % period == 0.
struct ClusteredTopology {
  std::size_t n_clusters = 1;
  std::size_t cluster_size = 1;
  std::size_t period = 1;
  std::uint64_t seed = 0;
  Digraph intra;  // fixed intra-cluster layer
};

/// Self-loops only except when k % period == 0, where a fresh random strongly
/// connected digraph (Hamiltonian cycle plus Bernoulli extra links) is used.
struct RandomBoundedTopology {
  std::size_t n = 1;
  std::size_t period = 1;
  double extra_link_prob = 0.0;
  std::uint64_t seed = 0;
};

enum class GossipSampler { kUniformPair, kRingNeighbor };

/// Exactly one non-loop link is active per iteration.
struct GossipTopology {
  std::size_t n = 2;
  std::uint64_t seed = 0;
  GossipSampler sampler = GossipSampler::kUniformPair;
};

/// An infinite, deterministic sequence of digraphs. `at(k)` is a pure
/// function of the generator parameters and k.
class GraphSequence {
 public:
  using Generator = std::variant<StaticTopology, PeriodicTopology,
                                 ClusteredTopology, RandomBoundedTopology,
                                 GossipTopology>;

  explicit GraphSequence(Generator gen);

  std::size_t size() const { return n_; }
  Digraph at(std::uint64_t k) const;
  std::string_view kind() const;
  const Generator& generator() const { return gen_; }

 private:
  Generator gen_;
  std::size_t n_;
};

inline Digraph graph_at(const GraphSequence& seq, std::uint64_t k) {
  return seq.at(k);
}

GraphSequence make_static(Digraph g);
GraphSequence make_periodic(std::vector<Digraph> graphs);
/// Directed n-cycle whose arcs are dealt round-robin into `period` graphs.
GraphSequence make_periodic_ring(std::size_t n, std::size_t period = 4);
GraphSequence make_clustered(std::size_t n_clusters, std::size_t cluster_size,
                             std::size_t period, std::uint64_t seed);
GraphSequence make_random_bounded(std::size_t n, std::size_t period,
                                  std::uint64_t seed,
                                  double extra_link_prob = -1.0);
GraphSequence make_gossip(std::size_t n, std::uint64_t seed,
                          GossipSampler sampler = GossipSampler::kUniformPair);

/// True iff for every k in [0, horizon - C] the union of graphs k..k+C-1 is
/// strongly connected.
bool check_c_bounded(const GraphSequence& seq, std::size_t C,
                     std::size_t horizon);

}  // namespace tvab
