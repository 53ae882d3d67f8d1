#include "tvab/graphs.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tvab/random.hpp"

namespace tvab {

namespace {

constexpr std::uint64_t kIntraSalt = 0x1a7e;
constexpr std::uint64_t kInterSalt = 0x2b8f;
constexpr std::uint64_t kRandomSalt = 0x3c90;
constexpr std::uint64_t kGossipSalt = 0x4da1;

void check_agent(std::size_t n, std::size_t i) {
  if (i >= n) {
    throw std::out_of_range("agent index " + std::to_string(i) +
                            " outside [0, " + std::to_string(n) + ")");
  }
}

// Breadth-first reachability from agent 0 along (forward ? sender->receiver
// : receiver->sender) links.
bool reaches_all(const Digraph& g, bool forward) {
  const std::size_t n = g.size();
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> queue{0};
  seen[0] = 1;
  std::size_t count = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t u = queue[head];
    for (std::size_t w = 0; w < n; ++w) {
      if (seen[w]) continue;
      const bool linked = forward ? g.has_edge(w, u) : g.has_edge(u, w);
      if (linked) {
        seen[w] = 1;
        ++count;
        queue.push_back(w);
      }
    }
  }
  return count == n;
}

// Random Hamiltonian cycle over `nodes` plus extra links with probability p.
void add_random_strong_layer(Digraph& g, std::span<const std::size_t> nodes,
                             double p, std::mt19937_64& rng) {
  if (nodes.size() < 2) return;
  std::vector<std::size_t> order(nodes.begin(), nodes.end());
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < order.size(); ++i) {
    g.add_edge(order[(i + 1) % order.size()], order[i]);
  }
  if (p <= 0.0) return;
  std::bernoulli_distribution coin(p);
  for (std::size_t to : nodes) {
    for (std::size_t from : nodes) {
      if (to != from && coin(rng)) g.add_edge(to, from);
    }
  }
}

}  // namespace

Digraph::Digraph(std::size_t n) : n_(n), adj_(n * n, 0) {
  if (n == 0) throw std::invalid_argument("digraph needs at least one agent");
  for (std::size_t i = 0; i < n; ++i) adj_[i * n + i] = 1;
}

Digraph::Digraph(std::size_t n, std::span<const Edge> edges, SelfLoops loops)
    : n_(n), adj_(n * n, 0) {
  if (n == 0) throw std::invalid_argument("digraph needs at least one agent");
  if (loops == SelfLoops::kAdd) {
    for (std::size_t i = 0; i < n; ++i) adj_[i * n + i] = 1;
  }
  for (const Edge& e : edges) add_edge(e.to, e.from);
}

void Digraph::add_edge(std::size_t to, std::size_t from) {
  check_agent(n_, to);
  check_agent(n_, from);
  adj_[to * n_ + from] = 1;
}

bool Digraph::has_all_self_loops() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (!has_edge(i, i)) return false;
  }
  return true;
}

std::size_t Digraph::in_degree(std::size_t to) const {
  check_agent(n_, to);
  const auto row = adj_.begin() + static_cast<std::ptrdiff_t>(to * n_);
  return static_cast<std::size_t>(
      std::count(row, row + static_cast<std::ptrdiff_t>(n_), 1));
}

std::size_t Digraph::out_degree(std::size_t from) const {
  check_agent(n_, from);
  std::size_t d = 0;
  for (std::size_t to = 0; to < n_; ++to) d += adj_[to * n_ + from];
  return d;
}

std::vector<Edge> Digraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t to = 0; to < n_; ++to) {
    for (std::size_t from = 0; from < n_; ++from) {
      if (has_edge(to, from)) out.push_back({to, from});
    }
  }
  return out;
}

std::vector<Edge> Digraph::links() const {
  std::vector<Edge> out = edges();
  std::erase_if(out, [](const Edge& e) { return e.to == e.from; });
  return out;
}

Digraph parse_edge_list(std::size_t n, std::string_view text) {
  Digraph g(n);
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    const auto arrow = token.find("->");
    if (arrow == std::string::npos) {
      throw std::invalid_argument("edge '" + token + "' is not of the form a->b");
    }
    try {
      const std::size_t from = std::stoul(token.substr(0, arrow));
      const std::size_t to = std::stoul(token.substr(arrow + 2));
      g.add_edge(to, from);
    } catch (const std::out_of_range& e) {
      throw std::invalid_argument("edge '" + token + "': " + e.what());
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("edge '" + token + "' has a non-numeric endpoint");
    }
  }
  return g;
}

std::string format_edge_list(const Digraph& g) {
  std::string out;
  for (const Edge& e : g.links()) {
    if (!out.empty()) out += ' ';
    out += std::to_string(e.from) + "->" + std::to_string(e.to);
  }
  return out;
}

Digraph complete_digraph(std::size_t n) {
  Digraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) g.add_edge(i, j);
  }
  return g;
}

Digraph directed_ring(std::size_t n) {
  Digraph g(n);
  for (std::size_t i = 0; i < n; ++i) g.add_edge((i + 1) % n, i);
  return g;
}

Digraph union_of(std::span<const Digraph> graphs) {
  if (graphs.empty()) throw std::invalid_argument("union of an empty graph list");
  const std::size_t n = graphs.front().size();
  Digraph out(n, {}, SelfLoops::kAsGiven);
  for (const Digraph& g : graphs) {
    if (g.size() != n) {
      throw std::invalid_argument("union of digraphs with different agent counts");
    }
    for (const Edge& e : g.edges()) out.add_edge(e.to, e.from);
  }
  return out;
}

bool is_strongly_connected(const Digraph& g) {
  return reaches_all(g, true) && reaches_all(g, false);
}

// --- sequences --------------------------------------------------------------

namespace {

std::size_t generator_size(const GraphSequence::Generator& gen) {
  struct {
    std::size_t operator()(const StaticTopology& t) const { return t.graph.size(); }
    std::size_t operator()(const PeriodicTopology& t) const {
      if (t.graphs.empty()) throw std::invalid_argument("periodic sequence needs graphs");
      const std::size_t n = t.graphs.front().size();
      for (const Digraph& g : t.graphs) {
        if (g.size() != n) {
          throw std::invalid_argument("periodic graphs have different agent counts");
        }
      }
      return n;
    }
    std::size_t operator()(const ClusteredTopology& t) const {
      return t.n_clusters * t.cluster_size;
    }
    std::size_t operator()(const RandomBoundedTopology& t) const { return t.n; }
    std::size_t operator()(const GossipTopology& t) const { return t.n; }
  } visitor;
  return std::visit(visitor, gen);
}

}  // namespace

GraphSequence::GraphSequence(Generator gen)
    : gen_(std::move(gen)), n_(generator_size(gen_)) {
  if (n_ == 0) throw std::invalid_argument("graph sequence needs at least one agent");
}

std::string_view GraphSequence::kind() const {
  struct {
    std::string_view operator()(const StaticTopology&) const { return "static"; }
    std::string_view operator()(const PeriodicTopology&) const { return "periodic"; }
    std::string_view operator()(const ClusteredTopology&) const { return "clustered"; }
    std::string_view operator()(const RandomBoundedTopology&) const { return "random"; }
    std::string_view operator()(const GossipTopology&) const { return "gossip"; }
  } visitor;
  return std::visit(visitor, gen_);
}

Digraph GraphSequence::at(std::uint64_t k) const {
  struct Visitor {
    std::uint64_t k;
    Digraph operator()(const StaticTopology& t) const { return t.graph; }
    Digraph operator()(const PeriodicTopology& t) const {
      return t.graphs[k % t.graphs.size()];
    }
    Digraph operator()(const ClusteredTopology& t) const {
      Digraph g = t.intra;
      if (t.n_clusters < 2 || k % t.period != 0) return g;
      // Strongly connected cluster-level ring in random cluster order; each
      // cluster-level arc is realised by one random agent pair.
      auto rng = stream_rng(t.seed, k, kInterSalt);
      std::vector<std::size_t> order(t.n_clusters);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::uniform_int_distribution<std::size_t> member(0, t.cluster_size - 1);
      for (std::size_t c = 0; c < t.n_clusters; ++c) {
        const std::size_t src = order[c];
        const std::size_t dst = order[(c + 1) % t.n_clusters];
        const std::size_t from = src * t.cluster_size + member(rng);
        const std::size_t to = dst * t.cluster_size + member(rng);
        g.add_edge(to, from);
      }
      return g;
    }
    Digraph operator()(const RandomBoundedTopology& t) const {
      Digraph g(t.n);
      if (k % t.period != 0) return g;
      auto rng = stream_rng(t.seed, k, kRandomSalt);
      std::vector<std::size_t> nodes(t.n);
      std::iota(nodes.begin(), nodes.end(), 0);
      add_random_strong_layer(g, nodes, t.extra_link_prob, rng);
      return g;
    }
    Digraph operator()(const GossipTopology& t) const {
      Digraph g(t.n);
      auto rng = stream_rng(t.seed, k, kGossipSalt);
      std::uniform_int_distribution<std::size_t> agent(0, t.n - 1);
      const std::size_t from = agent(rng);
      std::size_t to = 0;
      if (t.sampler == GossipSampler::kRingNeighbor) {
        std::bernoulli_distribution coin(0.5);
        to = coin(rng) ? (from + 1) % t.n : (from + t.n - 1) % t.n;
      } else {
        std::uniform_int_distribution<std::size_t> other(0, t.n - 2);
        to = other(rng);
        if (to >= from) ++to;
      }
      g.add_edge(to, from);
      return g;
    }
  };
  return std::visit(Visitor{k}, gen_);
}

GraphSequence make_static(Digraph g) {
  return GraphSequence(StaticTopology{std::move(g)});
}

GraphSequence make_periodic(std::vector<Digraph> graphs) {
  return GraphSequence(PeriodicTopology{std::move(graphs)});
}

GraphSequence make_periodic_ring(std::size_t n, std::size_t period) {
  if (period == 0) throw std::invalid_argument("period must be positive");
  std::vector<Digraph> graphs(period, Digraph(n));
  if (n > 1) {
    for (std::size_t i = 0; i < n; ++i) graphs[i % period].add_edge((i + 1) % n, i);
  }
  return make_periodic(std::move(graphs));
}

GraphSequence make_clustered(std::size_t n_clusters, std::size_t cluster_size,
                             std::size_t period, std::uint64_t seed) {
  if (n_clusters == 0 || cluster_size == 0 || period == 0) {
    throw std::invalid_argument("clustered topology needs positive sizes and period");
  }
  Digraph intra(n_clusters * cluster_size);
  auto rng = stream_rng(seed, 0, kIntraSalt);
  // A few chords on top of the Hamiltonian cycle keep the clusters from being
  // pure rings.
  const double chord_prob = cluster_size > 2 ? 1.0 / static_cast<double>(cluster_size) : 0.0;
  for (std::size_t c = 0; c < n_clusters; ++c) {
    std::vector<std::size_t> nodes(cluster_size);
    std::iota(nodes.begin(), nodes.end(), c * cluster_size);
    add_random_strong_layer(intra, nodes, chord_prob, rng);
  }
  return GraphSequence(
      ClusteredTopology{n_clusters, cluster_size, period, seed, std::move(intra)});
}

GraphSequence make_random_bounded(std::size_t n, std::size_t period,
                                  std::uint64_t seed, double extra_link_prob) {
  if (period == 0) throw std::invalid_argument("period must be positive");
  if (extra_link_prob < 0.0) {
    extra_link_prob = n > 1 ? 2.0 / static_cast<double>(n) : 0.0;
  }
  return GraphSequence(RandomBoundedTopology{n, period, extra_link_prob, seed});
}

GraphSequence make_gossip(std::size_t n, std::uint64_t seed, GossipSampler sampler) {
  if (n < 2) throw std::invalid_argument("gossip needs at least two agents");
  return GraphSequence(GossipTopology{n, seed, sampler});
}

bool check_c_bounded(const GraphSequence& seq, std::size_t C, std::size_t horizon) {
  if (C == 0) throw std::invalid_argument("C must be positive");
  if (horizon < C) throw std::invalid_argument("horizon must be at least C");
  const std::size_t n = seq.size();
  // Sliding window of edge multiplicities over graphs k..k+C-1.
  std::vector<std::uint32_t> count(n * n, 0);
  std::vector<Digraph> window;
  window.reserve(C);
  auto accumulate = [&](const Digraph& g, int sign) {
    for (const Edge& e : g.edges()) {
      count[e.to * n + e.from] = static_cast<std::uint32_t>(
          static_cast<int>(count[e.to * n + e.from]) + sign);
    }
  };
  for (std::size_t k = 0; k < C; ++k) {
    window.push_back(seq.at(k));
    accumulate(window.back(), +1);
  }
  for (std::size_t k = 0;; ++k) {
    Digraph u(n, {}, SelfLoops::kAsGiven);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (count[i * n + j] > 0) u.add_edge(i, j);
      }
    }
    if (!is_strongly_connected(u)) return false;
    if (k + C >= horizon) break;
    accumulate(window[k % C], -1);
    window[k % C] = seq.at(k + C);
    accumulate(window[k % C], +1);
  }
  return true;
}

}  // namespace tvab
