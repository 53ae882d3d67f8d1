#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "tvab/graphs.hpp"

using namespace tvab;

namespace {

std::vector<std::pair<int, int>> links_of(const Digraph& g) {
  std::vector<std::pair<int, int>> out;
  for (const Edge& e : g.edges()) out.emplace_back(static_cast<int>(e.to), static_cast<int>(e.from));
  return out;
}

bool oracle_c_bounded(const GraphSequence& seq, std::size_t C, std::size_t H) {
  const int n = static_cast<int>(seq.size());
  for (std::size_t k = 0; k + C <= H; ++k) {
    std::vector<std::pair<int, int>> all;
    for (std::size_t l = k; l < k + C; ++l) {
      const auto e = links_of(seq.at(l));
      all.insert(all.end(), e.begin(), e.end());
    }
    if (!oracle::strongly_connected(n, all)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("edge orientation and parsing") {
  const Digraph g = parse_edge_list(3, "0->1 1->2");
  CHECK(g.has_edge(1, 0));
  CHECK(g.has_edge(2, 1));
  CHECK_FALSE(g.has_edge(0, 1));
  CHECK(g.has_all_self_loops());
  CHECK(g.in_degree(1) == 2);
  CHECK(g.out_degree(0) == 2);
  CHECK(g.out_degree(2) == 1);
  CHECK(parse_edge_list(3, format_edge_list(g)) == g);
  CHECK_THROWS(parse_edge_list(3, "0->3"));
  CHECK_THROWS(parse_edge_list(3, "0-1"));
}

TEST_CASE("static sequence is constant") {
  const GraphSequence s = make_static(complete_digraph(4));
  const Digraph g = s.at(7);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(g.has_edge(i, j));
  CHECK(s.kind() == "static");
}

TEST_CASE("periodic sequence returns graph k mod period") {
  std::vector<Digraph> gs;
  for (int t = 0; t < 4; ++t) {
    gs.push_back(parse_edge_list(4, std::to_string(t) + "->" + std::to_string((t + 1) % 4)));
  }
  const GraphSequence s = make_periodic(gs);
  CHECK(s.at(5) == gs[1]);
  CHECK(s.at(8) == gs[0]);
  CHECK(check_c_bounded(s, 4, 100));
  CHECK_FALSE(check_c_bounded(s, 3, 100));
}

TEST_CASE("union") {
  const Digraph a = parse_edge_list(3, "0->1");
  const Digraph b = parse_edge_list(3, "1->2");
  const std::vector<Digraph> one{a};
  CHECK(union_of(one) == a);
  const std::vector<Digraph> ab{a, b}, ba{b, a}, aab{a, a, b};
  const Digraph u = union_of(ab);
  CHECK(u.has_edge(1, 0));
  CHECK(u.has_edge(2, 1));
  CHECK(u.links().size() == 2);
  CHECK(union_of(ba) == u);
  CHECK(union_of(aab) == u);
  const std::vector<Digraph> bad{a, Digraph(4)};
  CHECK_THROWS_AS(union_of(bad), std::invalid_argument);
  CHECK_THROWS_AS(union_of(std::vector<Digraph>{}), std::invalid_argument);
}

TEST_CASE("strong connectivity") {
  CHECK(is_strongly_connected(Digraph(1)));
  CHECK(is_strongly_connected(directed_ring(5)));
  CHECK_FALSE(is_strongly_connected(parse_edge_list(6, "0->1 1->2 2->0 3->4 4->5 5->3")));
  CHECK_FALSE(is_strongly_connected(parse_edge_list(3, "0->1 1->2")));
}

TEST_CASE("ten-agent ring split over four graphs, 4-bounded but not 1-bounded") {
  const GraphSequence s = make_periodic_ring(10, 4);
  std::vector<Digraph> four;
  for (int k = 0; k < 4; ++k) {
    four.push_back(s.at(k));
    CHECK_FALSE(is_strongly_connected(s.at(k)));
  }
  CHECK(is_strongly_connected(union_of(four)));
  CHECK(union_of(four) == directed_ring(10));
  CHECK(check_c_bounded(s, 4, 100));
  CHECK_FALSE(check_c_bounded(s, 1, 100));
  CHECK(check_c_bounded(s, 4, 100) == oracle_c_bounded(s, 4, 100));
}

TEST_CASE("c-boundedness is monotone in C and agrees with the closure oracle") {
  const std::vector<GraphSequence> seqs{make_periodic_ring(6, 3), make_random_bounded(8, 5, 3),
                                        make_clustered(3, 4, 6, 2)};
  for (const auto& s : seqs) {
    for (std::size_t C = 1; C <= 8; ++C) {
      const bool ok = check_c_bounded(s, C, 40);
      CHECK(ok == oracle_c_bounded(s, C, 40));
      if (ok) CHECK(check_c_bounded(s, C + 1, 40));
    }
  }
}

TEST_CASE("clustered generator") {
  const GraphSequence s = make_clustered(5, 12, 50, 9);
  CHECK(s.size() == 60);
  CHECK(check_c_bounded(s, 50, 200));
  CHECK_FALSE(check_c_bounded(s, 49, 200));

  const GraphSequence one = make_clustered(1, 4, 1, 3);
  for (int k = 0; k < 5; ++k) CHECK(is_strongly_connected(one.at(k)));
  CHECK(one.at(0) == one.at(3));

  const GraphSequence two = make_clustered(2, 3, 5, 4);
  auto crosses = [](const Digraph& g) {
    for (const Edge& e : g.links())
      if (e.to / 3 != e.from / 3) return true;
    return false;
  };
  CHECK(crosses(two.at(5)));
  CHECK_FALSE(crosses(two.at(6)));
  // clusters are internally strongly connected at every iteration
  for (int k = 0; k < 7; ++k) {
    const Digraph g = two.at(k);
    for (int c = 0; c < 2; ++c) {
      std::vector<std::pair<int, int>> in;
      for (const Edge& e : g.edges())
        if (e.to / 3 == std::size_t(c) && e.from / 3 == std::size_t(c))
          in.emplace_back(int(e.to % 3), int(e.from % 3));
      CHECK(oracle::strongly_connected(3, in));
    }
  }
}

TEST_CASE("random bounded generator") {
  const GraphSequence s = make_random_bounded(80, 15, 5);
  CHECK(check_c_bounded(s, 15, 300));
  CHECK(is_strongly_connected(s.at(30)));
  CHECK(s.at(31).links().empty());
  CHECK(s.at(30) != s.at(45));
}

TEST_CASE("gossip: one link per iteration, every link eventually") {
  const GraphSequence s = make_gossip(5, 11);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::uint64_t k = 0; k < 4000; ++k) {
    const Digraph g = s.at(k);
    REQUIRE(g.links().size() == 1);
    CHECK(g.has_all_self_loops());
    seen.insert({g.links()[0].to, g.links()[0].from});
  }
  CHECK(seen.size() == 20);

  const GraphSequence ring = make_gossip(5, 11, GossipSampler::kRingNeighbor);
  for (std::uint64_t k = 0; k < 200; ++k) {
    const Edge e = ring.at(k).links().at(0);
    CHECK((e.to + 5 - e.from) % 5 != 0);
    CHECK(((e.to + 1) % 5 == e.from || (e.from + 1) % 5 == e.to));
  }
}

TEST_CASE("determinism and self-loops across generators") {
  const std::vector<std::pair<GraphSequence, GraphSequence>> pairs{
      {make_clustered(3, 4, 5, 8), make_clustered(3, 4, 5, 8)},
      {make_random_bounded(10, 4, 8), make_random_bounded(10, 4, 8)},
      {make_gossip(6, 8), make_gossip(6, 8)}};
  for (const auto& [a, b] : pairs) {
    for (std::uint64_t k : {0ull, 1ull, 17ull, 1000ull, 123456ull}) {
      CHECK(a.at(k) == b.at(k));
      CHECK(a.at(k).has_all_self_loops());
    }
  }
  CHECK(make_gossip(6, 8).at(3) == make_gossip(6, 8).at(3));
}
