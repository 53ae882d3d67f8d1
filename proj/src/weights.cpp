#include "tvab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace tvab {

WeightPair uniform_weights(const Digraph& g) {
  if (!g.has_all_self_loops()) {
    throw std::invalid_argument("uniform weights require a self-loop at every agent");
  }
  const auto n = static_cast<Eigen::Index>(g.size());
  WeightPair wp{Matrix::Zero(n, n), Matrix::Zero(n, n)};
  std::vector<double> out_deg(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    out_deg[j] = static_cast<double>(g.out_degree(j));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d_in = static_cast<double>(g.in_degree(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!g.has_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) continue;
      wp.A(i, j) = 1.0 / d_in;
      wp.B(i, j) = 1.0 / out_deg[static_cast<std::size_t>(j)];
    }
  }
  return wp;
}

WeightDiagnostics validate_weights(const WeightPair& wp, const Digraph& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  if (wp.A.rows() != n || wp.A.cols() != n || wp.B.rows() != n || wp.B.cols() != n) {
    throw std::invalid_argument("weight matrices do not match the graph size");
  }
  WeightDiagnostics d;
  d.alpha_hat = std::numeric_limits<double>::infinity();
  d.beta_hat = std::numeric_limits<double>::infinity();
  d.pattern_ok = true;
  d.diag_ok = true;
  d.nonnegative = (wp.A.array() >= 0.0).all() && (wp.B.array() >= 0.0).all();
  for (Eigen::Index i = 0; i < n; ++i) {
    d.row_err = std::max(d.row_err, std::abs(wp.A.row(i).sum() - 1.0));
    d.col_err = std::max(d.col_err, std::abs(wp.B.col(i).sum() - 1.0));
    d.diag_ok = d.diag_ok && wp.A(i, i) > 0.0 && wp.B(i, i) > 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool edge = g.has_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (edge != (wp.A(i, j) != 0.0) || edge != (wp.B(i, j) != 0.0)) d.pattern_ok = false;
      if (edge) {
        if (wp.A(i, j) != 0.0) d.alpha_hat = std::min(d.alpha_hat, wp.A(i, j));
        if (wp.B(i, j) != 0.0) d.beta_hat = std::min(d.beta_hat, wp.B(i, j));
      }
    }
  }
  return d;
}

WeightSchedule WeightSchedule::uniform(GraphSequence seq) {
  WeightSchedule s;
  s.n_ = seq.size();
  auto shared = std::make_shared<const GraphSequence>(std::move(seq));
  s.graph_ = [shared](std::uint64_t k) { return shared->at(k); };
  s.weights_ = [shared](std::uint64_t k) { return uniform_weights(shared->at(k)); };
  return s;
}

WeightSchedule WeightSchedule::fixed(WeightPair wp, Digraph g) {
  const WeightDiagnostics d = validate_weights(wp, g);
  if (!d.ok(1e-12)) {
    throw std::invalid_argument(
        "fixed weights violate stochasticity, positivity or the graph pattern");
  }
  WeightSchedule s;
  s.n_ = g.size();
  auto pair = std::make_shared<const WeightPair>(std::move(wp));
  auto graph = std::make_shared<const Digraph>(std::move(g));
  s.graph_ = [graph](std::uint64_t) { return *graph; };
  s.weights_ = [pair](std::uint64_t) { return *pair; };
  return s;
}

WeightPair WeightSchedule::at(std::uint64_t k) const { return weights_(k); }

Digraph WeightSchedule::graph(std::uint64_t k) const { return graph_(k); }

}  // namespace tvab
