#pragma once

#include <Eigen/Dense>
#include <functional>

#include "tvab/graphs.hpp"

namespace tvab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Mixing weights of one iteration: A row-stochastic, B column-stochastic,
/// both supported on the active digraph.
struct WeightPair {
  Matrix A;
  Matrix B;
};

/// [A]_{ij} = 1 / d_in(i) and [B]_{ij} = 1 / d_out(j) on the edge set, with
/// degrees counting the self-loop. Throws std::invalid_argument when a
/// self-loop is missing.
WeightPair uniform_weights(const Digraph& g);

struct WeightDiagnostics {
  double alpha_hat = 0.0;  // smallest supported entry of A
  double beta_hat = 0.0;   // smallest supported entry of B
  double row_err = 0.0;    // max |row sum of A - 1|
  double col_err = 0.0;    // max |column sum of B - 1|
  bool pattern_ok = false;
  bool diag_ok = false;
  bool nonnegative = false;

  bool ok(double tol = 1e-12) const {
    return row_err <= tol && col_err <= tol && pattern_ok && diag_ok && nonnegative;
  }
};

WeightDiagnostics validate_weights(const WeightPair& wp, const Digraph& g);

/// Source of the per-iteration weight pairs used by the optimizer and the
/// analysis. Either derived from a graph sequence with the uniform rule, or a
/// fixed user-supplied pair.
class WeightSchedule {
 public:
  static WeightSchedule uniform(GraphSequence seq);
  /// Fixed pair; `g` is its support and is validated against it.
  static WeightSchedule fixed(WeightPair wp, Digraph g);

  std::size_t size() const { return n_; }
  WeightPair at(std::uint64_t k) const;
  Digraph graph(std::uint64_t k) const;

 private:
  WeightSchedule() = default;

  std::size_t n_ = 0;
  std::function<Digraph(std::uint64_t)> graph_;
  std::function<WeightPair(std::uint64_t)> weights_;
};

}  // namespace tvab
