#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tvab/objectives.hpp"
#include "tvab/weights.hpp"

namespace tvab {

enum class Method { kTvab, kPushDiging, kSubgradientPushConst, kSubgradientPushDimin };

std::string_view method_name(Method m);
/// Accepts the names produced by method_name(). Throws std::invalid_argument.
Method parse_method(std::string_view name);

/// Thrown when an iterate blows past the divergence threshold.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string method, std::uint64_t iteration);
  std::uint64_t iteration() const { return iteration_; }

 private:
  std::uint64_t iteration_;
};

inline constexpr double kDivergenceThreshold = 1e12;

/// Stacked agent states at iteration k; row i belongs to agent i.
struct NetworkState {
  std::uint64_t k = 0;
  Matrix x;
  Matrix y;
  /// grad f_i(x_k^i). The next transition subtracts it from the fresh
  /// gradient to form z_{k+1}.
  Matrix grad;
};

/// x_0 as given, y_0 = grad f(x_0).
NetworkState initial_state(const Problem& problem, const Matrix& x0);

/// x_{k+1} = A x_k - eta y_k;  y_{k+1} = B y_k + grad f(x_{k+1}) - grad f(x_k).
NetworkState tvab_step(const NetworkState& state, const WeightPair& wp,
                       const Problem& problem, double eta);

/// State of the push-sum baselines (column-stochastic weights only).
struct PushSumState {
  std::uint64_t k = 0;
  Matrix numerator;  // push-sum numerators
  Vector mass;       // push-sum weights, starts at 1
  Matrix x;          // de-biased estimates numerator / mass
  Matrix tracker;    // gradient tracker (Push-DIGing only)
  Matrix grad;       // grad f(x_k)
};

PushSumState push_sum_initial(const Problem& problem, const Matrix& x0);

/// w = B u, mass' = B mass, x' = w / mass', u' = w - step grad f(x').
PushSumState baseline_subgradient_push_step(const PushSumState& s, const Matrix& B,
                                            const Problem& problem, double step);

/// u' = B (u - eta g), mass' = B mass, x' = u' / mass',
/// g' = B g + grad f(x') - grad f(x).
PushSumState baseline_push_diging_step(const PushSumState& s, const Matrix& B,
                                       const Problem& problem, double eta);

/// (1/n) sum_i |x^i - x*|
double residual(const Matrix& x, const Vector& x_star);

enum class InitPolicy { kGaussianVar9, kStandardGaussian, kZeros };

std::string_view init_policy_name(InitPolicy p);
InitPolicy parse_init_policy(std::string_view name);
Matrix initial_points(std::size_t n, std::size_t p, InitPolicy policy, std::uint64_t seed);

struct RunOptions {
  bool keep_states = false;
};

struct RunTrace {
  Method method = Method::kTvab;
  double eta = 0.0;
  std::vector<double> residuals;  // length K + 1
  std::vector<NetworkState> states;  // TV-AB only, when keep_states
  /// max_k |sum_i y_k^i - sum_i grad f_i(x_k^i)| / gradient scale (TV-AB).
  double max_conservation_error = 0.0;
};

RunTrace run(const Problem& problem, const WeightSchedule& weights, const Vector& x_star,
             double eta, std::size_t K, const Matrix& x0, Method method,
             const RunOptions& options = {});

}  // namespace tvab
