#include "tvab/optimizer.hpp"

#include <cmath>
#include <random>

#include "tvab/random.hpp"

namespace tvab {

namespace {

constexpr std::uint64_t kInitSalt = 0x71;

bool diverged(const Matrix& m) {
  if (!m.allFinite()) return true;
  return m.size() > 0 && m.cwiseAbs().maxCoeff() > kDivergenceThreshold;
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kTvab: return "tvab";
    case Method::kPushDiging: return "push_diging";
    case Method::kSubgradientPushConst: return "subgradient_push_const";
    case Method::kSubgradientPushDimin: return "subgradient_push_dimin";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kTvab, Method::kPushDiging, Method::kSubgradientPushConst,
                   Method::kSubgradientPushDimin}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

DivergenceError::DivergenceError(std::string method, std::uint64_t iteration)
    : std::runtime_error(method + " diverged at iteration " + std::to_string(iteration)),
      iteration_(iteration) {}

NetworkState initial_state(const Problem& problem, const Matrix& x0) {
  if (x0.rows() != static_cast<Eigen::Index>(problem.agents()) ||
      x0.cols() != static_cast<Eigen::Index>(problem.dim())) {
    throw std::invalid_argument("initial point has the wrong shape");
  }
  NetworkState s;
  s.x = x0;
  s.grad = problem.stacked_gradient(x0);
  s.y = s.grad;
  return s;
}

NetworkState tvab_step(const NetworkState& state, const WeightPair& wp,
                       const Problem& problem, double eta) {
  NetworkState next;
  next.k = state.k + 1;
  next.x.noalias() = wp.A * state.x;
  next.x -= eta * state.y;
  if (diverged(next.x)) throw DivergenceError("tvab", next.k);
  next.grad = problem.stacked_gradient(next.x);
  next.y.noalias() = wp.B * state.y;
  next.y += next.grad - state.grad;
  if (diverged(next.y)) throw DivergenceError("tvab", next.k);
  return next;
}

PushSumState push_sum_initial(const Problem& problem, const Matrix& x0) {
  PushSumState s;
  s.numerator = x0;
  s.mass = Vector::Ones(x0.rows());
  s.x = x0;
  s.grad = problem.stacked_gradient(x0);
  s.tracker = s.grad;
  return s;
}

PushSumState baseline_subgradient_push_step(const PushSumState& s, const Matrix& B,
                                            const Problem& problem, double step) {
  PushSumState next;
  next.k = s.k + 1;
  const Matrix w = B * s.numerator;
  next.mass = B * s.mass;
  if ((next.mass.array() <= 0.0).any()) {
    throw std::runtime_error("subgradient-push: zero push-sum mass");
  }
  next.x = next.mass.cwiseInverse().asDiagonal() * w;
  if (diverged(next.x)) throw DivergenceError("subgradient_push", next.k);
  next.grad = problem.stacked_gradient(next.x);
  next.numerator = w - step * next.grad;
  next.tracker = next.grad;
  return next;
}

PushSumState baseline_push_diging_step(const PushSumState& s, const Matrix& B,
                                       const Problem& problem, double eta) {
  PushSumState next;
  next.k = s.k + 1;
  next.numerator = B * (s.numerator - eta * s.tracker);
  next.mass = B * s.mass;
  if ((next.mass.array() <= 0.0).any()) {
    throw std::runtime_error("push-diging: zero push-sum mass");
  }
  next.x = next.mass.cwiseInverse().asDiagonal() * next.numerator;
  if (diverged(next.x)) throw DivergenceError("push_diging", next.k);
  next.grad = problem.stacked_gradient(next.x);
  next.tracker = B * s.tracker + next.grad - s.grad;
  if (diverged(next.tracker)) throw DivergenceError("push_diging", next.k);
  return next;
}

double residual(const Matrix& x, const Vector& x_star) {
  if (x.cols() != x_star.size()) throw std::invalid_argument("residual: dimension mismatch");
  return (x.rowwise() - x_star.transpose()).rowwise().norm().mean();
}

std::string_view init_policy_name(InitPolicy p) {
  switch (p) {
    case InitPolicy::kGaussianVar9: return "gaussian9";
    case InitPolicy::kStandardGaussian: return "gaussian";
    case InitPolicy::kZeros: return "zeros";
  }
  return "unknown";
}

InitPolicy parse_init_policy(std::string_view name) {
  for (InitPolicy p : {InitPolicy::kGaussianVar9, InitPolicy::kStandardGaussian, InitPolicy::kZeros}) {
    if (init_policy_name(p) == name) return p;
  }
  throw std::invalid_argument("unknown x0 policy '" + std::string(name) + "'");
}

Matrix initial_points(std::size_t n, std::size_t p, InitPolicy policy, std::uint64_t seed) {
  Matrix x0 = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  if (policy == InitPolicy::kZeros) return x0;
  const double sd = policy == InitPolicy::kGaussianVar9 ? 3.0 : 1.0;
  auto rng = stream_rng(seed, 0, kInitSalt);
  std::normal_distribution<double> normal(0.0, sd);
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    for (Eigen::Index j = 0; j < x0.cols(); ++j) x0(i, j) = normal(rng);
  }
  return x0;
}

RunTrace run(const Problem& problem, const WeightSchedule& weights, const Vector& x_star,
             double eta, std::size_t K, const Matrix& x0, Method method,
             const RunOptions& options) {
  if (!(eta >= 0.0)) throw std::invalid_argument("step size must be nonnegative");
  if (weights.size() != problem.agents()) {
    throw std::invalid_argument("weight schedule and problem disagree on agent count");
  }
  RunTrace trace;
  trace.method = method;
  trace.eta = eta;
  trace.residuals.reserve(K + 1);

  if (method == Method::kTvab) {
    NetworkState s = initial_state(problem, x0);
    double scale = 0.0;
    auto conservation = [&](const NetworkState& st) {
      scale = std::max({scale, st.grad.norm(), 1e-300});
      const double gap = (st.y.colwise().sum() - st.grad.colwise().sum()).norm();
      trace.max_conservation_error = std::max(trace.max_conservation_error, gap / scale);
    };
    trace.residuals.push_back(residual(s.x, x_star));
    conservation(s);
    if (options.keep_states) trace.states.push_back(s);
    for (std::size_t k = 0; k < K; ++k) {
      s = tvab_step(s, weights.at(k), problem, eta);
      trace.residuals.push_back(residual(s.x, x_star));
      conservation(s);
      if (options.keep_states) trace.states.push_back(s);
    }
    return trace;
  }

  PushSumState s = push_sum_initial(problem, x0);
  trace.residuals.push_back(residual(s.x, x_star));
  for (std::size_t k = 0; k < K; ++k) {
    const Matrix B = weights.at(k).B;
    switch (method) {
      case Method::kPushDiging:
        s = baseline_push_diging_step(s, B, problem, eta);
        break;
      case Method::kSubgradientPushConst:
        s = baseline_subgradient_push_step(s, B, problem, eta);
        break;
      case Method::kSubgradientPushDimin:
        s = baseline_subgradient_push_step(s, B, problem,
                                           eta / std::sqrt(static_cast<double>(k + 1)));
        break;
      case Method::kTvab:
        break;
    }
    trace.residuals.push_back(residual(s.x, x_star));
  }
  return trace;
}

}  // namespace tvab
