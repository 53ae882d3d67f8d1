#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace tvab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Regularized logistic loss over an agent's samples:
///   sum_j ln(1 + exp((-w'c_j + b) y_j)) + lambda/2 (|w|^2 + b^2)
/// with decision variable x = (w, b).
struct LogisticLocal {
  Matrix features;  // samples x (p - 1)
  Vector labels;    // entries in {-1, +1}
  double lambda = 1.0;
};

/// 1/2 |H x - b|^2
struct LeastSquaresLocal {
  Matrix H;
  Vector b;
};

/// 1/2 x'Qx - q'x with Q symmetric positive semidefinite.
struct QuadraticLocal {
  Matrix Q;
  Vector q;
};

using LocalObjective = std::variant<LogisticLocal, LeastSquaresLocal, QuadraticLocal>;

std::size_t dimension(const LocalObjective& f);
double value(const LocalObjective& f, const Vector& x);
Vector gradient(const LocalObjective& f, const Vector& x);
Matrix hessian(const LocalObjective& f, const Vector& x);
/// Lipschitz constant of the gradient.
double smoothness(const LocalObjective& f);

/// min_x (1/n) sum_i f_i(x), with the constants the analysis needs.
class Problem {
 public:
  Problem(std::vector<LocalObjective> locals, std::string family);

  std::size_t agents() const { return locals_.size(); }
  std::size_t dim() const { return p_; }
  const std::string& family() const { return family_; }
  const std::vector<LocalObjective>& locals() const { return locals_; }

  /// max_i ell_i
  double L() const { return L_; }
  /// Strong-convexity constant of the average objective.
  double mu() const { return mu_; }
  double ell(std::size_t i) const { return ell_.at(i); }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

  /// Throws std::domain_error when x has a non-finite entry.
  Vector local_gradient(std::size_t i, const Vector& x) const;
  /// Row i of the result is grad f_i evaluated at row i of X.
  Matrix stacked_gradient(const Matrix& X) const;

 private:
  std::vector<LocalObjective> locals_;
  std::string family_;
  std::size_t p_ = 0;
  std::vector<double> ell_;
  double L_ = 0.0;
  double mu_ = 0.0;
};

struct LogisticSpec {
  std::size_t agents = 4;
  std::size_t samples = 10;
  std::size_t dim = 6;  // feature count + 1 (bias)
  double lambda = 1.0;
  double feature_variance = 9.0;
  std::uint64_t seed = 1;
};

/// Gaussian features; labels Bernoulli with P(y = +1) = 1 / (1 + exp(t'c))
/// where c = (-features, 1) and the ground truth t is standard uniform.
Problem make_logistic_problem(const LogisticSpec& spec);

/// Each H_i is rows x p with rows < p (rank deficient); the sum of H_i'H_i is
/// redrawn until its smallest eigenvalue is at least 1e-6.
Problem make_least_squares_problem(std::size_t agents, std::size_t rows,
                                   std::size_t dim, std::uint64_t seed);

struct LineFitSpec {
  std::size_t agents = 10;
  std::size_t samples = 10;
  double slope = 1.5;
  double intercept = -0.5;
  double noise_std = 0.1;
  std::uint64_t seed = 1;
};

/// Least squares in (slope, intercept) from noisy samples of a line.
Problem make_line_fit_problem(const LineFitSpec& spec);

/// Random strongly convex quadratics: Q_i = G_i'G_i / p + 0.1 I.
Problem make_quadratic_problem(std::size_t agents, std::size_t dim, std::uint64_t seed);

/// Minimizer of the average objective with |grad f(x)| <= tol. Quadratic
/// families use the normal equations; logistic uses damped Newton. Throws
/// std::runtime_error when the tolerance is not met.
Vector solve_centralized(const Problem& problem, double tol = 1e-10);

/// A mu-strongly convex function with ell-Lipschitz gradient.
struct SmoothConvexFunction {
  std::function<Vector(const Vector&)> gradient;
  double mu = 0.0;
  double ell = 0.0;
};

struct StepContraction {
  double lhs = 0.0;  // |x+ - x*|
  double rhs = 0.0;  // chi |x - x*|
  double chi = 0.0;
  bool ok = false;
};

/// One gradient step x+ = x - zeta grad g(x) and the bound
/// |x+ - x*| <= max(|1 - zeta mu|, |1 - zeta ell|) |x - x*|.
/// Throws std::invalid_argument unless 0 < zeta < 2 / ell.
StepContraction gradient_step_contraction_check(const SmoothConvexFunction& g,
                                                double zeta, const Vector& x,
                                                const Vector& x_star);

void write_problem(std::ostream& out, const Problem& problem);
Problem read_problem(std::istream& in);

}  // namespace tvab
