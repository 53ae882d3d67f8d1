#include "tvab/objectives.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tvab/random.hpp"

namespace tvab {

namespace {

constexpr std::uint64_t kLogisticSalt = 0x51;
constexpr std::uint64_t kTruthSalt = 0x52;
constexpr std::uint64_t kLeastSquaresSalt = 0x53;
constexpr std::uint64_t kLineSalt = 0x54;
constexpr std::uint64_t kQuadraticSalt = 0x55;

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Rows y_j * (-c_j, 1): the loss is sum_j softplus(row_j . x).
Matrix signed_design(const LogisticLocal& f) {
  const auto m = f.features.rows();
  const auto d = f.features.cols();
  Matrix a(m, d + 1);
  a.leftCols(d) = -f.features;
  a.col(d).setOnes();
  return f.labels.asDiagonal() * a;
}

double max_eigenvalue(const Matrix& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Constant matrix bounding the Hessian from below.
Matrix curvature_floor(const LocalObjective& f, std::size_t p) {
  struct {
    std::size_t p;
    Matrix operator()(const LogisticLocal& l) const {
      return l.lambda * Matrix::Identity(static_cast<Eigen::Index>(p),
                                         static_cast<Eigen::Index>(p));
    }
    Matrix operator()(const LeastSquaresLocal& l) const { return l.H.transpose() * l.H; }
    Matrix operator()(const QuadraticLocal& l) const { return l.Q; }
  } visitor{p};
  return std::visit(visitor, f);
}

void require_finite(const Vector& x) {
  if (!x.allFinite()) throw std::domain_error("gradient requested at a non-finite point");
}

}  // namespace

std::size_t dimension(const LocalObjective& f) {
  struct {
    std::size_t operator()(const LogisticLocal& l) const {
      return static_cast<std::size_t>(l.features.cols()) + 1;
    }
    std::size_t operator()(const LeastSquaresLocal& l) const {
      return static_cast<std::size_t>(l.H.cols());
    }
    std::size_t operator()(const QuadraticLocal& l) const {
      return static_cast<std::size_t>(l.Q.cols());
    }
  } visitor;
  return std::visit(visitor, f);
}

double value(const LocalObjective& f, const Vector& x) {
  struct {
    const Vector& x;
    double operator()(const LogisticLocal& l) const {
      const Vector z = signed_design(l) * x;
      double s = 0.0;
      for (Eigen::Index j = 0; j < z.size(); ++j) s += softplus(z(j));
      return s + 0.5 * l.lambda * x.squaredNorm();
    }
    double operator()(const LeastSquaresLocal& l) const {
      return 0.5 * (l.H * x - l.b).squaredNorm();
    }
    double operator()(const QuadraticLocal& l) const {
      return 0.5 * x.dot(l.Q * x) - l.q.dot(x);
    }
  } visitor{x};
  return std::visit(visitor, f);
}

Vector gradient(const LocalObjective& f, const Vector& x) {
  struct {
    const Vector& x;
    Vector operator()(const LogisticLocal& l) const {
      const Matrix a = signed_design(l);
      Vector s = a * x;
      for (Eigen::Index j = 0; j < s.size(); ++j) s(j) = sigmoid(s(j));
      return a.transpose() * s + l.lambda * x;
    }
    Vector operator()(const LeastSquaresLocal& l) const {
      return l.H.transpose() * (l.H * x - l.b);
    }
    Vector operator()(const QuadraticLocal& l) const { return l.Q * x - l.q; }
  } visitor{x};
  return std::visit(visitor, f);
}

Matrix hessian(const LocalObjective& f, const Vector& x) {
  struct {
    const Vector& x;
    Matrix operator()(const LogisticLocal& l) const {
      const Matrix a = signed_design(l);
      Vector w = a * x;
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        const double s = sigmoid(w(j));
        w(j) = s * (1.0 - s);
      }
      Matrix h = a.transpose() * w.asDiagonal() * a;
      h.diagonal().array() += l.lambda;
      return h;
    }
    Matrix operator()(const LeastSquaresLocal& l) const { return l.H.transpose() * l.H; }
    Matrix operator()(const QuadraticLocal& l) const { return l.Q; }
  } visitor{x};
  return std::visit(visitor, f);
}

double smoothness(const LocalObjective& f) {
  struct {
    double operator()(const LogisticLocal& l) const {
      const Matrix a = signed_design(l);
      return l.lambda + 0.25 * max_eigenvalue(a.transpose() * a);
    }
    double operator()(const LeastSquaresLocal& l) const {
      return max_eigenvalue(l.H.transpose() * l.H);
    }
    double operator()(const QuadraticLocal& l) const { return max_eigenvalue(l.Q); }
  } visitor;
  return std::visit(visitor, f);
}

// --- Problem ----------------------------------------------------------------

Problem::Problem(std::vector<LocalObjective> locals, std::string family)
    : locals_(std::move(locals)), family_(std::move(family)) {
  if (locals_.empty()) throw std::invalid_argument("problem needs at least one agent");
  p_ = dimension(locals_.front());
  if (p_ == 0) throw std::invalid_argument("decision dimension must be positive");
  const auto p = static_cast<Eigen::Index>(p_);
  Matrix floor = Matrix::Zero(p, p);
  for (const LocalObjective& f : locals_) {
    if (dimension(f) != p_) throw std::invalid_argument("local objectives disagree on dimension");
    const double l = smoothness(f);
    ell_.push_back(l);
    L_ = std::max(L_, l);
    floor += curvature_floor(f, p_);
  }
  floor /= static_cast<double>(locals_.size());
  mu_ = min_eigenvalue(floor);
  if (!(mu_ > 0.0)) {
    throw std::invalid_argument("average objective is not strongly convex");
  }
}

double Problem::value(const Vector& x) const {
  double s = 0.0;
  for (const LocalObjective& f : locals_) s += tvab::value(f, x);
  return s / static_cast<double>(locals_.size());
}

Vector Problem::gradient(const Vector& x) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(p_));
  for (const LocalObjective& f : locals_) g += tvab::gradient(f, x);
  return g / static_cast<double>(locals_.size());
}

Matrix Problem::hessian(const Vector& x) const {
  const auto p = static_cast<Eigen::Index>(p_);
  Matrix h = Matrix::Zero(p, p);
  for (const LocalObjective& f : locals_) h += tvab::hessian(f, x);
  return h / static_cast<double>(locals_.size());
}

Vector Problem::local_gradient(std::size_t i, const Vector& x) const {
  require_finite(x);
  return tvab::gradient(locals_.at(i), x);
}

Matrix Problem::stacked_gradient(const Matrix& X) const {
  Matrix G(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    G.row(i) = local_gradient(static_cast<std::size_t>(i), X.row(i).transpose()).transpose();
  }
  return G;
}

// --- generators ---------------------------------------------------------------

Problem make_logistic_problem(const LogisticSpec& spec) {
  if (spec.agents == 0 || spec.samples == 0 || spec.dim < 1) {
    throw std::invalid_argument("logistic problem needs positive sizes");
  }
  if (!(spec.lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const auto d = static_cast<Eigen::Index>(spec.dim - 1);
  const auto m = static_cast<Eigen::Index>(spec.samples);

  auto truth_rng = stream_rng(spec.seed, 0, kTruthSalt);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector truth(d + 1);
  for (Eigen::Index j = 0; j <= d; ++j) truth(j) = unif(truth_rng);

  std::vector<LocalObjective> locals;
  for (std::size_t i = 0; i < spec.agents; ++i) {
    auto rng = stream_rng(spec.seed, i, kLogisticSalt);
    std::normal_distribution<double> feature(0.0, std::sqrt(spec.feature_variance));
    LogisticLocal f{Matrix(m, d), Vector(m), spec.lambda};
    for (Eigen::Index s = 0; s < m; ++s) {
      for (Eigen::Index j = 0; j < d; ++j) f.features(s, j) = feature(rng);
      Vector c(d + 1);
      c.head(d) = -f.features.row(s).transpose();
      c(d) = 1.0;
      const double p_plus = 1.0 / (1.0 + std::exp(truth.dot(c)));
      f.labels(s) = unif(rng) < p_plus ? 1.0 : -1.0;
    }
    locals.emplace_back(std::move(f));
  }
  return Problem(std::move(locals), "logistic");
}

Problem make_least_squares_problem(std::size_t agents, std::size_t rows,
                                   std::size_t dim, std::uint64_t seed) {
  if (agents == 0 || rows == 0 || dim == 0) {
    throw std::invalid_argument("least-squares problem needs positive sizes");
  }
  if (rows >= dim) {
    throw std::invalid_argument("rows per agent must be below the dimension (rank deficiency)");
  }
  if (agents * rows < dim) {
    throw std::invalid_argument("infeasible: agents * rows < dim, sum of H_i'H_i is singular");
  }
  const auto p = static_cast<Eigen::Index>(dim);
  const auto r = static_cast<Eigen::Index>(rows);
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    std::vector<LocalObjective> locals;
    Matrix gram = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < agents; ++i) {
      auto rng = stream_rng(seed, i, kLeastSquaresSalt + 0x100 * attempt);
      std::normal_distribution<double> normal(0.0, 1.0);
      LeastSquaresLocal f{Matrix(r, p), Vector(r)};
      for (Eigen::Index a = 0; a < r; ++a) {
        for (Eigen::Index b = 0; b < p; ++b) f.H(a, b) = normal(rng);
        f.b(a) = normal(rng);
      }
      gram += f.H.transpose() * f.H;
      locals.emplace_back(std::move(f));
    }
    if (min_eigenvalue(gram) >= 1e-6) return Problem(std::move(locals), "least_squares");
  }
  throw std::runtime_error("could not draw an invertible normal matrix");
}

Problem make_line_fit_problem(const LineFitSpec& spec) {
  if (spec.agents == 0 || spec.samples == 0) {
    throw std::invalid_argument("line fit needs positive sizes");
  }
  std::vector<LocalObjective> locals;
  const auto m = static_cast<Eigen::Index>(spec.samples);
  for (std::size_t i = 0; i < spec.agents; ++i) {
    auto rng = stream_rng(spec.seed, i, kLineSalt);
    std::uniform_real_distribution<double> abscissa(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    LeastSquaresLocal f{Matrix(m, 2), Vector(m)};
    for (Eigen::Index s = 0; s < m; ++s) {
      const double t = abscissa(rng);
      f.H(s, 0) = t;
      f.H(s, 1) = 1.0;
      f.b(s) = spec.slope * t + spec.intercept + noise(rng);
    }
    locals.emplace_back(std::move(f));
  }
  return Problem(std::move(locals), "line_fit");
}

Problem make_quadratic_problem(std::size_t agents, std::size_t dim, std::uint64_t seed) {
  if (agents == 0 || dim == 0) throw std::invalid_argument("quadratic needs positive sizes");
  const auto p = static_cast<Eigen::Index>(dim);
  std::vector<LocalObjective> locals;
  for (std::size_t i = 0; i < agents; ++i) {
    auto rng = stream_rng(seed, i, kQuadraticSalt);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix G(p, p);
    Vector q(p);
    for (Eigen::Index a = 0; a < p; ++a) {
      for (Eigen::Index b = 0; b < p; ++b) G(a, b) = normal(rng);
      q(a) = normal(rng);
    }
    Matrix Q = G.transpose() * G / static_cast<double>(p);
    Q.diagonal().array() += 0.1;
    locals.emplace_back(QuadraticLocal{Q, q});
  }
  return Problem(std::move(locals), "quadratic");
}

Vector solve_centralized(const Problem& problem, double tol) {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(problem.dim()));
  Vector g = problem.gradient(x);
  double fx = problem.value(x);
  for (int it = 0; it < 200 && g.norm() > tol; ++it) {
    const Vector step = problem.hessian(x).ldlt().solve(g);
    // Armijo backtracking; quadratic families accept the full step.
    double t = 1.0;
    Vector trial = x - step;
    double ft = problem.value(trial);
    while (ft > fx - 1e-4 * t * g.dot(step) && t > 1e-10) {
      t *= 0.5;
      trial = x - t * step;
      ft = problem.value(trial);
    }
    if (ft > fx && t <= 1e-10) {
      // Rounding floor of the objective: take the Newton step anyway.
      trial = x - step;
      ft = problem.value(trial);
    }
    x = trial;
    fx = ft;
    g = problem.gradient(x);
  }
  if (!(g.norm() <= tol)) {
    std::ostringstream msg;
    msg << "centralized solver stopped at gradient norm " << g.norm() << " > " << tol;
    throw std::runtime_error(msg.str());
  }
  return x;
}

StepContraction gradient_step_contraction_check(const SmoothConvexFunction& g,
                                                double zeta, const Vector& x,
                                                const Vector& x_star) {
  if (!(zeta > 0.0 && zeta < 2.0 / g.ell)) {
    throw std::invalid_argument("step must lie in (0, 2/ell)");
  }
  const Vector x_next = x - zeta * g.gradient(x);
  StepContraction out;
  out.chi = std::max(std::abs(1.0 - zeta * g.mu), std::abs(1.0 - zeta * g.ell));
  out.lhs = (x_next - x_star).norm();
  out.rhs = out.chi * (x - x_star).norm();
  out.ok = out.lhs <= out.rhs + 1e-12;
  return out;
}

// --- serialization ---------------------------------------------------------------

namespace {

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (j ? " " : "") << m(i, j);
    }
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw std::runtime_error("problem file: bad matrix header");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) throw std::runtime_error("problem file: truncated matrix");
    }
  }
  return m;
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) {
    throw std::runtime_error("problem file: expected '" + word + "', got '" + got + "'");
  }
}

}  // namespace

void write_problem(std::ostream& out, const Problem& problem) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  out << "tvab-problem 1\n";
  out << "family " << problem.family() << '\n';
  out << "agents " << problem.agents() << '\n';
  out << "dim " << problem.dim() << '\n';
  for (std::size_t i = 0; i < problem.agents(); ++i) {
    struct {
      std::ostream& out;
      void operator()(const LogisticLocal& l) const {
        out << "logistic " << l.lambda << '\n';
        write_matrix(out, l.features);
        write_matrix(out, Matrix(l.labels));
      }
      void operator()(const LeastSquaresLocal& l) const {
        out << "least_squares\n";
        write_matrix(out, l.H);
        write_matrix(out, Matrix(l.b));
      }
      void operator()(const QuadraticLocal& l) const {
        out << "quadratic\n";
        write_matrix(out, l.Q);
        write_matrix(out, Matrix(l.q));
      }
    } visitor{out};
    out << "local " << i << ' ';
    std::visit(visitor, problem.locals()[i]);
  }
  out.flags(flags);
  out.precision(precision);
}

Problem read_problem(std::istream& in) {
  expect(in, "tvab-problem");
  int version = 0;
  if (!(in >> version) || version != 1) throw std::runtime_error("problem file: unsupported version");
  std::string family;
  expect(in, "family");
  in >> family;
  std::size_t agents = 0;
  std::size_t dim = 0;
  expect(in, "agents");
  in >> agents;
  expect(in, "dim");
  in >> dim;
  std::vector<LocalObjective> locals;
  for (std::size_t i = 0; i < agents; ++i) {
    expect(in, "local");
    std::size_t index = 0;
    std::string kind;
    if (!(in >> index >> kind) || index != i) throw std::runtime_error("problem file: bad local header");
    if (kind == "logistic") {
      double lambda = 0.0;
      in >> lambda;
      Matrix features = read_matrix(in);
      Matrix labels = read_matrix(in);
      locals.emplace_back(LogisticLocal{features, labels.col(0), lambda});
    } else if (kind == "least_squares") {
      Matrix H = read_matrix(in);
      Matrix b = read_matrix(in);
      locals.emplace_back(LeastSquaresLocal{H, b.col(0)});
    } else if (kind == "quadratic") {
      Matrix Q = read_matrix(in);
      Matrix q = read_matrix(in);
      locals.emplace_back(QuadraticLocal{Q, q.col(0)});
    } else {
      throw std::runtime_error("problem file: unknown local kind '" + kind + "'");
    }
  }
  Problem p(std::move(locals), family);
  if (p.dim() != dim) throw std::runtime_error("problem file: dimension mismatch");
  return p;
}

}  // namespace tvab
