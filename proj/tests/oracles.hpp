#pragma once
// Reference computations for the tests. Deliberately naive: loops over
// explicit edge lists and dense matrices, no calls into the library code
// under test beyond plain data accessors.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Edge (to, from): `from` sends to `to`. Self-loops are expected in `links`.
inline std::pair<Mat, Mat> uniform_weights(int n, const std::vector<std::pair<int, int>>& links) {
  Mat A = Mat::Zero(n, n), B = Mat::Zero(n, n);
  std::vector<int> din(n, 0), dout(n, 0);
  for (auto [to, from] : links) {
    ++din[to];
    ++dout[from];
  }
  for (auto [to, from] : links) {
    A(to, from) = 1.0 / din[to];
    B(to, from) = 1.0 / dout[from];
  }
  return {A, B};
}

// Warshall transitive closure.
inline bool strongly_connected(int n, const std::vector<std::pair<int, int>>& links) {
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) r[i][i] = true;
  for (auto [to, from] : links) r[from][to] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (r[i][k] && r[k][j]) r[i][j] = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!r[i][j]) return false;
  return true;
}

// Central differences with step 1e-6 (1 + |x_j|).
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x(j)));
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

// Q = 2n (1 + a^-nC) / (1 - a^nC)
inline long double contraction_Q(int n, int C, long double a) {
  const long double p = std::pow(a, static_cast<long double>(n * C));
  return 2.0L * n * (1.0L + 1.0L / p) / (1.0L - p);
}

// Smallest integer Cbar >= C with Q (1 - a^nC)^((Cbar - 1)/(nC)) < 1, by
// walking up one integer at a time.
inline long long smallest_Cbar(int n, int C, long double a) {
  const long double Q = contraction_Q(n, C, a);
  const long double base = 1.0L - std::pow(a, static_cast<long double>(n * C));
  for (long long c = C;; ++c) {
    if (Q * std::pow(base, static_cast<long double>(c - 1) / (n * C)) < 1.0L) return c;
  }
}

// The displayed blocks of the perturbed system.
struct Blocks {
  Eigen::Matrix3d M1, M2, MC;
};

inline Blocks blocks(double n, double L, double mu, double eta, double QA, double m, double gA,
                     double gB, double nC) {
  const double sn = std::sqrt(n);
  Blocks b;
  b.M1 << eta * QA * n * L, eta * QA * n * L, eta * QA,  //
      eta * n * L, 1 - eta * mu / std::pow(n, nC - 1), eta * sn,  //
      m * sn * (2 + eta * L), eta * m * n * L, eta * m;
  b.M2 << eta * QA * n * L, eta * QA * n * L, eta * QA,  //
      0, 0, 0,  //
      m * sn * (2 + eta * L), eta * m * n * L, eta * m;
  b.MC << gA + eta * QA * n * L, eta * QA * n * L, eta * QA,  //
      0, 0, 0,  //
      m * sn * (2 + eta * L), eta * m * n * L, gB + eta * m;
  return b;
}

inline Mat companion(const Blocks& b, int Cbar) {
  Mat M = Mat::Zero(3 * Cbar, 3 * Cbar);
  M.block(0, 0, 3, 3) = b.M1;
  for (int j = 1; j + 1 < Cbar; ++j) M.block(0, 3 * j, 3, 3) = b.M2;
  M.block(0, 3 * (Cbar - 1), 3, 3) = b.MC;
  for (int j = 1; j < Cbar; ++j) M.block(3 * j, 3 * (j - 1), 3, 3) = Eigen::Matrix3d::Identity();
  return M;
}

inline std::vector<std::complex<double>> eigenvalues(const Mat& M) {
  Eigen::EigenSolver<Mat> es(M, false);
  std::vector<std::complex<double>> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

inline double spectral_radius(const Mat& M) {
  double r = 0.0;
  for (auto l : eigenvalues(M)) r = std::max(r, std::abs(l));
  return r;
}

// Left Perron vector of a row-stochastic matrix, normalized to sum 1.
inline Vec stationary_left(const Mat& A) {
  Eigen::EigenSolver<Mat> es(A.transpose());
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()(i) - 1.0) < std::abs(es.eigenvalues()(best) - 1.0)) best = i;
  }
  Vec v = es.eigenvectors().col(best).real();
  return v / v.sum();
}

// Least squares slope of ys against xs.
inline double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - sx / n) * (xs[i] - sx / n);
    sxy += (xs[i] - sx / n) * (ys[i] - sy / n);
  }
  return sxy / sxx;
}

}  // namespace oracle
