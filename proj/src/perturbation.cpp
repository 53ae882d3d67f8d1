#include "tvab/perturbation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tvab {

namespace {

constexpr double kTiny = 1e-300;

double sqrt_n(const PerturbationSystem& s) { return std::sqrt(static_cast<double>(s.n)); }
double dn(const PerturbationSystem& s) { return static_cast<double>(s.n); }

// sum_{j=1}^{Cbar} e^{-jt}
double geometric_sum(double Cbar, double t) {
  if (t == 0.0) return Cbar;
  return -std::expm1(-Cbar * t) / std::expm1(t);
}

// I - G(t), with the near-cancelling diagonal entries formed directly.
Matrix3 complement(const PerturbationSystem& s, double t) {
  const double S1 = std::exp(-t);
  const double S = geometric_sum(s.Cbar, t);
  const double eta = s.eta;
  const double n = dn(s), rn = sqrt_n(s), L = s.L, m = s.m;
  Matrix3 P;
  P(0, 0) = -std::expm1(s.log_gamma_A - s.Cbar * t) - eta * s.Q_A * n * L * S;
  P(0, 1) = -eta * s.Q_A * n * L * S;
  P(0, 2) = -eta * s.Q_A * S;
  P(1, 0) = -eta * n * L * S1;
  P(1, 1) = -std::expm1(std::log1p(-eta * s.r_coeff) - t);
  P(1, 2) = -eta * rn * S1;
  P(2, 0) = -m * rn * (2.0 + eta * L) * S;
  P(2, 1) = -eta * m * n * L * S;
  P(2, 2) = -std::expm1(s.log_gamma_B - s.Cbar * t) - eta * m * S;
  return P;
}

// True when the selected principal submatrix of I - G(t) is a nonsingular
// M-matrix, i.e. every elimination pivot is positive.
bool below(const PerturbationSystem& s, const CoordinateMask& mask, double t) {
  Matrix3 P = complement(s, t);
  if (!P.allFinite()) return false;
  std::vector<int> idx;
  for (int i = 0; i < 3; ++i) {
    if (mask[static_cast<std::size_t>(i)]) idx.push_back(i);
  }
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const int k = idx[a];
    const double pivot = P(k, k);
    if (!(pivot > 0.0)) return false;
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const int i = idx[b];
      const double f = P(i, k) / pivot;
      for (std::size_t c = a + 1; c < idx.size(); ++c) {
        const int j = idx[c];
        P(i, j) -= f * P(k, j);
      }
    }
  }
  return true;
}

// Smallest t with pred(t), pred monotone (false below, true above).
template <class Pred>
double threshold(Pred pred) {
  double lo, hi;  // pred(lo) false, pred(hi) true, same sign
  if (pred(0.0)) {
    if (!pred(-kTiny)) return -0.5 * kTiny;
    hi = -kTiny;
    double mag = kTiny;
    for (;;) {
      mag *= 1e10;
      if (mag > 1e4) return -std::numeric_limits<double>::infinity();
      if (!pred(-mag)) break;
      hi = -mag;
    }
    lo = -mag;
  } else {
    double mag = kTiny;
    lo = 0.0;
    for (;;) {
      if (pred(mag)) break;
      lo = mag;
      mag *= 1e10;
      if (mag > 1e6) throw std::runtime_error("spectral radius beyond exp(1e6)");
    }
    hi = mag;
    if (lo == 0.0) lo = 0.0;
  }
  for (int it = 0; it < 400; ++it) {
    const double a = std::abs(lo), b = std::abs(hi);
    const double big = std::max(a, b), small = std::min(a, b);
    if (big - small <= 1e-14 * big) break;
    double mid;
    if (small > 0.0 && big > 2.0 * small) {
      mid = std::copysign(std::sqrt(small) * std::sqrt(big), hi + lo);
    } else {
      mid = 0.5 * (lo + hi);
    }
    if (mid == lo || mid == hi) break;
    if (pred(mid)) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

Matrix assemble(const PerturbationSystem& s, const Matrix3& B1, const Matrix3& B2,
                const Matrix3& BC, bool shift, std::size_t max_dim) {
  if (!(s.Cbar >= 2.0) || 3.0 * s.Cbar > static_cast<double>(max_dim)) {
    throw std::length_error("perturbation system too large to materialize (3 Cbar = " +
                            std::to_string(3.0 * s.Cbar) + ")");
  }
  const auto c = static_cast<Eigen::Index>(s.Cbar);
  Matrix M = Matrix::Zero(3 * c, 3 * c);
  M.block<3, 3>(0, 0) = B1;
  for (Eigen::Index j = 1; j + 1 < c; ++j) M.block<3, 3>(0, 3 * j) = B2;
  M.block<3, 3>(0, 3 * (c - 1)) = BC;
  if (shift) {
    for (Eigen::Index j = 1; j < c; ++j) M.block<3, 3>(3 * j, 3 * (j - 1)).setIdentity();
  }
  return M;
}

}  // namespace

Matrix3 PerturbationSystem::M1_0() const {
  Matrix3 M = Matrix3::Zero();
  M(1, 1) = 1.0;
  M(2, 0) = 2.0 * m * sqrt_n(*this);
  return M;
}

Matrix3 PerturbationSystem::M1_E() const {
  const double nn = dn(*this);
  Matrix3 M;
  M << Q_A * nn * L, Q_A * nn * L, Q_A,
       nn * L, -r_coeff, sqrt_n(*this),
       m * sqrt_n(*this) * L, m * nn * L, m;
  return M;
}

Matrix3 PerturbationSystem::M2_0() const {
  Matrix3 M = Matrix3::Zero();
  M(2, 0) = 2.0 * m * sqrt_n(*this);
  return M;
}

Matrix3 PerturbationSystem::M2_E() const {
  Matrix3 M = M1_E();
  M.row(1).setZero();
  return M;
}

Matrix3 PerturbationSystem::MC_0() const {
  Matrix3 M = Matrix3::Zero();
  M(0, 0) = std::exp(log_gamma_A);
  M(2, 0) = 2.0 * m * sqrt_n(*this);
  M(2, 2) = std::exp(log_gamma_B);
  return M;
}

Matrix3 PerturbationSystem::MC_E() const { return M2_E(); }

PerturbationSystem PerturbationSystem::with_eta(double e) const {
  PerturbationSystem s = *this;
  s.eta = e;
  return s;
}

Matrix PerturbationSystem::to_dense(std::size_t max_dim) const {
  return assemble(*this, M1(), M2(), MC(), true, max_dim);
}

Matrix PerturbationSystem::dense_M0(std::size_t max_dim) const {
  return assemble(*this, M1_0(), M2_0(), MC_0(), true, max_dim);
}

Matrix PerturbationSystem::dense_ME(std::size_t max_dim) const {
  return assemble(*this, M1_E(), M2_E(), MC_E(), false, max_dim);
}

PerturbationSystem build_M(const ContractionConstants& k, double mu, double eta) {
  if (!k.representable()) {
    std::ostringstream msg;
    msg << "constants overflow double precision (ln n^(nC) = " << k.log_n_pow_nC
        << ", ln m = " << k.log_m << ", ln Cbar = " << std::max(k.log_Cbar_A, k.log_Cbar_B)
        << "); use the log-domain fields of ContractionConstants";
    throw std::overflow_error(msg.str());
  }
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be nonnegative");
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be nonnegative");
  PerturbationSystem s;
  s.n = k.n;
  s.L = k.L;
  s.eta = eta;
  s.Cbar = std::max(k.Cbar, 2.0);
  s.Q_A = k.Q_A();
  s.m = k.m();
  s.log_gamma_A = k.log_gamma_A_common;
  s.log_gamma_B = k.log_gamma_B_common;
  s.r_coeff = mu * std::exp(-(k.log_n_pow_nC - std::log(static_cast<double>(k.n))));
  return s;
}

double log_spectral_radius(const PerturbationSystem& s, const CoordinateMask& mask) {
  if (!(s.Cbar >= 2.0)) throw std::invalid_argument("Cbar must be at least 2");
  if (!(mask[0] || mask[1] || mask[2])) throw std::invalid_argument("empty coordinate mask");
  return threshold([&](double t) { return below(s, mask, t); });
}

bool contracts(const PerturbationSystem& s) { return below(s, kAllCoordinates, 0.0); }

PowerIteration spectral_radius(const Matrix& M, double tol, int max_iter) {
  if (M.rows() != M.cols() || M.rows() == 0) throw std::invalid_argument("square matrix expected");
  if ((M.array() < 0.0).any()) throw std::invalid_argument("matrix has negative entries");
  PowerIteration out;
  // Right and left vectors together: the two-sided quotient w'Mx / w'x is
  // accurate to the product of the two residuals, not just one of them.
  Vector x = Vector::Ones(M.rows());
  Vector w = Vector::Ones(M.rows());
  double prev = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector y = M * x;
    const Vector z = M.transpose() * w;
    const double lam = w.dot(y) / w.dot(x);
    const double rx = (y - lam * x).cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff();
    const double rw = (z - lam * w).cwiseAbs().maxCoeff() / w.cwiseAbs().maxCoeff();
    out.residual = rx;
    out.rho = lam;
    out.iterations = it;
    const double scale = std::max(std::abs(lam), kTiny);
    if (std::max(rx, rw) <= tol * scale && std::abs(lam - prev) <= tol * scale) {
      out.vector = x / x.cwiseAbs().maxCoeff();
      return out;
    }
    if (y.isZero(0.0)) {  // nilpotent direction
      out.rho = 0.0;
      out.residual = 0.0;
      out.vector = x;
      return out;
    }
    prev = lam;
    x = (y + x) / (y + x).cwiseAbs().maxCoeff();
    w = (z + w) / (z + w).cwiseAbs().maxCoeff();
  }
  std::ostringstream msg;
  msg << "power iteration did not converge: residual " << out.residual << " after "
      << max_iter << " iterations";
  throw std::runtime_error(msg.str());
}

Lemma5Report verify_lemma5(const PerturbationSystem& sys, double simple_margin) {
  const PerturbationSystem s = sys.with_eta(0.0);
  Lemma5Report r;
  const Matrix3 B1 = s.M1_0(), B2 = s.M2_0(), BC = s.MC_0();
  const double mid = s.Cbar - 2.0;

  r.rho = std::exp(log_spectral_radius(s));
  r.rho_ok = std::abs(r.rho - 1.0) <= 1e-10;

  // M0 u: first block is the column-2 sum over the block row; the shifted
  // blocks reproduce e_2 exactly.
  const Eigen::Vector3d e2(0.0, 1.0, 0.0);
  const Eigen::Vector3d first = B1.col(1) + mid * B2.col(1) + BC.col(1);
  r.u_residual = (first - e2).cwiseAbs().maxCoeff();
  // w'M0 is row 2 of the first block row.
  r.w_residual = std::max({(B1.row(1) - e2.transpose()).cwiseAbs().maxCoeff(),
                           B2.row(1).cwiseAbs().maxCoeff(), BC.row(1).cwiseAbs().maxCoeff()});
  r.wu = e2.dot(e2);
  r.u_ok = r.u_residual <= 1e-12;
  r.w_ok = r.w_residual <= 1e-12;

  bool decoupled = true;
  for (const Matrix3* B : {&B1, &B2, &BC}) {
    decoupled = decoupled && (*B)(0, 1) == 0.0 && (*B)(2, 1) == 0.0 && (*B)(1, 0) == 0.0 &&
                (*B)(1, 2) == 0.0;
  }
  // Remaining r-roots are 0 when the r-chain is lambda^Cbar - a1 lambda^(Cbar-1).
  const bool r_chain_plain = B2(1, 1) == 0.0 && BC(1, 1) == 0.0 && B1(1, 1) == 1.0;
  if (decoupled && r_chain_plain) {
    r.log_deflated_radius = log_spectral_radius(s, {true, false, true});
    r.deflated_radius = std::exp(r.log_deflated_radius);
  } else {
    r.log_deflated_radius = 0.0;
    r.deflated_radius = 1.0;
  }
  r.simple_ok = r.deflated_radius < 1.0 - simple_margin;
  return r;
}

EtaThreshold eta_threshold(const PerturbationSystem& s) {
  EtaThreshold out;
  out.upper = 2.0 / (dn(s) * s.L);
  auto ok = [&](double eta) {
    ++out.probes;
    return contracts(s.with_eta(eta));
  };
  double hi = out.upper * (1.0 - 1e-12);
  if (ok(hi)) {
    out.eta_star = hi;
    return out;
  }
  double lo = hi;
  for (;;) {
    lo *= 0.5;
    if (lo < kTiny) {
      out.diagnostic = "rho(M(eta)) >= 1 at every probed eta down to 1e-300";
      return out;
    }
    if (ok(lo)) break;
    hi = lo;
  }
  while (hi > lo * (1.0 + 1e-8)) {
    const double mid = hi > 2.0 * lo ? std::sqrt(lo) * std::sqrt(hi) : 0.5 * (lo + hi);
    if (ok(mid)) lo = mid;
    else hi = mid;
  }
  out.eta_star = lo;
  return out;
}

DerivativeReport perturbation_derivative(const PerturbationSystem& s, double step) {
  DerivativeReport d;
  const PerturbationSystem s0 = s.with_eta(0.0);
  const Eigen::Vector3d e2(0.0, 1.0, 0.0);
  // w'ME u: row 2 of the first block row of ME, summed against u.
  d.wMEu = e2.dot(s0.M1_E() * e2 + (s0.Cbar - 2.0) * (s0.M2_E() * e2) + s0.MC_E() * e2);
  d.predicted = -s0.r_coeff;
  d.exact_ok = std::abs(d.wMEu - d.predicted) <= 1e-12 * std::max(1.0, std::abs(d.predicted));

  if (step <= 0.0) {
    const EtaThreshold th = eta_threshold(s0);
    step = th.eta_star > 0.0 ? std::min(1e-6, 1e-3 * th.eta_star) : 1e-6;
  }
  d.step = step;
  const double l0 = log_spectral_radius(s0);
  const double lh = log_spectral_radius(s0.with_eta(step));
  d.fd_slope = (std::expm1(lh) - std::expm1(l0)) / step;
  d.fd_ok = d.predicted != 0.0 ? std::abs(d.fd_slope - d.predicted) <= 0.05 * std::abs(d.predicted)
                               : std::abs(d.fd_slope) <= 1e-12;
  return d;
}

}  // namespace tvab
