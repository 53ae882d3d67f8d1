#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>

#include "tvab/constants.hpp"
#include "tvab/weights.hpp"

namespace tvab {

using Matrix3 = Eigen::Matrix3d;

/// M(eta) = M0 + eta ME, a 3Cbar x 3Cbar block companion matrix whose first
/// block row is [M1, M2, ..., M2, M_Cbar] and whose sub-diagonal blocks are
/// identities. Coordinates of each block are (|x~w|, |r|, |s~w|).
///
/// Cbar reaches 1e25 for n = 3, C = 2, so the matrix is never formed unless
/// asked for (to_dense). The near-one diagonal entries gamma_A, gamma_B and
/// 1 - eta mu / n^(nC-1) are kept in log form.
struct PerturbationSystem {
  std::size_t n = 0;
  double L = 0.0;
  double eta = 0.0;
  double Cbar = 0.0;  // number of blocks, >= 2
  double Q_A = 0.0;
  double m = 0.0;
  double log_gamma_A = 0.0;
  double log_gamma_B = 0.0;
  double r_coeff = 0.0;  // mu / n^(nC-1)

  Matrix3 M1_0() const;
  Matrix3 M1_E() const;
  Matrix3 M2_0() const;
  Matrix3 M2_E() const;
  Matrix3 MC_0() const;
  Matrix3 MC_E() const;
  Matrix3 M1() const { return M1_0() + eta * M1_E(); }
  Matrix3 M2() const { return M2_0() + eta * M2_E(); }
  Matrix3 MC() const { return MC_0() + eta * MC_E(); }

  PerturbationSystem with_eta(double e) const;

  /// Dense M(eta). Throws std::length_error when 3 Cbar exceeds max_dim.
  Matrix to_dense(std::size_t max_dim = 4096) const;
  Matrix dense_M0(std::size_t max_dim = 4096) const;
  Matrix dense_ME(std::size_t max_dim = 4096) const;
};

/// Requires constants.representable(). Throws std::overflow_error otherwise,
/// pointing at the log-domain fields. eta must be nonnegative.
PerturbationSystem build_M(const ContractionConstants& k, double mu, double eta);

/// Coordinate subsets for the block-reduced spectral computations.
using CoordinateMask = std::array<bool, 3>;
inline constexpr CoordinateMask kAllCoordinates{true, true, true};

/// ln rho(M(eta)) without forming M. An eigenvalue lambda = e^t of the block
/// companion matrix makes I - G(t) singular, where
///   G(t) = M1 e^-t + M2 sum_{j=2}^{Cbar-1} e^-jt + M_Cbar e^-Cbar t,
/// and for nonnegative M, rho(M) < e^t exactly when I - G(t) is a nonsingular
/// M-matrix. The threshold t is located by bisection in log-magnitude.
/// With a mask, the same is done for the companion matrix restricted to the
/// selected coordinates.
double log_spectral_radius(const PerturbationSystem& s, const CoordinateMask& mask = kAllCoordinates);

/// rho(M(eta)) < 1, decided exactly at t = 0 (no bisection).
bool contracts(const PerturbationSystem& s);

struct PowerIteration {
  double rho = 0.0;
  double residual = 0.0;  // |M x - rho x|_inf / |x|_inf at the returned vector
  int iterations = 0;
  Vector vector;
};

/// Perron root of a dense entrywise nonnegative matrix. The iteration runs on
/// M + I so that periodic (imprimitive) matrices converge as well.
/// Throws std::runtime_error on non-convergence, with the achieved residual.
PowerIteration spectral_radius(const Matrix& M, double tol = 1e-10, int max_iter = 2000000);

struct Lemma5Report {
  double rho = 0.0;              // rho(M0)
  double deflated_radius = 0.0;  // largest |lambda| over spectrum(M0) minus one copy of 1
  double log_deflated_radius = 0.0;
  double u_residual = 0.0;       // |M0 u - u|_inf
  double w_residual = 0.0;       // |w'M0 - w'|_inf
  double wu = 0.0;
  bool rho_ok = false;
  bool simple_ok = false;
  bool u_ok = false;
  bool w_ok = false;
  bool ok() const { return rho_ok && simple_ok && u_ok && w_ok; }
};

/// Checks on M0 (eta is ignored). u = 1_Cbar (x) (0,1,0)', w = e_2.
/// The r-coordinate of M0 is decoupled from the other two, so the spectrum
/// splits into the scalar r-companion (roots 1 and 0) and the companion
/// restricted to (x~w, s~w); the deflated radius is the larger of the
/// non-unit r-roots and the latter's spectral radius.
/// `simple_margin`: simplicity requires deflated_radius < 1 - simple_margin.
Lemma5Report verify_lemma5(const PerturbationSystem& s, double simple_margin = 1e-6);

struct DerivativeReport {
  double wMEu = 0.0;
  double predicted = 0.0;  // -mu / n^(nC-1)
  bool exact_ok = false;
  double step = 0.0;
  double fd_slope = 0.0;  // (rho(M(h)) - rho(M(0))) / h
  bool fd_ok = false;     // within 5% of predicted
};

/// Finite-difference step h <= 0 selects min(1e-6, 1e-3 eta*): the regime
/// where rho(M(eta)) is linear in eta ends near eta*, which can be tiny.
DerivativeReport perturbation_derivative(const PerturbationSystem& s, double step = 0.0);

struct EtaThreshold {
  double eta_star = 0.0;
  double upper = 0.0;  // 2 / (nL)
  int probes = 0;
  std::string diagnostic;
};

/// sup{eta in (0, 2/(nL)) : rho(M(eta)) < 1} by bisection to relative 1e-8.
/// Returns eta_star = 0 with a diagnostic when no probed eta contracts.
EtaThreshold eta_threshold(const PerturbationSystem& s);

}  // namespace tvab
