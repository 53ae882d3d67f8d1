#pragma once

#include <cstddef>

namespace tvab {

/// Constants of the C̄-step contractions for {A_k} (base alpha) and the
/// rescaled column chain {R_k} (base tau = beta / n^(nC+1)), plus the gain m.
///
/// Everything that scales like n^(nC) is carried in the log domain. The
/// gammas sit within ~1e-24 of one for n = 3, C = 2, so they are only ever
/// stored as logarithms evaluated in 100-digit arithmetic. Plain doubles are
/// provided when they are finite.
struct ContractionConstants {
  std::size_t n = 0;
  std::size_t C = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double L = 0.0;

  double log_tau = 0.0;
  double log_n_pow_nC = 0.0;  // nC ln n
  double log_Q_A = 0.0;
  double log_Q_B = 0.0;
  double log_m = 0.0;  // ln(n^(nC) Q_B L)

  /// Smallest integers >= C making the gammas < 1. When that integer is not
  /// a double, the next representable double above it is used instead; any
  /// larger integer is an equally valid choice. Infinite when out of range.
  double Cbar_A = 0.0;
  double Cbar_B = 0.0;
  double Cbar = 0.0;  // max of the two
  double log_Cbar_A = 0.0;
  double log_Cbar_B = 0.0;

  double log_gamma_A = 0.0;  // at Cbar_A
  double log_gamma_B = 0.0;  // at Cbar_B
  /// Both gammas re-evaluated at the common Cbar (what M(eta) uses).
  double log_gamma_A_common = 0.0;
  double log_gamma_B_common = 0.0;

  double tau() const;
  double Q_A() const;
  double Q_B() const;
  double m() const;
  double gamma_A() const;
  double gamma_B() const;

  /// True when n^(nC), Q_B, m and Cbar are all finite doubles, i.e. when the
  /// perturbation system can be assembled.
  bool representable() const;
};

/// Requires 0 < alpha, beta <= 1 and L > 0. Throws std::invalid_argument.
/// alpha = 1 (no mixing at all) is rejected since the contraction base
/// 1 - alpha^(nC) vanishes.
ContractionConstants contraction_constants(std::size_t n, std::size_t C, double alpha,
                                           double beta, double L);

/// ln(Q (1 - base^(nC))^((Cbar - 1) / (nC))) evaluated in extended
/// precision; `log_base` is ln(base).
double log_contraction_gamma(std::size_t n, std::size_t C, double log_base, double Cbar);

}  // namespace tvab
