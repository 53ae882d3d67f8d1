#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tvab/constants.hpp"
#include "tvab/optimizer.hpp"
#include "tvab/perturbation.hpp"
#include "tvab/weights.hpp"

namespace tvab {

/// v_0 = 1, v_{k+1} = B_k v_k for k < horizon. Unnormalized: each v_k sums
/// to n. The analysis below works with v_k / n.
std::vector<Vector> compute_v(const WeightSchedule& w, std::size_t horizon);

struct PhiSequence {
  std::vector<Vector> phi;    // phi_0 .. phi_horizon
  double disagreement = 0.0;  // row disagreement of the tail product used for mu
  std::size_t tail_blocks = 0;
  double min_mu_entry = 0.0;  // empirical delta
};

/// Absolute probability sequence of {A_k}. mu at the first block boundary
/// sC >= horizon is read off the backward product D_{s+T} ... D_s once its
/// row disagreement is <= tol; phi_k = A_k' phi_{k+1} is then exact back to
/// k = 0. tail_cap = 0 means 10 nC blocks. Throws std::runtime_error when
/// the cap is hit, reporting the disagreement reached.
PhiSequence approx_phi(const WeightSchedule& w, std::size_t C, std::size_t horizon,
                       std::size_t tail_cap = 0, double tol = 1e-12);

/// max_k |phi_k' - phi_{k+1}' A_k|_inf over the returned sequence.
double phi_recursion_residual(const WeightSchedule& w, const std::vector<Vector>& phi);

/// max_k |R_k 1 - 1|_inf with R_k = V_{k+1}^-1 B_k V_k.
double r_row_stochasticity_error(const WeightSchedule& w, const std::vector<Vector>& v);

struct TkTrace {
  std::vector<Eigen::Vector3d> t;  // (|x~w_k|, |r_k|, |s~w_k|)
  std::vector<double> y_norm;      // |y_k|
};

/// Builds t_k from retained TV-AB states. Uses v_k / n in the s-transform so
/// that (1 v_k'/n (x) I) s_k equals (1 1' (x) I) grad f(x_k). Throws
/// std::domain_error when some v entry is not positive.
TkTrace trace_t(const std::vector<NetworkState>& states, const std::vector<Vector>& phi,
                const std::vector<Vector>& v, const Vector& x_star);

struct InequalityReport {
  std::size_t rows_checked = 0;
  std::size_t violations = 0;
  double max_gap = 0.0;  // max (lhs - rhs) / scale over checked rows
  std::int64_t first_violation = -1;
};

/// Checks t_{k+1} <= M1 t_k + M2 sum_{l=1}^{Cbar-2} t_{k-l} + M_Cbar t_{k-(Cbar-1)}
/// for every k >= Cbar - 1 available in the trace; the remaining block rows
/// are identities. A row fails when lhs > rhs + tol * scale, scale being the
/// sum of the magnitudes on the right.
InequalityReport check_inequality_system(const TkTrace& tk, const PerturbationSystem& s,
                                         double tol = 1e-9);

struct BoundReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double max_gap = 0.0;
};

/// |y_k| <= nL |x~w_k| + nL |r_k| + |s~w_k|
BoundReport check_lemma1(const TkTrace& tk, std::size_t n, double L, double tol = 1e-9);

/// |r_{k+1}| <= eta nL |x~w_k| + (1 - eta mu / n^(nC-1)) |r_k| + eta sqrt(n) |s~w_k|
BoundReport check_lemma3(const TkTrace& tk, std::size_t n, std::size_t C, double L, double mu,
                         double eta, double tol = 1e-9);

struct ThetaReport {
  double min = 0.0;
  double max = 0.0;
  double lower = 0.0;  // 1 / n^(nC)
  bool ok = false;
};

/// theta_k = phi_{k+1}' v_k / n must lie in [1/n^(nC), 1].
ThetaReport theta_range(const std::vector<Vector>& phi, const std::vector<Vector>& v,
                        std::size_t C);

struct ErgodicityReport {
  std::vector<double> disagreement;  // after 1, 2, ..., T blocks
  double fitted_rate = 0.0;          // per block
  std::int64_t blocks_to_1e8 = -1;
};

/// Row disagreement max_j (max_i P_ij - min_i P_ij) of D_{s+T-1} ... D_s.
double row_disagreement(const Matrix& P);

ErgodicityReport ergodicity_check(const WeightSchedule& w, std::size_t C, std::size_t s,
                                  std::size_t T);

struct MultistepReport {
  double max_ratio_A = 0.0;
  double max_ratio_B = 0.0;
  std::size_t trials_A = 0;
  std::size_t trials_B = 0;
  bool ok = false;
};

/// Random windows and vectors b: the weighted-deviation norm after a Cbar_A
/// (resp. Cbar_B) step product over the one before must not exceed gamma_A
/// (resp. gamma_B). Windows must fit inside phi / v; a chain whose Cbar does
/// not fit is skipped (trials = 0).
MultistepReport multistep_contraction_check(const WeightSchedule& w,
                                            const std::vector<Vector>& phi,
                                            const std::vector<Vector>& v,
                                            const ContractionConstants& k, std::size_t trials,
                                            std::uint64_t seed);

}  // namespace tvab
