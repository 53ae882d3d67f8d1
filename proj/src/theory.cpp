#include "tvab/theory.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "tvab/random.hpp"

namespace tvab {

namespace {

constexpr std::uint64_t kMultistepSalt = 0x3c;

// D_s = A_{sC+C-1} ... A_{sC}
Matrix block_product(const WeightSchedule& w, std::size_t C, std::size_t s) {
  const auto n = static_cast<Eigen::Index>(w.size());
  Matrix D = Matrix::Identity(n, n);
  for (std::size_t l = 0; l < C; ++l) D = w.at(s * C + l).A * D;
  return D;
}

double gap_scale(double rhs) { return std::max(std::abs(rhs), 1e-300); }

}  // namespace

std::vector<Vector> compute_v(const WeightSchedule& w, std::size_t horizon) {
  std::vector<Vector> v;
  v.reserve(horizon + 1);
  v.push_back(Vector::Ones(static_cast<Eigen::Index>(w.size())));
  for (std::size_t k = 0; k < horizon; ++k) v.push_back(w.at(k).B * v.back());
  return v;
}

double row_disagreement(const Matrix& P) {
  return (P.colwise().maxCoeff() - P.colwise().minCoeff()).maxCoeff();
}

PhiSequence approx_phi(const WeightSchedule& w, std::size_t C, std::size_t horizon,
                       std::size_t tail_cap, double tol) {
  if (C == 0) throw std::invalid_argument("C must be positive");
  const std::size_t n = w.size();
  if (tail_cap == 0) tail_cap = 10 * n * C;
  const std::size_t S = (horizon + C - 1) / C;  // first block boundary >= horizon

  PhiSequence out;
  Matrix P = block_product(w, C, S);
  out.tail_blocks = 1;
  out.disagreement = row_disagreement(P);
  while (out.disagreement > tol) {
    if (out.tail_blocks >= tail_cap) {
      std::ostringstream msg;
      msg << "absolute probability sequence: row disagreement " << out.disagreement
          << " after " << out.tail_blocks << " tail blocks (tolerance " << tol << ")";
      throw std::runtime_error(msg.str());
    }
    P = block_product(w, C, S + out.tail_blocks) * P;
    ++out.tail_blocks;
    out.disagreement = row_disagreement(P);
  }
  Vector mu = P.row(0).transpose();
  mu /= mu.sum();
  out.min_mu_entry = mu.minCoeff();

  const std::size_t top = S * C;
  std::vector<Vector> phi(top + 1);
  phi[top] = mu;
  for (std::size_t k = top; k-- > 0;) phi[k] = w.at(k).A.transpose() * phi[k + 1];
  phi.resize(horizon + 1);
  out.phi = std::move(phi);
  return out;
}

double phi_recursion_residual(const WeightSchedule& w, const std::vector<Vector>& phi) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < phi.size(); ++k) {
    const Vector next = w.at(k).A.transpose() * phi[k + 1];
    worst = std::max(worst, (phi[k] - next).cwiseAbs().maxCoeff());
  }
  return worst;
}

double r_row_stochasticity_error(const WeightSchedule& w, const std::vector<Vector>& v) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const Matrix R = v[k + 1].cwiseInverse().asDiagonal() * w.at(k).B * v[k].asDiagonal();
    worst = std::max(worst, (R.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  return worst;
}

TkTrace trace_t(const std::vector<NetworkState>& states, const std::vector<Vector>& phi,
                const std::vector<Vector>& v, const Vector& x_star) {
  if (phi.size() < states.size() || v.size() < states.size()) {
    throw std::invalid_argument("trace_t: phi or v shorter than the state trace");
  }
  TkTrace tk;
  tk.t.reserve(states.size());
  tk.y_norm.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    const NetworkState& st = states[k];
    const auto n = static_cast<double>(st.x.rows());
    const Vector vh = v[k] / n;
    if ((vh.array() <= 0.0).any()) throw std::domain_error("trace_t: v has a nonpositive entry");

    const Eigen::RowVectorXd xbar = phi[k].transpose() * st.x;
    const Matrix xt = st.x.rowwise() - xbar;
    const double r = std::sqrt(n) * (xbar - x_star.transpose()).norm();
    const Matrix s = vh.cwiseInverse().asDiagonal() * st.y;
    const Eigen::RowVectorXd savg = vh.transpose() * s;
    const Matrix st_dev = s.rowwise() - savg;
    tk.t.emplace_back(xt.norm(), r, st_dev.norm());
    tk.y_norm.push_back(st.y.norm());
  }
  return tk;
}

InequalityReport check_inequality_system(const TkTrace& tk, const PerturbationSystem& s,
                                         double tol) {
  InequalityReport rep;
  if (!(s.Cbar >= 2.0) || s.Cbar > 1e15) return rep;
  const auto Cb = static_cast<std::size_t>(s.Cbar);
  const std::size_t K = tk.t.size();
  if (K < Cb + 1) return rep;

  const Matrix3 M1 = s.M1(), M2 = s.M2(), MC = s.MC();
  const Matrix3 A1 = M1.cwiseAbs(), A2 = M2.cwiseAbs(), AC = MC.cwiseAbs();
  // prefix[i] = t_0 + ... + t_{i-1}
  std::vector<Eigen::Vector3d> prefix(K + 1, Eigen::Vector3d::Zero());
  for (std::size_t i = 0; i < K; ++i) prefix[i + 1] = prefix[i] + tk.t[i];

  for (std::size_t k = Cb - 1; k + 1 < K; ++k) {
    // t_{k-1} + ... + t_{k-(Cb-2)}
    const Eigen::Vector3d mid = prefix[k] - prefix[k + 2 - Cb];
    const Eigen::Vector3d& last = tk.t[k + 1 - Cb];
    const Eigen::Vector3d rhs = M1 * tk.t[k] + M2 * mid + MC * last;
    const Eigen::Vector3d scale = A1 * tk.t[k] + A2 * mid + AC * last;
    ++rep.rows_checked;
    bool bad = false;
    for (int c = 0; c < 3; ++c) {
      const double gap = (tk.t[k + 1](c) - rhs(c)) / gap_scale(scale(c));
      rep.max_gap = std::max(rep.max_gap, gap);
      if (gap > tol) bad = true;
    }
    if (bad) {
      ++rep.violations;
      if (rep.first_violation < 0) rep.first_violation = static_cast<std::int64_t>(k);
    }
  }
  return rep;
}

BoundReport check_lemma1(const TkTrace& tk, std::size_t n, double L, double tol) {
  BoundReport rep;
  const double nL = static_cast<double>(n) * L;
  for (std::size_t k = 0; k < tk.t.size(); ++k) {
    const Eigen::Vector3d& t = tk.t[k];
    const double rhs = nL * t(0) + nL * t(1) + t(2);
    const double gap = (tk.y_norm[k] - rhs) / gap_scale(rhs);
    ++rep.checked;
    rep.max_gap = std::max(rep.max_gap, gap);
    if (gap > tol) ++rep.violations;
  }
  return rep;
}

BoundReport check_lemma3(const TkTrace& tk, std::size_t n, std::size_t C, double L, double mu,
                         double eta, double tol) {
  BoundReport rep;
  const double dn = static_cast<double>(n);
  const double shrink = eta * mu * std::pow(dn, -(dn * static_cast<double>(C) - 1.0));
  for (std::size_t k = 0; k + 1 < tk.t.size(); ++k) {
    const Eigen::Vector3d& t = tk.t[k];
    const double a = eta * dn * L * t(0);
    const double b = (1.0 - shrink) * t(1);
    const double c = eta * std::sqrt(dn) * t(2);
    const double rhs = a + b + c;
    const double gap = (tk.t[k + 1](1) - rhs) / gap_scale(rhs);
    ++rep.checked;
    rep.max_gap = std::max(rep.max_gap, gap);
    if (gap > tol) ++rep.violations;
  }
  return rep;
}

ThetaReport theta_range(const std::vector<Vector>& phi, const std::vector<Vector>& v,
                        std::size_t C) {
  ThetaReport rep;
  rep.min = std::numeric_limits<double>::infinity();
  rep.max = -std::numeric_limits<double>::infinity();
  if (phi.empty() || v.empty()) return rep;
  const double n = static_cast<double>(phi.front().size());
  rep.lower = std::pow(n, -n * static_cast<double>(C));
  for (std::size_t k = 0; k + 1 < phi.size() && k < v.size(); ++k) {
    const double theta = phi[k + 1].dot(v[k]) / n;
    rep.min = std::min(rep.min, theta);
    rep.max = std::max(rep.max, theta);
  }
  rep.ok = rep.min >= rep.lower && rep.max <= 1.0 + 1e-12;
  return rep;
}

ErgodicityReport ergodicity_check(const WeightSchedule& w, std::size_t C, std::size_t s,
                                  std::size_t T) {
  ErgodicityReport rep;
  const auto n = static_cast<Eigen::Index>(w.size());
  Matrix P = Matrix::Identity(n, n);
  for (std::size_t b = 0; b < T; ++b) {
    P = block_product(w, C, s + b) * P;
    const double d = row_disagreement(P);
    rep.disagreement.push_back(d);
    if (rep.blocks_to_1e8 < 0 && d <= 1e-8) rep.blocks_to_1e8 = static_cast<std::int64_t>(b + 1);
  }
  // least-squares slope of ln d against block count, above the rounding floor
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t b = 0; b < rep.disagreement.size(); ++b) {
    const double d = rep.disagreement[b];
    if (!(d > 1e-14)) continue;
    const double x = static_cast<double>(b + 1), y = std::log(d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    rep.fitted_rate = std::exp(slope);
  } else {
    rep.fitted_rate = 0.0;  // rank one right away
  }
  return rep;
}

MultistepReport multistep_contraction_check(const WeightSchedule& w,
                                            const std::vector<Vector>& phi,
                                            const std::vector<Vector>& v,
                                            const ContractionConstants& k, std::size_t trials,
                                            std::uint64_t seed) {
  MultistepReport rep;
  const auto n = static_cast<Eigen::Index>(w.size());
  auto rng = stream_rng(seed, 0, kMultistepSalt);
  std::normal_distribution<double> normal;
  auto random_b = [&] {
    Vector b(n);
    for (Eigen::Index i = 0; i < n; ++i) b(i) = normal(rng);
    return b;
  };
  auto deviation = [](const Vector& x, const Vector& weights) {
    return (x.array() - weights.dot(x)).matrix().norm();
  };

  const bool fits_A = std::isfinite(k.Cbar_A) && k.Cbar_A < static_cast<double>(phi.size());
  const bool fits_B = std::isfinite(k.Cbar_B) && k.Cbar_B < static_cast<double>(v.size());
  const std::size_t windows = std::max<std::size_t>(1, trials / 100);

  if (fits_A) {
    const auto len = static_cast<std::size_t>(k.Cbar_A);
    std::uniform_int_distribution<std::size_t> start(0, phi.size() - 1 - len);
    for (std::size_t wdx = 0; wdx < windows; ++wdx) {
      const std::size_t k0 = start(rng);
      Matrix P = Matrix::Identity(n, n);
      for (std::size_t l = 0; l < len; ++l) P = w.at(k0 + l).A * P;
      for (std::size_t t = 0; t < trials / windows; ++t) {
        const Vector b = random_b();
        const double pre = deviation(b, phi[k0]);
        const double post = deviation(P * b, phi[k0 + len]);
        rep.max_ratio_A = std::max(rep.max_ratio_A, pre > 0.0 ? post / pre : 0.0);
        ++rep.trials_A;
      }
    }
  }
  if (fits_B) {
    const auto len = static_cast<std::size_t>(k.Cbar_B);
    std::uniform_int_distribution<std::size_t> start(0, v.size() - 1 - len);
    const double dn = static_cast<double>(n);
    for (std::size_t wdx = 0; wdx < windows; ++wdx) {
      const std::size_t k0 = start(rng);
      Matrix P = Matrix::Identity(n, n);
      for (std::size_t l = 0; l < len; ++l) {
        const std::size_t j = k0 + l;
        const Matrix R = v[j + 1].cwiseInverse().asDiagonal() * w.at(j).B * v[j].asDiagonal();
        P = R * P;
      }
      for (std::size_t t = 0; t < trials / windows; ++t) {
        const Vector b = random_b();
        const double pre = deviation(b, v[k0] / dn);
        const double post = deviation(P * b, v[k0 + len] / dn);
        rep.max_ratio_B = std::max(rep.max_ratio_B, pre > 0.0 ? post / pre : 0.0);
        ++rep.trials_B;
      }
    }
  }
  rep.ok = (!fits_A || rep.max_ratio_A <= k.gamma_A()) && (!fits_B || rep.max_ratio_B <= k.gamma_B());
  return rep;
}

}  // namespace tvab
