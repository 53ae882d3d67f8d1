#include "tvab/constants.hpp"

#include <boost/math/special_functions/log1p.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvab {

namespace {

using hp = boost::multiprecision::cpp_bin_float_100;

constexpr double kLogRange = 690.0;  // keep exp() comfortably inside double range

struct Chain {
  hp log_Q;
  hp neg_log1m;      // -ln(1 - base^(nC)), positive
  hp log_neg_log1m;  // ln of the above, valid even when it underflows
};

Chain make_chain(std::size_t n, std::size_t C, double log_base) {
  const hp nC = hp(n) * hp(C);
  const hp X = -nC * hp(log_base);  // -ln(base^(nC)) > 0
  const hp e = exp(-X);             // base^(nC)
  Chain ch;
  // Q = 2n (1 + base^-nC) / (1 - base^nC)
  ch.log_Q = log(hp(2 * n)) + X + boost::math::log1p(e) - boost::math::log1p(-e);
  ch.neg_log1m = -boost::math::log1p(-e);
  ch.log_neg_log1m = ch.neg_log1m > 0 ? hp(log(ch.neg_log1m)) : hp(-X);
  return ch;
}

double to_double_ceil(const hp& v) {
  double d = static_cast<double>(v);
  if (std::isfinite(d) && hp(d) < v) d = std::nextafter(d, std::numeric_limits<double>::infinity());
  return d;
}

struct Horizon {
  double Cbar;
  double log_Cbar;
};

// Smallest integer c >= C with log_Q + (c - 1)/(nC) ln(1 - base^nC) < 0.
Horizon smallest_horizon(const Chain& ch, std::size_t n, std::size_t C) {
  const hp nC = hp(n) * hp(C);
  const hp log_y = log(nC) + log(ch.log_Q) - ch.log_neg_log1m;
  if (log_y > kLogRange) {
    return {std::numeric_limits<double>::infinity(), static_cast<double>(log_y)};
  }
  const hp y = nC * ch.log_Q / ch.neg_log1m;
  hp c = floor(y) + 2;
  if (c < hp(C)) c = hp(C);
  const double d = to_double_ceil(c);
  return {d, std::log(d)};
}

double log_gamma_at(const Chain& ch, std::size_t n, std::size_t C, double Cbar) {
  if (!std::isfinite(Cbar)) return -std::numeric_limits<double>::infinity();
  const hp nC = hp(n) * hp(C);
  return static_cast<double>(ch.log_Q - (hp(Cbar) - 1) / nC * ch.neg_log1m);
}

double safe_exp(double x) { return x > kLogRange ? std::numeric_limits<double>::infinity() : std::exp(x); }

}  // namespace

double ContractionConstants::tau() const { return std::exp(log_tau); }
double ContractionConstants::Q_A() const { return safe_exp(log_Q_A); }
double ContractionConstants::Q_B() const { return safe_exp(log_Q_B); }
double ContractionConstants::m() const { return safe_exp(log_m); }
double ContractionConstants::gamma_A() const { return std::exp(log_gamma_A); }
double ContractionConstants::gamma_B() const { return std::exp(log_gamma_B); }

bool ContractionConstants::representable() const {
  return log_n_pow_nC < kLogRange && log_Q_A < kLogRange && log_Q_B < kLogRange &&
         log_m < kLogRange && std::isfinite(Cbar);
}

ContractionConstants contraction_constants(std::size_t n, std::size_t C, double alpha,
                                           double beta, double L) {
  if (n < 2) throw std::invalid_argument("contraction constants need n >= 2");
  if (C < 1) throw std::invalid_argument("C must be positive");
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("alpha and beta must lie in (0, 1)");
  }
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("L must be positive");

  ContractionConstants k;
  k.n = n;
  k.C = C;
  k.alpha = alpha;
  k.beta = beta;
  k.L = L;
  const double nC = static_cast<double>(n) * static_cast<double>(C);
  const double log_n = std::log(static_cast<double>(n));
  k.log_n_pow_nC = nC * log_n;
  k.log_tau = std::log(beta) - (nC + 1.0) * log_n;

  const Chain a = make_chain(n, C, std::log(alpha));
  const Chain b = make_chain(n, C, k.log_tau);
  k.log_Q_A = static_cast<double>(a.log_Q);
  k.log_Q_B = static_cast<double>(b.log_Q);
  k.log_m = k.log_n_pow_nC + k.log_Q_B + std::log(L);

  const Horizon ha = smallest_horizon(a, n, C);
  const Horizon hb = smallest_horizon(b, n, C);
  k.Cbar_A = ha.Cbar;
  k.Cbar_B = hb.Cbar;
  k.log_Cbar_A = ha.log_Cbar;
  k.log_Cbar_B = hb.log_Cbar;
  k.Cbar = std::max(k.Cbar_A, k.Cbar_B);

  k.log_gamma_A = log_gamma_at(a, n, C, k.Cbar_A);
  k.log_gamma_B = log_gamma_at(b, n, C, k.Cbar_B);
  k.log_gamma_A_common = log_gamma_at(a, n, C, k.Cbar);
  k.log_gamma_B_common = log_gamma_at(b, n, C, k.Cbar);
  return k;
}

double log_contraction_gamma(std::size_t n, std::size_t C, double log_base, double Cbar) {
  return log_gamma_at(make_chain(n, C, log_base), n, C, Cbar);
}

}  // namespace tvab
