#include "tvab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "tvab/constants.hpp"
#include "tvab/perturbation.hpp"
#include "tvab/random.hpp"
#include "tvab/theory.hpp"

namespace tvab {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFdPointSalt = 0x5f1d;
// n^(nC) must stay a finite double for phi and the perturbation system
constexpr double kLogDoubleRange = 690.0;

std::vector<double> etas_of(const MethodSpec& m) {
  std::vector<double> etas = m.grid;
  if (m.eta && std::find(etas.begin(), etas.end(), *m.eta) == etas.end()) {
    etas.insert(etas.begin(), *m.eta);
  }
  return etas;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

struct Setup {
  Problem problem;
  WeightSchedule weights;
  GraphSequence graphs;
};

Setup make_setup(const ExperimentConfig& c) {
  GraphSequence seq = make_graph_sequence(c);
  Problem problem = make_problem(c);
  if (problem.agents() != seq.size()) {
    throw ConfigError("graph", "graph has " + std::to_string(seq.size()) + " agents, problem has " +
                                   std::to_string(problem.agents()));
  }
  WeightSchedule w = WeightSchedule::uniform(seq);
  return Setup{std::move(problem), std::move(w), std::move(seq)};
}

RunRecord execute(const Problem& problem, const WeightSchedule& w, const Vector& x_star,
                  const Matrix& x0, Method method, double eta, std::size_t K,
                  std::uint64_t seed) {
  RunRecord rec;
  rec.method = method;
  rec.eta = eta;
  rec.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    RunTrace t = run(problem, w, x_star, eta, K, x0, method);
    rec.residuals = std::move(t.residuals);
    rec.max_conservation_error = t.max_conservation_error;
    try {
      rec.fit = fit_rate(rec.residuals);
    } catch (const std::invalid_argument&) {
      // converged below the floor almost at once, or too short
    }
  } catch (const DivergenceError& e) {
    rec.diverged = true;
    rec.diverged_at = e.iteration();
  }
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::string trace_csv(const RunRecord& r) {
  std::string out = "k,residual,method,eta,seed\n";
  const std::string tail = "," + std::string(method_name(r.method)) + "," + format_real(r.eta) +
                           "," + std::to_string(r.seed) + "\n";
  out.reserve(r.residuals.size() * (tail.size() + 32));
  for (std::size_t k = 0; k < r.residuals.size(); ++k) {
    out += std::to_string(k);
    out += ',';
    out += format_real(r.residuals[k]);
    out += tail;
  }
  return out;
}

std::string summary_csv(const ExperimentResult& res) {
  std::ostringstream out;
  out << "method,eta,seed,final_residual,slope,r2,fit_window,max_conservation_error,diverged,"
         "diverged_at,best,trace\n";
  for (const RunRecord& r : res.runs) {
    const RunRecord* b = res.best(r.method);
    out << method_name(r.method) << ',' << format_real(r.eta) << ',' << r.seed << ','
        << (r.diverged ? "nan" : format_real(r.final_residual())) << ','
        << (r.fit ? format_real(r.fit->slope) : "nan") << ','
        << (r.fit ? format_real(r.fit->r2) : "nan") << ',' << (r.fit ? r.fit->window() : 0)
        << ',' << format_real(r.max_conservation_error) << ',' << (r.diverged ? 1 : 0) << ','
        << r.diverged_at << ',' << (b == &r ? 1 : 0) << ',' << r.csv << '\n';
  }
  return out.str();
}

double min_alpha(const WeightSchedule& w, std::size_t H, double* beta) {
  double a = 1.0, b = 1.0;
  for (std::size_t k = 0; k < H; ++k) {
    const WeightDiagnostics d = validate_weights(w.at(k), w.graph(k));
    a = std::min(a, d.alpha_hat);
    b = std::min(b, d.beta_hat);
  }
  *beta = b;
  return a;
}

double max_fd_gradient_error(const Problem& problem, std::uint64_t seed, std::size_t points) {
  double worst = 0.0;
  const auto p = static_cast<Eigen::Index>(problem.dim());
  for (std::size_t t = 0; t < points; ++t) {
    auto rng = stream_rng(seed, t, kFdPointSalt);
    std::normal_distribution<double> gauss(0.0, 3.0);
    const std::size_t i =
        std::uniform_int_distribution<std::size_t>(0, problem.agents() - 1)(rng);
    Vector x(p);
    for (Eigen::Index j = 0; j < p; ++j) x(j) = gauss(rng);
    const LocalObjective& f = problem.locals()[i];
    const Vector g = gradient(f, x);
    Vector fd(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(x(j)));
      Vector xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      fd(j) = (value(f, xp) - value(f, xm)) / (2 * h);
    }
    worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1e-8));
  }
  return worst;
}

}  // namespace

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string trace_file_name(Method m, double eta, std::uint64_t seed) {
  return "trace_" + std::string(method_name(m)) + "_eta" + format_real(eta) + "_seed" +
         std::to_string(seed) + ".csv";
}

RateFit fit_rate(const std::vector<double>& residuals, double floor) {
  std::size_t usable = 0;
  while (usable < residuals.size() && std::isfinite(residuals[usable]) &&
         residuals[usable] > floor) {
    ++usable;
  }
  const std::size_t first = usable / 5;
  if (usable < 10 || usable - first < 10) {
    throw std::invalid_argument("fit_rate: " + std::to_string(usable) +
                                " residuals above the floor, need at least 10 after burn-in");
  }
  RateFit fit;
  fit.first = first;
  fit.last = usable - 1;
  const double cnt = static_cast<double>(fit.window());
  double mx = 0, my = 0;
  for (std::size_t k = first; k < usable; ++k) {
    mx += static_cast<double>(k);
    my += std::log10(residuals[k]);
  }
  mx /= cnt;
  my /= cnt;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = first; k < usable; ++k) {
    const double dx = static_cast<double>(k) - mx, dy = std::log10(residuals[k]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.r2 = syy <= 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

double RunRecord::final_residual() const {
  return residuals.empty() ? std::numeric_limits<double>::quiet_NaN() : residuals.back();
}

const RunRecord* ExperimentResult::best(Method m) const {
  const RunRecord* b = nullptr;
  for (const RunRecord& r : runs) {
    if (r.method != m || r.diverged) continue;
    if (!b || r.final_residual() < b->final_residual()) b = &r;
  }
  return b;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentOptions& options) {
  Setup s = make_setup(config);
  ExperimentResult res;
  res.config = config;
  res.L = s.problem.L();
  res.mu = s.problem.mu();
  res.x_star = solve_centralized(s.problem, 1e-12);
  const Matrix x0 = initial_points(s.problem.agents(), s.problem.dim(), config.x0, config.seed);

  for (const MethodSpec& m : config.methods) {
    for (double eta : etas_of(m)) {
      res.runs.push_back(
          execute(s.problem, s.weights, res.x_star, x0, m.method, eta, config.horizon, config.seed));
    }
  }
  for (const MethodSpec& m : config.methods) {
    if (const RunRecord* b = res.best(m.method)) res.best_eta[m.method] = b->eta;
  }
  if (!options.write_files) return res;

  const fs::path dir(config.output);
  fs::create_directories(dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("trace_", 0) == 0 && entry.path().extension() == ".csv") {
      fs::remove(entry.path());
    }
  }
  std::ostringstream timing;
  timing << "method eta seed wall_seconds\n";
  for (RunRecord& r : res.runs) {
    timing << method_name(r.method) << ' ' << format_real(r.eta) << ' ' << r.seed << ' '
           << r.wall_seconds << '\n';
    if (r.diverged) continue;
    r.csv = trace_file_name(r.method, r.eta, r.seed);
    write_text(dir / r.csv, trace_csv(r));
  }
  write_text(dir / "summary.csv", summary_csv(res));
  write_text(dir / "timing.txt", timing.str());
  emit_plot_script(dir);
  return res;
}

std::map<Method, double> grid_search_eta(const ExperimentConfig& config,
                                         const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("grid_search_eta: empty grid");
  ExperimentConfig c = config;
  for (MethodSpec& m : c.methods) {
    m.eta.reset();
    m.grid = grid;
  }
  const ExperimentResult res = run_experiment(c, {.write_files = false});
  for (const MethodSpec& m : c.methods) {
    if (!res.best_eta.count(m.method)) {
      throw std::runtime_error("grid_search_eta: every step size diverged for " +
                               std::string(method_name(m.method)));
    }
  }
  return res.best_eta;
}

fs::path emit_plot_script(const fs::path& output_dir) {
  fs::create_directories(output_dir);
  std::vector<fs::path> dirs{output_dir};
  std::vector<fs::path> subs;
  for (const auto& e : fs::directory_iterator(output_dir)) {
    if (e.is_directory()) subs.push_back(e.path());
  }
  std::sort(subs.begin(), subs.end());
  dirs.insert(dirs.end(), subs.begin(), subs.end());

  std::ostringstream figs;
  for (const fs::path& d : dirs) {
    std::vector<std::string> files;
    std::set<std::string> best;
    std::ifstream summary(d / "summary.csv");
    std::string line;
    if (summary && std::getline(summary, line)) {
      const auto head = split_csv_line(line);
      const auto col = [&](const std::string& name) {
        return std::find(head.begin(), head.end(), name) - head.begin();
      };
      const auto ib = col("best"), it = col("trace");
      while (std::getline(summary, line)) {
        const auto cells = split_csv_line(line);
        if (static_cast<std::size_t>(std::max(ib, it)) < cells.size() && cells[ib] == "1" &&
            !cells[it].empty()) {
          best.insert(cells[it]);
        }
      }
    }
    for (const auto& e : fs::directory_iterator(d)) {
      const std::string name = e.path().filename().string();
      if (!e.is_regular_file() || name.rfind("trace_", 0) != 0 || e.path().extension() != ".csv") {
        continue;
      }
      if (best.empty() || best.count(name)) {
        files.push_back(fs::relative(e.path(), output_dir).generic_string());
      }
    }
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    const std::string title = d == output_dir ? output_dir.filename().string()
                                              : d.filename().string();
    figs << "    (\"" << (title.empty() ? "residual" : title) << "\", [\n";
    for (const auto& f : files) figs << "        \"" << f << "\",\n";
    figs << "    ]),\n";
  }

  std::ostringstream py;
  py << R"PY(#!/usr/bin/env python3
# Semilog residual curves. Paths are relative to this file.
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))

FIGURES = [
)PY" << figs.str()
     << R"PY(]


def load(rel):
    ks, rs, label = [], [], rel
    with open(os.path.join(HERE, rel), newline="") as fh:
        for row in csv.DictReader(fh):
            ks.append(int(row["k"]))
            rs.append(max(float(row["residual"]), 1e-300))
            label = "%s (eta=%s)" % (row["method"], row["eta"])
    return ks, rs, label


def main():
    for title, files in FIGURES:
        fig, ax = plt.subplots(figsize=(6, 4))
        for rel in files:
            ks, rs, label = load(rel)
            ax.plot(ks, rs, label=label)
        ax.set_yscale("log")
        ax.set_xlabel("iteration k")
        ax.set_ylabel("residual")
        ax.set_title(title)
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(os.path.join(HERE, title + ".png"), dpi=120)
        plt.close(fig)


if __name__ == "__main__":
    main()
)PY";
  const fs::path script = output_dir / "plot.py";
  write_text(script, py.str());
  return script;
}

std::string certify_report(const ExperimentConfig& config, const CertifyOptions& options) {
  Setup s = make_setup(config);
  const std::size_t n = s.problem.agents();
  const std::size_t C = config.graph.C;
  const std::size_t H =
      options.phi_horizon ? options.phi_horizon : std::min<std::size_t>(config.horizon, 2000);
  std::ostringstream out;
  out.precision(17);
  const double L = s.problem.L(), mu = s.problem.mu();
  double beta = 0.0;
  const double alpha = min_alpha(s.weights, H, &beta);
  out << "graph: " << s.graphs.kind() << "\nn: " << n << "\nC: " << C << "\nL: " << L
      << "\nmu: " << mu << "\nalpha: " << alpha << "\nbeta: " << beta << "\n";
  out << "c_bounded_over_" << H << ": " << (check_c_bounded(s.graphs, C, H) ? "yes" : "no") << "\n";

  const ContractionConstants k = contraction_constants(n, C, alpha, beta, L);
  out << "ln_n_pow_nC: " << k.log_n_pow_nC << "\nln_Q_A: " << k.log_Q_A
      << "\nln_Q_B: " << k.log_Q_B << "\nln_m: " << k.log_m << "\nCbar_A: " << k.Cbar_A
      << "\nCbar_B: " << k.Cbar_B << "\nCbar: " << k.Cbar << "\nln_gamma_A: " << k.log_gamma_A
      << "\nln_gamma_B: " << k.log_gamma_B << "\n";

  if (!k.representable()) {
    out << "perturbation_system: skipped (constants exceed the double range)\n";
  } else {
    const PerturbationSystem M0 = build_M(k, mu, 0.0);
    const EtaThreshold th = eta_threshold(M0);
    out << "eta_star: " << th.eta_star << "\neta_upper: " << th.upper << "\n";
    if (!th.diagnostic.empty()) out << "eta_diagnostic: " << th.diagnostic << "\n";
    const Lemma5Report l5 = verify_lemma5(M0);
    out << "rho_M0: " << l5.rho << "\nln_deflated_radius: " << l5.log_deflated_radius
        << "\nu_residual: " << l5.u_residual << "\nw_residual: " << l5.w_residual
        << "\nwu: " << l5.wu << "\nlemma5: " << (l5.ok() ? "ok" : "fail")
        << " (rho " << l5.rho_ok << ", simple " << l5.simple_ok << ", u " << l5.u_ok << ", w "
        << l5.w_ok << ")\n";
    const DerivativeReport d = perturbation_derivative(M0);
    out << "wMEu: " << d.wMEu << "\npredicted_derivative: " << d.predicted
        << "\nfd_step: " << d.step << "\nfd_slope: " << d.fd_slope << "\n";
    if (th.eta_star > 0.0) {
      const double eta = th.eta_star / 2;
      out << "ln_rho_at_half_eta_star: " << log_spectral_radius(M0.with_eta(eta)) << "\n";
      if (k.Cbar + 500 <= 20000) {
        const auto K = static_cast<std::size_t>(k.Cbar) + 500;
        const Vector x_star = solve_centralized(s.problem, 1e-12);
        const Matrix x0 = initial_points(n, s.problem.dim(), config.x0, config.seed);
        try {
          const RunTrace tr = run(s.problem, s.weights, x_star, eta, K, x0, Method::kTvab,
                                  {.keep_states = true});
          const auto v = compute_v(s.weights, K + 1);
          const PhiSequence phi = approx_phi(s.weights, C, K + 1);
          const TkTrace tk = trace_t(tr.states, phi.phi, v, x_star);
          const InequalityReport ir = check_inequality_system(tk, M0.with_eta(eta));
          const BoundReport b1 = check_lemma1(tk, n, L);
          const BoundReport b3 = check_lemma3(tk, n, C, L, mu, eta);
          out << "inequality_run_iterations: " << K << "\ninequality_rows: " << ir.rows_checked
              << "\ninequality_violations: " << ir.violations << "\ninequality_max_gap: "
              << ir.max_gap << "\nlemma1_violations: " << b1.violations << "/" << b1.checked
              << "\nlemma3_violations: " << b3.violations << "/" << b3.checked
              << "\nfinal_residual: " << tr.residuals.back() << "\n";
        } catch (const std::exception& e) {
          out << "inequality_run: failed (" << e.what() << ")\n";
        }
      } else {
        out << "inequality_run: skipped (Cbar too large)\n";
      }
    }
  }

  if (static_cast<double>(n * C) * std::log(static_cast<double>(n)) <= kLogDoubleRange) {
    try {
      const PhiSequence phi = approx_phi(s.weights, C, H);
      const auto v = compute_v(s.weights, H);
      const ThetaReport th = theta_range(phi.phi, v, C);
      out << "phi_horizon: " << H << "\nphi_recursion_residual: "
          << phi_recursion_residual(s.weights, phi.phi) << "\nphi_tail_blocks: "
          << phi.tail_blocks << "\ndelta: " << phi.min_mu_entry << "\ntheta_min: " << th.min
          << "\ntheta_max: " << th.max << "\ntheta_lower: " << th.lower
          << "\ntheta_ok: " << (th.ok ? "yes" : "no") << "\n";
    } catch (const std::runtime_error& e) {
      out << "phi: failed (" << e.what() << ")\n";
    }
  } else {
    out << "phi: skipped (n^(nC) exceeds the double range)\n";
  }

  const ErgodicityReport er = ergodicity_check(s.weights, C, 0, 200);
  out << "ergodicity_disagreement_200_blocks: " << er.disagreement.back()
      << "\nergodicity_blocks_to_1e-8: " << er.blocks_to_1e8
      << "\nergodicity_fitted_rate: " << er.fitted_rate << "\n";
  return out.str();
}

std::vector<CheckResult> run_checks(const ExperimentConfig& config) {
  Setup s = make_setup(config);
  const std::size_t n = s.problem.agents();
  const std::size_t C = config.graph.C;
  const std::size_t H = config.horizon;
  std::vector<CheckResult> out;
  auto fmt = [](double x) { return format_real(x); };

  {
    double row = 0, col = 0;
    bool pattern = true, nonneg = true, diag = true;
    for (std::size_t k = 0; k < H; ++k) {
      const WeightDiagnostics d = validate_weights(s.weights.at(k), s.weights.graph(k));
      row = std::max(row, d.row_err);
      col = std::max(col, d.col_err);
      pattern = pattern && d.pattern_ok;
      nonneg = nonneg && d.nonnegative;
      diag = diag && d.diag_ok;
    }
    out.push_back({"stochasticity", row <= 1e-12 && col <= 1e-12 && pattern && nonneg, false,
                   "max row error " + fmt(row) + ", max column error " + fmt(col)});
    out.push_back({"self_loops", diag, false, "positive diagonals over " + std::to_string(H) +
                                                  " iterations"});
  }

  if (s.graphs.kind() == "gossip") {
    out.push_back({"c_bounded", true, true, "random activation has no deterministic bound"});
  } else {
    const bool ok = check_c_bounded(s.graphs, C, H);
    out.push_back({"c_bounded", ok, false,
                   "C = " + std::to_string(C) + " over " + std::to_string(H) + " iterations"});
  }

  const auto tv = std::find_if(config.methods.begin(), config.methods.end(),
                               [](const MethodSpec& m) { return m.method == Method::kTvab; });
  if (tv == config.methods.end()) {
    out.push_back({"conservation", true, true, "no tvab run configured"});
  } else {
    const double eta = etas_of(*tv).front();
    const Vector x_star = solve_centralized(s.problem, 1e-12);
    const Matrix x0 = initial_points(n, s.problem.dim(), config.x0, config.seed);
    try {
      const RunTrace t = run(s.problem, s.weights, x_star, eta, H, x0, Method::kTvab);
      out.push_back({"conservation", t.max_conservation_error <= 1e-9, false,
                     "eta " + fmt(eta) + ", max relative error " + fmt(t.max_conservation_error)});
    } catch (const DivergenceError& e) {
      out.push_back({"conservation", false, false,
                     "eta " + fmt(eta) + " diverged at iteration " + std::to_string(e.iteration())});
    }
  }

  {
    const double err = max_fd_gradient_error(s.problem, config.seed, 100);
    out.push_back({"gradients", err <= 1e-5, false, "max relative error " + fmt(err)});
  }

  if (static_cast<double>(n * C) * std::log(static_cast<double>(n)) > kLogDoubleRange) {
    out.push_back({"phi_recursion", true, true, "n^(nC) exceeds the double range"});
  } else {
    const std::size_t h = std::min<std::size_t>(H, 2000);
    try {
      const PhiSequence phi = approx_phi(s.weights, C, h);
      const double r = phi_recursion_residual(s.weights, phi.phi);
      out.push_back({"phi_recursion", r <= 1e-10, false,
                     "residual " + fmt(r) + " over " + std::to_string(h) + " steps"});
    } catch (const std::runtime_error& e) {
      out.push_back({"phi_recursion", false, false, e.what()});
    }
  }
  return out;
}

}  // namespace tvab
