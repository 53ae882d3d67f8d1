#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tvab/config.hpp"
#include "tvab/optimizer.hpp"

namespace tvab {

struct RateFit {
  double slope = 0.0;  // per-iteration slope of log10(residual)
  double r2 = 0.0;
  std::size_t first = 0;  // window [first, last] of iteration indices
  std::size_t last = 0;
  std::size_t window() const { return last - first + 1; }
};

inline constexpr double kResidualFloor = 1e-14;

/// Least squares of log10(residual) against k. Only the leading run of
/// residuals above `floor` is used, and its first fifth is dropped as
/// burn-in. Throws std::invalid_argument with fewer than 10 usable points.
RateFit fit_rate(const std::vector<double>& residuals, double floor = kResidualFloor);

struct RunRecord {
  Method method = Method::kTvab;
  double eta = 0.0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::uint64_t diverged_at = 0;
  std::vector<double> residuals;
  std::optional<RateFit> fit;
  double max_conservation_error = 0.0;
  double wall_seconds = 0.0;
  std::string csv;  // file name relative to the output directory, empty if none
  double final_residual() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  Vector x_star;
  double L = 0.0;
  double mu = 0.0;
  std::vector<RunRecord> runs;
  std::map<Method, double> best_eta;  // methods with at least one convergent run

  /// Grid-best run of a method; nullptr if every run diverged.
  const RunRecord* best(Method m) const;
};

struct ExperimentOptions {
  bool write_files = true;
};

/// Runs every (method, eta) of the config on one problem, graph and x0.
/// Writes one trace CSV per convergent run, summary.csv, timing.txt and
/// plot.py into config.output. Divergent runs appear only in the summary.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ExperimentOptions& options = {});

/// Best eta per configured method over `grid` (replacing each method's own
/// eta/grid). Throws std::runtime_error naming the method when every grid
/// point diverges.
std::map<Method, double> grid_search_eta(const ExperimentConfig& config,
                                         const std::vector<double>& grid);

std::string trace_file_name(Method m, double eta, std::uint64_t seed);
std::string format_real(double x);

/// Writes output_dir/plot.py (matplotlib). Every directory holding trace
/// CSVs (output_dir itself or its immediate subdirectories) becomes one
/// figure with one curve per trace, log-scale residual axis.
std::filesystem::path emit_plot_script(const std::filesystem::path& output_dir);

/// Theory-module report for the config's graph and problem, as
/// "key: value" lines. Heavy parts are skipped with a reason when the
/// constants are not representable.
struct CertifyOptions {
  std::size_t phi_horizon = 0;  // 0: min(config.horizon, 2000)
};
std::string certify_report(const ExperimentConfig& config, const CertifyOptions& options = {});

struct CheckResult {
  std::string name;
  bool passed = false;
  bool skipped = false;
  std::string detail;
};

/// Invariant suite: weight stochasticity and self-loops over the horizon,
/// C-bounded connectivity, gradient-tracking conservation, finite-difference
/// gradients and the phi recursion.
std::vector<CheckResult> run_checks(const ExperimentConfig& config);

}  // namespace tvab
