// tvab_cli: run / certify / check / grid on a config file or built-in preset.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "tvab/config.hpp"
#include "tvab/harness.hpp"

using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> horizon;
};

tvab::ExperimentConfig load(const std::string& source, const Overrides& o) {
  tvab::ExperimentConfig c = tvab::resolve_config(source);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output = *o.out;
  if (o.horizon) {
    if (*o.horizon == 0) throw tvab::ConfigError("horizon", "must be positive");
    c.horizon = *o.horizon;
  }
  return c;
}

int fail(const json& err, int code) {
  std::cerr << err.dump() << "\n";
  return code;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::istringstream in(text);
  for (std::string w; in >> w;) {
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(w, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != w.size()) throw tvab::ConfigError("--grid", "not a number: '" + w + "'");
    grid.push_back(x);
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed optimization over time-varying digraphs (TV-AB)"};
  app.require_subcommand(1);

  Overrides o;
  std::string source;
  std::string grid_text;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", source, "config file or preset (fig4, fig6, fig7, fig8)")->required();
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--horizon", o.horizon, "iteration count K");
  };
  auto* run = app.add_subcommand("run", "run every configured (method, eta) and write CSVs");
  auto* certify = app.add_subcommand("certify", "report the convergence certificate quantities");
  auto* check = app.add_subcommand("check", "run the invariant suite");
  auto* grid = app.add_subcommand("grid", "select the best eta per method");
  for (auto* sub : {run, certify, check, grid}) add_common(sub);
  grid->add_option("--grid", grid_text, "space-separated step sizes (default: the config's grids)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail({{"error", "usage"}, {"message", e.what()}}, 2);
  }

  try {
    const tvab::ExperimentConfig c = load(source, o);
    if (*run) {
      const auto res = tvab::run_experiment(c);
      for (const auto& r : res.runs) {
        std::cout << tvab::method_name(r.method) << " eta=" << tvab::format_real(r.eta);
        if (r.diverged) {
          std::cout << " diverged at k=" << r.diverged_at << "\n";
          continue;
        }
        std::cout << " final=" << r.final_residual();
        if (r.fit) std::cout << " slope=" << r.fit->slope << " r2=" << r.fit->r2;
        std::cout << (res.best(r.method) == &r ? " [best]" : "") << "\n";
      }
      std::cout << "wrote " << c.output << "\n";
    } else if (*certify) {
      const std::string report = tvab::certify_report(c);
      std::cout << report;
      std::filesystem::create_directories(c.output);
      std::ofstream(std::filesystem::path(c.output) / "certify.txt") << report;
    } else if (*check) {
      json failed = json::array();
      for (const auto& r : tvab::run_checks(c)) {
        std::cout << (r.skipped ? "SKIP " : r.passed ? "PASS " : "FAIL ") << r.name << ": "
                  << r.detail << "\n";
        if (!r.passed) failed.push_back(r.name);
      }
      if (!failed.empty()) return fail({{"error", "check_failed"}, {"checks", failed}}, 1);
    } else if (*grid) {
      std::map<tvab::Method, double> best;
      if (grid_text.empty()) {
        best = tvab::run_experiment(c, {.write_files = false}).best_eta;
        for (const auto& m : c.methods) {
          if (!best.count(m.method)) {
            throw std::runtime_error("every step size diverged for " +
                                     std::string(tvab::method_name(m.method)));
          }
        }
      } else {
        best = tvab::grid_search_eta(c, parse_grid(grid_text));
      }
      for (const auto& [m, eta] : best) {
        std::cout << tvab::method_name(m) << " " << tvab::format_real(eta) << "\n";
      }
    }
  } catch (const tvab::ConfigError& e) {
    return fail({{"error", "config"}, {"field", e.field()}, {"message", e.what()}}, 2);
  } catch (const std::exception& e) {
    return fail({{"error", "runtime"}, {"message", e.what()}}, 1);
  }
  return 0;
}
