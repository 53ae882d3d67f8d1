#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tvab/graphs.hpp"
#include "tvab/objectives.hpp"
#include "tvab/optimizer.hpp"

namespace tvab {

/// Config problems carry the offending field path, e.g. "graph.period".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ProblemSpec {
  std::string family = "logistic";  // logistic | least_squares | line_fit | quadratic
  std::size_t samples = 10;         // m_i, or rows of H_i for least squares
  std::size_t dim = 6;
  double lambda = 1.0;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed

  bool operator==(const ProblemSpec&) const = default;
};

struct GraphSpec {
  // static | complete | ring | periodic | periodic_ring | clustered | random | gossip
  std::string kind = "periodic_ring";
  std::size_t n = 10;
  std::size_t period = 4;
  std::size_t clusters = 5;
  std::size_t cluster_size = 12;
  double extra_link_prob = -1.0;  // random: negative means 2/n
  std::string sampler = "uniform";  // gossip: uniform | ring
  /// static: one edge list; periodic: one per graph. Format "0->1 1->2".
  std::vector<std::string> edges;
  std::size_t C = 4;  // claimed connectivity bound
  std::optional<std::uint64_t> seed;

  bool operator==(const GraphSpec&) const = default;
};

struct MethodSpec {
  Method method = Method::kTvab;
  std::optional<double> eta;
  std::vector<double> grid;

  bool operator==(const MethodSpec&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSpec problem;
  GraphSpec graph;
  std::vector<MethodSpec> methods;
  std::size_t horizon = 1000;
  InitPolicy x0 = InitPolicy::kGaussianVar9;
  std::uint64_t seed = 1;
  std::string output = "out";

  std::uint64_t problem_seed() const { return problem.seed.value_or(seed); }
  std::uint64_t graph_seed() const { return graph.seed.value_or(seed); }
  std::size_t agents() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Flat "key = value" text; '#' starts a comment. Throws ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
/// Canonical text; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& c);

/// Built-in presets: fig4, fig6, fig7, fig8. Throws ConfigError otherwise.
std::string preset_text(std::string_view name);
std::vector<std::string> preset_names();
/// A preset name or a path to a config file.
ExperimentConfig resolve_config(const std::string& name_or_path);

GraphSequence make_graph_sequence(const ExperimentConfig& c);
Problem make_problem(const ExperimentConfig& c);

}  // namespace tvab
