#include "tvab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace tvab {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    out.emplace_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::uint64_t to_uint(const std::string& field, std::string_view v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(field, "expected a nonnegative integer, got '" + std::string(v) + "'");
  }
  return x;
}

double to_real(const std::string& field, std::string_view v) {
  double x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(field, "expected a number, got '" + std::string(v) + "'");
  }
  return x;
}

std::string fmt(double x) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

const std::vector<std::string> kFamilies{"logistic", "least_squares", "line_fit", "quadratic"};
const std::vector<std::string> kKinds{"static",        "complete",  "ring",   "periodic",
                                      "periodic_ring", "clustered", "random", "gossip"};

void require_one_of(const std::string& field, const std::string& v,
                    const std::vector<std::string>& allowed) {
  if (std::find(allowed.begin(), allowed.end(), v) != allowed.end()) return;
  std::string list;
  for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
  throw ConfigError(field, "unknown value '" + v + "' (expected one of: " + list + ")");
}

constexpr std::string_view kFig4 = R"(# Periodic ring with period 4, distributed logistic regression.
name = fig4
seed = 1
horizon = 4000
x0 = gaussian9
output = out/fig4
problem.family = logistic
problem.samples = 10
problem.dim = 6
problem.lambda = 1
graph.kind = periodic_ring
graph.n = 10
graph.period = 4
graph.C = 4
methods = tvab push_diging subgradient_push_const subgradient_push_dimin
grid.tvab = 0.001 0.0015 0.002 0.0025 0.003 0.0035
grid.push_diging = 0.001 0.0015 0.002 0.0025 0.003 0.0035
grid.subgradient_push_const = 0.0005 0.001 0.003 0.01 0.03
grid.subgradient_push_dimin = 0.003 0.01 0.03 0.1 0.3
)";

constexpr std::string_view kFig6 = R"(# 60 agents in 5 clusters of 12; inter-cluster links every 50th iteration.
name = fig6
seed = 1
horizon = 80000
x0 = gaussian
output = out/fig6
problem.family = least_squares
problem.samples = 2
problem.dim = 10
graph.kind = clustered
graph.clusters = 5
graph.cluster_size = 12
graph.period = 50
graph.C = 50
methods = tvab push_diging subgradient_push_dimin
grid.tvab = 0.0001 0.0002 0.0003
grid.push_diging = 0.0001 0.0002 0.0003
eta.subgradient_push_dimin = 0.01
)";

constexpr std::string_view kFig7 = R"(# 80 agents; a random strongly connected digraph every 15th iteration,
# self-loops only in between.
name = fig7
seed = 1
horizon = 5000
x0 = gaussian9
output = out/fig7
problem.family = logistic
problem.samples = 10
problem.dim = 6
problem.lambda = 1
graph.kind = random
graph.n = 80
graph.period = 15
graph.C = 15
methods = tvab
grid.tvab = 0.001 0.002 0.003
)";

constexpr std::string_view kFig8 = R"(# Gossip: one directed link per iteration; line fit from 10 noisy samples per agent.
name = fig8
seed = 1
horizon = 3000
x0 = gaussian
output = out/fig8
problem.family = line_fit
problem.samples = 10
graph.kind = gossip
graph.n = 10
graph.sampler = uniform
graph.C = 1
methods = tvab
grid.tvab = 0.003 0.01 0.03
)";

}  // namespace

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(field.empty() ? message : field + ": " + message),
      field_(std::move(field)) {}

std::size_t ExperimentConfig::agents() const {
  return graph.kind == "clustered" ? graph.clusters * graph.cluster_size : graph.n;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::map<std::string, std::string> eta_keys, grid_keys;
  std::vector<std::string> method_names;
  bool have_methods = false;

  std::size_t line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));

    if (key == "name") c.name = value;
    else if (key == "seed") c.seed = to_uint(key, value);
    else if (key == "horizon") c.horizon = to_uint(key, value);
    else if (key == "output") c.output = value;
    else if (key == "x0") {
      try {
        c.x0 = parse_init_policy(value);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
      }
    } else if (key == "methods") {
      method_names = words(value);
      have_methods = true;
    } else if (key == "problem.family") {
      require_one_of(key, value, kFamilies);
      c.problem.family = value;
    } else if (key == "problem.samples") c.problem.samples = to_uint(key, value);
    else if (key == "problem.dim") c.problem.dim = to_uint(key, value);
    else if (key == "problem.lambda") c.problem.lambda = to_real(key, value);
    else if (key == "problem.seed") c.problem.seed = to_uint(key, value);
    else if (key == "graph.kind") {
      require_one_of(key, value, kKinds);
      c.graph.kind = value;
    } else if (key == "graph.n") c.graph.n = to_uint(key, value);
    else if (key == "graph.period") c.graph.period = to_uint(key, value);
    else if (key == "graph.clusters") c.graph.clusters = to_uint(key, value);
    else if (key == "graph.cluster_size") c.graph.cluster_size = to_uint(key, value);
    else if (key == "graph.extra_link_prob") c.graph.extra_link_prob = to_real(key, value);
    else if (key == "graph.sampler") {
      require_one_of(key, value, {"uniform", "ring"});
      c.graph.sampler = value;
    } else if (key == "graph.edges") c.graph.edges = split(value, '|');
    else if (key == "graph.C") c.graph.C = to_uint(key, value);
    else if (key == "graph.seed") c.graph.seed = to_uint(key, value);
    else if (key.rfind("eta.", 0) == 0) eta_keys[key.substr(4)] = value;
    else if (key.rfind("grid.", 0) == 0) grid_keys[key.substr(5)] = value;
    else throw ConfigError(key, "unknown key");
  }

  if (!have_methods) throw ConfigError("methods", "missing");
  for (const std::string& name : method_names) {
    MethodSpec m;
    try {
      m.method = parse_method(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("methods", e.what());
    }
    if (auto it = eta_keys.find(name); it != eta_keys.end()) {
      m.eta = to_real("eta." + name, it->second);
      eta_keys.erase(it);
    }
    if (auto it = grid_keys.find(name); it != grid_keys.end()) {
      for (const std::string& w : words(it->second)) m.grid.push_back(to_real("grid." + name, w));
      if (m.grid.empty()) throw ConfigError("grid." + name, "empty grid");
      grid_keys.erase(it);
    }
    if (!m.eta && m.grid.empty()) throw ConfigError("eta." + name, "method needs eta or grid");
    c.methods.push_back(std::move(m));
  }
  if (!eta_keys.empty()) throw ConfigError("eta." + eta_keys.begin()->first, "method not listed");
  if (!grid_keys.empty()) throw ConfigError("grid." + grid_keys.begin()->first, "method not listed");
  if (c.methods.empty()) throw ConfigError("methods", "no methods listed");

  if (c.horizon == 0) throw ConfigError("horizon", "must be positive");
  if (c.graph.C == 0) throw ConfigError("graph.C", "must be positive");
  if (c.agents() == 0) throw ConfigError("graph.n", "must be positive");
  if ((c.graph.kind == "static" && c.graph.edges.size() != 1) ||
      (c.graph.kind == "periodic" && c.graph.edges.empty())) {
    throw ConfigError("graph.edges", "required for kind '" + c.graph.kind + "'");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "name = " << c.name << "\n";
  out << "seed = " << c.seed << "\n";
  out << "horizon = " << c.horizon << "\n";
  out << "x0 = " << init_policy_name(c.x0) << "\n";
  out << "output = " << c.output << "\n";
  out << "problem.family = " << c.problem.family << "\n";
  out << "problem.samples = " << c.problem.samples << "\n";
  out << "problem.dim = " << c.problem.dim << "\n";
  out << "problem.lambda = " << fmt(c.problem.lambda) << "\n";
  if (c.problem.seed) out << "problem.seed = " << *c.problem.seed << "\n";
  out << "graph.kind = " << c.graph.kind << "\n";
  out << "graph.n = " << c.graph.n << "\n";
  out << "graph.period = " << c.graph.period << "\n";
  out << "graph.clusters = " << c.graph.clusters << "\n";
  out << "graph.cluster_size = " << c.graph.cluster_size << "\n";
  out << "graph.extra_link_prob = " << fmt(c.graph.extra_link_prob) << "\n";
  out << "graph.sampler = " << c.graph.sampler << "\n";
  if (!c.graph.edges.empty()) {
    out << "graph.edges = ";
    for (std::size_t i = 0; i < c.graph.edges.size(); ++i) {
      out << (i ? " | " : "") << c.graph.edges[i];
    }
    out << "\n";
  }
  out << "graph.C = " << c.graph.C << "\n";
  if (c.graph.seed) out << "graph.seed = " << *c.graph.seed << "\n";
  out << "methods =";
  for (const auto& m : c.methods) out << " " << method_name(m.method);
  out << "\n";
  for (const auto& m : c.methods) {
    const std::string name(method_name(m.method));
    if (m.eta) out << "eta." << name << " = " << fmt(*m.eta) << "\n";
    if (!m.grid.empty()) {
      out << "grid." << name << " =";
      for (double g : m.grid) out << " " << fmt(g);
      out << "\n";
    }
  }
  return out.str();
}

std::vector<std::string> preset_names() { return {"fig4", "fig6", "fig7", "fig8"}; }

std::string preset_text(std::string_view name) {
  if (name == "fig4") return std::string(kFig4);
  if (name == "fig6") return std::string(kFig6);
  if (name == "fig7") return std::string(kFig7);
  if (name == "fig8") return std::string(kFig8);
  throw ConfigError("", "unknown preset '" + std::string(name) + "'");
}

ExperimentConfig resolve_config(const std::string& name_or_path) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return parse_config(preset_text(name_or_path));
  }
  return load_config(name_or_path);
}

GraphSequence make_graph_sequence(const ExperimentConfig& c) {
  const GraphSpec& g = c.graph;
  const std::uint64_t seed = c.graph_seed();
  try {
    if (g.kind == "static") return make_static(parse_edge_list(g.n, g.edges.at(0)));
    if (g.kind == "complete") return make_static(complete_digraph(g.n));
    if (g.kind == "ring") return make_static(directed_ring(g.n));
    if (g.kind == "periodic") {
      std::vector<Digraph> graphs;
      for (const auto& e : g.edges) graphs.push_back(parse_edge_list(g.n, e));
      return make_periodic(std::move(graphs));
    }
    if (g.kind == "periodic_ring") return make_periodic_ring(g.n, g.period);
    if (g.kind == "clustered") return make_clustered(g.clusters, g.cluster_size, g.period, seed);
    if (g.kind == "random") return make_random_bounded(g.n, g.period, seed, g.extra_link_prob);
    if (g.kind == "gossip") {
      return make_gossip(g.n, seed,
                         g.sampler == "ring" ? GossipSampler::kRingNeighbor : GossipSampler::kUniformPair);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("graph", e.what());
  }
  throw ConfigError("graph.kind", "unknown kind '" + g.kind + "'");
}

Problem make_problem(const ExperimentConfig& c) {
  const ProblemSpec& p = c.problem;
  const std::size_t n = c.agents();
  const std::uint64_t seed = c.problem_seed();
  try {
    if (p.family == "logistic") {
      LogisticSpec s;
      s.agents = n;
      s.samples = p.samples;
      s.dim = p.dim;
      s.lambda = p.lambda;
      s.seed = seed;
      return make_logistic_problem(s);
    }
    if (p.family == "least_squares") return make_least_squares_problem(n, p.samples, p.dim, seed);
    if (p.family == "line_fit") {
      LineFitSpec s;
      s.agents = n;
      s.samples = p.samples;
      s.seed = seed;
      return make_line_fit_problem(s);
    }
    if (p.family == "quadratic") return make_quadratic_problem(n, p.dim, seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("problem", e.what());
  }
  throw ConfigError("problem.family", "unknown family '" + p.family + "'");
}

}  // namespace tvab
