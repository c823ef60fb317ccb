#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "agrg/common.hpp"
#include "agrg/meanfield.hpp"

namespace agrg {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& j, const std::string& where,
                                const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw config_error("unknown key '" + it.key() + "' in " + where);
}

inline const json& require(const json& j, const std::string& key,
                           const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw config_error("missing required field '" + key + "' in " + where);
  return *it;
}

inline std::vector<std::vector<double>> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open CSV file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw config_error("CSV file has no data rows: " + path);
  return rows;
}

inline std::vector<std::pair<double, double>> load_pairs_csv(
    const std::string& path) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : load_csv(path)) {
    if (row.size() != 2)
      throw config_error("expected two columns per row in " + path);
    pts.emplace_back(row[0], row[1]);
  }
  return pts;
}

}  // namespace detail

inline SpinMeasure measure_from_json(const json& j, std::string* warning) {
  if (!j.is_object()) throw config_error("measure spec must be an object");
  const std::string type = detail::require(j, "type", "measure");
  const int nodes = j.value("nodes", 200);
  if (type == "ising") {
    detail::reject_unknown_keys(j, "measure", {"type"});
    return make_ising();
  }
  if (type == "uniform") {
    detail::reject_unknown_keys(j, "measure", {"type", "nodes"});
    return make_uniform(nodes);
  }
  if (type == "beta") {
    detail::reject_unknown_keys(j, "measure", {"type", "b", "nodes"});
    return make_beta(double(detail::require(j, "b", "measure")), nodes);
  }
  if (type == "step") {
    detail::reject_unknown_keys(j, "measure", {"type", "b", "nodes"});
    double b = j.value("b", step_default_b());
    if (warning && std::fabs(b - step_default_b()) > 1e-12)
      *warning = "step measure with non-default b: kappa_4 does not vanish";
    return make_step(b, nodes);
  }
  if (type == "sphere_marginal") {
    detail::reject_unknown_keys(j, "measure", {"type", "q", "nodes"});
    return make_sphere_marginal(int(detail::require(j, "q", "measure")), nodes);
  }
  if (type == "custom") {
    detail::reject_unknown_keys(j, "measure", {"type", "csv", "nodes_per_segment"});
    return make_custom_density(
        detail::load_pairs_csv(detail::require(j, "csv", "measure")),
        j.value("nodes_per_segment", 16));
  }
  throw config_error("unknown measure type: " + type);
}

inline Observable observable_from_json(const json& j) {
  if (j.is_null()) return Observable::identity();
  if (!j.is_object()) throw config_error("observable spec must be an object");
  detail::reject_unknown_keys(j, "observable", {"type"});
  const std::string type = j.value("type", "identity");
  if (type == "identity") return Observable::identity();
  if (type == "cube") return Observable::cube();
  if (type == "half_sine") return Observable::half_sine();
  throw config_error("unknown observable type: " + type);
}

inline std::variant<Rank2Kernel, GridKernel> kernel_from_json(
    const json& j, const SpinMeasure& mu, const Observable& g) {
  if (!j.is_object()) throw config_error("kernel spec must be an object");
  const std::string type = detail::require(j, "type", "kernel");
  if (type == "rank2") {
    detail::reject_unknown_keys(j, "kernel", {"type", "c", "theta"});
    return Rank2Kernel(double(detail::require(j, "c", "kernel")),
                       double(detail::require(j, "theta", "kernel")), g);
  }
  if (type == "ising") {
    detail::reject_unknown_keys(j, "kernel", {"type", "beta"});
    return ising_to_rank2(double(detail::require(j, "beta", "kernel")));
  }
  if (type == "grid") {
    detail::reject_unknown_keys(j, "kernel", {"type", "csv"});
    const auto rows = detail::load_csv(detail::require(j, "csv", "kernel"));
    NodeSystem ns = node_system(mu);
    const std::size_t n = ns.x.size();
    if (rows.size() != n)
      throw config_error("grid kernel CSV row count must equal the measure "
                         "support size (" + std::to_string(n) + ")");
    std::vector<double> m;
    m.reserve(n * n);
    for (const auto& row : rows) {
      if (row.size() != n)
        throw config_error("grid kernel CSV must be a square matrix");
      for (double v : row) m.push_back(v);
    }
    return GridKernel(ns.x, std::move(m));
  }
  throw config_error("unknown kernel type: " + type);
}

inline WeightModel weights_from_json(const json& j) {
  if (!j.is_object()) throw config_error("weights spec must be an object");
  const std::string type = detail::require(j, "type", "weights");
  if (type == "deterministic") {
    detail::reject_unknown_keys(j, "weights", {"type", "w"});
    return WeightModel::deterministic(double(detail::require(j, "w", "weights")));
  }
  if (type == "discrete") {
    detail::reject_unknown_keys(j, "weights", {"type", "atoms"});
    const json& atoms = detail::require(j, "atoms", "weights");
    std::vector<std::pair<double, double>> a;
    for (const auto& row : atoms) {
      if (!row.is_array() || row.size() != 2)
        throw config_error("weights.atoms must be [w, prob] pairs");
      a.emplace_back(double(row[0]), double(row[1]));
    }
    return WeightModel::discrete(std::move(a));
  }
  if (type == "pareto") {
    detail::reject_unknown_keys(j, "weights", {"type", "tau", "w_min"});
    return WeightModel::pareto(double(detail::require(j, "tau", "weights")),
                               j.value("w_min", 1.0));
  }
  if (type == "tabulated") {
    detail::reject_unknown_keys(j, "weights", {"type", "csv"});
    return WeightModel::tabulated(
        detail::load_pairs_csv(detail::require(j, "csv", "weights")));
  }
  throw config_error("unknown weights type: " + type);
}

struct RunConfig {
  ModelSpec model;
  json raw;
  std::uint64_t seed = 1;
  std::string warning;

  const json command_block(const std::string& name) const {
    auto it = raw.find(name);
    return it == raw.end() ? json::object() : *it;
  }
};

inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw config_error("config root must be a JSON object");
  detail::reject_unknown_keys(
      j, "config",
      {"measure", "observable", "kernel", "weights", "h", "seed", "solve",
       "curve", "exponents", "general", "simulate", "cumulants", "uniqueness"});
  RunConfig cfg;
  cfg.raw = j;
  cfg.model.measure = measure_from_json(
      detail::require(j, "measure", "config"), &cfg.warning);
  cfg.model.g = observable_from_json(j.contains("observable") ? j["observable"]
                                                              : json());
  cfg.model.kernel = kernel_from_json(detail::require(j, "kernel", "config"),
                                      cfg.model.measure, cfg.model.g);
  cfg.model.weights =
      weights_from_json(detail::require(j, "weights", "config"));
  cfg.model.h = j.value("h", 0.0);
  cfg.seed = j.value("seed", std::uint64_t(1));
  validate(cfg.model, /*require_rank2_symmetry=*/false);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  // CSV references resolve relative to the config file.
  const auto slash = path.find_last_of('/');
  if (slash != std::string::npos) {
    const std::string dir = path.substr(0, slash + 1);
    for (const char* section : {"measure", "kernel", "weights"}) {
      if (j.contains(section) && j[section].is_object() &&
          j[section].contains("csv")) {
        const std::string p = j[section]["csv"];
        if (!p.empty() && p[0] != '/') j[section]["csv"] = dir + p;
      }
    }
  }
  return config_from_json(j);
}

inline std::string describe(const ModelSpec& m) {
  std::ostringstream os;
  os << "measure:   " << m.measure.name << " (support "
     << m.measure.support_size() << ", "
     << (m.measure.symmetric ? "symmetric" : "asymmetric") << ")\n";
  os << "observable: " << m.g.name << " (odd=" << (m.g.odd ? "yes" : "no")
     << ", bound=" << m.g.bound << ")\n";
  if (m.is_rank2())
    os << "kernel:    rank2 c=" << m.rank2().c()
       << " theta=" << m.rank2().theta()
       << (m.rank2().positive() ? "" : " [NOT POSITIVE]") << "\n";
  else
    os << "kernel:    grid on " << m.grid().size() << " nodes\n";
  os << "weights:   " << m.weights.describe() << " (E[W]=" << m.weights.mean()
     << ", E[W^2]=" << m.weights.second_moment() << ")\n";
  os << "field h:   " << m.h << "\n";
  return os.str();
}

}  // namespace agrg
