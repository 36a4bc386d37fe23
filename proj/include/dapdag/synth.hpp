#pragma once

// Multi-domain synthetic data: a clinical-style classification SEM, a
// nonlinear regression SEM, and random nonlinear DAGs. Each domain draws its
// environment value E ~ N(0, sigma^2) and size N_m ~ Poisson(N), N_m >= 10.

#include <dapdag/data.hpp>
#include <dapdag/eval.hpp>
#include <dapdag/numerics.hpp>

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace dapdag {

enum class Task { classification, regression, random_dag };

inline const char* to_string(Task t) {
  switch (t) {
    case Task::classification: return "classification";
    case Task::regression: return "regression";
    default: return "random-dag";
  }
}

inline Task parse_task(const std::string& s) {
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  if (s == "random-dag") return Task::random_dag;
  throw DataError("unknown task '" + s + "' (expected classification, regression, random-dag)");
}

struct SynthConfig {
  Task task = Task::regression;
  int domains = 10;          // M
  double mean_size = 500.0;  // N
  double e_var = 1.0;        // sigma^2
  std::uint64_t seed = 0;
  double noise = 0.5;        // SEM noise standard deviation
  int dag_nodes = 10;        // random-dag: variables including the label
  double density = 0.3;      // random-dag: forward edge probability

  void validate() const {
    if (domains < 1) throw DataError("synth: domains (M) must be >= 1");
    if (!(mean_size >= 10.0)) throw DataError("synth: mean domain size (N) must be >= 10");
    if (!(e_var > 0.0)) throw DataError("synth: e_var must be > 0");
    if (!(noise >= 0.0)) throw DataError("synth: noise must be >= 0");
    if (task == Task::random_dag) {
      if (dag_nodes < 2) throw DataError("synth: dag_nodes must be >= 2");
      if (!(density >= 0.0 && density < 1.0)) throw DataError("synth: density must be in [0,1)");
    }
  }
};

inline nlohmann::json synth_config_to_json(const SynthConfig& c) {
  return {{"task", to_string(c.task)}, {"domains", c.domains},     {"mean_size", c.mean_size},
          {"e_var", c.e_var},          {"seed", c.seed},           {"noise", c.noise},
          {"dag_nodes", c.dag_nodes},  {"density", c.density}};
}

/// Strict parse; keys absent from `j` keep the value in `base`.
inline SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {}) {
  if (!j.is_object()) throw DataError("config: expected an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "task") base.task = parse_task(v.get<std::string>());
      else if (key == "domains") base.domains = v.get<int>();
      else if (key == "mean_size") base.mean_size = v.get<double>();
      else if (key == "e_var") base.e_var = v.get<double>();
      else if (key == "seed") base.seed = v.get<std::uint64_t>();
      else if (key == "noise") base.noise = v.get<double>();
      else if (key == "dag_nodes") base.dag_nodes = v.get<int>();
      else if (key == "density") base.density = v.get<double>();
      else throw DataError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw DataError("config: wrong type for '" + key + "'");
    }
  }
  return base;
}

/// One random-DAG mechanism: x = w2 . tanh(W1 x_parents + w_e * E) + noise.
struct DagMechanism {
  std::vector<int> parents;
  Matrix w1;   // parents x width
  Matrix w_e;  // 1 x width
  Matrix w2;   // width x 1

  double mean_part(const RowVector& row, double e) const {
    RowVector pre = e * w_e;
    for (std::size_t j = 0; j < parents.size(); ++j) pre += row(parents[j]) * w1.row(static_cast<Eigen::Index>(j));
    return (pre.array().tanh().matrix() * w2)(0, 0);
  }
};

struct GroundTruth {
  Task task = Task::regression;
  std::vector<std::string> names;
  Matrix adjacency;  // (i,k) = 1 for edge i -> k
  std::vector<double> e_values;
  std::vector<std::string> mechanisms;
  std::vector<DagMechanism> dag;  // random-dag only
  std::vector<int> order;         // random-dag: topological order
  int clamped_rates = 0;          // Poisson/Bernoulli parameters that needed clamping

  EdgeSet edges() const { return EdgeSet::from_matrix(adjacency); }
};

struct SynthData {
  std::vector<DomainDataset> domains;
  GroundTruth truth;
};

inline constexpr double kPoissonRateFloor = 0.1;
inline constexpr double kLogArgFloor = 1e-6;
inline constexpr int kDagWidth = 8;
inline constexpr int kMinDomainSize = 10;

// ---- classification --------------------------------------------------------

inline VariableSchema classification_schema() {
  VariableSchema s;
  s.names = {"X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "Y"};
  s.kinds.assign(9, VarKind::binary);
  s.kinds[0] = VarKind::continuous;
  return s;
}

/// Age, ethnicity, angina, myocardial infarction, ACE inhibitors, and three
/// mutually exclusive NYHA indicators; Y = 1{T > 5} for a log-normal T.
/// `clamped` is incremented whenever a rate or probability leaves its domain.
template <class Rng>
RowVector gen_classification_row(double e, Rng& rng, int* clamped = nullptr) {
  auto note = [&](bool c) {
    if (c && clamped) ++*clamped;
  };
  auto bern = [&](double p) {
    const double q = std::clamp(p, 0.0, 1.0);
    note(q != p);
    return std::bernoulli_distribution(q)(rng) ? 1.0 : 0.0;
  };
  RowVector x(9);
  double rate = 65.0 + 0.5 * e;
  note(rate < kPoissonRateFloor);
  rate = std::max(rate, kPoissonRateFloor);
  x(0) = static_cast<double>(std::poisson_distribution<long>(rate)(rng));
  x(1) = bern(0.3 - 0.025 * e);
  x(2) = bern(0.2);
  x(3) = bern(sigmoid(-0.5 + 0.2 * e + 1.3 * x(2)));
  x(4) = bern(sigmoid(-1.0 + 0.3 * e + 0.015 * x(0) + 0.001 * x(1) + 1.5 * x(2)));
  x(5) = bern(0.175 - 0.015 * e);
  x(6) = x(5) == 0.0 ? bern(0.3) : 0.0;
  x(7) = x(5) + x(6) == 0.0 ? bern(0.6) : 0.0;
  const double log_mean = 1.5 + 0.4 * e - 0.1 * (x(0) - 65.0) - 0.05 * x(1) - 1.75 * x(2) -
                          2.5 * x(3) + 0.6 * x(4) + 0.25 * x(5) - 0.75 * x(6) - 2.0 * x(7);
  const double t = std::exp(log_mean + std::normal_distribution<double>(0.0, 1.0)(rng));
  x(8) = t > 5.0 ? 1.0 : 0.0;
  return x;
}

inline Matrix classification_truth() {
  Matrix a = Matrix::Zero(9, 9);
  for (auto [i, k] : {std::pair{0, 4}, {1, 4}, {2, 3}, {2, 4}, {5, 6}, {5, 7}, {6, 7}}) a(i, k) = 1;
  for (int i = 0; i < 8; ++i) a(i, 8) = 1;
  return a;
}

// ---- regression ------------------------------------------------------------

inline VariableSchema regression_schema() {
  VariableSchema s;
  s.names = {"X1", "X2", "X3", "X4", "X5", "X6", "X7", "Y"};
  s.kinds.assign(8, VarKind::continuous);
  return s;
}

/// Noise terms of one regression row, indexed like the columns
/// (X1..X7 at 0..6, Y at 7).
using RegressionNoise = std::array<double, 8>;

/// Evaluates the regression SEM for given E and noise. Columns X1..X7, Y.
inline RowVector regression_row_from_noise(double e, const RegressionNoise& eps) {
  RowVector x(8);
  x(0) = 0.8 * e + eps[0];
  x(1) = 0.4 * x(0) * x(0) + eps[1];
  x(2) = 0.3 * e + 0.1 * std::exp(x(1)) + eps[2];
  const double arg = std::max(0.3 * x(0) * x(0) + 0.7 * x(1) * x(1), kLogArgFloor);
  x(7) = -0.5 * e * e + std::log(arg) + eps[7];
  x(3) = 0.1 * x(0) * std::sqrt(std::exp(e)) + eps[3];
  x(4) = -0.25 * e * x(3) + 0.6 * x(7) + eps[4];
  x(5) = -1.0 + 0.2 * x(2) * x(7) + eps[5];
  x(6) = -0.6 * e + 3.0 * x(5) + eps[6];
  return x;
}

/// Draws noise in causal order X1, X2, X3, Y, X4, X5, X6, X7.
template <class Rng>
RowVector gen_regression_row(double e, Rng& rng, double noise = 0.5,
                             RegressionNoise* recorded = nullptr) {
  std::normal_distribution<double> g(0.0, noise);
  RegressionNoise eps{};
  for (int idx : {0, 1, 2, 7, 3, 4, 5, 6}) eps[static_cast<std::size_t>(idx)] = noise > 0 ? g(rng) : 0.0;
  if (recorded) *recorded = eps;
  return regression_row_from_noise(e, eps);
}

inline Matrix regression_truth() {
  // X1..X7 -> 0..6, Y -> 7
  Matrix a = Matrix::Zero(8, 8);
  for (auto [i, k] : {std::pair{0, 1}, {1, 2}, {0, 7}, {1, 7}, {0, 3}, {3, 4}, {7, 4}, {2, 5},
                      {7, 5}, {5, 6}}) {
    a(i, k) = 1;
  }
  return a;
}

inline Matrix export_ground_truth_adjacency(Task task) {
  if (task == Task::classification) return classification_truth();
  if (task == Task::regression) return regression_truth();
  throw DataError("ground truth of random DAGs depends on the seed; use gen_random_dag");
}

// ---- random DAGs -----------------------------------------------------------

inline VariableSchema random_dag_schema(int nodes) {
  VariableSchema s;
  for (int i = 0; i + 1 < nodes; ++i) s.names.push_back("X" + std::to_string(i + 1));
  s.names.push_back("Y");
  s.kinds.assign(static_cast<std::size_t>(nodes), VarKind::continuous);
  return s;
}

/// Random topological order over all nodes (the label is the last column),
/// forward edges kept with probability `density`, one tanh mechanism each.
template <class Rng>
GroundTruth random_dag_structure(int nodes, double density, Rng& rng) {
  GroundTruth t;
  t.task = Task::random_dag;
  t.names = random_dag_schema(nodes).names;
  t.order.resize(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) t.order[i] = i;
  for (int i = nodes - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(t.order[i], t.order[pick(rng)]);
  }
  t.adjacency = Matrix::Zero(nodes, nodes);
  std::bernoulli_distribution edge(density);
  for (int a = 0; a < nodes; ++a)
    for (int b = a + 1; b < nodes; ++b)
      if (edge(rng)) t.adjacency(t.order[a], t.order[b]) = 1;

  std::uniform_real_distribution<double> w(-1.0, 1.0), we(-0.5, 0.5);
  t.dag.resize(static_cast<std::size_t>(nodes));
  for (int v = 0; v < nodes; ++v) {
    DagMechanism& m = t.dag[v];
    for (int p = 0; p < nodes; ++p)
      if (t.adjacency(p, v) != 0) m.parents.push_back(p);
    m.w1.resize(static_cast<Eigen::Index>(m.parents.size()), kDagWidth);
    m.w_e.resize(1, kDagWidth);
    m.w2.resize(kDagWidth, 1);
    for (Eigen::Index k = 0; k < m.w1.size(); ++k) m.w1.data()[k] = w(rng);
    for (Eigen::Index k = 0; k < m.w_e.size(); ++k) m.w_e.data()[k] = we(rng);
    for (Eigen::Index k = 0; k < m.w2.size(); ++k) m.w2.data()[k] = w(rng);
    std::string desc = t.names[v] + " = w2 . tanh(W1 [";
    for (std::size_t j = 0; j < m.parents.size(); ++j) desc += (j ? "," : "") + t.names[m.parents[j]];
    desc += "] + w_e E) + eps";
    t.mechanisms.push_back(desc);
  }
  return t;
}

template <class Rng>
RowVector gen_random_dag_row(const GroundTruth& t, double e, double noise, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  RowVector x = RowVector::Zero(static_cast<Eigen::Index>(t.dag.size()));
  for (int v : t.order) x(v) = t.dag[v].mean_part(x, e) + noise * g(rng);
  return x;
}

// ---- domain loop -----------------------------------------------------------

inline std::string domain_id(int m) {
  std::string s = std::to_string(m);
  return "domain_" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

inline SynthData gen_domains(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 master(cfg.seed);
  SynthData out;
  VariableSchema schema;
  GroundTruth& truth = out.truth;
  switch (cfg.task) {
    case Task::classification:
      schema = classification_schema();
      truth.adjacency = classification_truth();
      truth.mechanisms = {"X1 ~ Pois(65 + 0.5E)",
                          "X2 ~ Bernoulli(0.3 - 0.025E)",
                          "X3 ~ Bernoulli(0.2)",
                          "X4 ~ Bernoulli(sigmoid(-0.5 + 0.2E + 1.3X3))",
                          "X5 ~ Bernoulli(sigmoid(-1 + 0.3E + 0.015X1 + 0.001X2 + 1.5X3))",
                          "X6 ~ Bernoulli(0.175 - 0.015E)",
                          "X7 ~ Bernoulli(0.3) * 1{X6 = 0}",
                          "X8 ~ Bernoulli(0.6) * 1{X6 + X7 = 0}",
                          "Y = 1{T > 5}, T ~ logNormal(1.5 + 0.4E - 0.1(X1 - 65) - 0.05X2 - 1.75X3 "
                          "- 2.5X4 + 0.6X5 + 0.25X6 - 0.75X7 - 2X8, 1)"};
      break;
    case Task::regression:
      schema = regression_schema();
      truth.adjacency = regression_truth();
      truth.mechanisms = {"X1 = 0.8E + e1",
                          "X2 = 0.4X1^2 + e2",
                          "X3 = 0.3E + 0.1exp(X2) + e3",
                          "X4 = 0.1X1 sqrt(exp(E)) + e4",
                          "X5 = -0.25E X4 + 0.6Y + e5",
                          "X6 = -1 + 0.2X3 Y + e6",
                          "X7 = -0.6E + 3X6 + e7",
                          "Y = -0.5E^2 + log(max(0.3X1^2 + 0.7X2^2, 1e-6)) + ey"};
      break;
    case Task::random_dag:
      schema = random_dag_schema(cfg.dag_nodes);
      truth = random_dag_structure(cfg.dag_nodes, cfg.density, master);
      break;
  }
  truth.task = cfg.task;
  truth.names = schema.names;
  if (!is_acyclic(truth.edges())) throw DataError("synth: ground-truth graph is cyclic");

  std::normal_distribution<double> e_dist(0.0, std::sqrt(cfg.e_var));
  std::poisson_distribution<long> size_dist(cfg.mean_size);
  for (int m = 0; m < cfg.domains; ++m) {
    const double e = e_dist(master);
    const long n = std::max<long>(size_dist(master), kMinDomainSize);
    std::mt19937_64 rng(master());
    DomainDataset ds;
    ds.id = domain_id(m);
    ds.schema = schema;
    ds.data.resize(n, schema.variable_count());
    for (long r = 0; r < n; ++r) {
      switch (cfg.task) {
        case Task::classification:
          ds.data.row(r) = gen_classification_row(e, rng, &truth.clamped_rates);
          break;
        case Task::regression:
          ds.data.row(r) = gen_regression_row(e, rng, cfg.noise);
          break;
        case Task::random_dag:
          ds.data.row(r) = gen_random_dag_row(truth, e, cfg.noise, rng);
          break;
      }
    }
    truth.e_values.push_back(e);
    out.domains.push_back(std::move(ds));
  }
  return out;
}

inline nlohmann::json truth_to_json(const GroundTruth& t) {
  nlohmann::json adj = nlohmann::json::array();
  for (Eigen::Index i = 0; i < t.adjacency.rows(); ++i) {
    std::vector<int> row;
    for (Eigen::Index k = 0; k < t.adjacency.cols(); ++k) row.push_back(t.adjacency(i, k) != 0 ? 1 : 0);
    adj.push_back(row);
  }
  return {{"format", "dapdag-truth/1"}, {"task", to_string(t.task)},  {"names", t.names},
          {"adjacency", adj},           {"e_values", t.e_values},     {"mechanisms", t.mechanisms},
          {"clamped_rates", t.clamped_rates}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "dapdag-truth/1") throw DataError("ground truth: unknown format");
  GroundTruth t;
  t.task = parse_task(j.at("task").get<std::string>());
  t.names = j.at("names").get<std::vector<std::string>>();
  const auto adj = j.at("adjacency").get<std::vector<std::vector<int>>>();
  const auto n = static_cast<Eigen::Index>(adj.size());
  t.adjacency = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(adj[i].size()) != n) throw DataError("ground truth: adjacency not square");
    for (Eigen::Index k = 0; k < n; ++k) t.adjacency(i, k) = adj[i][k];
  }
  t.e_values = j.at("e_values").get<std::vector<double>>();
  t.mechanisms = j.value("mechanisms", std::vector<std::string>{});
  t.clamped_rates = j.value("clamped_rates", 0);
  return t;
}

/// Writes one CSV per domain, schema.json and truth.json into `dir`.
inline void write_synth(const SynthData& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw DataError("cannot create output directory " + dir.string());
  }
  for (const auto& ds : data.domains) write_csv(ds, dir / (ds.id + ".csv"));
  save_schema(data.domains.front().schema, dir / "schema.json");
  std::ofstream out(dir / "truth.json");
  if (!out) throw DataError("cannot write " + (dir / "truth.json").string());
  out << truth_to_json(data.truth).dump(2) << '\n';
}

}  // namespace dapdag
