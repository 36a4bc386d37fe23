#pragma once

// Experiment orchestration over synthetic domains: leave-one-domain-out
// adaptation, ablations, environment-distance studies and DAG recovery.
// Every (seed, target, variant) run is an independent job with its own
// derived seed, so results do not depend on the number of worker threads.

#include <dapdag/eval.hpp>
#include <dapdag/format.hpp>
#include <dapdag/svg.hpp>
#include <dapdag/synth.hpp>
#include <dapdag/trainer.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace dapdag {

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Study { loo, ablation, e_distance, e_trend, dag };

inline const char* to_string(Study s) {
  switch (s) {
    case Study::loo: return "loo";
    case Study::ablation: return "ablation";
    case Study::e_distance: return "e-distance";
    case Study::e_trend: return "e-trend";
    case Study::dag: return "dag";
  }
  return "?";
}

inline Study parse_study(const std::string& s) {
  for (Study v : {Study::loo, Study::ablation, Study::e_distance, Study::e_trend, Study::dag}) {
    if (s == to_string(v)) return v;
  }
  throw ExperimentError("unknown study '" + s + "' (expected loo, ablation, e-distance, e-trend or dag)");
}

/// Training defaults used by experiments: a faster step and a longer budget
/// than the library defaults.
inline TrainConfig experiment_train_defaults() {
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.max_epochs = 300;
  c.patience = 20;
  c.hyper.beta = 1e-3;
  return c;
}

struct ExperimentConfig {
  Study study = Study::loo;
  Task task = Task::regression;
  int domains = 10;
  double mean_size = 500.0;
  double e_var = 1.0;
  double noise = 0.5;
  int sources = 5;                        // M for loo and ablation
  std::vector<int> source_counts{3, 7};   // M values for e-trend and dag
  int held_out = 10;                      // e-trend: domains encoded after training
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<int> targets;               // loo/ablation targets; empty means all
  bool baseline = true;
  int dag_nodes = 10;
  double density = 0.3;
  double threshold = 0.3;
  SinkhornConfig sinkhorn{0.05, 2000, 1e-6, 2.0};
  TrainConfig train = experiment_train_defaults();
  int threads = 1;

  void validate() const {
    if (domains < 2) throw ExperimentError("experiment: domains must be >= 2");
    if (!(mean_size >= 10.0)) throw ExperimentError("experiment: mean_size must be >= 10");
    if (!(e_var > 0.0)) throw ExperimentError("experiment: e_var must be > 0");
    if (!(noise >= 0.0)) throw ExperimentError("experiment: noise must be >= 0");
    if (seeds.empty()) throw ExperimentError("experiment: seeds must not be empty");
    if (threads < 1) throw ExperimentError("experiment: threads must be >= 1");
    if ((study == Study::loo || study == Study::ablation) && (sources < 1 || sources >= domains)) {
      throw ExperimentError("experiment: sources must be in [1, domains - 1]");
    }
    for (int t : targets) {
      if (t < 0 || t >= domains) throw ExperimentError("experiment: target index out of range");
    }
    if (study == Study::e_trend || study == Study::dag) {
      if (source_counts.empty()) throw ExperimentError("experiment: source_counts must not be empty");
      for (int m : source_counts) {
        if (m < 1) throw ExperimentError("experiment: source_counts entries must be >= 1");
      }
    }
    if (study == Study::e_trend && held_out < 3) throw ExperimentError("experiment: held_out must be >= 3");
    if (study == Study::dag && task != Task::random_dag) {
      throw ExperimentError("experiment: the dag study needs task random-dag");
    }
    if (study != Study::dag && task == Task::random_dag) {
      throw ExperimentError("experiment: task random-dag is only used by the dag study");
    }
    if (!(threshold >= 0.0)) throw ExperimentError("experiment: threshold must be >= 0");
    train.validate();
  }
};

inline nlohmann::json experiment_to_json(const ExperimentConfig& c) {
  return {{"study", to_string(c.study)},
          {"task", to_string(c.task)},
          {"domains", c.domains},
          {"mean_size", c.mean_size},
          {"e_var", c.e_var},
          {"noise", c.noise},
          {"sources", c.sources},
          {"source_counts", c.source_counts},
          {"held_out", c.held_out},
          {"seeds", c.seeds},
          {"targets", c.targets},
          {"baseline", c.baseline},
          {"dag_nodes", c.dag_nodes},
          {"density", c.density},
          {"threshold", c.threshold},
          {"sinkhorn",
           {{"epsilon", c.sinkhorn.epsilon},
            {"max_iterations", c.sinkhorn.max_iterations},
            {"tolerance", c.sinkhorn.tolerance},
            {"p", c.sinkhorn.p}}},
          {"train", config_to_json(c.train)},
          {"threads", c.threads}};
}

/// Strict parse: unknown keys and mistyped values are errors. Missing keys keep `base`.
inline ExperimentConfig experiment_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  if (!j.is_object()) throw ExperimentError("config: expected an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "study") base.study = parse_study(v.get<std::string>());
      else if (key == "task") base.task = parse_task(v.get<std::string>());
      else if (key == "domains") base.domains = v.get<int>();
      else if (key == "mean_size") base.mean_size = v.get<double>();
      else if (key == "e_var") base.e_var = v.get<double>();
      else if (key == "noise") base.noise = v.get<double>();
      else if (key == "sources") base.sources = v.get<int>();
      else if (key == "source_counts") base.source_counts = v.get<std::vector<int>>();
      else if (key == "held_out") base.held_out = v.get<int>();
      else if (key == "seeds") base.seeds = v.get<std::vector<std::uint64_t>>();
      else if (key == "targets") base.targets = v.get<std::vector<int>>();
      else if (key == "baseline") base.baseline = v.get<bool>();
      else if (key == "dag_nodes") base.dag_nodes = v.get<int>();
      else if (key == "density") base.density = v.get<double>();
      else if (key == "threshold") base.threshold = v.get<double>();
      else if (key == "threads") base.threads = v.get<int>();
      else if (key == "train") base.train = config_from_json(v, base.train);
      else if (key == "sinkhorn") {
        if (!v.is_object()) throw ExperimentError("config: 'sinkhorn' must be an object");
        for (const auto& [k, w] : v.items()) {
          if (k == "epsilon") base.sinkhorn.epsilon = w.get<double>();
          else if (k == "max_iterations") base.sinkhorn.max_iterations = w.get<int>();
          else if (k == "tolerance") base.sinkhorn.tolerance = w.get<double>();
          else if (k == "p") base.sinkhorn.p = w.get<double>();
          else throw ExperimentError("config: unknown key 'sinkhorn." + k + "'");
        }
      } else {
        throw ExperimentError("config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw ExperimentError("config: wrong type for '" + key + "'");
    } catch (const DataError& e) {
      throw ExperimentError(std::string("config: ") + e.what());
    } catch (const TrainingError& e) {
      throw ExperimentError(e.what());
    }
  }
  return base;
}

// ---- result table ------------------------------------------------------------

struct ResultRow {
  std::string method;
  std::string setting;
  std::uint64_t seed = 0;
  std::string target;
  std::string metric;
  double value = 0.0;
};

inline constexpr const char* kResultHeader = "method,setting,seed,target,metric,value";

class ResultTable {
 public:
  void add(ResultRow row) {
    if (!std::isfinite(row.value)) {
      throw ExperimentError("result table: non-finite value for " + row.method + "/" + row.metric);
    }
    rows_.push_back(std::move(row));
  }
  void append(const ResultTable& other) {
    for (const auto& r : other.rows_) add(r);
  }
  const std::vector<ResultRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  std::vector<double> values(const std::string& method, const std::string& setting,
                             const std::string& metric) const {
    std::vector<double> out;
    for (const auto& r : rows_) {
      if (r.method == method && r.setting == setting && r.metric == metric) out.push_back(r.value);
    }
    return out;
  }

  std::string to_csv() const {
    std::string out = std::string(kResultHeader) + "\n";
    for (const auto& r : rows_) {
      out += r.method + "," + r.setting + "," + std::to_string(r.seed) + "," + r.target + "," + r.metric + "," +
             format_double(r.value) + "\n";
    }
    return out;
  }

 private:
  std::vector<ResultRow> rows_;
};

struct SummaryRow {
  std::string method, setting, metric;
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one value
};

/// Mean and standard deviation per (method, setting, metric), in first-seen order.
inline std::vector<SummaryRow> summarize(const ResultTable& t) {
  std::vector<SummaryRow> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> vals;
  for (const auto& r : t.rows()) {
    const std::string key = r.method + "\x1f" + r.setting + "\x1f" + r.metric;
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({r.method, r.setting, r.metric});
      vals.emplace_back();
    }
    vals[it->second].push_back(r.value);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = vals[i];
    double s = 0;
    for (double x : v) s += x;
    const double mean = s / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[i].count = v.size();
    out[i].mean = mean;
    out[i].std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
  return out;
}

inline std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "method,setting,metric,count,mean,std\n";
  for (const auto& r : rows) {
    out += r.method + "," + r.setting + "," + r.metric + "," + std::to_string(r.count) + "," +
           format_double(r.mean) + "," + format_double(r.std) + "\n";
  }
  return out;
}

struct Chart {
  std::string name;  // file stem
  std::string svg;
};

struct ExperimentResult {
  ResultTable table;
  std::vector<Chart> charts;
};

// ---- building blocks -----------------------------------------------------------

struct Variant {
  std::string name;
  bool reconstruction, dag, sparsity;
};

inline std::vector<Variant> ablation_variants() {
  return {{"rec+dag+spa", true, true, true},
          {"rec+dag", true, true, false},
          {"rec+spa", true, false, true},
          {"dag+spa", false, true, true}};
}

/// Seed for one training run, derived from the configured training seed and
/// the run coordinates.
inline std::uint64_t run_seed(std::uint64_t base, std::uint64_t data_seed, int target, const std::string& tag) {
  return fnv1a64(std::to_string(base) + "/" + std::to_string(data_seed) + "/" + std::to_string(target) + "/" + tag);
}

/// Sources for held-out target t: the next M domains cyclically.
inline std::vector<int> cyclic_sources(int target, int m, int domains) {
  std::vector<int> out;
  for (int k = 1; k <= m; ++k) out.push_back((target + k) % domains);
  return out;
}

inline SynthData experiment_data(const ExperimentConfig& c, std::uint64_t seed, int domains) {
  SynthConfig s;
  s.task = c.task;
  s.domains = domains;
  s.mean_size = c.mean_size;
  s.e_var = c.e_var;
  s.noise = c.noise;
  s.seed = seed;
  s.dag_nodes = c.dag_nodes;
  s.density = c.density;
  return gen_domains(s);
}

/// Scores of target-domain predictions: auc and apr for a binary label, r2 otherwise.
inline std::vector<std::pair<std::string, double>> target_scores(VarKind label_kind, const Vector& labels,
                                                                 const Vector& predictions) {
  if (label_kind == VarKind::binary) {
    return {{"auc", auc(labels, predictions)}, {"apr", apr(labels, predictions)}};
  }
  return {{"r2", r2(labels, predictions)}};
}

/// Runs `jobs` on up to `threads` workers; job i writes only slot i.
inline void run_jobs(std::vector<std::function<ResultTable()>>& jobs, std::vector<ResultTable>& out, int threads) {
  out.assign(jobs.size(), ResultTable{});
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        out[i] = jobs[i]();
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

inline std::string setting_m(int m) { return "M=" + std::to_string(m); }

// ---- studies -------------------------------------------------------------------

/// Leave-one-domain-out adaptation. `variants` lists the DAPDAG loss
/// variants to train; the baseline is added when configured.
inline ResultTable run_adaptation(const ExperimentConfig& c, const std::vector<Variant>& variants,
                                  bool with_baseline) {
  std::vector<int> targets = c.targets;
  if (targets.empty()) {
    for (int t = 0; t < c.domains; ++t) targets.push_back(t);
  }
  std::vector<SynthData> data;
  for (auto s : c.seeds) data.push_back(experiment_data(c, s, c.domains));

  std::vector<std::function<ResultTable()>> jobs;
  for (std::size_t si = 0; si < c.seeds.size(); ++si) {
    for (int t : targets) {
      const auto* d = &data[si];
      const std::uint64_t seed = c.seeds[si];
      const std::string setting = setting_m(c.sources);
      auto sources_of = [d, t, &c] {
        std::vector<DomainDataset> src;
        for (int k : cyclic_sources(t, c.sources, c.domains)) src.push_back(d->domains[static_cast<std::size_t>(k)]);
        return src;
      };
      for (const auto& v : variants) {
        jobs.emplace_back([=, &c] {
          TrainConfig tc = c.train;
          tc.hyper.enable_reconstruction = v.reconstruction;
          tc.hyper.enable_dag = v.dag;
          tc.hyper.enable_sparsity = v.sparsity;
          tc.seed = run_seed(c.train.seed, seed, t, v.name);
          const auto model = train(sources_of(), tc);
          const auto& target = d->domains[static_cast<std::size_t>(t)];
          const auto pred = predict_target(model, target, tc.mode, tc.mc_draws, tc.seed);
          ResultTable out;
          const auto kind = model.schema.kinds[static_cast<std::size_t>(model.schema.label_index())];
          for (const auto& [metric, value] : target_scores(kind, target.labels(), pred.prediction)) {
            out.add({v.name, setting, seed, target.id, metric, value});
          }
          return out;
        });
      }
      if (with_baseline) {
        jobs.emplace_back([=, &c] {
          TrainConfig tc = c.train;
          tc.seed = run_seed(c.train.seed, seed, t, "baseline");
          const auto model = train_baseline_mlp(sources_of(), tc);
          const auto& target = d->domains[static_cast<std::size_t>(t)];
          const Vector pred = predict_baseline(model, target.features());
          ResultTable out;
          const auto kind = model.schema.kinds[static_cast<std::size_t>(model.schema.label_index())];
          for (const auto& [metric, value] : target_scores(kind, target.labels(), pred)) {
            out.add({"baseline", setting, seed, target.id, metric, value});
          }
          return out;
        });
      }
    }
  }
  std::vector<ResultTable> parts;
  run_jobs(jobs, parts, c.threads);
  ResultTable table;
  for (const auto& p : parts) table.append(p);
  return table;
}

/// Pairwise Sinkhorn distances between standardized domain features against
/// the true environment gap |E_a - E_b|, with a Spearman summary per seed.
inline ResultTable run_e_distance(const ExperimentConfig& c) {
  std::vector<std::function<ResultTable()>> jobs;
  for (auto seed : c.seeds) {
    jobs.emplace_back([seed, &c] {
      const auto d = experiment_data(c, seed, c.domains);
      const auto st = fit_standardizer(d.domains);
      std::vector<Matrix> feats;
      for (const auto& ds : d.domains) feats.push_back(st.apply(ds).features());
      ResultTable out;
      std::vector<double> gap, dist;
      for (int a = 0; a < c.domains; ++a) {
        for (int b = a + 1; b < c.domains; ++b) {
          const std::string pair = d.domains[static_cast<std::size_t>(a)].id + ":" +
                                   d.domains[static_cast<std::size_t>(b)].id;
          const double g = std::abs(d.truth.e_values[static_cast<std::size_t>(a)] -
                                    d.truth.e_values[static_cast<std::size_t>(b)]);
          const auto r = sinkhorn(feats[static_cast<std::size_t>(a)], feats[static_cast<std::size_t>(b)], c.sinkhorn);
          gap.push_back(g);
          dist.push_back(r.distance);
          out.add({"sinkhorn", "pair", seed, pair, "abs_delta_e", g});
          out.add({"sinkhorn", "pair", seed, pair, "distance", r.distance});
          out.add({"sinkhorn", "pair", seed, pair, "converged", r.converged ? 1.0 : 0.0});
        }
      }
      const auto n = static_cast<Eigen::Index>(gap.size());
      out.add({"sinkhorn", "summary", seed, "all", "spearman",
               spearman(Eigen::Map<Vector>(gap.data(), n), Eigen::Map<Vector>(dist.data(), n))});
      return out;
    });
  }
  std::vector<ResultTable> parts;
  run_jobs(jobs, parts, c.threads);
  ResultTable table;
  for (const auto& p : parts) table.append(p);
  return table;
}

/// Trains on M source domains, encodes `held_out` further domains and
/// correlates |E-hat_a - E-hat_b| with |E_a - E_b| over the held-out pairs.
inline ResultTable run_e_trend(const ExperimentConfig& c) {
  std::vector<std::function<ResultTable()>> jobs;
  for (auto seed : c.seeds) {
    for (int m : c.source_counts) {
      jobs.emplace_back([seed, m, &c] {
        const auto d = experiment_data(c, seed, m + c.held_out);
        std::vector<DomainDataset> src(d.domains.begin(), d.domains.begin() + m);
        TrainConfig tc = c.train;
        tc.seed = run_seed(c.train.seed, seed, m, "e-trend");
        const auto model = train(src, tc);
        std::vector<Vector> e_hat;
        std::vector<double> e_true;
        for (int k = m; k < m + c.held_out; ++k) {
          const auto& ds = d.domains[static_cast<std::size_t>(k)];
          e_hat.push_back(predict_target(model, ds.features(), EstimationMode::point, 1, 0).e_mean);
          e_true.push_back(d.truth.e_values[static_cast<std::size_t>(k)]);
        }
        std::vector<double> learned, truth;
        for (std::size_t a = 0; a < e_hat.size(); ++a) {
          for (std::size_t b = a + 1; b < e_hat.size(); ++b) {
            learned.push_back((e_hat[a] - e_hat[b]).norm());
            truth.push_back(std::abs(e_true[a] - e_true[b]));
          }
        }
        const auto n = static_cast<Eigen::Index>(learned.size());
        double rho = 0.0;
        const Eigen::Map<Vector> lv(learned.data(), n), tv(truth.data(), n);
        if ((lv.array() != lv(0)).any()) rho = spearman(lv, tv);
        ResultTable out;
        out.add({"dapdag", setting_m(m), seed, "held-out", "spearman", rho});
        return out;
      });
    }
  }
  std::vector<ResultTable> parts;
  run_jobs(jobs, parts, c.threads);
  ResultTable table;
  for (const auto& p : parts) table.append(p);
  return table;
}

/// DAG recovery on random nonlinear DAGs: SHD of the thresholded learned
/// adjacency, the trained acyclicity value and an acyclicity check.
inline ResultTable run_dag(const ExperimentConfig& c) {
  std::vector<std::function<ResultTable()>> jobs;
  for (auto seed : c.seeds) {
    for (int m : c.source_counts) {
      jobs.emplace_back([seed, m, &c] {
        const auto d = experiment_data(c, seed, m);
        TrainConfig tc = c.train;
        tc.seed = run_seed(c.train.seed, seed, m, "dag");
        const auto model = train(d.domains, tc);
        const Matrix a = adjacency(model.params.decoder);
        const EdgeSet learned = threshold_adjacency(a, c.threshold);
        const EdgeSet truth = d.truth.edges();
        ResultTable out;
        const std::string setting = setting_m(m);
        out.add({"dapdag", setting, seed, "graph", "shd", static_cast<double>(shd(learned, truth))});
        out.add({"dapdag", setting, seed, "graph", "h", acyclicity(model.params.decoder)});
        out.add({"dapdag", setting, seed, "graph", "acyclic", is_acyclic(learned) ? 1.0 : 0.0});
        out.add({"dapdag", setting, seed, "graph", "learned_edges", static_cast<double>(learned.edges.size())});
        out.add({"empty", setting, seed, "graph", "shd", static_cast<double>(truth.edges.size())});
        return out;
      });
    }
  }
  std::vector<ResultTable> parts;
  run_jobs(jobs, parts, c.threads);
  ResultTable table;
  for (const auto& p : parts) table.append(p);
  return table;
}

// ---- charts ----------------------------------------------------------------------

namespace detail {

inline std::vector<Series> series_by_method(const ResultTable& t, const std::string& metric,
                                            const std::function<double(const ResultRow&, std::size_t)>& x_of) {
  std::vector<Series> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : t.rows()) {
    if (r.metric != metric) continue;
    auto it = index.find(r.method);
    if (it == index.end()) {
      it = index.emplace(r.method, out.size()).first;
      out.push_back({r.method, {}});
    }
    auto& s = out[it->second];
    s.points.emplace_back(x_of(r, s.points.size()), r.value);
  }
  return out;
}

inline int setting_value(const std::string& setting) {
  const auto pos = setting.find('=');
  return pos == std::string::npos ? 0 : std::stoi(setting.substr(pos + 1));
}

/// Mean value per (method, M) as line series over M.
inline std::vector<Series> mean_over_m(const ResultTable& t, const std::string& metric) {
  std::vector<Series> out;
  for (const auto& s : summarize(t)) {
    if (s.metric != metric) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const Series& x) { return x.name == s.method; });
    if (it == out.end()) {
      out.push_back({s.method, {}});
      it = out.end() - 1;
    }
    it->points.emplace_back(setting_value(s.setting), s.mean);
  }
  for (auto& s : out) std::sort(s.points.begin(), s.points.end());
  return out;
}

}  // namespace detail

inline std::vector<Chart> experiment_charts(const ExperimentConfig& c, const ResultTable& t) {
  std::vector<Chart> out;
  switch (c.study) {
    case Study::loo:
    case Study::ablation: {
      const std::string metric = c.task == Task::classification ? "auc" : "r2";
      const auto series =
          detail::series_by_method(t, metric, [](const ResultRow&, std::size_t i) { return static_cast<double>(i); });
      out.push_back({"scores", svg_line_chart(series, {"Target-domain " + metric + " per run", "run", metric})});
      break;
    }
    case Study::e_distance: {
      Series s{"domain pairs", {}};
      const auto& rows = t.rows();
      for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        if (rows[i].metric == "abs_delta_e" && rows[i + 1].metric == "distance") {
          s.points.emplace_back(rows[i].value, rows[i + 1].value);
        }
      }
      out.push_back({"e_distance", svg_scatter({s}, {"Sinkhorn distance against |dE|", "|dE|", "distance"})});
      break;
    }
    case Study::e_trend:
      out.push_back({"e_trend", svg_line_chart(detail::mean_over_m(t, "spearman"),
                                               {"Learned environment rank correlation", "M", "spearman"})});
      break;
    case Study::dag:
      out.push_back({"shd", svg_line_chart(detail::mean_over_m(t, "shd"), {"Mean SHD against M", "M", "SHD"})});
      break;
  }
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  ExperimentResult r;
  switch (c.study) {
    case Study::loo: {
      const auto& h = c.train.hyper;
      r.table = run_adaptation(c, {{"dapdag", h.enable_reconstruction, h.enable_dag, h.enable_sparsity}}, c.baseline);
      break;
    }
    case Study::ablation: r.table = run_adaptation(c, ablation_variants(), false); break;
    case Study::e_distance: r.table = run_e_distance(c); break;
    case Study::e_trend: r.table = run_e_trend(c); break;
    case Study::dag: r.table = run_dag(c); break;
  }
  r.charts = experiment_charts(c, r.table);
  return r;
}

}  // namespace dapdag
