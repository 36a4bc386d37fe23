// dapdag: command-line front end for generation, training, prediction,
// evaluation and the synthetic experiment studies.

#include <dapdag/eval.hpp>
#include <dapdag/experiment.hpp>
#include <dapdag/format.hpp>
#include <dapdag/svg.hpp>
#include <dapdag/synth.hpp>
#include <dapdag/trainer.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dapdag;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<std::string> mode;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file (unknown keys are rejected)");
  app->add_option("--seed", c.seed, "Random seed (overrides the config)");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--mode", c.mode, "Estimation mode")->check(CLI::IsMember({"point", "bayes"}));
  app->add_option("--threads", c.threads, "Worker threads for independent runs")->check(CLI::PositiveNumber);
}

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  return read_json_file(path);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CliError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw CliError("cannot write " + p.string());
  out << content;
  if (!out) throw CliError("write failed for " + p.string());
}

fs::path prepare_out(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (!fs::is_directory(p)) throw CliError("cannot create output directory " + p.string());
  const fs::path probe = p / ".write_probe";
  {
    std::ofstream t(probe);
    if (!t) throw CliError("output directory is not writable: " + p.string());
  }
  fs::remove(probe, ec);
  return p;
}

/// Writes manifest.json: command, effective config, its hash, input file hashes, outputs, versions.
void write_manifest(const fs::path& out, const std::string& command, const json& config,
                    const std::vector<fs::path>& inputs, const std::vector<std::string>& outputs) {
  json in = json::array();
  for (const auto& p : inputs) {
    in.push_back({{"path", p.string()}, {"fnv1a64", hex64(fnv1a64(read_file(p)))}});
  }
  const std::string cfg = config.dump();
  json m = {{"command", command},
            {"config", config},
            {"config_hash", hex64(fnv1a64(cfg))},
            {"inputs", in},
            {"outputs", outputs},
            {"versions",
             {{"dapdag", kVersion},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"cli11", CLI11_VERSION}}}};
  write_file(out / "manifest.json", m.dump(2) + "\n");
}

/// Domain CSVs of a generated data directory, sorted by file name.
std::vector<fs::path> domain_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw CliError("data directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw CliError("no domain CSV files in " + dir.string());
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- generate ------------------------------------------------------------------

struct GenerateArgs {
  Common common;
  std::optional<std::string> task;
  std::optional<int> domains;
  std::optional<double> mean_size;
};

void cmd_generate(const GenerateArgs& a) {
  SynthConfig cfg = synth_config_from_json(read_config(a.common.config));
  if (a.task) cfg.task = parse_task(*a.task);
  if (a.domains) cfg.domains = *a.domains;
  if (a.mean_size) cfg.mean_size = *a.mean_size;
  if (a.common.seed) cfg.seed = *a.common.seed;
  cfg.validate();
  const auto out = prepare_out(a.common.out);
  const auto data = gen_domains(cfg);
  write_synth(data, out);
  std::vector<std::string> outputs;
  for (const auto& ds : data.domains) outputs.push_back(ds.id + ".csv");
  outputs.push_back("schema.json");
  outputs.push_back("truth.json");
  write_manifest(out, "generate", synth_config_to_json(cfg), {}, outputs);
  std::cout << "generated " << data.domains.size() << " domains in " << out.string() << "\n";
}

// ---- train ---------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string data;
  std::string sources;
  std::string exclude;
  bool baseline = false;
  std::optional<bool> enable_reconstruction, enable_dag, enable_sparsity;
};

std::vector<DomainDataset> load_sources(const fs::path& dir, const std::string& include, const std::string& exclude,
                                        std::vector<fs::path>& used) {
  const auto schema = load_schema(dir / "schema.json");
  const auto wanted = split_list(include);
  const auto skipped = split_list(exclude);
  std::vector<DomainDataset> out;
  for (const auto& f : domain_files(dir)) {
    const std::string id = f.stem().string();
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    if (std::find(skipped.begin(), skipped.end(), id) != skipped.end()) continue;
    out.push_back(load_csv(f, schema));
    used.push_back(f);
  }
  for (const auto& w : wanted) {
    if (std::none_of(out.begin(), out.end(), [&](const DomainDataset& d) { return d.id == w; })) {
      throw CliError("source domain not found: " + w);
    }
  }
  if (out.empty()) throw CliError("no labeled source domains selected");
  return out;
}

void cmd_train(const TrainArgs& a) {
  TrainConfig cfg = config_from_json(read_config(a.common.config));
  if (a.common.seed) cfg.seed = *a.common.seed;
  if (a.common.mode) cfg.mode = parse_mode(*a.common.mode);
  if (a.enable_reconstruction) cfg.hyper.enable_reconstruction = *a.enable_reconstruction;
  if (a.enable_dag) cfg.hyper.enable_dag = *a.enable_dag;
  if (a.enable_sparsity) cfg.hyper.enable_sparsity = *a.enable_sparsity;
  cfg.hyper.mode = cfg.mode;
  cfg.validate();
  const auto out = prepare_out(a.common.out);
  std::vector<fs::path> inputs;
  const auto sources = load_sources(a.data, a.sources, a.exclude, inputs);
  inputs.insert(inputs.begin(), fs::path(a.data) / "schema.json");
  json effective = config_to_json(cfg);
  effective["baseline"] = a.baseline;
  if (a.baseline) {
    const auto model = train_baseline_mlp(sources, cfg);
    save_checkpoint(model, out / "checkpoint.json");
    write_manifest(out, "train", effective, inputs, {"checkpoint.json"});
    std::cout << "trained baseline, best epoch " << model.best_epoch << "\n";
    return;
  }
  const auto model = train(sources, cfg);
  save_checkpoint(model, out / "checkpoint.json");
  write_log_jsonl(model.log, out / "log.jsonl");
  write_manifest(out, "train", effective, inputs, {"checkpoint.json", "log.jsonl"});
  std::cout << "trained dapdag, best epoch " << model.best_epoch << ", h = " << format_double(acyclicity(model.params.decoder))
            << "\n";
}

// ---- predict / evaluate ------------------------------------------------------------

struct LoadedModel {
  std::optional<TrainedModel> dapdag;
  std::optional<BaselineModel> baseline;
  const VariableSchema& schema() const { return dapdag ? dapdag->schema : baseline->schema; }
  const TrainConfig& config() const { return dapdag ? dapdag->config : baseline->config; }
  const char* name() const { return dapdag ? "dapdag" : "baseline"; }
};

LoadedModel load_model(const std::string& path) {
  if (path.empty()) throw CliError("--checkpoint is required");
  if (!fs::exists(path)) throw CliError("checkpoint not found: " + path);
  const json j = read_json_file(path);
  LoadedModel m;
  if (j.value("model", "") == "baseline") m.baseline = baseline_model_from_json(j);
  else m.dapdag = trained_model_from_json(j);
  return m;
}

struct PredictArgs {
  Common common;
  std::string checkpoint;
  std::string input;
  std::optional<int> draws;
};

struct ModelOutput {
  Vector prediction;
  Vector e_mean, e_var;
};

ModelOutput run_model(const LoadedModel& m, const DomainDataset& ds, EstimationMode mode, int draws,
                      std::uint64_t seed) {
  ModelOutput out;
  if (m.baseline) {
    out.prediction = predict_baseline(*m.baseline, ds.features());
    return out;
  }
  const auto p = predict_target(*m.dapdag, ds, mode, draws, seed);
  out.prediction = p.prediction;
  out.e_mean = p.e_mean;
  out.e_var = p.e_var;
  return out;
}

void cmd_predict(const PredictArgs& a) {
  const auto model = load_model(a.checkpoint);
  if (a.input.empty()) throw CliError("--input is required");
  const auto ds = load_csv(a.input, model.schema(), false);
  const EstimationMode mode = a.common.mode ? parse_mode(*a.common.mode) : model.config().mode;
  const int draws = a.draws.value_or(model.config().mc_draws);
  const std::uint64_t seed = a.common.seed.value_or(model.config().seed);
  const auto out = prepare_out(a.common.out);
  const auto r = run_model(model, ds, mode, draws, seed);

  std::string csv = "row,prediction\n";
  for (Eigen::Index i = 0; i < r.prediction.size(); ++i) {
    csv += std::to_string(i) + "," + format_double(r.prediction(i)) + "\n";
  }
  write_file(out / "predictions.csv", csv);
  std::vector<std::string> outputs{"predictions.csv"};
  if (model.dapdag) {
    std::string e = "component,mean,var\n";
    for (Eigen::Index k = 0; k < r.e_mean.size(); ++k) {
      e += std::to_string(k) + "," + format_double(r.e_mean(k)) + "," + format_double(r.e_var(k)) + "\n";
    }
    write_file(out / "e_hat.csv", e);
    outputs.push_back("e_hat.csv");
  }
  json cfg = {{"checkpoint", a.checkpoint}, {"input", a.input}, {"mode", to_string(mode)},
              {"draws", draws},             {"seed", seed},     {"model", model.name()}};
  write_manifest(out, "predict", cfg, {a.checkpoint, a.input}, outputs);
  std::cout << "wrote " << r.prediction.size() << " predictions to " << (out / "predictions.csv").string() << "\n";
}

struct EvaluateArgs {
  Common common;
  std::string checkpoint;
  std::vector<std::string> inputs;
  std::optional<int> draws;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto model = load_model(a.checkpoint);
  if (a.inputs.empty()) throw CliError("--input is required");
  const EstimationMode mode = a.common.mode ? parse_mode(*a.common.mode) : model.config().mode;
  const int draws = a.draws.value_or(model.config().mc_draws);
  const std::uint64_t seed = a.common.seed.value_or(model.config().seed);
  const auto out = prepare_out(a.common.out);
  const auto kind = model.schema().kinds[static_cast<std::size_t>(model.schema().label_index())];
  ResultTable table;
  std::vector<fs::path> inputs{a.checkpoint};
  for (const auto& path : a.inputs) {
    const auto ds = load_csv(path, model.schema(), true);
    const auto r = run_model(model, ds, mode, draws, seed);
    for (const auto& [metric, value] : target_scores(kind, ds.labels(), r.prediction)) {
      table.add({model.name(), to_string(mode), seed, ds.id, metric, value});
    }
    inputs.emplace_back(path);
  }
  write_file(out / "metrics.csv", table.to_csv());
  json cfg = {{"checkpoint", a.checkpoint}, {"inputs", a.inputs}, {"mode", to_string(mode)},
              {"draws", draws},             {"seed", seed}};
  write_manifest(out, "evaluate", cfg, inputs, {"metrics.csv"});
  std::cout << table.to_csv();
}

// ---- experiment -------------------------------------------------------------------

void cmd_experiment(const Common& c) {
  ExperimentConfig cfg = experiment_from_json(read_config(c.config));
  if (c.seed) cfg.train.seed = *c.seed;
  if (c.mode) cfg.train.mode = parse_mode(*c.mode);
  cfg.train.hyper.mode = cfg.train.mode;
  cfg.threads = c.threads > 1 ? c.threads : cfg.threads;
  cfg.validate();
  const auto out = prepare_out(c.out);
  const auto result = run_experiment(cfg);
  write_file(out / "results.csv", result.table.to_csv());
  write_file(out / "summary.csv", summary_to_csv(summarize(result.table)));
  std::vector<std::string> outputs{"results.csv", "summary.csv"};
  for (const auto& chart : result.charts) {
    write_file(out / (chart.name + ".svg"), chart.svg);
    outputs.push_back(chart.name + ".svg");
  }
  json effective = experiment_to_json(cfg);
  effective.erase("threads");
  std::vector<fs::path> inputs;
  if (!c.config.empty() && fs::is_regular_file(c.config)) inputs.emplace_back(c.config);
  write_manifest(out, "experiment", effective, inputs, outputs);
  std::cout << summary_to_csv(summarize(result.table));
}

// ---- distance ----------------------------------------------------------------------

struct DistanceArgs {
  Common common;
  std::string data;
  std::optional<double> epsilon;
  std::optional<int> max_iterations;
};

void cmd_distance(const DistanceArgs& a) {
  SinkhornConfig sc{0.05, 500, 1e-6, 2.0};
  const json j = read_config(a.common.config);
  for (const auto& [k, v] : j.items()) {
    try {
      if (k == "epsilon") sc.epsilon = v.get<double>();
      else if (k == "max_iterations") sc.max_iterations = v.get<int>();
      else if (k == "tolerance") sc.tolerance = v.get<double>();
      else if (k == "p") sc.p = v.get<double>();
      else throw CliError("config: unknown key '" + k + "'");
    } catch (const json::exception&) {
      throw CliError("config: wrong type for '" + k + "'");
    }
  }
  if (a.epsilon) sc.epsilon = *a.epsilon;
  if (a.max_iterations) sc.max_iterations = *a.max_iterations;
  const fs::path dir(a.data);
  const auto schema = load_schema(dir / "schema.json");
  std::vector<DomainDataset> domains;
  std::vector<fs::path> inputs{dir / "schema.json"};
  for (const auto& f : domain_files(dir)) {
    domains.push_back(load_csv(f, schema));
    inputs.push_back(f);
  }
  std::optional<GroundTruth> truth;
  if (fs::exists(dir / "truth.json")) {
    truth = truth_from_json(read_json_file(dir / "truth.json"));
    inputs.push_back(dir / "truth.json");
    if (truth->e_values.size() != domains.size()) throw CliError("truth.json does not match the domain files");
  }
  const auto out = prepare_out(a.common.out);
  const auto st = fit_standardizer(domains);
  std::vector<Matrix> feats;
  for (const auto& ds : domains) feats.push_back(st.apply(ds).features());

  ResultTable table;
  Series points{"domain pairs", {}};
  std::vector<double> gap, dist;
  for (std::size_t x = 0; x < domains.size(); ++x) {
    for (std::size_t y = x + 1; y < domains.size(); ++y) {
      const std::string pair = domains[x].id + ":" + domains[y].id;
      const auto r = sinkhorn(feats[x], feats[y], sc);
      table.add({"sinkhorn", "pair", 0, pair, "distance", r.distance});
      table.add({"sinkhorn", "pair", 0, pair, "converged", r.converged ? 1.0 : 0.0});
      if (truth) {
        const double g = std::abs(truth->e_values[x] - truth->e_values[y]);
        table.add({"sinkhorn", "pair", 0, pair, "abs_delta_e", g});
        gap.push_back(g);
        dist.push_back(r.distance);
        points.points.emplace_back(g, r.distance);
      }
    }
  }
  std::vector<std::string> outputs{"distances.csv"};
  if (truth && gap.size() >= 3) {
    const auto n = static_cast<Eigen::Index>(gap.size());
    table.add({"sinkhorn", "summary", 0, "all", "spearman",
               spearman(Eigen::Map<Vector>(gap.data(), n), Eigen::Map<Vector>(dist.data(), n))});
    write_file(out / "distances.svg", svg_scatter({points}, {"Sinkhorn distance against |dE|", "|dE|", "distance"}));
    outputs.push_back("distances.svg");
  }
  write_file(out / "distances.csv", table.to_csv());
  json cfg = {{"data", a.data},
              {"epsilon", sc.epsilon},
              {"max_iterations", sc.max_iterations},
              {"tolerance", sc.tolerance},
              {"p", sc.p}};
  write_manifest(out, "distance", cfg, inputs, outputs);
  std::cout << "wrote " << (out / "distances.csv").string() << "\n";
}

// ---- dag-eval ----------------------------------------------------------------------

struct DagEvalArgs {
  Common common;
  std::string checkpoint;
  std::string truth;
  double threshold = 0.3;
};

void cmd_dag_eval(const DagEvalArgs& a) {
  const auto model = load_model(a.checkpoint);
  if (!model.dapdag) throw CliError("dag-eval needs a dapdag checkpoint");
  if (!(a.threshold > 0.0)) throw CliError("--threshold must be > 0");
  const auto out = prepare_out(a.common.out);
  const Matrix adj = adjacency(model.dapdag->params.decoder);
  const EdgeSet learned = threshold_adjacency(adj, a.threshold);
  const double h = acyclicity(model.dapdag->params.decoder);
  ResultTable table;
  const std::uint64_t seed = model.config().seed;
  table.add({"dapdag", "tau=" + format_double(a.threshold), seed, "graph", "h", h});
  table.add({"dapdag", "tau=" + format_double(a.threshold), seed, "graph", "acyclic", is_acyclic(learned) ? 1.0 : 0.0});
  table.add({"dapdag", "tau=" + format_double(a.threshold), seed, "graph", "learned_edges",
             static_cast<double>(learned.edges.size())});
  std::vector<fs::path> inputs{a.checkpoint};
  if (!a.truth.empty()) {
    const auto truth = truth_from_json(read_json_file(a.truth));
    if (truth.adjacency.rows() != adj.rows()) throw CliError("truth adjacency size does not match the model");
    table.add({"dapdag", "tau=" + format_double(a.threshold), seed, "graph", "shd",
               static_cast<double>(shd(learned, truth.edges()))});
    table.add({"empty", "tau=" + format_double(a.threshold), seed, "graph", "shd",
               static_cast<double>(truth.edges().edges.size())});
    inputs.emplace_back(a.truth);
  }
  std::string csv;
  const auto& names = model.dapdag->schema.names;
  csv += "from";
  for (const auto& n : names) csv += "," + n;
  csv += "\n";
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    csv += names[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < adj.cols(); ++k) csv += "," + format_double(adj(i, k));
    csv += "\n";
  }
  write_file(out / "adjacency.csv", csv);
  write_file(out / "dag_metrics.csv", table.to_csv());
  json cfg = {{"checkpoint", a.checkpoint}, {"truth", a.truth}, {"threshold", a.threshold}};
  write_manifest(out, "dag-eval", cfg, inputs, {"adjacency.csv", "dag_metrics.csv"});
  std::cout << table.to_csv();
}

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const DataError*>(&e)) return "data";
  if (dynamic_cast<const TrainingError*>(&e)) return "training";
  if (dynamic_cast<const ExperimentError*>(&e)) return "experiment";
  if (dynamic_cast<const MetricError*>(&e)) return "metric";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  if (dynamic_cast<const CliError*>(&e)) return "usage";
  return "internal";
}

void report_error(const std::string& command, const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", {{"command", command}, {"kind", kind}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAPDAG: domain adaptation with a latent environment and a learned DAG"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate synthetic domains and their ground truth");
  add_common(g, gen.common);
  g->add_option("--task", gen.task, "classification, regression or random-dag");
  g->add_option("--domains", gen.domains, "Number of domains M");
  g->add_option("--mean-size", gen.mean_size, "Mean domain size N");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train DAPDAG (or the merged-MLP baseline) on source domains");
  add_common(t, tr.common);
  t->add_option("--data", tr.data, "Directory with schema.json and domain CSVs")->required();
  t->add_option("--sources", tr.sources, "Comma-separated domain ids to train on (default: all)");
  t->add_option("--exclude", tr.exclude, "Comma-separated domain ids to leave out");
  t->add_flag("--baseline", tr.baseline, "Train the merged-MLP baseline instead");
  t->add_option("--enable-reconstruction", tr.enable_reconstruction, "Non-label reconstruction terms (true/false)");
  t->add_option("--enable-dag", tr.enable_dag, "Acyclicity penalty (true/false)");
  t->add_option("--enable-sparsity", tr.enable_sparsity, "Group-lasso penalty (true/false)");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Predict labels for an unlabeled target domain");
  add_common(p, pr.common);
  p->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  p->add_option("--input", pr.input, "Target CSV (label column optional)")->required();
  p->add_option("--draws", pr.draws, "Monte Carlo draws in bayes mode")->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a checkpoint on labeled domains");
  add_common(e, ev.common);
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--input", ev.inputs, "Labeled CSV files")->required();
  e->add_option("--draws", ev.draws, "Monte Carlo draws in bayes mode")->check(CLI::PositiveNumber);

  Common ex;
  auto* x = app.add_subcommand("experiment", "Run a study: loo, ablation, e-distance, e-trend or dag");
  add_common(x, ex);

  DistanceArgs di;
  auto* d = app.add_subcommand("distance", "Pairwise Sinkhorn distances between domains");
  add_common(d, di.common);
  d->add_option("--data", di.data, "Directory with schema.json and domain CSVs")->required();
  d->add_option("--epsilon", di.epsilon, "Entropic regularization")->check(CLI::PositiveNumber);
  d->add_option("--max-iterations", di.max_iterations, "Sinkhorn iteration cap")->check(CLI::PositiveNumber);

  DagEvalArgs da;
  auto* dg = app.add_subcommand("dag-eval", "Threshold the learned adjacency and compare with a ground truth");
  add_common(dg, da.common);
  dg->add_option("--checkpoint", da.checkpoint, "Checkpoint file")->required();
  dg->add_option("--truth", da.truth, "truth.json from generate");
  dg->add_option("--threshold", da.threshold, "Edge threshold on the adjacency proxy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    const auto subs = app.get_subcommands();
    report_error(subs.empty() ? "" : subs.front()->get_name(), "usage", err.what());
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "generate") cmd_generate(gen);
    else if (command == "train") cmd_train(tr);
    else if (command == "predict") cmd_predict(pr);
    else if (command == "evaluate") cmd_evaluate(ev);
    else if (command == "experiment") cmd_experiment(ex);
    else if (command == "distance") cmd_distance(di);
    else if (command == "dag-eval") cmd_dag_eval(da);
  } catch (const std::exception& err) {
    report_error(command, error_kind(err), err.what());
    return 1;
  }
  return 0;
}
