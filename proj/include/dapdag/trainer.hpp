#pragma once

// Multi-domain training: weighted domain draws, alternating encoder/decoder
// Adam steps, validation on every source domain with early stopping, target
// prediction, the merged-data MLP baseline, and checkpoints.

#include <dapdag/data.hpp>
#include <dapdag/eval.hpp>
#include <dapdag/loss.hpp>
#include <dapdag/mlp.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dapdag {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  EstimationMode mode = EstimationMode::point;
  HyperParams hyper;
  double learning_rate = 1e-3;
  int patience = 10;
  double val_ratio = 0.2;
  int max_epochs = 200;
  int batch_min = 16;
  int batch_max = 256;
  int mc_draws = 100;
  int e_dim = 1;
  int hidden = 16;
  std::uint64_t seed = 0;

  void validate() const {
    hyper.validate();
    if (patience < 1) throw TrainingError("config: patience must be >= 1");
    if (batch_min < 2) throw TrainingError("config: batch_min must be >= 2");
    if (batch_max < batch_min) throw TrainingError("config: batch_max must be >= batch_min");
    if (!(val_ratio > 0.0 && val_ratio < 1.0)) throw TrainingError("config: val_ratio must be in (0,1)");
    if (max_epochs < 1) throw TrainingError("config: max_epochs must be >= 1");
    if (mc_draws < 1) throw TrainingError("config: mc_draws must be >= 1");
    if (e_dim < 1 || hidden < 1) throw TrainingError("config: e_dim and hidden must be >= 1");
    if (!(learning_rate >= 0.0)) throw TrainingError("config: learning_rate must be >= 0");
  }
};

inline nlohmann::json config_to_json(const TrainConfig& c) {
  const HyperParams& h = c.hyper;
  return {{"mode", to_string(c.mode)},
          {"lambda", h.lambda},
          {"alpha", h.alpha},
          {"beta", h.beta},
          {"gamma", h.gamma},
          {"sigma_e2", h.sigma_e2},
          {"enable_reconstruction", h.enable_reconstruction},
          {"enable_dag", h.enable_dag},
          {"enable_sparsity", h.enable_sparsity},
          {"lasso_includes_e", h.lasso_includes_e},
          {"learning_rate", c.learning_rate},
          {"patience", c.patience},
          {"val_ratio", c.val_ratio},
          {"max_epochs", c.max_epochs},
          {"batch_min", c.batch_min},
          {"batch_max", c.batch_max},
          {"mc_draws", c.mc_draws},
          {"e_dim", c.e_dim},
          {"hidden", c.hidden},
          {"seed", c.seed}};
}

inline EstimationMode parse_mode(const std::string& s) {
  if (s == "point") return EstimationMode::point;
  if (s == "bayes") return EstimationMode::bayes;
  throw TrainingError("unknown mode '" + s + "' (expected point or bayes)");
}

/// Overrides fields of `base` with the keys present in `j`. Unknown keys and
/// mistyped values are rejected.
inline TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {}) {
  if (!j.is_object()) throw TrainingError("config: expected an object");
  HyperParams& h = base.hyper;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "mode") base.mode = parse_mode(v.get<std::string>());
      else if (key == "lambda") h.lambda = v.get<double>();
      else if (key == "alpha") h.alpha = v.get<double>();
      else if (key == "beta") h.beta = v.get<double>();
      else if (key == "gamma") h.gamma = v.get<double>();
      else if (key == "sigma_e2") h.sigma_e2 = v.get<double>();
      else if (key == "enable_reconstruction") h.enable_reconstruction = v.get<bool>();
      else if (key == "enable_dag") h.enable_dag = v.get<bool>();
      else if (key == "enable_sparsity") h.enable_sparsity = v.get<bool>();
      else if (key == "lasso_includes_e") h.lasso_includes_e = v.get<bool>();
      else if (key == "learning_rate") base.learning_rate = v.get<double>();
      else if (key == "patience") base.patience = v.get<int>();
      else if (key == "val_ratio") base.val_ratio = v.get<double>();
      else if (key == "max_epochs") base.max_epochs = v.get<int>();
      else if (key == "batch_min") base.batch_min = v.get<int>();
      else if (key == "batch_max") base.batch_max = v.get<int>();
      else if (key == "mc_draws") base.mc_draws = v.get<int>();
      else if (key == "e_dim") base.e_dim = v.get<int>();
      else if (key == "hidden") base.hidden = v.get<int>();
      else if (key == "seed") base.seed = v.get<std::uint64_t>();
      else throw TrainingError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw TrainingError("config: wrong type for '" + key + "'");
    }
  }
  base.hyper.mode = base.mode;
  base.validate();
  return base;
}

// ---- model types -----------------------------------------------------------

struct TrainedModel {
  DapdagParams params;
  VariableSchema schema;
  Standardizer standardizer;
  TrainConfig config;
  std::vector<nlohmann::json> log;  // one record per epoch
  int best_epoch = 0;
  double best_score = -std::numeric_limits<double>::infinity();
};

struct BaselineModel {
  Mlp net;
  VariableSchema schema;
  Standardizer standardizer;
  TrainConfig config;
  std::vector<nlohmann::json> log;
  int best_epoch = 0;
  double best_score = -std::numeric_limits<double>::infinity();
};

struct ValidationReport {
  std::vector<double> scores;
  double sum = 0.0;
};

struct TargetPrediction {
  Vector prediction;  // probability (binary label) or value on the data scale
  Vector e_mean;
  Vector e_var;
};

// ---- scoring ---------------------------------------------------------------

/// AUC for a binary label, R^2 for a continuous one. A single-class binary
/// validation set scores 0.5 and a constant continuous one scores 0.
inline double label_score(VarKind kind, const Vector& labels, const Vector& predictions) {
  if (kind == VarKind::binary) {
    const double pos = labels.sum();
    if (pos == 0.0 || pos == static_cast<double>(labels.size())) return 0.5;
    return auc(labels, predictions);
  }
  if (labels.size() < 2 || labels.maxCoeff() == labels.minCoeff()) return 0.0;
  return r2(labels, predictions);
}

/// Scores standardized validation sets, each encoded from its own features.
inline ValidationReport validate_standardized(const DapdagParams& params,
                                              const std::vector<DomainDataset>& sets) {
  ValidationReport rep;
  for (const auto& ds : sets) {
    if (ds.rows() == 0) throw TrainingError("validate: empty validation set");
    const Matrix features = ds.features();
    const Vector e = encode(features, params.encoder).mean;
    const Vector pred = predict_label_batch(features, e, params.decoder);
    const double s = label_score(ds.schema.kinds.back(), ds.labels(), pred);
    rep.scores.push_back(s);
    rep.sum += s;
  }
  return rep;
}

inline ValidationReport validate(const TrainedModel& model, const std::vector<DomainDataset>& sets) {
  std::vector<DomainDataset> std_sets;
  for (const auto& ds : sets) {
    if (!(ds.schema == model.schema)) throw TrainingError("validate: schema mismatch");
    std_sets.push_back(model.standardizer.apply(ds));
  }
  return validate_standardized(model.params, std_sets);
}

// ---- training --------------------------------------------------------------

namespace detail {

struct PreparedSources {
  VariableSchema schema;
  Standardizer standardizer;
  std::vector<DomainDataset> train;  // standardized
  std::vector<DomainDataset> val;    // standardized
};

template <class Rng>
PreparedSources prepare_sources(const std::vector<DomainDataset>& sources, const TrainConfig& cfg,
                                Rng& rng) {
  if (sources.empty()) throw TrainingError("train: empty domain list");
  PreparedSources p;
  p.schema = sources.front().schema;
  p.schema.validate();
  std::vector<DomainDataset> raw_train, raw_val;
  for (const auto& ds : sources) {
    if (!(ds.schema == p.schema)) throw TrainingError("train: schema mismatch in domain '" + ds.id + "'");
    if (!ds.labeled) throw TrainingError("train: domain '" + ds.id + "' is unlabeled");
    if (ds.rows() < 4) throw TrainingError("train: domain '" + ds.id + "' has fewer than 4 rows");
    auto [tr, va] = split_train_val(ds, cfg.val_ratio, rng);
    if (tr.rows() < cfg.batch_min) {
      throw TrainingError("train: domain '" + ds.id + "' has " + std::to_string(tr.rows()) +
                          " training rows, fewer than batch_min " + std::to_string(cfg.batch_min));
    }
    raw_train.push_back(std::move(tr));
    raw_val.push_back(std::move(va));
  }
  p.standardizer = fit_standardizer(raw_train);
  for (const auto& ds : raw_train) p.train.push_back(p.standardizer.apply(ds));
  for (const auto& ds : raw_val) p.val.push_back(p.standardizer.apply(ds));
  return p;
}

/// Batch-size law: uniform integer in [batch_min, min(batch_max, n)].
inline int batch_upper(const TrainConfig& cfg, Eigen::Index n) {
  return static_cast<int>(std::min<Eigen::Index>(cfg.batch_max, n));
}

inline int iterations_per_epoch(const TrainConfig& cfg, const std::vector<Eigen::Index>& sizes,
                                const std::vector<double>& weights) {
  double total = 0.0, mean_batch = 0.0;
  for (std::size_t m = 0; m < sizes.size(); ++m) {
    total += static_cast<double>(sizes[m]);
    mean_batch += weights[m] * 0.5 * (cfg.batch_min + batch_upper(cfg, sizes[m]));
  }
  return std::max(1, static_cast<int>(std::ceil(total / mean_batch)));
}

/// Draws `count` distinct rows by a partial Fisher-Yates pass over `pool`.
template <class Rng>
Matrix sample_rows(const Matrix& data, std::vector<Eigen::Index>& pool, int count, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(pool.size());
  Matrix out(count, data.cols());
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    out.row(i) = data.row(pool[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline void accumulate(LossBreakdown& acc, const LossBreakdown& b) {
  if (acc.reconstruction.size() != b.reconstruction.size()) acc.reconstruction.assign(b.reconstruction.size(), 0.0);
  acc.prediction += b.prediction;
  for (std::size_t k = 0; k < b.reconstruction.size(); ++k) acc.reconstruction[k] += b.reconstruction[k];
  acc.reconstruction_total += b.reconstruction_total;
  acc.h += b.h;
  acc.h2 += b.h2;
  acc.group_lasso += b.group_lasso;
  acc.e_reg += b.e_reg;
  acc.kl += b.kl;
  acc.nll += b.nll;
  acc.dag_loss += b.dag_loss;
  acc.total += b.total;
}

inline LossBreakdown scaled(LossBreakdown b, double s) {
  b.prediction *= s;
  for (auto& r : b.reconstruction) r *= s;
  b.reconstruction_total *= s;
  b.h *= s;
  b.h2 *= s;
  b.group_lasso *= s;
  b.e_reg *= s;
  b.kl *= s;
  b.nll *= s;
  b.dag_loss *= s;
  b.total *= s;
  return b;
}

}  // namespace detail

/// Trains on labeled source domains. The run is a deterministic function of
/// (sources, cfg). Returns the snapshot with the best summed validation score.
inline TrainedModel train(const std::vector<DomainDataset>& sources, TrainConfig cfg) {
  cfg.hyper.mode = cfg.mode;
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  auto prep = detail::prepare_sources(sources, cfg, rng);
  const int dv = prep.schema.variable_count();

  TrainedModel model;
  model.schema = prep.schema;
  model.standardizer = prep.standardizer;
  model.config = cfg;
  model.params.encoder = EncoderParams(dv - 1, cfg.e_dim, cfg.hidden);
  model.params.encoder.init(rng);
  model.params.decoder = DecoderParams(prep.schema.kinds, cfg.e_dim, cfg.hidden);
  model.params.decoder.init(rng);

  std::vector<Eigen::Index> sizes;
  for (const auto& ds : prep.train) sizes.push_back(ds.rows());
  const auto weights = domain_weights(std::vector<std::size_t>(sizes.begin(), sizes.end()));
  const int n_iter = detail::iterations_per_epoch(cfg, sizes, weights);
  std::discrete_distribution<int> pick_domain(weights.begin(), weights.end());
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<Eigen::Index>> pools;
  for (auto n : sizes) {
    std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    pools.push_back(std::move(p));
  }

  AdamConfig ac;
  ac.lr = cfg.learning_rate;
  AdamState enc_opt(ac), dec_opt(ac);
  const bool bayes = cfg.mode == EstimationMode::bayes;
  DapdagParams best = model.params;
  int stale = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    LossBreakdown acc;
    Vector last_e;
    for (int it = 0; it < n_iter; ++it) {
      const int m = pick_domain(rng);
      std::uniform_int_distribution<int> pick_size(cfg.batch_min, detail::batch_upper(cfg, sizes[m]));
      const int b = pick_size(rng);
      const Matrix batch = detail::sample_rows(prep.train[m].data, pools[m], b, rng);
      Vector zeta = Vector::Zero(cfg.e_dim);
      if (bayes) {
        for (Eigen::Index k = 0; k < zeta.size(); ++k) zeta(k) = gauss(rng);
      }

      // Encoder step with the decoder held fixed.
      const auto r_enc = evaluate_objective(batch, model.params, cfg.hyper, zeta);
      if (!std::isfinite(r_enc.breakdown.total)) {
        throw TrainingError("train: objective became non-finite at epoch " + std::to_string(epoch));
      }
      auto enc_params = model.params.encoder.parameters();
      adam_step(enc_params, r_enc.encoder_grads, enc_opt);
      model.params.encoder.project();

      // Decoder step at the updated encoder output.
      auto r_dec = evaluate_objective(batch, model.params, cfg.hyper, zeta);
      model.params.decoder.mask_gradient(r_dec.decoder_grads[0]);
      auto dec_params = model.params.decoder.parameters();
      adam_step(dec_params, r_dec.decoder_grads, dec_opt);
      model.params.decoder.apply_mask();

      detail::accumulate(acc, r_enc.breakdown);
      last_e = r_dec.e_hat;
    }

    const auto rep = validate_standardized(model.params, prep.val);
    nlohmann::json rec;
    rec["epoch"] = epoch;
    rec["loss"] = breakdown_to_json(detail::scaled(acc, 1.0 / n_iter));
    rec["val_scores"] = rep.scores;
    rec["val_sum"] = rep.sum;
    rec["h"] = acyclicity(model.params.decoder);
    rec["nu0"] = std::vector<double>(model.params.encoder.nu0.data(),
                                     model.params.encoder.nu0.data() + model.params.encoder.nu0.size());
    rec["diagnostics"] = diagnostics_to_json(bound_diagnostics(model.params.decoder, last_e));
    model.log.push_back(std::move(rec));

    if (rep.sum > model.best_score) {
      model.best_score = rep.sum;
      model.best_epoch = epoch;
      best = model.params;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  model.params = std::move(best);
  return model;
}

/// Predictions for unlabeled target features (raw scale) using the given
/// standard-normal draws in Bayes mode; point mode ignores `zetas`.
inline TargetPrediction predict_target_with_noise(const TrainedModel& model, const Matrix& features,
                                                  EstimationMode mode, const std::vector<Vector>& zetas) {
  if (features.cols() != model.schema.feature_count()) {
    throw TrainingError("predict: schema mismatch, expected " +
                        std::to_string(model.schema.feature_count()) + " feature columns, got " +
                        std::to_string(features.cols()));
  }
  if (features.rows() == 0) throw TrainingError("predict: empty target set");
  const Matrix x = model.standardizer.apply_features(features);
  const auto post = encode(x, model.params.encoder);
  TargetPrediction out;
  out.e_mean = post.mean;
  out.e_var = post.var;
  if (mode == EstimationMode::point) {
    out.prediction = predict_label_batch(x, post.mean, model.params.decoder);
  } else {
    if (zetas.empty()) throw TrainingError("predict: bayes mode needs at least one draw");
    out.prediction = Vector::Zero(x.rows());
    for (const auto& z : zetas) {
      out.prediction += predict_label_batch(x, sample_e(post, EstimationMode::bayes, z), model.params.decoder);
    }
    out.prediction /= static_cast<double>(zetas.size());
  }
  const int label = model.schema.label_index();
  if (model.schema.kinds[label] == VarKind::continuous) {
    for (Eigen::Index i = 0; i < out.prediction.size(); ++i) {
      out.prediction(i) = model.standardizer.inverse(label, out.prediction(i));
    }
  }
  return out;
}

inline TargetPrediction predict_target(const TrainedModel& model, const Matrix& features,
                                       EstimationMode mode, int draws, std::uint64_t seed) {
  std::vector<Vector> zetas;
  if (mode == EstimationMode::bayes) {
    if (draws < 1) throw TrainingError("predict: draws must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < draws; ++i) {
      Vector z(model.config.e_dim);
      for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = g(rng);
      zetas.push_back(std::move(z));
    }
  }
  return predict_target_with_noise(model, features, mode, zetas);
}

inline TargetPrediction predict_target(const TrainedModel& model, const DomainDataset& target,
                                       EstimationMode mode, int draws, std::uint64_t seed) {
  if (target.schema.feature_count() != model.schema.feature_count()) {
    throw TrainingError("predict: schema mismatch");
  }
  for (int c = 0; c < model.schema.feature_count(); ++c) {
    if (target.schema.names[c] != model.schema.names[c] || target.schema.kinds[c] != model.schema.kinds[c]) {
      throw TrainingError("predict: schema mismatch at column '" + target.schema.names[c] + "'");
    }
  }
  return predict_target(model, target.features(), mode, draws, seed);
}

// ---- baseline --------------------------------------------------------------

inline Vector baseline_forward(const Mlp& net, const Matrix& x_std, VarKind label_kind) {
  Vector out = net.forward(x_std).col(0);
  if (label_kind == VarKind::binary) out = out.unaryExpr([](double v) { return sigmoid(v); });
  return out;
}

/// Two hidden ELU layers of width 16 trained on the union of source training
/// rows, with the same split, batch law, optimizer and early stopping.
inline BaselineModel train_baseline_mlp(const std::vector<DomainDataset>& sources, TrainConfig cfg) {
  cfg.hyper.mode = cfg.mode;
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  auto prep = detail::prepare_sources(sources, cfg, rng);
  const int d = prep.schema.feature_count();
  const VarKind kind = prep.schema.kinds.back();

  BaselineModel model;
  model.schema = prep.schema;
  model.standardizer = prep.standardizer;
  model.config = cfg;
  model.net = Mlp({d, cfg.hidden, cfg.hidden, 1});
  model.net.init_uniform(rng);

  Eigen::Index total = 0;
  for (const auto& ds : prep.train) total += ds.rows();
  Matrix merged(total, prep.schema.variable_count());
  Eigen::Index at = 0;
  for (const auto& ds : prep.train) {
    merged.middleRows(at, ds.rows()) = ds.data;
    at += ds.rows();
  }
  const int n_iter = detail::iterations_per_epoch(cfg, {total}, {1.0});
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) pool[static_cast<std::size_t>(i)] = i;

  AdamConfig ac;
  ac.lr = cfg.learning_rate;
  AdamState opt(ac);
  Mlp best = model.net;
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int it = 0; it < n_iter; ++it) {
      std::uniform_int_distribution<int> pick_size(cfg.batch_min, detail::batch_upper(cfg, total));
      const int b = pick_size(rng);
      const Matrix batch = detail::sample_rows(merged, pool, b, rng);
      const Matrix x = batch.leftCols(d);
      const Vector y = batch.col(d);
      Mlp::Cache cache;
      const Matrix out = model.net.forward(x, cache);
      Matrix d_out(b, 1);
      if (kind == VarKind::binary) {
        const Vector p = out.col(0).unaryExpr([](double v) { return sigmoid(v); });
        loss_sum += bce_loss(y, p);
        d_out.col(0) = (p - y) / static_cast<double>(b);
      } else {
        loss_sum += mse_loss(y, out.col(0));
        d_out.col(0) = 2.0 * (out.col(0) - y) / static_cast<double>(b);
      }
      if (!std::isfinite(loss_sum)) throw TrainingError("baseline: loss became non-finite");
      const auto grads = model.net.backward(cache, d_out);
      auto params = model.net.parameters();
      adam_step(params, grads, opt);
    }

    ValidationReport rep;
    for (const auto& ds : prep.val) {
      const double s = label_score(kind, ds.labels(), baseline_forward(model.net, ds.features(), kind));
      rep.scores.push_back(s);
      rep.sum += s;
    }
    model.log.push_back({{"epoch", epoch},
                         {"loss", loss_sum / n_iter},
                         {"val_scores", rep.scores},
                         {"val_sum", rep.sum}});
    if (rep.sum > model.best_score) {
      model.best_score = rep.sum;
      model.best_epoch = epoch;
      best = model.net;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  model.net = std::move(best);
  return model;
}

inline Vector predict_baseline(const BaselineModel& model, const Matrix& features) {
  if (features.cols() != model.schema.feature_count()) throw TrainingError("predict: schema mismatch");
  const Matrix x = model.standardizer.apply_features(features);
  Vector out = baseline_forward(model.net, x, model.schema.kinds.back());
  const int label = model.schema.label_index();
  if (model.schema.kinds[label] == VarKind::continuous) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = model.standardizer.inverse(label, out(i));
  }
  return out;
}

// ---- checkpoints -----------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "dapdag-checkpoint/1";

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw TrainingError("checkpoint: tensor size mismatch");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

inline nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto* p : net.parameters()) params.push_back(matrix_to_json(*p));
  return {{"sizes", net.sizes()}, {"parameters", params}};
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net(j.at("sizes").get<std::vector<int>>());
  auto params = net.parameters();
  const auto& arr = j.at("parameters");
  if (arr.size() != params.size()) throw TrainingError("checkpoint: layer count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix m = matrix_from_json(arr[i]);
    if (m.rows() != params[i]->rows() || m.cols() != params[i]->cols()) {
      throw TrainingError("checkpoint: layer shape mismatch");
    }
    *params[i] = std::move(m);
  }
  return net;
}

inline nlohmann::json checkpoint_to_json(const TrainedModel& m) {
  DecoderParams dec = m.params.decoder;
  nlohmann::json decoder;
  const char* names[] = {"w1", "w2", "b2", "w3", "b3"};
  auto dp = dec.parameters();
  for (std::size_t i = 0; i < dp.size(); ++i) decoder[names[i]] = matrix_to_json(*dp[i]);
  return {{"format", kCheckpointFormat},
          {"model", "dapdag"},
          {"schema", schema_to_json(m.schema)},
          {"standardizer", standardizer_to_json(m.standardizer)},
          {"config", config_to_json(m.config)},
          {"e_dim", m.config.e_dim},
          {"hidden", m.config.hidden},
          {"best_epoch", m.best_epoch},
          {"best_score", m.best_score},
          {"encoder",
           {{"phi", mlp_to_json(m.params.encoder.phi)},
            {"nu", mlp_to_json(m.params.encoder.nu)},
            {"nu0", matrix_to_json(m.params.encoder.nu0)}}},
          {"decoder", decoder}};
}

inline nlohmann::json checkpoint_to_json(const BaselineModel& m) {
  return {{"format", kCheckpointFormat},
          {"model", "baseline"},
          {"schema", schema_to_json(m.schema)},
          {"standardizer", standardizer_to_json(m.standardizer)},
          {"config", config_to_json(m.config)},
          {"best_epoch", m.best_epoch},
          {"best_score", m.best_score},
          {"net", mlp_to_json(m.net)}};
}

namespace detail {
inline void check_format(const nlohmann::json& j, const char* kind) {
  if (j.value("format", "") != kCheckpointFormat) throw TrainingError("checkpoint: unknown format tag");
  if (j.value("model", "") != kind) {
    throw TrainingError(std::string("checkpoint: expected a ") + kind + " model, found '" +
                        j.value("model", "") + "'");
  }
}
}  // namespace detail

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
  detail::check_format(j, "dapdag");
  try {
    TrainedModel m;
    m.schema = schema_from_json(j.at("schema"));
    m.standardizer = standardizer_from_json(j.at("standardizer"));
    m.config = config_from_json(j.at("config"));
    m.best_epoch = j.at("best_epoch").get<int>();
    m.best_score = j.at("best_score").is_null() ? -std::numeric_limits<double>::infinity()
                                                : j.at("best_score").get<double>();
    const auto& enc = j.at("encoder");
    m.params.encoder.phi = mlp_from_json(enc.at("phi"));
    m.params.encoder.nu = mlp_from_json(enc.at("nu"));
    m.params.encoder.nu0 = matrix_from_json(enc.at("nu0"));
    DecoderParams dec(m.schema.kinds, m.config.e_dim, m.config.hidden);
    const char* names[] = {"w1", "w2", "b2", "w3", "b3"};
    auto dp = dec.parameters();
    for (std::size_t i = 0; i < dp.size(); ++i) {
      Matrix t = matrix_from_json(j.at("decoder").at(names[i]));
      if (t.rows() != dp[i]->rows() || t.cols() != dp[i]->cols()) {
        throw TrainingError(std::string("checkpoint: decoder tensor '") + names[i] + "' has wrong shape");
      }
      *dp[i] = std::move(t);
    }
    m.params.decoder = std::move(dec);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw TrainingError(std::string("checkpoint: malformed (") + e.what() + ")");
  } catch (const DataError& e) {
    throw TrainingError(std::string("checkpoint: ") + e.what());
  }
}

inline BaselineModel baseline_model_from_json(const nlohmann::json& j) {
  detail::check_format(j, "baseline");
  try {
    BaselineModel m;
    m.schema = schema_from_json(j.at("schema"));
    m.standardizer = standardizer_from_json(j.at("standardizer"));
    m.config = config_from_json(j.at("config"));
    m.best_epoch = j.at("best_epoch").get<int>();
    m.best_score = j.at("best_score").is_null() ? -std::numeric_limits<double>::infinity()
                                                : j.at("best_score").get<double>();
    m.net = mlp_from_json(j.at("net"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw TrainingError(std::string("checkpoint: malformed (") + e.what() + ")");
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TrainingError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw TrainingError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw TrainingError("cannot write " + path.string());
  out << j.dump() << '\n';
}

template <class Model>
void save_checkpoint(const Model& m, const std::filesystem::path& path) {
  write_json_file(checkpoint_to_json(m), path);
}

inline TrainedModel load_checkpoint(const std::filesystem::path& path) {
  return trained_model_from_json(read_json_file(path));
}

/// One JSON record per line.
inline void write_log_jsonl(const std::vector<nlohmann::json>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw TrainingError("cannot write " + path.string());
  for (const auto& rec : log) out << rec.dump() << '\n';
}

}  // namespace dapdag
