#pragma once

// Training objectives with their gradients.
//
// Point mode (minimized):
//   L = pred(label) + gamma*|E|^2 + lambda * R_G
//   R_G = recon(all variables) + h + alpha*h^2 + beta*l1
// Bayes mode (minimized, the negated evidence lower bound):
//   L = KL(q(E|X) || N(0, sigma_e^2)) - sum_i log p(x_i, y_i | E)
//       + lambda * (h + alpha*h^2 + beta*l1)
//
// Ablation switches drop the non-label reconstruction terms, h and h^2, or
// the group lasso.

#include <dapdag/decoder.hpp>
#include <dapdag/encoder.hpp>
#include <dapdag/numerics.hpp>

#include <json.hpp>

#include <cmath>
#include <vector>

namespace dapdag {

inline constexpr double kProbClamp = 1e-7;

struct HyperParams {
  double lambda = 1.0;
  double alpha = 0.5;
  double beta = 0.1;
  double gamma = 0.01;
  double sigma_e2 = 1.0;
  EstimationMode mode = EstimationMode::point;
  bool enable_reconstruction = true;
  bool enable_dag = true;
  bool enable_sparsity = true;
  bool lasso_includes_e = true;

  void validate() const {
    if (!(lambda >= 0 && alpha >= 0 && beta >= 0 && gamma >= 0)) {
      throw NumericError("hyperparameters lambda, alpha, beta, gamma must be >= 0");
    }
    if (!(sigma_e2 > 0)) throw NumericError("sigma_e2 must be > 0");
  }
};

struct LossBreakdown {
  double prediction = 0.0;       // label loss (point mode)
  std::vector<double> reconstruction;  // per variable, mean loss
  double reconstruction_total = 0.0;   // sum over the variables that are used
  double h = 0.0;
  double h2 = 0.0;
  double group_lasso = 0.0;
  double e_reg = 0.0;            // |E|^2
  double kl = 0.0;               // bayes
  double nll = 0.0;              // bayes, -sum log p
  double dag_loss = 0.0;         // R_G (point) or the lambda-free penalty part (bayes)
  double total = 0.0;
};

inline nlohmann::json breakdown_to_json(const LossBreakdown& b) {
  return {{"prediction", b.prediction},   {"reconstruction", b.reconstruction},
          {"reconstruction_total", b.reconstruction_total},
          {"h", b.h},                     {"h2", b.h2},
          {"group_lasso", b.group_lasso}, {"e_reg", b.e_reg},
          {"kl", b.kl},                   {"nll", b.nll},
          {"dag_loss", b.dag_loss},       {"total", b.total}};
}

// ---- elementary losses -----------------------------------------------------

inline double mse_loss(const Vector& targets, const Vector& predictions) {
  if (targets.size() != predictions.size()) throw NumericError("mse_loss: length mismatch");
  if (targets.size() == 0) throw NumericError("mse_loss: empty input");
  return (targets - predictions).squaredNorm() / static_cast<double>(targets.size());
}

inline double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

inline double bce_term(double y, double p) {
  const double pc = clamp_prob(p);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

/// Mean negative log-likelihood of Bernoulli targets.
inline double bce_loss(const Vector& targets, const Vector& probabilities) {
  if (targets.size() != probabilities.size()) throw NumericError("bce_loss: length mismatch");
  if (targets.size() == 0) throw NumericError("bce_loss: empty input");
  double s = 0.0;
  for (Eigen::Index i = 0; i < targets.size(); ++i) {
    const double y = targets(i);
    if (y != 0.0 && y != 1.0) throw NumericError("bce_loss: target not in {0,1}");
    s += bce_term(y, probabilities(i));
  }
  return s / static_cast<double>(targets.size());
}

/// KL(N(mu, V) || N(0, sigma_e2)) summed over coordinates.
inline double kl_gaussian(const Vector& mu, const Vector& var, double sigma_e2) {
  if (mu.size() != var.size()) throw NumericError("kl_gaussian: length mismatch");
  if (!(sigma_e2 > 0.0)) throw NumericError("kl_gaussian: nonpositive prior variance");
  double kl = 0.0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    if (!(var(k) > 0.0)) throw NumericError("kl_gaussian: nonpositive variance");
    kl += 0.5 * (-1.0 + std::log(sigma_e2) - std::log(var(k)) +
                 (mu(k) * mu(k) + var(k)) / sigma_e2);
  }
  return kl;
}

// ---- full objective --------------------------------------------------------

struct DapdagParams {
  EncoderParams encoder;
  DecoderParams decoder;
};

struct ObjectiveResult {
  LossBreakdown breakdown;
  Vector e_hat;
  PosteriorE posterior;
  std::vector<Matrix> encoder_grads;  // EncoderParams::parameters() order
  std::vector<Matrix> decoder_grads;  // DecoderParams::parameters() order
};

namespace detail {

/// Per-variable loss columns and dL/d(out) for the decoder outputs.
/// Point mode uses mean losses; Bayes mode uses summed negative
/// log-likelihoods with unit-variance Gaussians for continuous variables.
struct ReconTerms {
  std::vector<double> per_var;
  Matrix d_out;  // unweighted
};

inline ReconTerms reconstruction_terms(const Matrix& xt, const DecoderCache& c,
                                       const std::vector<VarKind>& kinds, EstimationMode mode) {
  const Eigen::Index n = xt.rows();
  const auto dv = static_cast<Eigen::Index>(kinds.size());
  ReconTerms t;
  t.per_var.assign(static_cast<std::size_t>(dv), 0.0);
  t.d_out.resize(n, dv);
  const bool bayes = mode == EstimationMode::bayes;
  const double scale = bayes ? 1.0 : 1.0 / static_cast<double>(n);
  for (Eigen::Index k = 0; k < dv; ++k) {
    double s = 0.0;
    if (kinds[static_cast<std::size_t>(k)] == VarKind::binary) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double y = xt(r, k);
        const double p = c.pred(r, k);
        s += bce_term(y, p);
        const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
        t.d_out(r, k) = clamped ? 0.0 : (p - y) * scale;
      }
    } else {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double diff = c.pred(r, k) - xt(r, k);
        s += bayes ? 0.5 * diff * diff : diff * diff;
        t.d_out(r, k) = (bayes ? diff : 2.0 * diff) * scale;
      }
    }
    t.per_var[static_cast<std::size_t>(k)] = s * scale;
  }
  return t;
}

}  // namespace detail

/// Evaluates the training objective on one labeled batch xt (n x D, already
/// standardized). The encoder sees the batch's feature columns. `zeta` is the
/// standard-normal noise for the Bayes-mode draw and is ignored in point mode.
inline ObjectiveResult evaluate_objective(const Matrix& xt, const DapdagParams& model,
                                          const HyperParams& hp, const Vector& zeta,
                                          bool want_grad = true) {
  const DecoderParams& dec = model.decoder;
  const int dv = dec.variables;
  const int label = dv - 1;
  const bool bayes = hp.mode == EstimationMode::bayes;

  ObjectiveResult res;
  EncoderCache ecache;
  res.posterior = encode(xt.leftCols(dv - 1), model.encoder, &ecache);
  res.e_hat = sample_e(res.posterior, hp.mode, zeta);

  DecoderCache dcache;
  decoder_forward(xt, res.e_hat, dec, &dcache);
  auto recon = detail::reconstruction_terms(xt, dcache, dec.kinds, hp.mode);

  LossBreakdown& b = res.breakdown;
  b.reconstruction = recon.per_var;
  b.reconstruction_total = 0.0;
  for (int k = 0; k < dv; ++k) {
    if (hp.enable_reconstruction || k == label) b.reconstruction_total += recon.per_var[k];
  }
  const auto st = structure_terms(dec, hp.lasso_includes_e, want_grad);
  b.h = st.h;
  b.h2 = st.h * st.h;
  b.group_lasso = st.group_lasso;
  b.e_reg = res.e_hat.squaredNorm();
  const double dag_part = hp.enable_dag ? b.h + hp.alpha * b.h2 : 0.0;
  const double spa_part = hp.enable_sparsity ? hp.beta * b.group_lasso : 0.0;

  // Per-column weights applied to dL/d(out).
  std::vector<double> col_weight(static_cast<std::size_t>(dv), 0.0);
  if (bayes) {
    b.kl = kl_gaussian(res.posterior.mean, res.posterior.var, hp.sigma_e2);
    b.nll = b.reconstruction_total;
    b.dag_loss = dag_part + spa_part;
    b.total = b.kl + b.nll + hp.lambda * b.dag_loss;
    for (int k = 0; k < dv; ++k) {
      col_weight[k] = (hp.enable_reconstruction || k == label) ? 1.0 : 0.0;
    }
  } else {
    b.prediction = recon.per_var[static_cast<std::size_t>(label)];
    b.dag_loss = b.reconstruction_total + dag_part + spa_part;
    b.total = b.prediction + hp.gamma * b.e_reg + hp.lambda * b.dag_loss;
    for (int k = 0; k < dv; ++k) {
      col_weight[k] = (hp.enable_reconstruction || k == label) ? hp.lambda : 0.0;
    }
    col_weight[static_cast<std::size_t>(label)] += 1.0;
  }
  if (!want_grad) return res;

  Matrix d_out = recon.d_out;
  for (int k = 0; k < dv; ++k) d_out.col(k) *= col_weight[static_cast<std::size_t>(k)];
  auto dg = decoder_backward(dcache, dec, d_out);

  Matrix& d_w1 = dg.params[0];
  if (hp.enable_dag) d_w1 += hp.lambda * (1.0 + 2.0 * hp.alpha * b.h) * st.d_h;
  if (hp.enable_sparsity) d_w1 += hp.lambda * hp.beta * st.d_lasso;
  res.decoder_grads = std::move(dg.params);

  Vector d_e = dg.d_e_hat;
  Vector d_mean;
  Vector d_var;
  if (bayes) {
    const Vector sd = res.posterior.var.cwiseSqrt();
    d_mean = d_e + res.posterior.mean / hp.sigma_e2;
    d_var = d_e.cwiseProduct(zeta).cwiseQuotient(2.0 * sd);
    d_var.array() += 0.5 * (1.0 / hp.sigma_e2 - res.posterior.var.array().inverse());
  } else {
    d_mean = d_e + 2.0 * hp.gamma * res.e_hat;
    d_var = Vector::Zero(d_e.size());
  }
  res.encoder_grads = encoder_backward(ecache, model.encoder, d_mean, d_var);
  return res;
}

/// R_G on a batch with a given E estimate (point-mode reconstruction losses).
inline LossBreakdown dag_loss(const Matrix& xt, const Vector& e_hat, const DecoderParams& dec,
                              const HyperParams& hp) {
  DecoderCache c;
  decoder_forward(xt, e_hat, dec, &c);
  auto recon = detail::reconstruction_terms(xt, c, dec.kinds, EstimationMode::point);
  LossBreakdown b;
  b.reconstruction = recon.per_var;
  const int label = dec.variables - 1;
  for (int k = 0; k < dec.variables; ++k) {
    if (hp.enable_reconstruction || k == label) b.reconstruction_total += recon.per_var[k];
  }
  const auto st = structure_terms(dec, hp.lasso_includes_e, false);
  b.h = st.h;
  b.h2 = st.h * st.h;
  b.group_lasso = st.group_lasso;
  b.dag_loss = b.reconstruction_total + (hp.enable_dag ? b.h + hp.alpha * b.h2 : 0.0) +
               (hp.enable_sparsity ? hp.beta * b.group_lasso : 0.0);
  b.total = b.dag_loss;
  return b;
}

/// Point-mode objective on a labeled batch.
inline LossBreakdown total_loss_point(const DomainDataset& batch, const DapdagParams& model,
                                      HyperParams hp) {
  if (!batch.labeled) throw NumericError("total_loss_point: batch is unlabeled");
  hp.mode = EstimationMode::point;
  return evaluate_objective(batch.data, model, hp, Vector(), false).breakdown;
}

/// Evidence lower bound averaged over the supplied noise draws (to be
/// maximized). Each draw is an e-vector of standard-normal noise.
inline double elbo(const DomainDataset& batch, const DapdagParams& model, HyperParams hp,
                   const std::vector<Vector>& draws) {
  if (!batch.labeled) throw NumericError("elbo: batch is unlabeled");
  if (draws.empty()) throw NumericError("elbo: need at least one noise draw");
  hp.mode = EstimationMode::bayes;
  double nll = 0.0;
  LossBreakdown last;
  for (const auto& z : draws) {
    last = evaluate_objective(batch.data, model, hp, z, false).breakdown;
    nll += last.nll;
  }
  nll /= static_cast<double>(draws.size());
  return -last.kl - nll - hp.lambda * last.dag_loss;
}

// ---- bound diagnostics -----------------------------------------------------

struct BoundDiagnostics {
  double e_sq = 0.0;          // |E|^2
  double trace_gap_sq = 0.0;  // (Tr e^{A∘A} - D)^2
  double theta1_sq = 0.0;     // |w1|_F^2
  double theta2_sq = 0.0;     // |w2|_F^2 + |b2|^2
  double theta3_sq = 0.0;     // |w3|_F^2 + |b3|^2
  double params_sq() const { return theta1_sq + theta2_sq + theta3_sq; }
};

inline BoundDiagnostics bound_diagnostics(const DecoderParams& dec, const Vector& e_hat) {
  BoundDiagnostics d;
  d.e_sq = e_hat.squaredNorm();
  const Matrix a = adjacency(dec);
  const double trace = matexp(a.cwiseProduct(a)).trace();
  const double gap = trace - static_cast<double>(dec.variables);
  d.trace_gap_sq = gap * gap;
  d.theta1_sq = dec.w1.squaredNorm();
  d.theta2_sq = dec.w2.squaredNorm() + dec.b2.squaredNorm();
  d.theta3_sq = dec.w3.squaredNorm() + dec.b3.squaredNorm();
  return d;
}

inline nlohmann::json diagnostics_to_json(const BoundDiagnostics& d) {
  return {{"e_sq", d.e_sq},           {"trace_gap_sq", d.trace_gap_sq},
          {"theta1_sq", d.theta1_sq}, {"theta2_sq", d.theta2_sq},
          {"theta3_sq", d.theta3_sq}, {"params_sq", d.params_sq()}};
}

}  // namespace dapdag
