#pragma once

// Deep-set domain encoder. Each feature row x_i contributes a precision
// nu(x_i) and a location phi(x_i); the set posterior over E is
//
//   V  = (sum_i nu(x_i) - (n-1) nu0)^-1
//   mu = V * sum_i nu(x_i) phi(x_i)
//
// computed per coordinate of E. Sums make the result independent of row order.
// The per-row precision is nu(x) = nu0 + softplus(net(x)) + floor, so that a
// single-row posterior is never less concentrated than the prior and the
// aggregate stays at least nu0 + n * floor.

#include <dapdag/mlp.hpp>
#include <dapdag/numerics.hpp>

#include <random>
#include <vector>

namespace dapdag {

/// Floor added after the softplus on the precision network (on top of nu0).
inline constexpr double kPrecisionFloor = 1e-4;
/// Lower clamp of the aggregated precision before inversion.
inline constexpr double kAggregateFloor = 1e-6;
/// Lower bound for nu0 after optimizer steps.
inline constexpr double kPriorPrecisionFloor = 1e-4;

struct EncoderParams {
  Mlp phi;
  Mlp nu;
  Matrix nu0;  // 1 x e

  EncoderParams() = default;
  EncoderParams(int features, int e_dim, int hidden = 16)
      : phi({features, hidden, hidden, e_dim}),
        nu({features, hidden, hidden, e_dim}),
        nu0(Matrix::Constant(1, e_dim, 0.1)) {}

  int feature_count() const { return phi.input_size(); }
  int e_dim() const { return phi.output_size(); }

  template <class Rng>
  void init(Rng& rng) {
    phi.init_uniform(rng);
    nu.init_uniform(rng);
    nu0.setConstant(0.1);
  }

  /// phi params, nu params, nu0.
  std::vector<Matrix*> parameters() {
    auto out = phi.parameters();
    for (auto* p : nu.parameters()) out.push_back(p);
    out.push_back(&nu0);
    return out;
  }

  void project() { nu0 = nu0.cwiseMax(kPriorPrecisionFloor); }
};

struct PosteriorE {
  Vector mean;
  Vector var;
  Eigen::Index n = 0;
};

struct EncoderCache {
  Mlp::Cache phi_cache;
  Mlp::Cache nu_cache;
  Matrix phi_out;   // n x e
  Matrix nu_raw;    // n x e, before softplus
  Matrix nu_out;    // n x e, nu0 + softplus + floor
  Vector precision; // aggregated, before clamp
  Vector weighted;  // sum_i nu_i phi_i
  PosteriorE post;
};

inline PosteriorE encode(const Matrix& x, const EncoderParams& p, EncoderCache* cache = nullptr) {
  if (x.rows() == 0) throw NumericError("encode: empty feature set (n = 0)");
  if (x.cols() != p.feature_count()) throw NumericError("encode: feature-count mismatch");
  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;

  c.phi_out = p.phi.forward(x, c.phi_cache);
  c.nu_raw = p.nu.forward(x, c.nu_cache);
  c.nu_out = c.nu_raw.unaryExpr([](double v) { return softplus(v) + kPrecisionFloor; });
  c.nu_out.rowwise() += p.nu0.row(0);

  const auto n = static_cast<double>(x.rows());
  c.precision = c.nu_out.colwise().sum().transpose() - (n - 1.0) * p.nu0.row(0).transpose();
  c.weighted = c.nu_out.cwiseProduct(c.phi_out).colwise().sum().transpose();

  PosteriorE post;
  post.n = x.rows();
  post.var = c.precision.cwiseMax(kAggregateFloor).cwiseInverse();
  // With one row the formula collapses to phi(x); skip the V * nu * phi round trip.
  post.mean = x.rows() == 1 ? Vector(c.phi_out.row(0).transpose()) : Vector(post.var.cwiseProduct(c.weighted));
  c.post = post;
  return post;
}

/// Gradients in EncoderParams::parameters() order given dL/dmu and dL/dV.
inline std::vector<Matrix> encoder_backward(const EncoderCache& c, const EncoderParams& p,
                                            const Vector& d_mean, const Vector& d_var) {
  const Eigen::Index e = c.post.mean.size();
  const auto n = static_cast<double>(c.phi_out.rows());

  // mu = V * T, V = 1 / max(S, floor)
  const Vector d_weighted = d_mean.cwiseProduct(c.post.var);
  Vector d_var_total = d_var + d_mean.cwiseProduct(c.weighted);
  Vector d_precision(e);
  for (Eigen::Index k = 0; k < e; ++k) {
    const double s = c.precision(k);
    d_precision(k) = s > kAggregateFloor ? -d_var_total(k) / (s * s) : 0.0;
  }

  // S = sum nu_i - (n-1) nu0 ; T = sum nu_i phi_i
  Matrix d_nu_out = c.phi_out;
  for (Eigen::Index k = 0; k < e; ++k) {
    d_nu_out.col(k) = d_nu_out.col(k) * d_weighted(k);
    d_nu_out.col(k).array() += d_precision(k);
  }
  Matrix d_phi_out = c.nu_out;
  for (Eigen::Index k = 0; k < e; ++k) d_phi_out.col(k) *= d_weighted(k);

  const Matrix d_nu_raw =
      d_nu_out.cwiseProduct(c.nu_raw.unaryExpr([](double v) { return sigmoid(v); }));

  auto grads = p.phi.backward(c.phi_cache, d_phi_out);
  for (auto& g : p.nu.backward(c.nu_cache, d_nu_raw)) grads.push_back(std::move(g));
  grads.push_back(d_nu_out.colwise().sum() - (n - 1.0) * d_precision.transpose());
  return grads;
}

enum class EstimationMode { point, bayes };

inline const char* to_string(EstimationMode m) { return m == EstimationMode::bayes ? "bayes" : "point"; }

/// Point mode returns mu; Bayes mode returns mu + sqrt(V) * zeta.
inline Vector sample_e(const PosteriorE& post, EstimationMode mode, const Vector& zeta) {
  if (mode == EstimationMode::point) return post.mean;
  if (zeta.size() != post.mean.size()) throw NumericError("sample_e: noise dimension mismatch");
  return post.mean + post.var.cwiseSqrt().cwiseProduct(zeta);
}

}  // namespace dapdag
