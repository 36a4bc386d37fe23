#pragma once

// DAG-structured reconstruction network.
//
// Every observed variable k has a structural filter W1^k of shape (D+e) x H,
// where D = d+1 observed variables and e = dim(E); row k of W1^k is held at
// zero so variable k never sees itself. The filters are stored side by side in
// one (D+e) x (D*H) matrix; filter k occupies columns [k*H, (k+1)*H).
// All reconstruction paths share one hidden H x H layer and end in a
// per-variable linear head, followed by a sigmoid for binary variables.

#include <dapdag/data.hpp>
#include <dapdag/numerics.hpp>

#include <random>
#include <vector>

namespace dapdag {

struct DecoderParams {
  int variables = 0;  // D
  int e_dim = 0;
  int hidden = 16;
  std::vector<VarKind> kinds;

  Matrix w1;  // (D+e) x (D*H), filter layer, no bias
  Matrix w2;  // H x H, shared
  Matrix b2;  // 1 x H
  Matrix w3;  // H x D, column k is the head of variable k
  Matrix b3;  // 1 x D

  DecoderParams() = default;
  DecoderParams(std::vector<VarKind> var_kinds, int e, int h = 16)
      : variables(static_cast<int>(var_kinds.size())),
        e_dim(e),
        hidden(h),
        kinds(std::move(var_kinds)),
        w1(Matrix::Zero(variables + e, variables * h)),
        w2(Matrix::Zero(h, h)),
        b2(Matrix::Zero(1, h)),
        w3(Matrix::Zero(h, variables)),
        b3(Matrix::Zero(1, variables)) {}

  int input_rows() const { return variables + e_dim; }

  auto filter_row(int input, int var) { return w1.block(input, var * hidden, 1, hidden); }
  auto filter_row(int input, int var) const { return w1.block(input, var * hidden, 1, hidden); }

  /// Zeroes row k of every filter k.
  void apply_mask() {
    for (int k = 0; k < variables; ++k) filter_row(k, k).setZero();
  }

  template <class Rng>
  void init(Rng& rng) {
    auto fill = [&rng](Matrix& m, double fan_in) {
      const double bound = std::sqrt(1.0 / fan_in);
      std::uniform_real_distribution<double> u(-bound, bound);
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
    };
    fill(w1, input_rows());
    fill(w2, hidden);
    fill(b2, hidden);
    fill(w3, hidden);
    fill(b3, hidden);
    apply_mask();
  }

  std::vector<Matrix*> parameters() { return {&w1, &w2, &b2, &w3, &b3}; }

  /// Zeroes gradient entries belonging to masked filter rows.
  void mask_gradient(Matrix& d_w1) const {
    for (int k = 0; k < variables; ++k) d_w1.block(k, k * hidden, 1, hidden).setZero();
  }
};

struct DecoderCache {
  Matrix input;  // n x (D+e)
  Matrix a1;     // n x (D*H)
  Matrix z1;
  Matrix a2;     // (n*D) x H
  Matrix z2;
  Matrix out;    // n x D, head outputs before any sigmoid
  Matrix pred;   // n x D
};

inline Matrix decoder_input(const Matrix& xt, const Vector& e_hat) {
  Matrix u(xt.rows(), xt.cols() + e_hat.size());
  u.leftCols(xt.cols()) = xt;
  for (Eigen::Index j = 0; j < e_hat.size(); ++j) u.col(xt.cols() + j).setConstant(e_hat(j));
  return u;
}

inline void check_decoder_input(const Matrix& xt, const Vector& e_hat, const DecoderParams& p) {
  if (xt.cols() != p.variables) {
    throw NumericError("decoder: expected " + std::to_string(p.variables) + " observed columns, got " +
                       std::to_string(xt.cols()));
  }
  if (e_hat.size() != p.e_dim) throw NumericError("decoder: E dimension mismatch");
  if (!e_hat.allFinite()) throw NumericError("decoder: non-finite E");
}

/// Predictions for all D variables on every row of `xt` (n x D).
inline Matrix decoder_forward(const Matrix& xt, const Vector& e_hat, const DecoderParams& p,
                              DecoderCache* cache = nullptr) {
  check_decoder_input(xt, e_hat, p);
  DecoderCache local;
  DecoderCache& c = cache ? *cache : local;
  const Eigen::Index n = xt.rows();
  const int dv = p.variables;
  const int h = p.hidden;

  c.input = decoder_input(xt, e_hat);
  c.a1 = c.input * p.w1;
  c.z1 = elu(c.a1);
  // Row-major n x (D*H) reinterpreted as (n*D) x H: row r*D+k is path k of row r.
  Eigen::Map<const Matrix> z1v(c.z1.data(), n * dv, h);
  c.a2 = z1v * p.w2;
  c.a2.rowwise() += p.b2.row(0);
  c.z2 = elu(c.a2);

  c.out.resize(n, dv);
  c.pred.resize(n, dv);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int k = 0; k < dv; ++k) {
      const double o = c.z2.row(r * dv + k).dot(p.w3.col(k)) + p.b3(0, k);
      c.out(r, k) = o;
      c.pred(r, k) = p.kinds[static_cast<std::size_t>(k)] == VarKind::binary ? sigmoid(o) : o;
    }
  }
  return c.pred;
}

struct DecoderGradients {
  std::vector<Matrix> params;  // w1, w2, b2, w3, b3
  Vector d_e_hat;
  Matrix d_input;  // n x D, only when requested
};

/// Backward pass given dL/d(out), the gradient w.r.t. head outputs before the
/// sigmoid.
inline DecoderGradients decoder_backward(const DecoderCache& c, const DecoderParams& p,
                                         const Matrix& d_out, bool want_input = false) {
  const Eigen::Index n = c.input.rows();
  const int dv = p.variables;
  const int h = p.hidden;

  DecoderGradients g;
  Matrix d_w3 = Matrix::Zero(h, dv);
  Matrix d_z2(n * dv, h);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int k = 0; k < dv; ++k) {
      const double go = d_out(r, k);
      d_w3.col(k) += go * c.z2.row(r * dv + k).transpose();
      d_z2.row(r * dv + k) = go * p.w3.col(k).transpose();
    }
  }
  const Matrix d_b3 = d_out.colwise().sum();

  const Matrix d_a2 = d_z2.cwiseProduct(elu_grad(c.a2));
  Eigen::Map<const Matrix> z1v(c.z1.data(), n * dv, h);
  const Matrix d_w2 = z1v.transpose() * d_a2;
  const Matrix d_b2 = d_a2.colwise().sum();

  Matrix d_z1v = d_a2 * p.w2.transpose();  // (n*D) x H
  Eigen::Map<const Matrix> d_z1(d_z1v.data(), n, dv * h);
  const Matrix d_a1 = d_z1.cwiseProduct(elu_grad(c.a1));
  Matrix d_w1 = c.input.transpose() * d_a1;

  const Eigen::Index e = p.e_dim;
  const Matrix w1_e = p.w1.bottomRows(e);  // e x (D*H)
  g.d_e_hat = (d_a1 * w1_e.transpose()).colwise().sum().transpose();
  if (want_input) g.d_input = d_a1 * p.w1.topRows(dv).transpose();

  g.params = {std::move(d_w1), d_w2, d_b2, std::move(d_w3), d_b3};
  return g;
}

/// Prediction for a single row.
inline Vector reconstruct(const Vector& x_tilde, const Vector& e_hat, const DecoderParams& p) {
  if (x_tilde.size() != p.variables) throw NumericError("reconstruct: schema mismatch");
  Matrix xt = x_tilde.transpose();
  return decoder_forward(xt, e_hat, p).row(0).transpose();
}

/// Label path only, for a batch of feature rows (n x d). The label slot is fed
/// zero; the masked filter row makes its value irrelevant.
inline Vector predict_label_batch(const Matrix& features, const Vector& e_hat,
                                  const DecoderParams& p, double placeholder = 0.0) {
  const int dv = p.variables;
  const int h = p.hidden;
  if (features.cols() != dv - 1) throw NumericError("predict_label: feature-count mismatch");
  if (e_hat.size() != p.e_dim) throw NumericError("predict_label: E dimension mismatch");
  Matrix xt(features.rows(), dv);
  xt.leftCols(dv - 1) = features;
  xt.col(dv - 1).setConstant(placeholder);
  const Matrix u = decoder_input(xt, e_hat);
  const int label = dv - 1;
  const Matrix z1 = elu(Matrix(u * p.w1.middleCols(label * h, h)));
  Matrix a2 = z1 * p.w2;
  a2.rowwise() += p.b2.row(0);
  const Matrix z2 = elu(a2);
  Vector out = z2 * p.w3.col(label);
  out.array() += p.b3(0, label);
  if (p.kinds.back() == VarKind::binary) out = out.unaryExpr([](double v) { return sigmoid(v); });
  return out;
}

inline double predict_label(const Vector& features, const Vector& e_hat, const DecoderParams& p,
                            double placeholder = 0.0) {
  Matrix x = features.transpose();
  return predict_label_batch(x, e_hat, p, placeholder)(0);
}

// ---- structure -------------------------------------------------------------

/// A(i,k) = l2 norm of row i of filter k over observed inputs; diagonal 0.
inline Matrix adjacency(const DecoderParams& p) {
  const int dv = p.variables;
  Matrix a = Matrix::Zero(dv, dv);
  for (int k = 0; k < dv; ++k) {
    for (int i = 0; i < dv; ++i) {
      if (i != k) a(i, k) = p.filter_row(i, k).norm();
    }
  }
  return a;
}

inline double acyclicity(const DecoderParams& p) { return notears_h(adjacency(p)); }

struct StructureTerms {
  double h = 0.0;
  double group_lasso = 0.0;
  Matrix d_h;      // dh/dw1
  Matrix d_lasso;  // d(l1)/dw1
};

/// h and the group lasso with their gradients w.r.t. the filter matrix.
/// Rows for E enter the lasso only when `lasso_includes_e` is set.
inline StructureTerms structure_terms(const DecoderParams& p, bool lasso_includes_e,
                                      bool want_grad = true) {
  const int dv = p.variables;
  const int h = p.hidden;
  StructureTerms t;
  const Matrix a = adjacency(p);
  const auto ev = notears_eval(a);
  t.h = ev.h;
  if (want_grad) {
    t.d_h = Matrix::Zero(p.w1.rows(), p.w1.cols());
    t.d_lasso = Matrix::Zero(p.w1.rows(), p.w1.cols());
  }
  const int rows = lasso_includes_e ? p.input_rows() : dv;
  for (int k = 0; k < dv; ++k) {
    for (int i = 0; i < p.input_rows(); ++i) {
      if (i == k) continue;
      const auto row = p.filter_row(i, k);
      if (i < rows) {
        const double norm = row.norm();
        t.group_lasso += norm;
        if (want_grad && norm > 0.0) t.d_lasso.block(i, k * h, 1, h) = row / norm;
      }
      if (want_grad && i < dv) t.d_h.block(i, k * h, 1, h) = 2.0 * ev.exp_sq(k, i) * row;
    }
  }
  return t;
}

}  // namespace dapdag
