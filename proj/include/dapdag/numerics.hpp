#pragma once

// Dense-matrix kernel: matrix exponential, the trace-exponential acyclicity
// functional, activations, Adam, and a finite-difference gradient checker.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dapdag {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

class NumericError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw NumericError(std::string(what) + ": matrix must be square, got " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline void require_finite(const Matrix& m, const char* what) {
  if (!all_finite(m)) throw NumericError(std::string(what) + ": non-finite entry");
}

/// e^M by scaling and squaring around a degree-12 Taylor core.
///
/// The scaling exponent s is the smallest integer with ||M||_inf / 2^s <= 0.5,
/// which bounds the Taylor truncation term by 0.5^13 / 13!.
inline Matrix matexp(const Matrix& m) {
  require_square(m, "matexp");
  require_finite(m, "matexp");
  const Eigen::Index n = m.rows();
  if (n == 0) return Matrix(0, 0);

  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix a = m / std::ldexp(1.0, s);

  // Horner form: I + A(I + A/2(I + A/3(...))).
  Matrix result = Matrix::Identity(n, n);
  for (int k = 12; k >= 1; --k) {
    result = Matrix::Identity(n, n) + (a * result) / static_cast<double>(k);
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

/// Tr(e^{A∘A}) - d. Zero exactly when the weighted graph of A has no cycles.
inline double notears_h(const Matrix& a) {
  require_square(a, "notears_h");
  require_finite(a, "notears_h");
  const Matrix e = matexp(a.cwiseProduct(a));
  return e.trace() - static_cast<double>(a.rows());
}

/// Elementwise derivative of notears_h: (e^{A∘A})^T ∘ 2A.
inline Matrix notears_h_grad(const Matrix& a) {
  require_square(a, "notears_h_grad");
  require_finite(a, "notears_h_grad");
  const Matrix e = matexp(a.cwiseProduct(a));
  return e.transpose().cwiseProduct(2.0 * a);
}

/// Value and gradient sharing a single exponential.
struct AcyclicityValue {
  double h = 0.0;
  Matrix exp_sq;  // e^{A∘A}
};

inline AcyclicityValue notears_eval(const Matrix& a) {
  require_square(a, "notears_eval");
  AcyclicityValue out;
  out.exp_sq = matexp(a.cwiseProduct(a));
  out.h = out.exp_sq.trace() - static_cast<double>(a.rows());
  return out;
}

// ---- activations -----------------------------------------------------------

inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
inline double elu_grad(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}
inline double sigmoid_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 - s);
}

inline double softplus(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline Matrix elu(const Matrix& x) {
  return x.unaryExpr([](double v) { return elu(v); });
}
inline Matrix elu_grad(const Matrix& x) {
  return x.unaryExpr([](double v) { return elu_grad(v); });
}

// ---- Adam ------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  long step = 0;

  AdamState() = default;
  explicit AdamState(AdamConfig c) : config(c) {}
};

/// One bias-corrected Adam update. Moment buffers are allocated on first use.
inline void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                      AdamState& state) {
  if (params.size() != grads.size()) {
    throw NumericError("adam_step: parameter/gradient count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols()) {
      throw NumericError("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
  }
  if (state.first.empty()) {
    for (const Matrix* p : params) {
      state.first.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  } else if (state.first.size() != params.size()) {
    throw NumericError("adam_step: state was built for a different parameter list");
  }

  state.step += 1;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first[i];
    Matrix& v = state.second[i];
    if (m.rows() != grads[i].rows() || m.cols() != grads[i].cols()) {
      throw NumericError("adam_step: moment buffer shape mismatch");
    }
    m = c.beta1 * m + (1.0 - c.beta1) * grads[i];
    v = c.beta2 * v + (1.0 - c.beta2) * grads[i].cwiseProduct(grads[i]);
    Matrix& p = *params[i];
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double mhat = m.data()[k] / bc1;
      const double vhat = v.data()[k] / bc2;
      p.data()[k] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

// ---- finite-difference checking -------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries = 0;
};

/// Relative error with a floor on the denominator so that near-zero gradients
/// are judged on absolute scale.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Compares analytic gradients to central differences of `loss` over every
/// entry of every parameter. `loss` reads the parameters through the pointers
/// in `params`, which are perturbed in place and restored.
///
/// Rounding in the difference quotient is about eps*|loss|/step, so the
/// denominator floor is raised to 1e-6*|loss| for large losses.
inline GradCheckReport grad_check(const std::function<double()>& loss,
                                  std::span<Matrix* const> params,
                                  std::span<const Matrix> analytic, double step = 1e-5,
                                  double floor = 1e-6) {
  if (params.size() != analytic.size()) {
    throw NumericError("grad_check: parameter/gradient count mismatch");
  }
  floor = std::max(floor, 1e-6 * std::abs(loss()));
  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double saved = p.data()[k];
      p.data()[k] = saved + step;
      const double up = loss();
      p.data()[k] = saved - step;
      const double down = loss();
      p.data()[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i].data()[k];
      report.max_rel_error = std::max(report.max_rel_error, relative_error(a, numeric, floor));
      report.max_abs_error = std::max(report.max_abs_error, std::abs(a - numeric));
      ++report.entries;
    }
  }
  return report;
}

}  // namespace dapdag
