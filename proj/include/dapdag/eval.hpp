#pragma once

// Metrics: AUC, average precision, R^2, thresholded structure comparison,
// entropic optimal transport distance, and Spearman rank correlation.

#include <dapdag/numerics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dapdag {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_same_length(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) throw MetricError(std::string(what) + ": length mismatch");
}

/// Indices sorted by descending score, stable.
inline std::vector<Eigen::Index> order_descending(const Vector& scores) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores(a) > scores(b); });
  return idx;
}

inline void require_binary_labels(const Vector& labels, const char* what) {
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) != 0.0 && labels(i) != 1.0) {
      throw MetricError(std::string(what) + ": labels must be 0 or 1");
    }
  }
}

}  // namespace detail

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
inline double auc(const Vector& labels, const Vector& scores) {
  detail::require_same_length(labels, scores, "auc");
  detail::require_binary_labels(labels, "auc");
  const double pos = labels.sum();
  const double neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw MetricError("auc: both classes must be present");

  // Walk tie groups from the lowest score up.
  auto idx = detail::order_descending(scores);
  std::reverse(idx.begin(), idx.end());
  double wins = 0.0;
  double neg_below = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    double gp = 0.0, gn = 0.0;
    while (j < idx.size() && scores(idx[j]) == scores(idx[i])) {
      (labels(idx[j]) == 1.0 ? gp : gn) += 1.0;
      ++j;
    }
    wins += gp * neg_below + 0.5 * gp * gn;
    neg_below += gn;
    i = j;
  }
  return wins / (pos * neg);
}

/// Sum over descending distinct thresholds of (R_n - R_{n-1}) * P_n, where a
/// row is called positive when its score is at least the threshold.
inline double apr(const Vector& labels, const Vector& scores) {
  detail::require_same_length(labels, scores, "apr");
  detail::require_binary_labels(labels, "apr");
  const double pos = labels.sum();
  if (pos == 0.0) throw MetricError("apr: no positive labels");

  const auto idx = detail::order_descending(scores);
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, total = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores(idx[j]) == scores(idx[i])) {
      (labels(idx[j]) == 1.0 ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / pos;
    const double precision = tp / (tp + fp);
    total += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return total;
}

inline double r2(const Vector& targets, const Vector& predictions) {
  detail::require_same_length(targets, predictions, "r2");
  if (targets.size() < 2) throw MetricError("r2: need at least 2 values");
  const double mean = targets.mean();
  const double ss_tot = (targets.array() - mean).square().sum();
  if (ss_tot == 0.0) throw MetricError("r2: constant targets");
  const double ss_res = (targets - predictions).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

// ---- structure -------------------------------------------------------------

struct EdgeSet {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;  // (from, to), sorted

  bool contains(int from, int to) const {
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(from, to));
  }
  void add(int from, int to) {
    if (from == to) throw MetricError("EdgeSet: self-loop");
    if (from < 0 || to < 0 || from >= nodes || to >= nodes) {
      throw MetricError("EdgeSet: node index out of range");
    }
    const auto e = std::make_pair(from, to);
    const auto it = std::lower_bound(edges.begin(), edges.end(), e);
    if (it == edges.end() || *it != e) edges.insert(it, e);
  }
  Matrix to_matrix() const {
    Matrix m = Matrix::Zero(nodes, nodes);
    for (const auto& [i, k] : edges) m(i, k) = 1.0;
    return m;
  }
  static EdgeSet from_matrix(const Matrix& m) {
    require_square(m, "EdgeSet::from_matrix");
    EdgeSet s;
    s.nodes = static_cast<int>(m.rows());
    for (int i = 0; i < s.nodes; ++i)
      for (int k = 0; k < s.nodes; ++k)
        if (i != k && m(i, k) != 0.0) s.edges.emplace_back(i, k);
    return s;
  }
};

/// Edge i -> k whenever A(i,k) >= tau. The diagonal is ignored.
inline EdgeSet threshold_adjacency(const Matrix& a, double tau) {
  if (!(tau > 0.0)) throw MetricError("threshold_adjacency: tau must be > 0");
  require_square(a, "threshold_adjacency");
  EdgeSet s;
  s.nodes = static_cast<int>(a.rows());
  for (int i = 0; i < s.nodes; ++i)
    for (int k = 0; k < s.nodes; ++k)
      if (i != k && a(i, k) >= tau) s.edges.emplace_back(i, k);
  return s;
}

/// True when the edge set admits a topological order.
inline bool is_acyclic(const EdgeSet& g) {
  std::vector<int> indegree(static_cast<std::size_t>(g.nodes), 0);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(g.nodes));
  for (const auto& [i, k] : g.edges) {
    out[i].push_back(k);
    ++indegree[k];
  }
  std::vector<int> ready;
  for (int v = 0; v < g.nodes; ++v)
    if (indegree[v] == 0) ready.push_back(v);
  int visited = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++visited;
    for (int w : out[v])
      if (--indegree[w] == 0) ready.push_back(w);
  }
  return visited == g.nodes;
}

/// Structural Hamming distance: the number of unordered node pairs whose
/// edge state differs. A reversed edge therefore costs 1.
inline int shd(const EdgeSet& learned, const EdgeSet& truth) {
  if (learned.nodes != truth.nodes) throw MetricError("shd: node-count mismatch");
  int d = 0;
  for (int i = 0; i < truth.nodes; ++i) {
    for (int k = i + 1; k < truth.nodes; ++k) {
      const bool same = learned.contains(i, k) == truth.contains(i, k) &&
                        learned.contains(k, i) == truth.contains(k, i);
      if (!same) ++d;
    }
  }
  return d;
}

// ---- optimal transport -----------------------------------------------------

struct SinkhornConfig {
  double epsilon = 0.05;
  int max_iterations = 5000;
  double tolerance = 1e-9;  // L1 violation of the row marginal
  double p = 2.0;
};

struct SinkhornResult {
  double distance = 0.0;
  double cost = 0.0;  // transport cost, distance^p
  int iterations = 0;
  double violation = 0.0;
  bool converged = false;
};

/// Entropic optimal transport between the uniform empirical measures on the
/// rows of xa and xb with cost |x - y|^p, iterated in the log domain.
inline SinkhornResult sinkhorn(const Matrix& xa, const Matrix& xb, const SinkhornConfig& cfg = {}) {
  if (xa.rows() < 1 || xb.rows() < 1) throw MetricError("sinkhorn: empty point set");
  if (xa.cols() != xb.cols()) throw MetricError("sinkhorn: dimension mismatch");
  if (!(cfg.epsilon > 0.0)) throw MetricError("sinkhorn: epsilon must be > 0");
  if (!(cfg.p >= 1.0)) throw MetricError("sinkhorn: p must be >= 1");

  const Eigen::Index na = xa.rows(), nb = xb.rows();
  Matrix cost(na, nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double dist = (xa.row(i) - xb.row(j)).norm();
      cost(i, j) = cfg.p == 2.0 ? dist * dist : std::pow(dist, cfg.p);
    }
  }
  const double log_a = -std::log(static_cast<double>(na));
  const double log_b = -std::log(static_cast<double>(nb));
  // Plan: P_ij = exp((f_i + g_j - C_ij) / eps + log_a + log_b).
  Vector f = Vector::Zero(na), g = Vector::Zero(nb), f_new(na);
  Matrix work(na, nb);

  // f_i = -eps * logsumexp_j((g_j - C_ij) / eps + log_b), likewise for g.
  auto update_f = [&](double eps, Vector& out) {
    for (Eigen::Index i = 0; i < na; ++i) {
      work.row(i) = (g.transpose().array() - cost.row(i).array()) / eps + log_b;
      const double m = work.row(i).maxCoeff();
      out(i) = -eps * (m + std::log((work.row(i).array() - m).exp().sum()));
    }
  };
  auto update_g = [&](double eps) {
    for (Eigen::Index i = 0; i < na; ++i) {
      work.row(i) = (f(i) - cost.row(i).array()) / eps + log_a;
    }
    const RowVector m = work.colwise().maxCoeff();
    for (Eigen::Index j = 0; j < nb; ++j) {
      g(j) = -eps * (m(j) + std::log((work.col(j).array() - m(j)).exp().sum()));
    }
  };
  // With g freshly updated the column marginals are exact, and the row sums
  // of the current plan are a_i * exp((f_i - f_new_i) / eps).
  auto row_violation = [&](double eps) {
    return (((f - f_new).array() / eps).exp() - 1.0).abs().sum() * std::exp(log_a);
  };

  // Warm start by annealing epsilon down from the cost scale.
  const double eps = cfg.epsilon;
  for (double stage = cost.maxCoeff(); stage > eps; stage *= 0.5) {
    for (int it = 0; it < 100; ++it) {
      update_f(stage, f_new);
      const bool done = it > 0 && row_violation(stage) < 1e-3;
      f = f_new;
      update_g(stage);
      if (done) break;
    }
  }

  SinkhornResult res;
  update_g(eps);
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    update_f(eps, f_new);
    res.violation = row_violation(eps);
    res.iterations = it;
    if (res.violation < cfg.tolerance) {
      res.converged = true;
      break;
    }
    f = f_new;
    update_g(eps);
  }
  for (Eigen::Index i = 0; i < na; ++i) {
    work.row(i) = (f(i) + g.transpose().array() - cost.row(i).array()) / eps + log_a + log_b;
  }
  res.cost = (work.array().exp() * cost.array()).sum();
  res.distance = std::pow(std::max(res.cost, 0.0), 1.0 / cfg.p);
  return res;
}

inline double sinkhorn_distance(const Matrix& xa, const Matrix& xb, const SinkhornConfig& cfg = {}) {
  return sinkhorn(xa, xb, cfg).distance;
}

// ---- rank correlation ------------------------------------------------------

/// 1-based ranks with ties sharing their average rank.
inline Vector average_ranks(const Vector& v) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  Vector r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && v(idx[j]) == v(idx[i])) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) r(idx[k]) = avg;
    i = j;
  }
  return r;
}

inline double pearson(const Vector& u, const Vector& v) {
  detail::require_same_length(u, v, "pearson");
  const Vector a = u.array() - u.mean();
  const Vector b = v.array() - v.mean();
  const double den = std::sqrt(a.squaredNorm() * b.squaredNorm());
  if (den == 0.0) throw MetricError("correlation: constant vector");
  return std::clamp(a.dot(b) / den, -1.0, 1.0);
}

inline double spearman(const Vector& u, const Vector& v) {
  detail::require_same_length(u, v, "spearman");
  if (u.size() < 3) throw MetricError("spearman: need at least 3 values");
  return pearson(average_ranks(u), average_ranks(v));
}

}  // namespace dapdag
