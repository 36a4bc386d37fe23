#include <dapdag/eval.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace dapdag;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double brute_auc(const Vector& y, const Vector& s) {
  double wins = 0, pairs = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 1.0) continue;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      if (y(j) != 0.0) continue;
      pairs += 1;
      if (s(i) > s(j)) wins += 1;
      else if (s(i) == s(j)) wins += 0.5;
    }
  }
  return wins / pairs;
}

double brute_apr(const Vector& y, const Vector& s) {
  std::set<double, std::greater<>> thresholds(s.data(), s.data() + s.size());
  const double pos = y.sum();
  double prev = 0, total = 0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (s(i) >= t) (y(i) == 1.0 ? tp : fp) += 1;
    }
    const double r = tp / pos;
    total += (r - prev) * (tp / (tp + fp));
    prev = r;
  }
  return total;
}

// Draws scores on a coarse grid so that ties are common.
std::pair<Vector, Vector> random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(2, 20), grid(0, 6);
  std::bernoulli_distribution coin(0.5);
  const int n = len(rng);
  Vector y(n), s(n);
  for (int i = 0; i < n; ++i) {
    y(i) = coin(rng) ? 1.0 : 0.0;
    s(i) = grid(rng) / 6.0;
  }
  y(0) = 1.0;
  y(1) = 0.0;
  return {y, s};
}

EdgeSet random_edges(std::mt19937_64& rng, int n) {
  std::bernoulli_distribution coin(0.25);
  EdgeSet e;
  e.nodes = n;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      if (i != k && coin(rng)) e.add(i, k);
  return e;
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_EQ(auc(vec({1, 1, 0, 0}), vec({0.9, 0.8, 0.2, 0.1})), 1.0);
  EXPECT_EQ(auc(vec({1, 0, 1, 0}), vec({0.5, 0.5, 0.5, 0.5})), 0.5);
  EXPECT_EQ(auc(vec({1, 0, 1, 0}), vec({0.9, 0.8, 0.4, 0.1})), 0.75);
  EXPECT_THROW(auc(vec({1, 1}), vec({0.1, 0.2})), MetricError);
  EXPECT_THROW(auc(vec({1, 2}), vec({0.1, 0.2})), MetricError);
}

TEST(Auc, MatchesBruteForceAndMonotoneInvariance) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto [y, s] = random_instance(rng);
    const double a = auc(y, s);
    EXPECT_EQ(a, brute_auc(y, s));
    const Vector transformed = s.unaryExpr([](double v) { return std::exp(3.0 * v) - 7.0; });
    EXPECT_EQ(auc(y, transformed), a);
  }
}

TEST(Apr, Examples) {
  EXPECT_EQ(apr(vec({1, 1, 0}), vec({0.9, 0.8, 0.1})), 1.0);
  EXPECT_EQ(apr(vec({1, 0}), vec({0.2, 0.9})), 0.5);
  EXPECT_THROW(apr(vec({0, 0}), vec({0.2, 0.9})), MetricError);
}

TEST(Apr, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto [y, s] = random_instance(rng);
    const double a = apr(y, s);
    EXPECT_EQ(a, brute_apr(y, s));
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST(R2, Examples) {
  EXPECT_EQ(r2(vec({0, 1, 2}), vec({0, 1, 2})), 1.0);
  EXPECT_EQ(r2(vec({0, 1, 2}), vec({1, 1, 1})), 0.0);
  EXPECT_EQ(r2(vec({0, 1, 2}), vec({0, 1, 1})), 0.5);
  EXPECT_THROW(r2(vec({3, 3, 3}), vec({0, 1, 1})), MetricError);
}

TEST(Structure, ThresholdExamples) {
  EXPECT_TRUE(threshold_adjacency(Matrix::Zero(3, 3), 0.3).edges.empty());
  Matrix a = Matrix::Zero(3, 3);
  a(1, 2) = 5.0;
  const auto s = threshold_adjacency(a, 0.3);
  ASSERT_EQ(s.edges.size(), 1u);
  EXPECT_TRUE(s.contains(1, 2));
  a << 9, 0.29, 0.3, 0.31, 9, 0.1, 1.0, 0.2999, 9;
  const auto t = threshold_adjacency(a, 0.3);
  EXPECT_EQ(t.edges, (std::vector<std::pair<int, int>>{{0, 2}, {1, 0}, {2, 0}}));
}

TEST(Structure, ShdExamples) {
  EdgeSet truth{3, {}}, learned{3, {}};
  EXPECT_EQ(shd(learned, truth), 0);
  truth.add(0, 1);
  learned.add(1, 0);
  EXPECT_EQ(shd(learned, truth), 1);
  truth.add(1, 2);
  EXPECT_EQ(shd(EdgeSet{3, {}}, truth), 2);
  EXPECT_THROW(shd(EdgeSet{2, {}}, truth), MetricError);
}

TEST(Structure, ShdTriangleInequality) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_edges(rng, 6), b = random_edges(rng, 6), c = random_edges(rng, 6);
    EXPECT_LE(shd(a, c), shd(a, b) + shd(b, c));
    EXPECT_EQ(shd(a, b), shd(b, a));
  }
}

TEST(Structure, Acyclicity) {
  EdgeSet chain{3, {{0, 1}, {1, 2}}};
  EXPECT_TRUE(is_acyclic(chain));
  chain.add(2, 0);
  EXPECT_FALSE(is_acyclic(chain));
  EXPECT_THROW(chain.add(1, 1), MetricError);
}

TEST(Sinkhorn, SinglePointsExact) {
  Matrix a(1, 2), b(1, 2);
  a << 0.0, 0.0;
  b << 3.0, 4.0;
  for (double eps : {0.01, 0.5, 5.0}) {
    SinkhornConfig cfg;
    cfg.epsilon = eps;
    EXPECT_NEAR(sinkhorn_distance(a, b, cfg), 5.0, 1e-12);
  }
}

TEST(Sinkhorn, SelfDistanceSmall) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Matrix x(30, 2);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = g(rng);
  SinkhornConfig cfg;
  cfg.epsilon = 0.01;
  EXPECT_LT(sinkhorn_distance(x, x, cfg), 0.05);
}

TEST(Sinkhorn, TwoPointSetsMatchEnumeratedPlans) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    Matrix a(2, 2), b(2, 2);
    for (Eigen::Index k = 0; k < 4; ++k) {
      a.data()[k] = g(rng);
      b.data()[k] = g(rng) + 1.0;
    }
    auto c = [&](int i, int j) { return (a.row(i) - b.row(j)).squaredNorm(); };
    const double best = std::sqrt(std::min(0.5 * (c(0, 0) + c(1, 1)), 0.5 * (c(0, 1) + c(1, 0))));
    SinkhornConfig cfg;
    cfg.epsilon = 0.01;
    const auto r = sinkhorn(a, b, cfg);
    EXPECT_LT(std::abs(r.distance - best) / best, 0.02) << "trial " << t;
  }
}

TEST(Sinkhorn, SymmetricAndMonotoneInEpsilon) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Matrix a(5, 2), b(4, 2);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = g(rng);
  for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = g(rng) + 0.5;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {2.0, 1.0, 0.5, 0.2, 0.1, 0.05, 0.02}) {
    SinkhornConfig cfg;
    cfg.epsilon = eps;
    const double ab = sinkhorn_distance(a, b, cfg);
    EXPECT_NEAR(ab, sinkhorn_distance(b, a, cfg), 1e-8);
    EXPECT_LE(ab, prev + 1e-10);
    prev = ab;
  }
}

TEST(Sinkhorn, Errors) {
  EXPECT_THROW(sinkhorn(Matrix(0, 2), Matrix::Zero(1, 2)), MetricError);
  EXPECT_THROW(sinkhorn(Matrix::Zero(1, 3), Matrix::Zero(1, 2)), MetricError);
  SinkhornConfig cfg;
  cfg.epsilon = 0.0;
  EXPECT_THROW(sinkhorn(Matrix::Zero(1, 2), Matrix::Zero(1, 2), cfg), MetricError);
}

TEST(Spearman, Examples) {
  EXPECT_NEAR(spearman(vec({1, 2, 3, 4}), vec({1, 2, 3, 4})), 1.0, 1e-15);
  EXPECT_NEAR(spearman(vec({1, 2, 3, 4}), vec({-1, -2, -3, -4})), -1.0, 1e-15);
  EXPECT_NEAR(spearman(vec({1, 2, 3}), vec({1, 3, 2})), 0.5, 1e-15);
  EXPECT_EQ(average_ranks(vec({5, 1, 5, 2})), vec({3.5, 1, 3.5, 2}));
  EXPECT_THROW(spearman(vec({1, 2}), vec({1, 2})), MetricError);
  EXPECT_THROW(spearman(vec({1, 1, 1}), vec({1, 2, 3})), MetricError);
  EXPECT_THROW(spearman(vec({1, 2, 3}), vec({1, 2})), MetricError);
}
