#include <dapdag/encoder.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace dapdag;

namespace {

EncoderParams make_encoder(std::mt19937_64& rng, int d, int e = 1) {
  EncoderParams p(d, e);
  p.init(rng);
  return p;
}

Matrix gaussian(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(n, d);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = g(rng);
  return x;
}

}  // namespace

TEST(Encode, SingleRowCollapses) {
  std::mt19937_64 rng(1);
  for (int e : {1, 3}) {
    auto p = make_encoder(rng, 4, e);
    Matrix x = gaussian(rng, 1, 4);
    const auto post = encode(x, p);
    const Matrix phi = p.phi.forward(x);
    const Matrix nu = p.nu.forward(x).unaryExpr([](double v) { return softplus(v) + kPrecisionFloor; });
    for (int k = 0; k < e; ++k) {
      EXPECT_NEAR(post.mean(k), phi(0, k), 4e-16 * std::max(1.0, std::abs(phi(0, k))));
      EXPECT_NEAR(post.var(k), 1.0 / (nu(0, k) + p.nu0(0, k)), 1e-15 * post.var(k));
    }
    EXPECT_EQ(post.n, 1);
  }
}

TEST(Encode, DuplicatedRow) {
  std::mt19937_64 rng(2);
  auto p = make_encoder(rng, 3);
  p.nu0(0, 0) = 0.25;
  Matrix row = gaussian(rng, 1, 3);
  Matrix x(2, 3);
  x.row(0) = row.row(0);
  x.row(1) = row.row(0);
  const double phi = p.phi.forward(row)(0, 0);
  const double nu = softplus(p.nu.forward(row)(0, 0)) + kPrecisionFloor + 0.25;
  const auto post = encode(x, p);
  EXPECT_NEAR(post.var(0), 1.0 / (2 * nu - 0.25), 1e-14);
  EXPECT_NEAR(post.mean(0), 2 * nu * phi / (2 * nu - 0.25), 1e-14);
}

TEST(Encode, AggregateStaysAbovePrior) {
  std::mt19937_64 rng(21);
  auto p = make_encoder(rng, 3);
  p.nu.bias(p.nu.layer_count() - 1).setConstant(-1e3);  // net output at the floor
  for (double nu0 : {1e-4, 0.1, 10.0}) {
    p.nu0(0, 0) = nu0;
    for (int n : {1, 16, 256}) {
      const auto post = encode(gaussian(rng, n, 3), p);
      EXPECT_NEAR(1.0 / post.var(0), nu0 + n * kPrecisionFloor, 1e-9 * (nu0 + n));
    }
  }
}

TEST(Encode, PermutationInvariance) {
  std::mt19937_64 rng(3);
  auto p = make_encoder(rng, 5, 2);
  Matrix x = gaussian(rng, 40, 5);
  const auto ref = encode(x, p);
  std::vector<Eigen::Index> idx(40);
  std::iota(idx.begin(), idx.end(), 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::shuffle(idx.begin(), idx.end(), rng);
    Matrix xs(40, 5);
    for (int r = 0; r < 40; ++r) xs.row(r) = x.row(idx[r]);
    const auto post = encode(xs, p);
    EXPECT_LT((post.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((post.var - ref.var).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Encode, AggregateClampedWhenNonPositive) {
  std::mt19937_64 rng(4);
  auto p = make_encoder(rng, 3);
  p.nu0(0, 0) = -50.0;  // unprojected, drives the aggregated precision negative
  const auto post = encode(gaussian(rng, 30, 3), p);
  EXPECT_GT(post.var(0), 0.0);
  EXPECT_EQ(post.var(0), 1.0 / kAggregateFloor);
}

TEST(Encode, ConcentratesWithSampleSize) {
  std::mt19937_64 rng(5);
  std::vector<double> v10, v100;
  for (int trial = 0; trial < 50; ++trial) {
    auto p = make_encoder(rng, 3);
    v10.push_back(encode(gaussian(rng, 10, 3), p).var(0));
    v100.push_back(encode(gaussian(rng, 100, 3), p).var(0));
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  EXPECT_LT(median(v100), median(v10));
}

TEST(Encode, EmptyInputAndShapeErrors) {
  std::mt19937_64 rng(6);
  auto p = make_encoder(rng, 3);
  EXPECT_THROW(encode(Matrix(0, 3), p), NumericError);
  EXPECT_THROW(encode(Matrix::Zero(4, 2), p), NumericError);
}

TEST(EncodeGradient, MatchesFiniteDifferences) {
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(500 + seed);
    const int e = 1 + seed % 3;
    auto p = make_encoder(rng, 4, e);
    std::uniform_real_distribution<double> u(0.05, 0.3);
    for (Eigen::Index k = 0; k < e; ++k) p.nu0(0, k) = u(rng);
    Matrix x = gaussian(rng, 3 + seed % 10, 4);
    Vector wm = Vector::Random(e);
    Vector wv = Vector::Random(e);
    auto loss = [&] {
      const auto post = encode(x, p);
      return wm.dot(post.mean) + wv.dot(post.var);
    };
    EncoderCache cache;
    encode(x, p, &cache);
    const auto grads = encoder_backward(cache, p, wm, wv);
    auto params = p.parameters();
    const auto rep = grad_check(loss, params, grads);
    EXPECT_LT(rep.max_rel_error, 1e-4) << "seed " << seed;
  }
}

TEST(SampleE, PointAndZeroNoise) {
  PosteriorE post;
  post.mean = Vector::Constant(2, 0.3);
  post.var = Vector::Constant(2, 0.5);
  EXPECT_EQ(sample_e(post, EstimationMode::point, Vector::Constant(2, 7.0)), post.mean);
  EXPECT_EQ(sample_e(post, EstimationMode::bayes, Vector::Zero(2)), post.mean);
}

TEST(SampleE, MonteCarloMoments) {
  PosteriorE post;
  post.mean = Vector::Constant(1, -0.7);
  post.var = Vector::Constant(1, 2.5);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  const int draws = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = sample_e(post, EstimationMode::bayes, Vector::Constant(1, g(rng)))(0);
    s += v;
    s2 += v * v;
  }
  const double mean = s / draws;
  const double var = s2 / draws - mean * mean;
  EXPECT_LT(std::abs(mean - post.mean(0)), 4.0 * std::sqrt(post.var(0)) / 1000.0);
  EXPECT_LT(std::abs(var - post.var(0)) / post.var(0), 0.01);
}
