// Copyright 2026 The phasebench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "phasebench/particle_filter.hpp"

namespace phasebench {
namespace {

constexpr double pi = std::numbers::pi;

double weight_sum(const ParticleCloud& c) {
  return std::accumulate(c.weights().begin(), c.weights().end(), 0.0);
}

ParticleCloud make_cloud(std::vector<double> positions, std::vector<double> weights, std::size_t p = 1) {
  return ParticleCloud(p, std::move(positions), std::move(weights));
}

TEST(Prior, UniformWeightsAndDeterminism) {
  RandomEngine a(17), b(17);
  const ParticleCloud c = init_uniform_prior(4, 1, a);
  ASSERT_EQ(c.size(), 4u);
  for (double w : c.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
  EXPECT_DOUBLE_EQ(effective_sample_size(c), 4.0);
  const ParticleCloud d = init_uniform_prior(4, 1, b);
  EXPECT_TRUE(std::equal(c.positions().begin(), c.positions().end(), d.positions().begin()));
  for (double x : c.positions()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, kTwoPi);
  }
}

TEST(Prior, RejectsTooFewParticles) {
  RandomEngine rng(1);
  EXPECT_THROW(init_uniform_prior(1, 1, rng), ConfigError);
  EXPECT_THROW(init_uniform_prior(10, 0, rng), ConfigError);
}

TEST(Cloud, RejectsBadOptions) {
  EXPECT_THROW(ParticleCloud(1, {0.0, 1.0}, {0.5, 0.5}, FilterOptions{1.0, 0.5}), ConfigError);
  EXPECT_THROW(ParticleCloud(1, {0.0, 1.0}, {0.5, 0.5}, FilterOptions{0.98, 0.0}), ConfigError);
  EXPECT_THROW(ParticleCloud(1, {0.0, 1.0}, {0.0, 0.0}), DomainError);
}

TEST(BayesUpdate, ZeroLikelihoodEliminatesParticle) {
  SingleQubitModel q;
  // p(1 | psi = 0) = 1 - cos^2(0) = 0 exactly
  const auto post = bayes_update(make_cloud({0.0, pi / 2}, {0.5, 0.5}), q, OutcomeId{1}, ControlVector{0.0});
  EXPECT_EQ(post.weight(0), 0.0);
  EXPECT_DOUBLE_EQ(post.weight(1), 1.0);
}

TEST(BayesUpdate, ConstantLikelihoodLeavesWeights) {
  SingleQubitModel q;
  // cos^2(x/2) = cos^2((2pi - x)/2)
  const auto post = bayes_update(make_cloud({0.7, kTwoPi - 0.7}, {0.3, 0.7}), q, OutcomeId{0}, ControlVector{0.0});
  EXPECT_NEAR(post.weight(0), 0.3, 1e-15);
  EXPECT_NEAR(post.weight(1), 0.7, 1e-15);
}

TEST(BayesUpdate, ThreeParticleHandComputation) {
  SingleQubitModel q;
  const auto post = bayes_update(make_cloud({0.0, pi / 2, pi}, {0.2, 0.3, 0.5}), q, OutcomeId{0}, ControlVector{pi / 4});
  // likelihoods cos^2(pi/8), cos^2(3pi/8), cos^2(5pi/8)
  const double hi = (1.0 + std::sqrt(0.5)) / 2.0;
  const double lo = (1.0 - std::sqrt(0.5)) / 2.0;
  const double total = 0.2 * hi + 0.3 * lo + 0.5 * lo;
  EXPECT_NEAR(post.weight(0), 0.2 * hi / total, 1e-14);
  EXPECT_NEAR(post.weight(1), 0.3 * lo / total, 1e-14);
  EXPECT_NEAR(post.weight(2), 0.5 * lo / total, 1e-14);
  EXPECT_NEAR(post.weight(0), 0.593017, 1e-6);
}

TEST(BayesUpdate, AllWeightsUnderflowIsDegenerate) {
  SingleQubitModel q;
  EXPECT_THROW(bayes_update(make_cloud({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}), q, OutcomeId{1}, ControlVector{0.0}),
               DegenerateUpdateError);
}

TEST(BayesUpdate, NormalizedAndIndependentOfWeightScale) {
  FourierMultiportModel m(2);
  RandomEngine rng(4);
  const ParticleCloud prior = init_uniform_prior(500, 2, rng);
  std::vector<double> scaled(prior.weights().begin(), prior.weights().end());
  for (double& w : scaled) w *= 37.5;
  const ParticleCloud scaled_prior(2, {prior.positions().begin(), prior.positions().end()}, scaled);

  ParticleCloud a = prior, b = scaled_prior;
  for (int t = 0; t < 20; ++t) {
    const ControlVector theta{uniform_angle(rng), uniform_angle(rng)};
    const OutcomeId out{static_cast<std::size_t>(t % 6)};
    a = bayes_update(a, m, out, theta);
    b = bayes_update(b, m, out, theta);
    EXPECT_NEAR(weight_sum(a), 1.0, 1e-12);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.weight(i), b.weight(i), 1e-15);
  }
}

TEST(Ess, Examples) {
  EXPECT_DOUBLE_EQ(effective_sample_size(make_cloud({0.0, 1.0, 2.0, 3.0, 4.0}, {1, 1, 1, 1, 1})), 5.0);
  EXPECT_DOUBLE_EQ(effective_sample_size(make_cloud({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0})), 1.0);
  EXPECT_DOUBLE_EQ(effective_sample_size(make_cloud({0.0, 1.0, 2.0, 3.0}, {0.5, 0.5, 0.0, 0.0})), 2.0);
}

TEST(Ess, AlwaysBetweenOneAndN) {
  RandomEngine rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos(50), w(50);
    for (std::size_t i = 0; i < 50; ++i) {
      pos[i] = uniform_angle(rng);
      w[i] = std::pow(uniform01(rng), 8.0);
    }
    const double ess = effective_sample_size(make_cloud(pos, w));
    EXPECT_GE(ess, 1.0 - 1e-12);
    EXPECT_LE(ess, 50.0 + 1e-12);
  }
}

TEST(Summarize, SymmetricPair) {
  const auto s = summarize(make_cloud({pi / 2 - 0.1, pi / 2 + 0.1}, {1, 1}));
  EXPECT_NEAR(s.estimate[0], pi / 2, 1e-15);
  EXPECT_NEAR(s.variance_trace, 0.01, 1e-14);
  EXPECT_FALSE(s.low_confidence);
}

TEST(Summarize, PairAcrossTheWrapPoint) {
  const auto s = summarize(make_cloud({0.1, kTwoPi - 0.1}, {1, 1}));
  EXPECT_NEAR(wrapped_distance(s.estimate[0], 0.0), 0.0, 1e-15);
  EXPECT_NEAR(s.variance_trace, 0.01, 1e-14);

  const auto lin = summarize(make_cloud({0.1, kTwoPi - 0.1}, {1, 1}), Estimator::linear);
  EXPECT_NEAR(lin.estimate[0], pi, 1e-14);
  EXPECT_NEAR(lin.variance_trace, (pi - 0.1) * (pi - 0.1), 1e-12);
}

TEST(Summarize, SingleEffectiveParticle) {
  const auto s = summarize(make_cloud({1.3, 4.0}, {1.0, 0.0}));
  EXPECT_NEAR(s.estimate[0], 1.3, 1e-15);
  EXPECT_EQ(s.variance_trace, 0.0);
}

TEST(Summarize, UndefinedCircularMeanFlagsLowConfidence) {
  const auto s = summarize(make_cloud({0.0, pi}, {1, 1}));
  EXPECT_TRUE(s.low_confidence);
  EXPECT_EQ(s.estimate[0], 0.0);
}

TEST(Summarize, TraceMatchesCovarianceAndIsPsd) {
  RandomEngine rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto cloud = init_uniform_prior(40, 3, rng);
    const auto s = summarize(cloud);
    EXPECT_NEAR(s.variance_trace, s.covariance.trace(), 1e-12);
    EXPECT_LT((s.covariance - s.covariance.transpose()).norm(), 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.covariance);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Summarize, PermutationInvariant) {
  RandomEngine rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 30, p = 2;
    std::vector<double> pos(n * p), w(n);
    for (double& x : pos) x = 1.0 + 0.6 * uniform01(rng);
    for (double& x : w) x = uniform01(rng);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> pos2(n * p), w2(n);
    for (std::size_t i = 0; i < n; ++i) {
      w2[i] = w[order[i]];
      for (std::size_t k = 0; k < p; ++k) pos2[i * p + k] = pos[order[i] * p + k];
    }
    const auto a = summarize(ParticleCloud(p, pos, w));
    const auto b = summarize(ParticleCloud(p, pos2, w2));
    for (std::size_t k = 0; k < p; ++k) EXPECT_NEAR(a.estimate[k], b.estimate[k], 1e-12);
    EXPECT_NEAR(a.variance_trace, b.variance_trace, 1e-12);
  }
}

TEST(LiuWest, CollapsedCloudStaysPut) {
  RandomEngine rng(21);
  const auto cloud = make_cloud(std::vector<double>(20, 2.5), std::vector<double>(20, 1.0));
  const auto next = liu_west_resample(cloud, rng);
  for (double x : next.positions()) EXPECT_NEAR(x, 2.5, 1e-5);
  EXPECT_NEAR(effective_sample_size(next), 20.0, 1e-9);
}

TEST(LiuWest, ClusterAcrossWrapKeepsMeanNearZero) {
  RandomEngine rng(22);
  std::vector<double> pos;
  for (int i = 0; i < 100; ++i) pos.push_back(i % 2 == 0 ? 0.05 : kTwoPi - 0.05);
  const auto next = liu_west_resample(make_cloud(pos, std::vector<double>(100, 1.0)), rng);
  const auto s = summarize(next);
  EXPECT_LT(wrapped_distance(s.estimate[0], 0.0), 0.02);
  EXPECT_LT(s.variance_trace, 0.01);
}

TEST(LiuWest, ResetsWeightsAndPreservesMoments) {
  RandomEngine rng(23);
  SingleQubitModel q;
  ParticleCloud cloud = init_uniform_prior(4000, 1, rng);
  for (int t = 0; t < 40; ++t) {
    const ControlVector theta{uniform_angle(rng)};
    cloud = bayes_update(cloud, q, sample_outcome(q, PhaseVector{1.0}, theta, rng), theta);
  }
  const auto before = summarize(cloud);
  const auto next = liu_west_resample(cloud, rng);
  for (double w : next.weights()) EXPECT_NEAR(w, 1.0 / 4000.0, 1e-15);
  EXPECT_NEAR(effective_sample_size(next), 4000.0, 1e-6);
  EXPECT_NEAR(weight_sum(next), 1.0, 1e-12);
  const auto after = summarize(next);
  const double sd = std::sqrt(before.variance_trace);
  EXPECT_LT(wrapped_distance(after.estimate[0], before.estimate[0]), 0.1 * sd);
  EXPECT_NEAR(after.variance_trace / before.variance_trace, 1.0, 0.1);
}

TEST(LiuWest, SameSeedSameResult) {
  RandomEngine seed_rng(3);
  const auto cloud = init_uniform_prior(64, 2, seed_rng);
  RandomEngine a(99), b(99);
  const auto x = liu_west_resample(cloud, a);
  const auto y = liu_west_resample(cloud, b);
  EXPECT_TRUE(std::equal(x.positions().begin(), x.positions().end(), y.positions().begin()));
}

// Particle posterior against an exact dense-grid Bayes posterior on the same outcome record.
TEST(ParticleFilter, AgreesWithDenseGridPosterior) {
  SingleQubitModel q;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RandomEngine rng(seed);
    const PhaseVector truth{uniform_angle(rng)};
    ParticleCloud cloud = init_uniform_prior(10000, 1, rng);
    oracle::DenseGridPosterior grid(100000);
    for (int t = 0; t < 50; ++t) {
      const ControlVector theta{uniform_angle(rng)};
      const OutcomeId m = sample_outcome(q, truth, theta, rng);
      cloud = bayes_update(cloud, q, m, theta);
      if (needs_resampling(cloud)) cloud = liu_west_resample(cloud, rng);
      grid.update(static_cast<int>(m.index), theta[0]);
    }
    const double grid_mean = grid.circular_mean();
    const double grid_sd = std::sqrt(grid.variance_about(grid_mean));
    const auto s = summarize(cloud);
    EXPECT_LT(wrapped_distance(s.estimate[0], grid_mean), 3.0 * grid_sd) << "seed " << seed;
  }
}

}  // namespace
}  // namespace phasebench
