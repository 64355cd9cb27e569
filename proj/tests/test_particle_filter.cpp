#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "grandparis/errors.hpp"
#include "grandparis/particle_filter.hpp"
#include "support/oracles.hpp"

using namespace grandparis;

namespace {

const LinearGaussianModel kLg{0.9, 1.0, 1.0};

SimulatedData lg_data(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return simulate_linear_gaussian(kLg, 0.0, 1.0, n, rng);
}

ParticleCloud run_filter(const StateSpaceModel& ssm, std::span<const double> y, std::size_t n,
                         const StreamKey& key, MultiplierKind kind, int threads = 1) {
  const auto proposal = optimal_proposal(ssm);
  const auto multiplier = make_multiplier(kind, ssm);
  auto cloud = init_cloud(ssm, y[0], n, key);
  for (std::size_t k = 1; k < y.size(); ++k)
    cloud = filter_step(cloud, ssm, proposal, multiplier, y[k], {5, threads}, key);
  return cloud;
}

}  // namespace

TEST(AliasTable, FrequenciesMatchWeights) {
  const std::vector<double> w{0.1, 3.0, 0.0, 1.5, 0.4};
  const AliasTable t(w);
  RngStream rng(1, 1);
  std::vector<double> counts(w.size(), 0.0);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) counts[t.sample(rng)] += 1;
  double tv = 0;
  for (std::size_t i = 0; i < w.size(); ++i) tv += 0.5 * std::abs(counts[i] / n - w[i] / 5.0);
  EXPECT_LT(tv, 0.003);
  EXPECT_EQ(counts[2], 0.0);
  EXPECT_THROW(AliasTable(std::vector<double>{0.0, 0.0}), DomainError);
  EXPECT_THROW(AliasTable(std::vector<double>{1.0, -1.0}), DomainError);
}

TEST(Proposal, GaussianProductFormula) {
  const auto k = optimal_proposal([](double x) { return 2.0 * x; }, 0.5, 2.0);
  const double v = 1.0 / (1.0 / 0.5 + 1.0 / 2.0);
  EXPECT_NEAR(k.variance, v, 1e-15);
  EXPECT_NEAR(k.mean(1.0, 3.0), v * (2.0 / 0.5 + 3.0 / 2.0), 1e-15);
  EXPECT_NEAR(k.density(1.0, 0.7, 3.0), normal_density(0.7, k.mean(1.0, 3.0), v), 1e-15);
}

TEST(Proposal, EulerPriorMean) {
  const auto m = sine_model(0.0);
  const auto k = optimal_proposal(m, 1.0, 0.5);
  const double prior = 1.0 + std::sin(1.0) * 0.5;
  const double v = 1.0 / (1.0 / 0.5 + 1.0);
  EXPECT_NEAR(k.variance, v, 1e-15);
  EXPECT_NEAR(k.mean(1.0, -0.2), v * (prior / 0.5 - 0.2), 1e-15);
}

TEST(Multiplier, UnitAndFullyAdapted) {
  const auto ssm = make_linear_gaussian_state_space(kLg, {0.0, 1.0});
  EXPECT_EQ(make_multiplier(MultiplierKind::unit, ssm)(0.3, 1.0), 1.0);
  EXPECT_NEAR(make_multiplier(MultiplierKind::fully_adapted, ssm)(0.3, 1.0), normal_density(1.0, 0.27, 2.0), 1e-15);
  EXPECT_EQ(parse_multiplier_kind("fully_adapted"), MultiplierKind::fully_adapted);
  EXPECT_THROW(parse_multiplier_kind("none"), ConfigurationError);
}

TEST(InitCloud, WeightsAreInitialLikelihood) {
  const auto ssm = make_linear_gaussian_state_space(kLg, {0.0, 1.0});
  const auto cloud = init_cloud(ssm, 0.4, 100, StreamKey(3));
  ASSERT_EQ(cloud.size(), 100u);
  double total = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_NEAR(cloud.weights[i], normal_density(0.4, cloud.particles[i], 1.0), 1e-15);
    EXPECT_EQ(cloud.ancestors[i], i);
    total += cloud.weights[i];
  }
  EXPECT_NEAR(cloud.total_weight, total, 1e-12);
}

TEST(FilterStep, TracksKalmanMean) {
  const auto data = lg_data(20, 4);
  const auto kf = oracle::rts_smooth(kLg, 0.0, 1.0, data.observations);
  for (auto kind : {MultiplierKind::unit, MultiplierKind::fully_adapted}) {
    const auto ssm = make_linear_gaussian_state_space(kLg, {0.0, 1.0}, 0.5);
    const int runs = 20;
    std::vector<double> means(runs);
    for (int r = 0; r < runs; ++r) {
      const auto cloud = run_filter(ssm, data.observations, 2000, StreamKey(100 + r), kind);
      means[r] = filter_estimate(cloud, [](double x) { return x; });
    }
    const double se = std::sqrt(oracle::sample_variance(means) / runs);
    EXPECT_LT(std::abs(oracle::mean(means) - kf.filter_mean.back()), 3.5 * se) << to_string(kind);
  }
}

TEST(FilterStep, IndependentOfThreadCount) {
  const auto data = lg_data(10, 5);
  const auto ssm = make_sde_state_space(sine_model(0.0), 1.0, 0.5, {0.0, 1.0});
  const auto a = run_filter(ssm, data.observations, 300, StreamKey(6), MultiplierKind::unit, 1);
  const auto b = run_filter(ssm, data.observations, 300, StreamKey(6), MultiplierKind::unit, 3);
  EXPECT_EQ(a.particles, b.particles);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.ancestors, b.ancestors);
}

TEST(FilterStep, DegenerateWeightsThrow) {
  const auto ssm = make_linear_gaussian_state_space(kLg, {0.0, 1.0});
  const auto cloud = init_cloud(ssm, 0.0, 50, StreamKey(7));
  try {
    filter_step(cloud, ssm, optimal_proposal(ssm), make_multiplier(MultiplierKind::unit, ssm), 1e6, {1, 1},
                StreamKey(7));
    FAIL() << "expected WeightDegeneracyError";
  } catch (const WeightDegeneracyError& e) {
    EXPECT_EQ(e.step(), 1u);
  }
}

TEST(FilterStep, WeightsAreRandomWeightFormula) {
  const auto ssm = make_linear_gaussian_state_space(kLg, {0.0, 1.0});
  const auto proposal = optimal_proposal(ssm);
  const auto mult = make_multiplier(MultiplierKind::fully_adapted, ssm);
  const auto cloud = init_cloud(ssm, 0.3, 20, StreamKey(8));
  const auto next = filter_step(cloud, ssm, proposal, mult, 0.9, {3, 1}, StreamKey(8));
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double x = cloud.particles[next.ancestors[i]], xn = next.particles[i];
    const double expected = lg_transition_density(kLg, x, xn) * normal_density(0.9, xn, 1.0) /
                            (mult(x, 0.9) * proposal.density(x, xn, 0.9));
    EXPECT_NEAR(next.weights[i], expected, 1e-12 * expected);
    EXPECT_NEAR(next.density_means[i], lg_transition_density(kLg, x, xn), 1e-15);
  }
}

TEST(CloudAudit, CountsLiveClouds) {
  const std::size_t base = CloudAudit::live();
  {
    ParticleCloud a;
    ParticleCloud b = a;
    EXPECT_EQ(CloudAudit::live(), base + 2);
  }
  EXPECT_EQ(CloudAudit::live(), base);
}
