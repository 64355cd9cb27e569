#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "grandparis/density.hpp"
#include "grandparis/errors.hpp"
#include "support/oracles.hpp"

using namespace grandparis;

namespace {

struct Sample {
  double mean;
  double std_error;
};

template <class F>
Sample sample_mean(F&& draw, int n) {
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double v = draw();
    s += v;
    ss += v * v;
  }
  const double m = s / n;
  return {m, std::sqrt((ss / n - m * m) / (n - 1))};
}

}  // namespace

TEST(Rho, DriftFreeIsGaussianDensity) {
  EXPECT_NEAR(rho(brownian_model(), 0.0, 0.0, 1.0, 0.0), 1.0 / std::sqrt(2 * std::numbers::pi), 1e-15);
}

TEST(Rho, SineValue) {
  // N(0; 0, 0.5) e^{0.25} = e^{0.25} / sqrt(pi).
  EXPECT_NEAR(rho(sine_model(0.0), 0.0, 0.0, 0.5, -0.5), 0.72443, 1e-5);
  EXPECT_NEAR(rho(sine_model(0.0), 0.0, 0.0, 0.5, -0.5), std::exp(0.25) / std::sqrt(std::numbers::pi), 1e-15);
}

TEST(Rho, SymmetryFollowsPotential) {
  const auto m = sine_model(0.0);
  // A(x) = -cos x, equal at x and -x.
  EXPECT_NEAR(rho(m, 0.4, -0.4, 0.5, -0.5), rho(m, -0.4, 0.4, 0.5, -0.5), 1e-15);
  EXPECT_GT(std::abs(rho(m, 0.4, 1.4, 0.5, -0.5) - rho(m, 1.4, 0.4, 0.5, -0.5)), 1e-3);
}

TEST(Gpe1, KappaZeroGivesRho) {
  const auto m = sine_model(0.0);
  RngStream rng(1, 1);
  int seen = 0;
  for (int i = 0; i < 1000 && seen < 20; ++i) {
    const auto est = gpe1_estimate(m, 0.1, 0.3, 0.5, rng);
    if (est.draw.kappa == 0) {
      ++seen;
      EXPECT_EQ(est.value, rho(m, 0.1, 0.3, 0.5, -0.5));
    }
  }
  EXPECT_GT(seen, 0);
}

TEST(Gpe1, DrawsArePositiveAndBoundedByRho) {
  for (const auto& [m, x, y, dt] : {std::tuple{sine_model(0.0), 0.0, 0.3, 0.5},
                                    std::tuple{sine_model(0.0), 2.0, -1.0, 0.5},
                                    std::tuple{log_growth_model(0.1, 0.1, 1000.0), -69.0, -68.0, 2.0}}) {
    RngStream rng(2, 2);
    const double lower = phi_lower_bound(m);
    const double cap = rho(m, x, y, dt, lower);
    for (int i = 0; i < 20000; ++i) {
      const auto est = gpe1_estimate(m, x, y, dt, rng);
      ASSERT_GT(est.value, 0.0);
      ASSERT_LE(est.value, cap * (1 + 1e-12));
      ASSERT_EQ(est.draw.poisson_times.size(), static_cast<std::size_t>(est.draw.kappa));
      for (double p : est.draw.phi_values) {
        ASSERT_GE(p, est.draw.lower - 1e-12);
        ASSERT_LE(p, est.draw.upper + 1e-12);
      }
      EXPECT_NEAR(est.value, est.gaussian_factor * est.exp_factor *
                                 [&] {
                                   double prod = 1;
                                   for (double p : est.draw.phi_values)
                                     prod *= (est.draw.upper - p) / (est.draw.upper - est.draw.lower);
                                   return prod;
                                 }(),
                  1e-12 * cap);
    }
  }
}

TEST(Gpe1, ValueMatchesFullEstimateUnderSharedStream) {
  const auto m = log_growth_model(0.1, 0.1, 1000.0);
  RngStream a(3, 3), b(3, 3);
  for (int i = 0; i < 1000; ++i)
    ASSERT_EQ(gpe1_estimate(m, -69.5, -68.7, 2.0, a).value, gpe1_value(m, -69.5, -68.7, 2.0, b));
}

TEST(Gpe1, MissingBoundsIsConfigurationError) {
  auto m = sine_model(0.0);
  m.global_phi_bounds.reset();
  RngStream rng(4, 4);
  EXPECT_THROW(gpe1_estimate(m, 0.0, 0.0, 0.5, rng), ConfigurationError);
  auto d2 = log_growth_model(0.1, 0.1, 1000.0);
  d2.phi_bounds_below_min = nullptr;
  EXPECT_THROW(gpe1_estimate(d2, -69.0, -69.0, 2.0, rng), ConfigurationError);
}

TEST(GeneralPoisson, PoissonLawReproducesGpe1) {
  for (const auto& m : {sine_model(0.0), log_growth_model(0.1, 0.1, 1000.0)}) {
    const double x = m.name == "sine" ? 0.0 : -69.0, y = m.name == "sine" ? 0.3 : -68.0;
    const double dt = m.name == "sine" ? 0.5 : 2.0;
    RngStream a(5, 5), b(5, 5);
    for (int i = 0; i < 5000; ++i) {
      const double g = general_poisson_estimate(m, x, y, dt, poisson_kappa(), a).value;
      const double e = gpe1_estimate(m, x, y, dt, b).value;
      ASSERT_NEAR(g, e, 1e-12 * std::max(1.0, e));
    }
  }
}

TEST(GeneralPoisson, KappaZeroValue) {
  const auto m = sine_model(0.0);
  RngStream rng(6, 6);
  const double p = 0.5;
  int seen = 0;
  for (int i = 0; i < 200; ++i) {
    const auto est = general_poisson_estimate(m, 0.0, 0.3, 0.5, geometric_kappa(p), rng);
    if (est.draw.kappa != 0) continue;
    ++seen;
    const double expected = std::exp(-0.3 * 0.3 / 1.0) / std::sqrt(std::numbers::pi) *
                            std::exp(m.potential(0.3) - m.potential(0.0)) * std::exp(-0.625 * 0.5) / p;
    EXPECT_NEAR(est.value, expected, 1e-14);
  }
  EXPECT_GT(seen, 0);
}

TEST(GeneralPoisson, ZeroMassIsDomainError) {
  KappaLawFactory always_three = [](const PhiBounds&, double) {
    return KappaLaw{[](RngStream&) { return 3L; }, [](long k) { return k == 0 ? 1.0 : 0.0; }};
  };
  RngStream rng(7, 7);
  EXPECT_THROW(general_poisson_estimate(sine_model(0.0), 0.0, 0.0, 0.5, always_three, rng), DomainError);
}

// Smaller-scale version of the unbiasedness checks; the full-size SINE run
// lives in the acceptance suite.
TEST(Unbiasedness, SineGpe1AndGeometric) {
  const auto m = sine_model(0.0);
  const auto q = oracle::bridge_density(m, 0.0, 0.3, 0.5, 20000, 1000, 11);
  RngStream rng(8, 8);
  const auto g = sample_mean([&] { return gpe1_value(m, 0.0, 0.3, 0.5, rng); }, 300000);
  EXPECT_LT(std::abs(g.mean - q.value) / std::hypot(g.std_error, q.std_error), 3.0);
  const auto geo = sample_mean(
      [&] { return general_poisson_estimate(m, 0.0, 0.3, 0.5, geometric_kappa(0.5), rng).value; }, 300000);
  EXPECT_LT(std::abs(geo.mean - q.value) / std::hypot(geo.std_error, q.std_error), 3.0);
}

TEST(Unbiasedness, LogGrowthBesselConditioning) {
  const auto m = log_growth_model(0.1, 0.1, 1000.0);
  for (auto [x, y] : {std::pair{-69.0, -68.0}, std::pair{-71.0, -70.5}, std::pair{-66.0, -69.0}}) {
    const auto q = oracle::bridge_density(m, x, y, 2.0, 20000, 1000, 12);
    RngStream rng(9, 9);
    const auto g = sample_mean([&] { return gpe1_value(m, x, y, 2.0, rng); }, 200000);
    EXPECT_LT(std::abs(g.mean - q.value) / std::hypot(g.std_error, q.std_error), 3.0) << x << " " << y;
  }
}

TEST(SigmaPlus, DriftFreeGlobalBound) {
  const GpeTransition t(brownian_model(), 0.5);
  EXPECT_NEAR(t.global_bound(), 1.0 / std::sqrt(2 * std::numbers::pi * 0.5), 1e-15);
}

TEST(SigmaPlus, PairwiseIsMaxOfFourRho) {
  const auto m = sine_model(0.0);
  const GpeTransition t(m, 0.5);
  const std::vector<double> src{0.1, 1.3}, dst{-0.4, 0.9};
  double best = 0;
  for (double a : src)
    for (double b : dst) best = std::max(best, rho(m, a, b, 0.5, -0.5));
  const double s = sigma_plus(BoundStrategy::A3_pairwise, t, src, dst);
  EXPECT_GE(s, best);
  EXPECT_NEAR(s, best, 1e-11 * best);
}

TEST(SigmaPlus, TargetBoundsAreColumnMaxima) {
  const auto m = sine_model(0.0);
  const GpeTransition t(m, 0.5);
  const std::vector<double> src{0.1, 1.3, -2.2}, dst{-0.4, 0.9, 3.5, 8.0};
  const auto bounds = t.target_bounds(src, dst);
  ASSERT_EQ(bounds.size(), dst.size());
  double overall = 0;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    double best = 0;
    for (double a : src) best = std::max(best, rho(m, a, dst[i], 0.5, -0.5));
    EXPECT_GE(bounds[i], best);
    EXPECT_NEAR(bounds[i], best, 1e-11 * best);
    overall = std::max(overall, bounds[i]);
  }
  EXPECT_DOUBLE_EQ(t.pairwise_bound(src, dst), overall);
}

TEST(SigmaPlus, SourceBoundDominatesGrid) {
  for (const auto& [m, dt, x0] : {std::tuple{sine_model(0.0), 0.5, 0.0}, std::tuple{sine_model(0.0), 0.5, 1.7},
                                  std::tuple{sine_model(0.0), 0.5, -2.9},
                                  std::tuple{log_growth_model(0.1, 0.1, 1000.0), 2.0, -69.0}}) {
    const double bound = rho_source_bound(m, x0, dt);
    const double lower = phi_lower_bound(m);
    double grid_max = 0;
    for (int i = 0; i < 1000; ++i) {
      const double y = x0 - 5.0 + 10.0 * i / 999.0;
      const double r = rho(m, x0, y, dt, lower);
      ASSERT_LE(r, bound);
      grid_max = std::max(grid_max, r);
    }
    EXPECT_LT(bound - grid_max, 1e-4 * bound);
  }
}

TEST(SigmaPlus, GlobalBoundDominatesGrid) {
  const auto m = sine_model(0.0);
  const double bound = rho_global_bound(m, 0.5);
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) {
      const double x = -7 + 14.0 * i / 199, y = -7 + 14.0 * j / 199;
      ASSERT_LE(rho(m, x, y, 0.5, -0.5), bound);
    }
}

TEST(SigmaPlus, UnavailableStrategies) {
  const GpeTransition lg(log_growth_model(0.1, 0.1, 1000.0), 2.0);
  EXPECT_THROW(lg.global_bound(), StrategyUnavailableError);
  EXPECT_NO_THROW(lg.source_bound(-69.0));
  // sup alpha' = 1 for the sine model, so A2 needs dt < 1.
  const GpeTransition coarse(sine_model(0.0), 1.5);
  EXPECT_THROW(coarse.source_bound(0.0), StrategyUnavailableError);
}

TEST(SigmaPlus, StrategyNames) {
  for (auto s : {BoundStrategy::A1_global, BoundStrategy::A2_fixed_source, BoundStrategy::A3_pairwise})
    EXPECT_EQ(parse_bound_strategy(to_string(s)), s);
  EXPECT_THROW(parse_bound_strategy("A4"), ConfigurationError);
}

TEST(LogDensity, SingleKappaZeroDrawIsLogRho) {
  const auto m = sine_model(0.0);
  for (std::uint64_t s = 0; s < 200; ++s) {
    RngStream probe(10, s), rng(10, s);
    const auto est = gpe1_estimate(m, 0.2, -0.1, 0.5, probe);
    const double l = log_density_estimate(m, 0.2, -0.1, 0.5, 1, rng);
    if (est.draw.kappa == 0) {
      EXPECT_NEAR(l, std::log(rho(m, 0.2, -0.1, 0.5, -0.5)), 1e-14);
    }
    EXPECT_NEAR(l, std::log(est.value), 1e-13);
  }
}

TEST(LogDensity, ExactSurrogateIsLogDensity) {
  const LinearGaussianModel lg{0.9, 1.0, 1.0};
  const GaussianTransition t(lg);
  RngStream rng(11, 11);
  for (int draws : {1, 7, 30})
    EXPECT_NEAR(t.log_density_estimate(0.4, 1.1, draws, rng), std::log(lg_transition_density(lg, 0.4, 1.1)), 1e-13);
}

TEST(LogDensity, SineMatchesOracle) {
  const auto m = sine_model(0.0);
  const auto q = oracle::bridge_density(m, 0.5, 0.2, 0.5, 20000, 1000, 13);
  RngStream rng(12, 12);
  const int reps = 100;
  std::vector<double> logs(reps);
  for (auto& l : logs) l = log_density_estimate(m, 0.5, 0.2, 0.5, 10000, rng);
  // Delta method: sd(log mean) ~ sd / q; the oracle contributes se / q.
  const double se = std::sqrt(oracle::sample_variance(logs) / reps + std::pow(q.std_error / q.value, 2));
  EXPECT_LT(std::abs(oracle::mean(logs) - std::log(q.value)), 3 * se + 1e-4);
  EXPECT_LT(std::abs(logs[0] - std::log(q.value)), 0.02);
}

TEST(GaussianTransition, UnbiasedBoundedNoise) {
  const LinearGaussianModel lg{0.9, 1.0, 1.0};
  const GaussianTransition t(lg, 0.5);
  RngStream rng(13, 13);
  const double q = t.exact(0.3, 0.8);
  const auto s = sample_mean([&] { return t.estimate(0.3, 0.8, rng); }, 200000);
  EXPECT_LT(std::abs(s.mean - q) / s.std_error, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = t.estimate(0.3, 0.8, rng);
    ASSERT_GE(v, 0.5 * q * (1 - 1e-12));
    ASSERT_LE(v, t.envelope(0.3, 0.8));
  }
  EXPECT_NEAR(t.global_bound(), 1.5 / std::sqrt(2 * std::numbers::pi), 1e-15);
  EXPECT_THROW(GaussianTransition(lg, 1.0), DomainError);
}
