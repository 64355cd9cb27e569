#include "grandparis/smoother.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "grandparis/errors.hpp"
#include "grandparis/parallel.hpp"

namespace grandparis {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_observations(std::span<const double> observations, const AdditiveFunctional& functional) {
  if (observations.size() < 2) throw DomainError("smoother: need at least two observations");
  if (functional.terms < observations.size() - 1)
    throw ConfigurationError("smoother: functional has fewer terms than transitions");
}

}  // namespace

double AdditiveFunctional::evaluate(std::span<const double> path, const StreamKey& key) const {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    RngStream rng(key.child(k));
    total += term(k, path[k], path[k + 1], rng);
  }
  return total;
}

BackwardDraw backward_index(const ParticleCloud& prev, const AliasTable& weights, double target,
                            const TransitionDensity& density, double sigma_plus, RngStream& rng,
                            std::size_t max_trials, std::size_t target_index) {
  for (std::size_t t = 1; t <= max_trials; ++t) {
    const std::size_t j = weights.sample(rng);
    const double u = rng.uniform();
    const double q = density.estimate(prev.particles[j], target, rng);
    if (q > sigma_plus)
      throw BoundViolationError("backward_index: estimate " + std::to_string(q) +
                                " exceeds sigma_plus " + std::to_string(sigma_plus) + " at step " +
                                std::to_string(prev.step));
    if (u * sigma_plus < q) return {j, t};
  }
  // Upper bound on the per-trial acceptance probability, reported for the stalled site.
  double reach = 0.0;
  for (std::size_t j = 0; j < prev.size(); ++j)
    reach += prev.weights[j] * density.envelope(prev.particles[j], target);
  reach /= prev.total_weight * sigma_plus;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", reach);
  throw StallError(prev.step, target_index,
                   "backward_index: no acceptance after " + std::to_string(max_trials) +
                       " trials (step " + std::to_string(prev.step) + ", particle " +
                       std::to_string(target_index) + ", acceptance bound " + buf +
                       "); try another bound strategy");
}

std::vector<double> exact_lambda(const ParticleCloud& prev, double target,
                                 const std::function<double(double, double)>& q) {
  std::vector<double> out(prev.size());
  double total = 0.0;
  for (std::size_t l = 0; l < prev.size(); ++l) {
    out[l] = prev.weights[l] * q(prev.particles[l], target);
    total += out[l];
  }
  if (!(total > 0.0)) throw DomainError("exact_lambda: degenerate backward kernel");
  for (auto& p : out) p /= total;
  return out;
}

ParisStepResult paris_step(const TauStatistics& tau, const ParticleCloud& prev,
                           const ParticleCloud& next, const AdditiveFunctional& functional,
                           const TransitionDensity& density, double sigma_plus,
                           const ParisStepOptions& options, const StreamKey& key) {
  const std::vector<double> bounds(next.size(), sigma_plus);
  return paris_step(tau, prev, next, functional, density, bounds, options, key);
}

ParisStepResult paris_step(const TauStatistics& tau, const ParticleCloud& prev,
                           const ParticleCloud& next, const AdditiveFunctional& functional,
                           const TransitionDensity& density, std::span<const double> bounds,
                           const ParisStepOptions& options, const StreamKey& key) {
  if (bounds.size() != next.size()) throw DomainError("paris_step: need one bound per target");
  if (options.backward_draws < 1) throw DomainError("paris_step: need at least one backward draw");
  const std::size_t n = next.size();
  const std::size_t draws = options.backward_draws;
  const std::size_t k = prev.step;
  const AliasTable table(prev.weights);

  ParisStepResult out;
  out.tau.step = next.step;
  out.tau.values.assign(n, 0.0);
  out.log.trials.assign(n * draws, 0);
  parallel_for(n, options.threads, [&](std::size_t i) {
    const double target = next.particles[i];
    double acc = 0.0;
    for (std::size_t l = 0; l < draws; ++l) {
      RngStream back(key.child({next.step, i, l, tag(StreamTag::backward)}));
      const auto draw = backward_index(prev, table, target, density, bounds[i], back,
                                       options.max_trials, i);
      RngStream term(key.child({next.step, i, l, tag(StreamTag::functional)}));
      acc += tau.values[draw.index] + functional(k, prev.particles[draw.index], target, term);
      out.log.trials[i * draws + l] = draw.trials;
    }
    out.tau.values[i] = acc / static_cast<double>(draws);
  });
  for (auto t : out.log.trials) out.log.total_trials += t;
  out.log.accepted = n * draws;
  return out;
}

TauStatistics paris_step_exact(const TauStatistics& tau, const ParticleCloud& prev,
                               const ParticleCloud& next, const AdditiveFunctional& functional,
                               const std::function<double(double, double)>& q,
                               const StreamKey& key) {
  TauStatistics out;
  out.step = next.step;
  out.values.resize(next.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const auto lambda = exact_lambda(prev, next.particles[i], q);
    double acc = 0.0;
    for (std::size_t j = 0; j < prev.size(); ++j) {
      RngStream term(key.child({next.step, i, j, tag(StreamTag::functional)}));
      acc += lambda[j] * (tau.values[j] + functional(prev.step, prev.particles[j], next.particles[i], term));
    }
    out.values[i] = acc;
  }
  return out;
}

double smoothed_estimate(const ParticleCloud& cloud, const TauStatistics& tau) {
  double acc = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) acc += cloud.weights[i] * tau.values[i];
  return acc / cloud.total_weight;
}

BoundStrategy resolve_strategy(BoundStrategy requested, const TransitionDensity& density,
                               double probe_source, bool allow_fallback) {
  BoundStrategy s = requested;
  for (;;) {
    try {
      if (s == BoundStrategy::A1_global) (void)density.global_bound();
      if (s == BoundStrategy::A2_fixed_source) (void)density.source_bound(probe_source);
      return s;
    } catch (const StrategyUnavailableError&) {
      if (!allow_fallback) throw;
      s = s == BoundStrategy::A1_global ? BoundStrategy::A2_fixed_source : BoundStrategy::A3_pairwise;
    }
  }
}

SmoothResult smooth_additive(const StateSpaceModel& ssm, std::span<const double> observations,
                             const AdditiveFunctional& functional, const SmootherOptions& options,
                             const StreamKey& key) {
  check_observations(observations, functional);
  const auto start = Clock::now();
  const std::size_t baseline_clouds = CloudAudit::live();
  CloudAudit::reset_peak();

  SmoothResult result;
  auto& diag = result.diagnostics;
  if (options.backward_draws == 1)
    diag.warnings.emplace_back("N_tilde = 1: the smoother stays consistent but loses the "
                               "variance behaviour of N_tilde >= 2");
  const auto& density = *ssm.transition;
  const auto proposal = optimal_proposal(ssm);
  const auto multiplier = make_multiplier(options.multiplier, ssm);
  const FilterStepOptions filter_opts{options.density_draws, options.threads};
  const ParisStepOptions paris_opts{options.backward_draws, options.max_trials, options.threads};

  ParticleCloud cloud = init_cloud(ssm, observations[0], options.particles, key);
  TauStatistics tau{0, std::vector<double>(options.particles, 0.0)};
  diag.strategy_used = resolve_strategy(options.strategy, density, cloud.particles[0],
                                        options.allow_fallback);
  if (diag.strategy_used != options.strategy)
    diag.warnings.emplace_back(std::string("bound strategy ") + to_string(options.strategy) +
                               " unavailable, using " + to_string(diag.strategy_used));

  for (std::size_t k = 0; k + 1 < observations.size(); ++k) {
    const auto step_start = Clock::now();
    ParticleCloud next = filter_step(cloud, ssm, proposal, multiplier, observations[k + 1], filter_opts, key);
    std::vector<double> bounds;
    if (diag.strategy_used == BoundStrategy::A3_pairwise)
      bounds = density.target_bounds(cloud.particles, next.particles);
    else
      bounds.assign(next.size(), sigma_plus(diag.strategy_used, density, cloud.particles, next.particles));
    const double sp = *std::max_element(bounds.begin(), bounds.end());
    auto step = paris_step(tau, cloud, next, functional, density, bounds, paris_opts, key);
    diag.steps.push_back({next.step, sp, step.log.total_trials, step.log.accepted, seconds_since(step_start)});
    diag.total_trials += step.log.total_trials;
    diag.total_accepted += step.log.accepted;
    cloud = std::move(next);
    tau = std::move(step.tau);
  }
  result.estimate = smoothed_estimate(cloud, tau);
  diag.peak_live_clouds = CloudAudit::peak() - std::min(CloudAudit::peak(), baseline_clouds);
  diag.wall_time_s = seconds_since(start);
  return result;
}

namespace {

// Produces h_{s-1}(xi_{s-1}^{I^i}, xi_s^i) for every particle of the new cloud.
std::vector<double> lineage_increments(const ParticleCloud& prev, const ParticleCloud& next,
                                       const AdditiveFunctional& functional, int threads,
                                       const StreamKey& key) {
  std::vector<double> inc(next.size());
  parallel_for(next.size(), threads, [&](std::size_t i) {
    RngStream rng(key.child({next.step, i, tag(StreamTag::fixed_lag)}));
    inc[i] = functional(prev.step, prev.particles[next.ancestors[i]], next.particles[i], rng);
  });
  return inc;
}

}  // namespace

FixedLagResult fixed_lag_smooth(const StateSpaceModel& ssm, std::span<const double> observations,
                                const AdditiveFunctional& functional, const FixedLagOptions& options,
                                const StreamKey& key) {
  check_observations(observations, functional);
  if (options.lags.empty()) throw ConfigurationError("fixed_lag_smooth: no lags requested");
  for (auto lag : options.lags)
    if (lag < 1) throw DomainError("fixed_lag_smooth: lag must be >= 1");
  const auto start = Clock::now();
  const std::size_t n = observations.size() - 1;
  const std::size_t np = options.particles;
  const auto proposal = optimal_proposal(ssm);
  const auto multiplier = make_multiplier(options.multiplier, ssm);
  const FilterStepOptions filter_opts{options.density_draws, options.threads};

  struct LagState {
    std::size_t lag;   // requested
    std::size_t slots; // ring size, min(lag, n)
    std::vector<double> window;
    std::vector<double> scratch;
    double frozen = 0.0;
  };
  std::vector<LagState> states;
  for (auto lag : options.lags) {
    const std::size_t slots = std::min(lag, n);
    states.push_back({lag, slots, std::vector<double>(np * slots, 0.0), std::vector<double>(np * slots), 0.0});
  }

  ParticleCloud cloud = init_cloud(ssm, observations[0], np, key);
  for (std::size_t s = 1; s <= n; ++s) {
    ParticleCloud next = filter_step(cloud, ssm, proposal, multiplier, observations[s], filter_opts, key);
    const auto inc = lineage_increments(cloud, next, functional, options.threads, key);
    for (auto& st : states) {
      // Inherit the parent's window, then record term s - 1.
      const std::size_t slots = st.slots;
      for (std::size_t i = 0; i < np; ++i) {
        const double* src = st.window.data() + next.ancestors[i] * slots;
        std::copy(src, src + slots, st.scratch.data() + i * slots);
        st.scratch[i * slots + (s - 1) % slots] = inc[i];
      }
      std::swap(st.window, st.scratch);
      if (s < n && s >= st.lag) {
        const std::size_t slot = (s - st.lag) % slots;
        double acc = 0.0;
        for (std::size_t i = 0; i < np; ++i) acc += next.weights[i] * st.window[i * slots + slot];
        st.frozen += acc / next.total_weight;
      }
    }
    cloud = std::move(next);
  }

  FixedLagResult out;
  for (auto& st : states) {
    // Terms not frozen before the end: k in [max(0, n - lag), n - 1].
    const std::size_t first = n > st.lag ? n - st.lag : 0;
    double acc = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      double path = 0.0;
      for (std::size_t k = first; k < n; ++k) path += st.window[i * st.slots + k % st.slots];
      acc += cloud.weights[i] * path;
    }
    out.lags.push_back(st.lag);
    out.estimates.push_back(st.frozen + acc / cloud.total_weight);
    out.covers_full_genealogy.push_back(st.lag >= n);
  }
  out.wall_time_s = seconds_since(start);
  return out;
}

double genealogy_smooth(const StateSpaceModel& ssm, std::span<const double> observations,
                        const AdditiveFunctional& functional, const FixedLagOptions& options,
                        const StreamKey& key) {
  check_observations(observations, functional);
  const std::size_t n = observations.size() - 1;
  const std::size_t np = options.particles;
  const auto proposal = optimal_proposal(ssm);
  const auto multiplier = make_multiplier(options.multiplier, ssm);
  const FilterStepOptions filter_opts{options.density_draws, options.threads};

  std::vector<std::vector<double>> history(np);
  ParticleCloud cloud = init_cloud(ssm, observations[0], np, key);
  for (std::size_t s = 1; s <= n; ++s) {
    ParticleCloud next = filter_step(cloud, ssm, proposal, multiplier, observations[s], filter_opts, key);
    const auto inc = lineage_increments(cloud, next, functional, options.threads, key);
    std::vector<std::vector<double>> grown(np);
    for (std::size_t i = 0; i < np; ++i) {
      grown[i] = history[next.ancestors[i]];
      grown[i].push_back(inc[i]);
    }
    history = std::move(grown);
    cloud = std::move(next);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    double path = 0.0;
    for (double v : history[i]) path += v;
    acc += cloud.weights[i] * path;
  }
  return acc / cloud.total_weight;
}

}  // namespace grandparis
