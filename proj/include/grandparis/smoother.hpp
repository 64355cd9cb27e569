#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "grandparis/density.hpp"
#include "grandparis/particle_filter.hpp"
#include "grandparis/rng.hpp"

namespace grandparis {

/// H_n = sum_{k < n} h_k(x_k, x_{k+1}). Terms may consume randomness (for
/// instance a Monte Carlo log-density); the caller supplies the stream.
struct AdditiveFunctional {
  std::size_t terms = 0;
  std::function<double(std::size_t k, double x, double x_next, RngStream& rng)> term;

  double operator()(std::size_t k, double x, double x_next, RngStream& rng) const {
    return term(k, x, x_next, rng);
  }
  /// Sum of the terms along a fixed trajectory; term k uses stream key.child(k).
  double evaluate(std::span<const double> path, const StreamKey& key) const;
};

/// Per-particle statistics approximating E[H_k | X_k = xi_k^i, Y_{0:k}].
struct TauStatistics {
  std::size_t step = 0;
  std::vector<double> values;
};

struct BackwardTrialLog {
  std::vector<std::size_t> trials;  // one entry per (i, l), row-major in i
  std::size_t total_trials = 0;     // equals the number of zeta draws
  std::size_t accepted = 0;

  double acceptance_rate() const {
    return total_trials == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(total_trials);
  }
};

struct BackwardDraw {
  std::size_t index;
  std::size_t trials;
};

/// Accept-reject draw of a backward index with law proportional to
/// w^l q(xi^l, target): repeat {J ~ weights; U ~ U[0,1]; fresh zeta} until
/// U <= q(xi^J, target; zeta) / sigma_plus.
BackwardDraw backward_index(const ParticleCloud& prev, const AliasTable& weights, double target,
                            const TransitionDensity& density, double sigma_plus, RngStream& rng,
                            std::size_t max_trials, std::size_t target_index = 0);

/// Lambda(l) = w^l q(xi^l, target) / sum_m w^m q(xi^m, target).
std::vector<double> exact_lambda(const ParticleCloud& prev, double target,
                                 const std::function<double(double, double)>& q);

struct ParisStepOptions {
  std::size_t backward_draws = 2;  // N tilde
  std::size_t max_trials = 1'000'000;
  int threads = 1;
};

struct ParisStepResult {
  TauStatistics tau;
  BackwardTrialLog log;
};

/// tau_{k+1}^i = mean over l of tau_k^{J} + h_k(xi_k^{J}, xi_{k+1}^i), with
/// J drawn by backward_index. `k` is prev.step.
ParisStepResult paris_step(const TauStatistics& tau, const ParticleCloud& prev,
                           const ParticleCloud& next, const AdditiveFunctional& functional,
                           const TransitionDensity& density, double sigma_plus,
                           const ParisStepOptions& options, const StreamKey& key);

/// Same update with a separate bound for each target particle.
ParisStepResult paris_step(const TauStatistics& tau, const ParticleCloud& prev,
                           const ParticleCloud& next, const AdditiveFunctional& functional,
                           const TransitionDensity& density, std::span<const double> bounds,
                           const ParisStepOptions& options, const StreamKey& key);

/// O(N^2) reference update summing over the exact backward kernel.
TauStatistics paris_step_exact(const TauStatistics& tau, const ParticleCloud& prev,
                               const ParticleCloud& next, const AdditiveFunctional& functional,
                               const std::function<double(double, double)>& q,
                               const StreamKey& key);

/// Weighted mean of tau under the cloud's weights.
double smoothed_estimate(const ParticleCloud& cloud, const TauStatistics& tau);

struct SmootherOptions {
  std::size_t particles = 100;     // N
  std::size_t backward_draws = 2;  // N tilde
  int density_draws = 30;          // M
  BoundStrategy strategy = BoundStrategy::A3_pairwise;
  /// Fall back A1 -> A2 -> A3 when the requested bound does not exist.
  bool allow_fallback = true;
  MultiplierKind multiplier = MultiplierKind::unit;
  std::size_t max_trials = 1'000'000;
  int threads = 1;
};

struct StepDiagnostics {
  std::size_t step = 0;
  double sigma_plus = 0.0;
  std::size_t trials = 0;
  std::size_t accepted = 0;
  double wall_time_s = 0.0;
};

struct SmootherDiagnostics {
  BoundStrategy strategy_used = BoundStrategy::A3_pairwise;
  std::vector<StepDiagnostics> steps;
  std::size_t total_trials = 0;
  std::size_t total_accepted = 0;
  std::size_t peak_live_clouds = 0;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;

  double mean_acceptance_rate() const {
    return total_trials == 0 ? 1.0
                             : static_cast<double>(total_accepted) / static_cast<double>(total_trials);
  }
};

struct SmoothResult {
  double estimate = 0.0;
  SmootherDiagnostics diagnostics;
};

/// Picks the strongest available strategy starting from `requested`.
BoundStrategy resolve_strategy(BoundStrategy requested, const TransitionDensity& density,
                               double probe_source, bool allow_fallback);

/// Online GRand PaRIS estimate of E[H_n | Y_{0:n}]; keeps only two clouds.
SmoothResult smooth_additive(const StateSpaceModel& ssm, std::span<const double> observations,
                             const AdditiveFunctional& functional, const SmootherOptions& options,
                             const StreamKey& key);

struct FixedLagOptions {
  std::size_t particles = 100;
  int density_draws = 30;
  std::vector<std::size_t> lags{1};
  MultiplierKind multiplier = MultiplierKind::unit;
  int threads = 1;
};

struct FixedLagResult {
  std::vector<std::size_t> lags;
  std::vector<double> estimates;            // one per lag
  std::vector<bool> covers_full_genealogy;  // lag >= n
  double wall_time_s = 0.0;
};

/// Fixed-lag smoother: term h_k is accumulated along the surviving
/// genealogy and frozen with the weights of step min(k + lag, n). All lags
/// share one filter run and one set of increments.
FixedLagResult fixed_lag_smooth(const StateSpaceModel& ssm, std::span<const double> observations,
                                const AdditiveFunctional& functional, const FixedLagOptions& options,
                                const StreamKey& key);

/// Path-space smoother that stores every particle's full history of
/// increments; uses the same streams as fixed_lag_smooth.
double genealogy_smooth(const StateSpaceModel& ssm, std::span<const double> observations,
                        const AdditiveFunctional& functional, const FixedLagOptions& options,
                        const StreamKey& key);

}  // namespace grandparis
