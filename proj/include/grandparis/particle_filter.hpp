#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "grandparis/density.hpp"
#include "grandparis/models.hpp"
#include "grandparis/rng.hpp"

namespace grandparis {

struct GaussianLaw {
  double mean = 0.0;
  double variance = 1.0;
};

/// Counts live ParticleCloud objects so callers can audit how many clouds an
/// online algorithm keeps at once.
class CloudAudit {
 public:
  CloudAudit() noexcept;
  CloudAudit(const CloudAudit&) noexcept;
  CloudAudit& operator=(const CloudAudit&) noexcept = default;
  ~CloudAudit();

  static std::size_t live() noexcept;
  static std::size_t peak() noexcept;
  /// Resets the peak to the current live count.
  static void reset_peak() noexcept;
};

/// Particles, random weights and ancestor indices at one time step. Weights
/// are stored unnormalized; total_weight is their sum.
struct ParticleCloud {
  std::size_t step = 0;
  std::vector<double> particles;
  std::vector<double> weights;
  std::vector<std::size_t> ancestors;
  /// Mean of the density draws that entered each weight (1 at step 0).
  std::vector<double> density_means;
  double total_weight = 0.0;
  CloudAudit audit;

  std::size_t size() const noexcept { return particles.size(); }
};

/// Gaussian proposal with mean depending on the source particle and the
/// next observation.
struct ProposalKernel {
  std::function<double(double x, double y_obs)> mean_fn;
  double variance = 1.0;

  double mean(double x, double y_obs) const { return mean_fn(x, y_obs); }
  double density(double x, double x_next, double y_obs) const;
  double sample(double x, double y_obs, RngStream& rng) const;
};

enum class MultiplierKind { unit, fully_adapted };

const char* to_string(MultiplierKind k);
MultiplierKind parse_multiplier_kind(const std::string& s);

struct AdjustmentMultiplier {
  MultiplierKind kind = MultiplierKind::unit;
  std::function<double(double x, double y_obs)> fn;

  double operator()(double x, double y_obs) const { return fn ? fn(x, y_obs) : 1.0; }
};

/// Model bundle consumed by the filter and the smoothers.
struct StateSpaceModel {
  std::shared_ptr<const TransitionDensity> transition;
  ObservationModel observation{1.0};
  /// Mean and variance of the Gaussian prior kernel the proposal is built on.
  std::function<double(double)> prior_mean;
  double prior_variance = 1.0;
  /// Initial law chi; also used as the instrumental law eta_0.
  GaussianLaw initial;
};

StateSpaceModel make_sde_state_space(DiffusionModel model, double obs_variance, double dt,
                                     GaussianLaw initial);
StateSpaceModel make_linear_gaussian_state_space(const LinearGaussianModel& model,
                                                 GaussianLaw initial, double noise_spread = 0.0);

/// p(x, .) proportional to N(.; prior_mean(x), prior_variance) g(., y_obs).
ProposalKernel optimal_proposal(std::function<double(double)> prior_mean, double prior_variance,
                                double obs_variance);
/// Euler prior kernel: mean x + alpha(x) dt, variance dt.
ProposalKernel optimal_proposal(const DiffusionModel& model, double obs_variance, double dt);
ProposalKernel optimal_proposal(const StateSpaceModel& ssm);

/// unit: 1. fully_adapted: N(y_obs; prior_mean(x), prior_variance + obs_variance).
AdjustmentMultiplier make_multiplier(MultiplierKind kind, const StateSpaceModel& ssm);

struct InitialLaw {
  std::function<double(RngStream&)> sample;
  std::function<double(double)> density;
};

/// N i.i.d. draws from eta_0 with weights chi g_0 / eta_0.
ParticleCloud init_cloud(const InitialLaw& eta0, const std::function<double(double)>& chi,
                         const std::function<double(double)>& g0, std::size_t n,
                         const StreamKey& key);
ParticleCloud init_cloud(const StateSpaceModel& ssm, double y0, std::size_t n, const StreamKey& key);

/// Walker/Vose alias table over non-negative weights.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> weights);
  std::size_t sample(RngStream& rng) const;
  std::size_t size() const noexcept { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

struct FilterStepOptions {
  int density_draws = 30;  // M
  int threads = 1;
};

/// One auxiliary random-weight filter step. Particle i draws from streams
/// derived from (key, step + 1, i), so the result does not depend on threads.
ParticleCloud filter_step(const ParticleCloud& cloud, const StateSpaceModel& ssm,
                          const ProposalKernel& proposal, const AdjustmentMultiplier& multiplier,
                          double y_next, const FilterStepOptions& options, const StreamKey& key);

/// Self-normalized estimate sum w h(xi) / sum w.
double filter_estimate(const ParticleCloud& cloud, const std::function<double(double)>& h);

}  // namespace grandparis
