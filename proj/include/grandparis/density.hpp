#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "grandparis/bridge.hpp"
#include "grandparis/models.hpp"
#include "grandparis/rng.hpp"

namespace grandparis {

/// Realization of the auxiliary randomness behind one GPE draw.
struct EstimatorDraw {
  long kappa = 0;
  BridgeSkeleton bridge{0.0, 0.0, 1.0};
  std::vector<double> poisson_times;  // sorted ascending
  double lower = 0.0;                 // L_w
  double upper = 0.0;                 // U_w
  std::vector<double> phi_values;     // phi at the bridge points, same order as poisson_times
};

struct DensityEstimate {
  double value = 0.0;
  EstimatorDraw draw;
  double gaussian_factor = 0.0;  // N(y; x, dt)
  double exp_factor = 0.0;       // exp{A(y) - A(x) - c dt}, c = L_w (GPE-1) or U_w (general)
};

/// Law of the number of Poisson points in the general estimator, built once
/// the path bounds (L_w, U_w) are known.
struct KappaLaw {
  std::function<long(RngStream&)> sample;
  std::function<double(long)> pmf;
};
using KappaLawFactory = std::function<KappaLaw(const PhiBounds&, double dt)>;

/// Poisson((U_w - L_w) dt): turns the general estimator into GPE-1.
KappaLawFactory poisson_kappa();
/// P(kappa = k) = p (1 - p)^k.
KappaLawFactory geometric_kappa(double p);

/// Global lower bound L on phi (from the D1 bounds, or the m-independent
/// lower bound of a D2 model).
double phi_lower_bound(const DiffusionModel& model);

/// N(y; x, dt) exp{A(y) - A(x) - lower dt}; dominates every GPE-1 draw.
double rho(const DiffusionModel& model, double x, double y, double dt, double lower);

DensityEstimate gpe1_estimate(const DiffusionModel& model, double x, double y, double dt,
                              RngStream& rng);
/// Same draw sequence as gpe1_estimate without recording the realization.
double gpe1_value(const DiffusionModel& model, double x, double y, double dt, RngStream& rng);

DensityEstimate general_poisson_estimate(const DiffusionModel& model, double x, double y, double dt,
                                         const KappaLawFactory& mu, RngStream& rng);

/// Log of the arithmetic mean of M independent GPE-1 draws.
double log_density_estimate(const DiffusionModel& model, double x, double y, double dt, int draws,
                            RngStream& rng);

/// sup over (x, y) of rho; needs a finite potential oscillation.
double rho_global_bound(const DiffusionModel& model, double dt);
/// sup over y of rho(x, .); needs sup alpha' < 1 / dt so the exponent is concave.
double rho_source_bound(const DiffusionModel& model, double x, double dt);

enum class BoundStrategy { A1_global, A2_fixed_source, A3_pairwise };

const char* to_string(BoundStrategy s);
BoundStrategy parse_bound_strategy(const std::string& s);

/// Source of positive unbiased transition density estimates for one step,
/// with the deterministic envelope used to bound them.
class TransitionDensity {
 public:
  virtual ~TransitionDensity() = default;
  /// One draw q(x, y; zeta) with fresh zeta.
  virtual double estimate(double x, double y, RngStream& rng) const = 0;
  /// Deterministic function dominating every draw of estimate(x, y, .).
  virtual double envelope(double x, double y) const = 0;
  /// sup_{x,y} envelope; throws StrategyUnavailableError when unbounded.
  virtual double global_bound() const = 0;
  /// sup_y envelope(x, y); throws StrategyUnavailableError when unbounded.
  virtual double source_bound(double x) const = 0;
  /// max over the (source, target) pairs of envelope.
  double pairwise_bound(std::span<const double> sources, std::span<const double> targets) const;
  /// For each target, the max over sources of envelope.
  virtual std::vector<double> target_bounds(std::span<const double> sources,
                                            std::span<const double> targets) const;

  double mean_estimate(double x, double y, int draws, RngStream& rng) const;
  double log_density_estimate(double x, double y, int draws, RngStream& rng) const;
};

/// GPE-1 estimates for a diffusion over a fixed step dt.
class GpeTransition final : public TransitionDensity {
 public:
  GpeTransition(DiffusionModel model, double dt);
  double estimate(double x, double y, RngStream& rng) const override;
  double envelope(double x, double y) const override;
  double global_bound() const override;
  double source_bound(double x) const override;
  std::vector<double> target_bounds(std::span<const double> sources,
                                    std::span<const double> targets) const override;

  const DiffusionModel& model() const noexcept { return model_; }
  double dt() const noexcept { return dt_; }

 private:
  DiffusionModel model_;
  double dt_;
  double lower_;
};

/// Exact Gaussian transition N(y; a x, v), optionally multiplied by
/// independent Uniform[1 - spread, 1 + spread] noise (unbiased, bounded).
class GaussianTransition final : public TransitionDensity {
 public:
  explicit GaussianTransition(LinearGaussianModel model, double noise_spread = 0.0);
  double estimate(double x, double y, RngStream& rng) const override;
  double envelope(double x, double y) const override;
  double global_bound() const override;
  double source_bound(double x) const override;
  double exact(double x, double y) const;

 private:
  LinearGaussianModel model_;
  double spread_;
};

/// Upper bound on every estimate the backward sampler can see under the
/// requested scope. `sources` are the time-k particles, `targets` the
/// time-(k+1) particles.
double sigma_plus(BoundStrategy strategy, const TransitionDensity& density,
                  std::span<const double> sources, std::span<const double> targets);

}  // namespace grandparis
