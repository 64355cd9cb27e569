#include "grandparis/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "grandparis/errors.hpp"

namespace grandparis {
namespace {

struct DrawIngredients {
  PhiBounds bounds{};
  long kappa = 0;
};

PhiBounds d1_bounds(const DiffusionModel& model) {
  if (!model.global_phi_bounds)
    throw ConfigurationError("model '" + model.name + "' is D1 but has no global phi bounds");
  return *model.global_phi_bounds;
}

// Shared draw sequence of the Poisson estimators: bounds (through the bridge
// minimum for D2), kappa, uniform times, bridge values. `times` comes back
// sorted and `phis` holds phi at each revealed point.
template <class KappaSampler>
DrawIngredients draw_path(const DiffusionModel& model, double x, double y, double dt,
                          RngStream& rng, BridgeSkeleton& bridge, std::vector<double>& times,
                          std::vector<double>& phis, KappaSampler&& sample_kappa) {
  DrawIngredients out;
  if (model.domain_class == DomainClass::D1) {
    out.bounds = d1_bounds(model);
    bridge.reset(x, y, dt);
  } else {
    if (!model.phi_bounds_below_min)
      throw ConfigurationError("model '" + model.name + "' is D2 but has no half-line phi bounds");
    const auto minimum = sample_bridge_minimum(x, y, dt, rng);
    out.bounds = model.phi_bounds_below_min(minimum.value);
    bridge.reset_with_minimum(x, y, dt, minimum.value, minimum.time);
  }
  out.kappa = sample_kappa(out.bounds, rng);
  times.resize(static_cast<std::size_t>(out.kappa));
  for (auto& t : times) t = dt * rng.uniform();
  std::sort(times.begin(), times.end());
  phis.resize(times.size());
  const bool bessel = bridge.has_minimum();
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double w = bessel ? sample_bessel_bridge_point(bridge, times[j], rng)
                            : bridge_interpolate(bridge, times[j], rng);
    phis[j] = model.phi(w);
  }
  return out;
}

long poisson_count(const PhiBounds& b, double dt, RngStream& rng) {
  return rng.poisson((b.upper - b.lower) * dt);
}

double gpe1_product(const PhiBounds& b, std::span<const double> phis) {
  const double range = b.upper - b.lower;
  double prod = 1.0;
  for (double p : phis) prod *= std::clamp((b.upper - p) / range, 0.0, 1.0);
  return prod;
}

double gaussian_kernel(double x, double y, double dt) {
  const double d = y - x;
  return std::exp(-0.5 * d * d / dt) / std::sqrt(2.0 * std::numbers::pi * dt);
}

struct Scratch {
  BridgeSkeleton bridge{0.0, 0.0, 1.0};
  std::vector<double> times;
  std::vector<double> phis;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

KappaLawFactory poisson_kappa() {
  return [](const PhiBounds& b, double dt) {
    const double mean = (b.upper - b.lower) * dt;
    KappaLaw law;
    law.sample = [b, dt](RngStream& rng) { return poisson_count(b, dt, rng); };
    law.pmf = [mean](long k) {
      if (k < 0) return 0.0;
      if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
      return std::exp(-mean + static_cast<double>(k) * std::log(mean) - std::lgamma(k + 1.0));
    };
    return law;
  };
}

KappaLawFactory geometric_kappa(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("geometric_kappa: p must lie in (0, 1]");
  return [p](const PhiBounds&, double) {
    KappaLaw law;
    law.sample = [p](RngStream& rng) {
      long k = 0;
      while (rng.uniform() >= p) ++k;
      return k;
    };
    law.pmf = [p](long k) { return k < 0 ? 0.0 : p * std::pow(1.0 - p, static_cast<double>(k)); };
    return law;
  };
}

double phi_lower_bound(const DiffusionModel& model) {
  if (model.domain_class == DomainClass::D1) return d1_bounds(model).lower;
  if (!model.phi_bounds_below_min)
    throw ConfigurationError("model '" + model.name + "' is D2 but has no half-line phi bounds");
  return model.phi_bounds_below_min(0.0).lower;
}

double rho(const DiffusionModel& model, double x, double y, double dt, double lower) {
  if (!(dt > 0.0)) throw DomainError("rho: dt must be > 0");
  return gaussian_kernel(x, y, dt) * std::exp(model.potential(y) - model.potential(x) - lower * dt);
}

DensityEstimate gpe1_estimate(const DiffusionModel& model, double x, double y, double dt,
                              RngStream& rng) {
  DensityEstimate est;
  auto& draw = est.draw;
  const auto ing = draw_path(model, x, y, dt, rng, draw.bridge, draw.poisson_times, draw.phi_values,
                             [dt](const PhiBounds& b, RngStream& r) { return poisson_count(b, dt, r); });
  draw.kappa = ing.kappa;
  draw.lower = ing.bounds.lower;
  draw.upper = ing.bounds.upper;
  est.gaussian_factor = gaussian_kernel(x, y, dt);
  est.exp_factor = std::exp(model.potential(y) - model.potential(x) - ing.bounds.lower * dt);
  est.value = est.gaussian_factor * est.exp_factor * gpe1_product(ing.bounds, draw.phi_values);
  return est;
}

double gpe1_value(const DiffusionModel& model, double x, double y, double dt, RngStream& rng) {
  auto& s = scratch();
  const auto ing = draw_path(model, x, y, dt, rng, s.bridge, s.times, s.phis,
                             [dt](const PhiBounds& b, RngStream& r) { return poisson_count(b, dt, r); });
  return rho(model, x, y, dt, ing.bounds.lower) * gpe1_product(ing.bounds, s.phis);
}

DensityEstimate general_poisson_estimate(const DiffusionModel& model, double x, double y, double dt,
                                         const KappaLawFactory& mu, RngStream& rng) {
  DensityEstimate est;
  auto& draw = est.draw;
  KappaLaw law;
  const auto ing = draw_path(model, x, y, dt, rng, draw.bridge, draw.poisson_times, draw.phi_values,
                             [&](const PhiBounds& b, RngStream& r) {
                               law = mu(b, dt);
                               return law.sample(r);
                             });
  const double mass = law.pmf(ing.kappa);
  if (!(mass > 0.0)) throw DomainError("general_poisson_estimate: drawn kappa has zero probability");
  draw.kappa = ing.kappa;
  draw.lower = ing.bounds.lower;
  draw.upper = ing.bounds.upper;
  est.gaussian_factor = gaussian_kernel(x, y, dt);
  est.exp_factor = std::exp(model.potential(y) - model.potential(x) - ing.bounds.upper * dt);
  // dt^kappa / (mu(kappa) kappa!) prod (U - phi), accumulated in log space.
  double log_weight = static_cast<double>(ing.kappa) * std::log(dt) - std::log(mass) -
                      std::lgamma(static_cast<double>(ing.kappa) + 1.0);
  double prod = 1.0;
  for (double p : draw.phi_values) prod *= std::max(ing.bounds.upper - p, 0.0);
  est.value = est.gaussian_factor * est.exp_factor * std::exp(log_weight) * prod;
  return est;
}

double log_density_estimate(const DiffusionModel& model, double x, double y, double dt, int draws,
                            RngStream& rng) {
  if (draws < 1) throw DomainError("log_density_estimate: draws must be >= 1");
  double sum = 0.0;
  for (int m = 0; m < draws; ++m) sum += gpe1_value(model, x, y, dt, rng);
  return std::log(sum / draws);
}

double rho_global_bound(const DiffusionModel& model, double dt) {
  if (!model.potential_oscillation)
    throw StrategyUnavailableError("A1 bound unavailable: potential of '" + model.name +
                                   "' is unbounded");
  const double lower = phi_lower_bound(model);
  return std::exp(*model.potential_oscillation - lower * dt) / std::sqrt(2.0 * std::numbers::pi * dt);
}

double rho_source_bound(const DiffusionModel& model, double x, double dt) {
  if (!model.drift_derivative_sup || !(*model.drift_derivative_sup < 1.0 / dt))
    throw StrategyUnavailableError("A2 bound unavailable for '" + model.name +
                                   "': log rho(x, .) is not concave at this step size");
  // log rho(x, y) = -(y - x)^2 / (2 dt) + A(y) + const is strictly concave in y;
  // its maximizer is the unique root of alpha(y) - (y - x) / dt.
  auto slope = [&](double y) { return model.drift(y) - (y - x) / dt; };
  const double s0 = slope(x);
  double lo = x;
  double hi = x;
  if (s0 != 0.0) {
    const double dir = s0 > 0.0 ? 1.0 : -1.0;
    double step = std::max(1.0, std::abs(s0) * dt);
    double far = x + dir * step;
    while (slope(far) * dir > 0.0) {
      step *= 2.0;
      far = x + dir * step;
      if (!std::isfinite(far)) throw StrategyUnavailableError("A2 bound: no maximizer found");
    }
    lo = std::min(x, far);
    hi = std::max(x, far);
    for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (slope(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
  }
  const double lower = phi_lower_bound(model);
  const double best = std::max({rho(model, x, lo, dt, lower), rho(model, x, hi, dt, lower),
                                rho(model, x, 0.5 * (lo + hi), dt, lower)});
  return best * (1.0 + 1e-9);
}

const char* to_string(BoundStrategy s) {
  switch (s) {
    case BoundStrategy::A1_global:
      return "A1";
    case BoundStrategy::A2_fixed_source:
      return "A2";
    case BoundStrategy::A3_pairwise:
      return "A3";
  }
  return "?";
}

BoundStrategy parse_bound_strategy(const std::string& s) {
  if (s == "A1" || s == "a1" || s == "global") return BoundStrategy::A1_global;
  if (s == "A2" || s == "a2" || s == "fixed_source") return BoundStrategy::A2_fixed_source;
  if (s == "A3" || s == "a3" || s == "pairwise") return BoundStrategy::A3_pairwise;
  throw ConfigurationError("unknown bound strategy '" + s + "'");
}

double TransitionDensity::pairwise_bound(std::span<const double> sources,
                                         std::span<const double> targets) const {
  double best = 0.0;
  for (double b : target_bounds(sources, targets)) best = std::max(best, b);
  return best;
}

std::vector<double> TransitionDensity::target_bounds(std::span<const double> sources,
                                                     std::span<const double> targets) const {
  std::vector<double> out(targets.size(), 0.0);
  for (std::size_t i = 0; i < targets.size(); ++i)
    for (double x : sources) out[i] = std::max(out[i], envelope(x, targets[i]));
  return out;
}

double TransitionDensity::mean_estimate(double x, double y, int draws, RngStream& rng) const {
  if (draws < 1) throw DomainError("mean_estimate: draws must be >= 1");
  double sum = 0.0;
  for (int m = 0; m < draws; ++m) sum += estimate(x, y, rng);
  return sum / draws;
}

double TransitionDensity::log_density_estimate(double x, double y, int draws, RngStream& rng) const {
  return std::log(mean_estimate(x, y, draws, rng));
}

GpeTransition::GpeTransition(DiffusionModel model, double dt)
    : model_(std::move(model)), dt_(dt), lower_(phi_lower_bound(model_)) {
  if (!(dt > 0.0)) throw DomainError("GpeTransition: dt must be > 0");
}

double GpeTransition::estimate(double x, double y, RngStream& rng) const {
  return gpe1_value(model_, x, y, dt_, rng);
}

double GpeTransition::envelope(double x, double y) const { return rho(model_, x, y, dt_, lower_); }

double GpeTransition::global_bound() const { return rho_global_bound(model_, dt_); }

double GpeTransition::source_bound(double x) const { return rho_source_bound(model_, x, dt_); }

std::vector<double> GpeTransition::target_bounds(std::span<const double> sources,
                                                 std::span<const double> targets) const {
  // Maximize the log-envelope with potentials evaluated once per particle.
  std::vector<double> a_src(sources.size());
  for (std::size_t j = 0; j < sources.size(); ++j) a_src[j] = model_.potential(sources[j]);
  const double inv2dt = 0.5 / dt_;
  const double norm = std::sqrt(2.0 * std::numbers::pi * dt_);
  std::vector<double> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double a_y = model_.potential(targets[i]);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sources.size(); ++j) {
      const double d = targets[i] - sources[j];
      best = std::max(best, a_y - a_src[j] - d * d * inv2dt);
    }
    // Rounding slack so the result dominates envelope() evaluated pair by pair.
    out[i] = std::exp(best - lower_ * dt_) / norm * (1.0 + 1e-12);
  }
  return out;
}

GaussianTransition::GaussianTransition(LinearGaussianModel model, double noise_spread)
    : model_(model), spread_(noise_spread) {
  if (!(noise_spread >= 0.0 && noise_spread < 1.0))
    throw DomainError("GaussianTransition: noise spread must lie in [0, 1)");
}

double GaussianTransition::exact(double x, double y) const {
  return lg_transition_density(model_, x, y);
}

double GaussianTransition::estimate(double x, double y, RngStream& rng) const {
  const double q = exact(x, y);
  if (spread_ == 0.0) return q;
  return q * rng.uniform(1.0 - spread_, 1.0 + spread_);
}

double GaussianTransition::envelope(double x, double y) const { return (1.0 + spread_) * exact(x, y); }

double GaussianTransition::global_bound() const {
  return (1.0 + spread_) / std::sqrt(2.0 * std::numbers::pi * model_.state_noise_variance);
}

double GaussianTransition::source_bound(double) const { return global_bound(); }

double sigma_plus(BoundStrategy strategy, const TransitionDensity& density,
                  std::span<const double> sources, std::span<const double> targets) {
  switch (strategy) {
    case BoundStrategy::A1_global:
      return density.global_bound();
    case BoundStrategy::A2_fixed_source: {
      double best = 0.0;
      for (double x : sources) best = std::max(best, density.source_bound(x));
      return best;
    }
    case BoundStrategy::A3_pairwise:
      return density.pairwise_bound(sources, targets);
  }
  throw ConfigurationError("unknown bound strategy");
}

}  // namespace grandparis
