#include "grandparis/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grandparis/errors.hpp"

namespace grandparis {

double normal_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

double normal_density(double x, double mean, double variance) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

ObservationModel::ObservationModel(double variance) : variance_(variance) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw DomainError("observation variance must be finite and > 0");
  log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi * variance);
}

double ObservationModel::density(double x, double y) const { return std::exp(log_density(x, y)); }

double ObservationModel::log_density(double x, double y) const {
  const double d = y - x;
  return log_norm_ - 0.5 * d * d / variance_;
}

LampertiMap::LampertiMap(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw DomainError("lamperti: sigma must be > 0");
}

double LampertiMap::operator()(double z) const {
  if (!(z > 0.0)) throw DomainError("lamperti: z must be > 0");
  return -std::log(z) / sigma_;
}

double LampertiMap::inverse(double x) const { return std::exp(-sigma_ * x); }

LampertiMap lamperti(double sigma) { return LampertiMap(sigma); }

DiffusionModel sine_model(double theta) {
  DiffusionModel m;
  m.name = "sine";
  m.potential = [theta](double x) { return -std::cos(x - theta); };
  m.drift = [theta](double x) { return std::sin(x - theta); };
  m.drift_derivative = [theta](double x) { return std::cos(x - theta); };
  m.phi = [theta](double x) {
    const double s = std::sin(x - theta);
    return 0.5 * (s * s + std::cos(x - theta));
  };
  // With c = cos(x - theta): phi = (1 - c^2 + c) / 2, ranging over [-1/2, 5/8].
  m.global_phi_bounds = PhiBounds{-0.5, 0.625};
  m.phi_bounds_below_min = [](double) { return PhiBounds{-0.5, 0.625}; };
  m.domain_class = DomainClass::D1;
  m.parameters = {{"theta", theta}};
  m.potential_oscillation = 2.0;
  m.drift_derivative_sup = 1.0;
  return m;
}

DiffusionModel log_growth_model(double kappa, double sigma, double gamma) {
  if (!(sigma > 0.0)) throw DomainError("log_growth_model: sigma must be > 0");
  if (!(gamma > 0.0)) throw DomainError("log_growth_model: gamma must be > 0");
  // alpha(x) = c + d u with u = exp(-sigma x); phi is a convex quadratic in u.
  const double c = sigma / 2.0 - kappa / sigma;
  const double d = kappa / (gamma * sigma);

  DiffusionModel m;
  m.name = "log_growth";
  m.potential = [c, d, sigma](double x) { return c * x - (d / sigma) * std::exp(-sigma * x); };
  m.drift = [c, d, sigma](double x) { return c + d * std::exp(-sigma * x); };
  m.drift_derivative = [d, sigma](double x) { return -sigma * d * std::exp(-sigma * x); };
  auto phi_of_u = [c, d, sigma](double u) {
    const double a = c + d * u;
    return 0.5 * (a * a - sigma * d * u);
  };
  m.phi = [phi_of_u, sigma](double x) { return phi_of_u(std::exp(-sigma * x)); };

  double lower = 0.5 * c * c;  // infimum at u -> 0 when the vertex is not in u > 0
  if (d != 0.0) {
    const double vertex = (sigma - 2.0 * c) / (2.0 * d);
    if (vertex > 0.0) lower = phi_of_u(vertex);
  }
  m.phi_bounds_below_min = [phi_of_u, lower, c, sigma](double min_value) {
    // x >= m  <=>  u in (0, exp(-sigma m)]; a convex function peaks at an end.
    const double u_max = std::exp(-sigma * min_value);
    return PhiBounds{lower, std::max(0.5 * c * c, phi_of_u(u_max))};
  };
  m.domain_class = DomainClass::D2;
  m.parameters = {{"kappa", kappa}, {"sigma", sigma}, {"gamma", gamma}};
  if (d >= 0.0) m.drift_derivative_sup = 0.0;
  return m;
}

DiffusionModel brownian_model() {
  DiffusionModel m;
  m.name = "brownian";
  m.potential = [](double) { return 0.0; };
  m.drift = [](double) { return 0.0; };
  m.drift_derivative = [](double) { return 0.0; };
  m.phi = [](double) { return 0.0; };
  m.global_phi_bounds = PhiBounds{0.0, 0.0};
  m.phi_bounds_below_min = [](double) { return PhiBounds{0.0, 0.0}; };
  m.domain_class = DomainClass::D1;
  m.potential_oscillation = 0.0;
  m.drift_derivative_sup = 0.0;
  return m;
}

SimulatedData simulate_data(const DiffusionModel& model, double obs_noise_variance, double x0,
                            std::span<const double> times, int substeps, RngStream& rng) {
  if (substeps < 1) throw DomainError("simulate_data: substeps must be >= 1");
  if (!(obs_noise_variance >= 0.0)) throw DomainError("simulate_data: negative noise variance");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw DomainError("simulate_data: times must be strictly increasing");

  SimulatedData out;
  out.times.assign(times.begin(), times.end());
  out.states.reserve(times.size());
  out.observations.reserve(times.size());
  const double obs_sd = std::sqrt(obs_noise_variance);
  double x = x0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) {
      const double h = (times[k] - times[k - 1]) / substeps;
      const double sqrt_h = std::sqrt(h);
      for (int s = 0; s < substeps; ++s) x += model.drift(x) * h + sqrt_h * rng.normal();
    }
    out.states.push_back(x);
    out.observations.push_back(x + obs_sd * rng.normal());
  }
  return out;
}

SimulatedData simulate_data(const DiffusionModel& model, const ObservationModel& obs, double x0,
                            std::span<const double> times, int substeps, RngStream& rng) {
  return simulate_data(model, obs.variance(), x0, times, substeps, rng);
}

SimulatedData simulate_linear_gaussian(const LinearGaussianModel& model, double initial_mean,
                                       double initial_variance, std::size_t n, RngStream& rng) {
  SimulatedData out;
  const double q_sd = std::sqrt(model.state_noise_variance);
  const double r_sd = std::sqrt(model.obs_variance);
  double x = initial_mean + std::sqrt(initial_variance) * rng.normal();
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) x = model.a * x + q_sd * rng.normal();
    out.times.push_back(static_cast<double>(k));
    out.states.push_back(x);
    out.observations.push_back(x + r_sd * rng.normal());
  }
  return out;
}

double lg_transition_density(const LinearGaussianModel& model, double x, double y) {
  return normal_density(y, model.a * x, model.state_noise_variance);
}

}  // namespace grandparis
