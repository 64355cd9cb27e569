#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grandparis/rng.hpp"

namespace grandparis {

/// Exact-algorithm domain: D1 has phi bounded globally; D2 has phi bounded
/// below globally and above on every half-line [m, inf).
enum class DomainClass { D1, D2 };

struct PhiBounds {
  double lower;
  double upper;
};

/// Scalar diffusion dX = alpha(X) dt + dW with alpha = A'. phi is the
/// Girsanov exponent (alpha^2 + alpha') / 2.
struct DiffusionModel {
  std::string name;
  std::function<double(double)> potential;
  std::function<double(double)> drift;
  std::function<double(double)> drift_derivative;
  std::function<double(double)> phi;
  std::optional<PhiBounds> global_phi_bounds;
  /// For D2 models: (L, U_m) with L <= phi(x) <= U_m for every x >= m.
  std::function<PhiBounds(double)> phi_bounds_below_min;
  DomainClass domain_class = DomainClass::D1;
  std::map<std::string, double> parameters;
  /// sup A - inf A when finite.
  std::optional<double> potential_oscillation;
  /// sup alpha' when finite.
  std::optional<double> drift_derivative_sup;
};

/// Gaussian observation channel Y = X + eps, eps ~ N(0, variance).
class ObservationModel {
 public:
  explicit ObservationModel(double variance);
  double variance() const noexcept { return variance_; }
  double density(double x, double y) const;
  double log_density(double x, double y) const;

 private:
  double variance_;
  double log_norm_;
};

/// eta(z) = -log(z) / sigma and its inverse.
class LampertiMap {
 public:
  explicit LampertiMap(double sigma);
  double operator()(double z) const;
  double inverse(double x) const;
  double sigma() const noexcept { return sigma_; }

 private:
  double sigma_;
};

/// X' = a X + N(0, state_noise_variance), Y = X + N(0, obs_variance).
struct LinearGaussianModel {
  double a = 1.0;
  double state_noise_variance = 1.0;
  double obs_variance = 1.0;
};

struct SimulatedData {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> observations;
};

DiffusionModel sine_model(double theta);
DiffusionModel log_growth_model(double kappa, double sigma, double gamma);
/// Driftless model (A == 0); used for checks with a known Gaussian density.
DiffusionModel brownian_model();
LampertiMap lamperti(double sigma);

/// Euler-Maruyama path with `substeps` sub-intervals per observation gap,
/// observed through additive Gaussian noise of the given variance (>= 0).
SimulatedData simulate_data(const DiffusionModel& model, double obs_noise_variance, double x0,
                            std::span<const double> times, int substeps, RngStream& rng);
SimulatedData simulate_data(const DiffusionModel& model, const ObservationModel& obs, double x0,
                            std::span<const double> times, int substeps, RngStream& rng);

/// Exact simulation of the linear-Gaussian model on n + 1 unit-spaced times.
SimulatedData simulate_linear_gaussian(const LinearGaussianModel& model, double initial_mean,
                                       double initial_variance, std::size_t n, RngStream& rng);

double lg_transition_density(const LinearGaussianModel& model, double x, double y);
double normal_density(double x, double mean, double variance);
double normal_log_density(double x, double mean, double variance);

}  // namespace grandparis
