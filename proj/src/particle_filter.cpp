#include "grandparis/particle_filter.hpp"

#include <atomic>
#include <cmath>

#include "grandparis/errors.hpp"
#include "grandparis/parallel.hpp"

namespace grandparis {
namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};

void note_created() noexcept {
  const std::size_t now = g_live.fetch_add(1) + 1;
  std::size_t peak = g_peak.load();
  while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
  }
}

}  // namespace

CloudAudit::CloudAudit() noexcept { note_created(); }
CloudAudit::CloudAudit(const CloudAudit&) noexcept { note_created(); }
CloudAudit::~CloudAudit() { g_live.fetch_sub(1); }
std::size_t CloudAudit::live() noexcept { return g_live.load(); }
std::size_t CloudAudit::peak() noexcept { return g_peak.load(); }
void CloudAudit::reset_peak() noexcept { g_peak.store(g_live.load()); }

double ProposalKernel::density(double x, double x_next, double y_obs) const {
  return normal_density(x_next, mean(x, y_obs), variance);
}

double ProposalKernel::sample(double x, double y_obs, RngStream& rng) const {
  return rng.normal(mean(x, y_obs), std::sqrt(variance));
}

const char* to_string(MultiplierKind k) {
  return k == MultiplierKind::unit ? "unit" : "fully_adapted";
}

MultiplierKind parse_multiplier_kind(const std::string& s) {
  if (s == "unit" || s == "1") return MultiplierKind::unit;
  if (s == "fully_adapted") return MultiplierKind::fully_adapted;
  throw ConfigurationError("unknown adjustment multiplier '" + s + "'");
}

StateSpaceModel make_sde_state_space(DiffusionModel model, double obs_variance, double dt,
                                     GaussianLaw initial) {
  StateSpaceModel ssm;
  auto drift = model.drift;
  ssm.transition = std::make_shared<GpeTransition>(std::move(model), dt);
  ssm.observation = ObservationModel(obs_variance);
  ssm.prior_mean = [drift, dt](double x) { return x + drift(x) * dt; };
  ssm.prior_variance = dt;
  ssm.initial = initial;
  return ssm;
}

StateSpaceModel make_linear_gaussian_state_space(const LinearGaussianModel& model,
                                                 GaussianLaw initial, double noise_spread) {
  StateSpaceModel ssm;
  ssm.transition = std::make_shared<GaussianTransition>(model, noise_spread);
  ssm.observation = ObservationModel(model.obs_variance);
  const double a = model.a;
  ssm.prior_mean = [a](double x) { return a * x; };
  ssm.prior_variance = model.state_noise_variance;
  ssm.initial = initial;
  return ssm;
}

ProposalKernel optimal_proposal(std::function<double(double)> prior_mean, double prior_variance,
                                double obs_variance) {
  if (!(prior_variance > 0.0) || !(obs_variance > 0.0))
    throw DomainError("optimal_proposal: variances must be > 0");
  const double v = 1.0 / (1.0 / prior_variance + 1.0 / obs_variance);
  ProposalKernel k;
  k.variance = v;
  k.mean_fn = [prior_mean = std::move(prior_mean), prior_variance, obs_variance, v](double x,
                                                                                   double y) {
    return v * (prior_mean(x) / prior_variance + y / obs_variance);
  };
  return k;
}

ProposalKernel optimal_proposal(const DiffusionModel& model, double obs_variance, double dt) {
  if (!(dt > 0.0)) throw DomainError("optimal_proposal: dt must be > 0");
  auto drift = model.drift;
  return optimal_proposal([drift, dt](double x) { return x + drift(x) * dt; }, dt, obs_variance);
}

ProposalKernel optimal_proposal(const StateSpaceModel& ssm) {
  return optimal_proposal(ssm.prior_mean, ssm.prior_variance, ssm.observation.variance());
}

AdjustmentMultiplier make_multiplier(MultiplierKind kind, const StateSpaceModel& ssm) {
  AdjustmentMultiplier m;
  m.kind = kind;
  if (kind == MultiplierKind::fully_adapted) {
    const double var = ssm.prior_variance + ssm.observation.variance();
    m.fn = [mean = ssm.prior_mean, var](double x, double y) { return normal_density(y, mean(x), var); };
  }
  return m;
}

ParticleCloud init_cloud(const InitialLaw& eta0, const std::function<double(double)>& chi,
                         const std::function<double(double)>& g0, std::size_t n,
                         const StreamKey& key) {
  if (n == 0) throw DomainError("init_cloud: need at least one particle");
  ParticleCloud cloud;
  cloud.step = 0;
  cloud.particles.resize(n);
  cloud.weights.resize(n);
  cloud.ancestors.resize(n);
  cloud.density_means.assign(n, 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(key.child({0, i, tag(StreamTag::init)}));
    const double x = eta0.sample(rng);
    cloud.particles[i] = x;
    cloud.weights[i] = chi(x) * g0(x) / eta0.density(x);
    cloud.ancestors[i] = i;
    total += cloud.weights[i];
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw WeightDegeneracyError(0, "init_cloud: degenerate initial weights");
  cloud.total_weight = total;
  return cloud;
}

ParticleCloud init_cloud(const StateSpaceModel& ssm, double y0, std::size_t n, const StreamKey& key) {
  const auto law = ssm.initial;
  const auto& obs = ssm.observation;
  InitialLaw eta0{[law](RngStream& rng) { return rng.normal(law.mean, std::sqrt(law.variance)); },
                  [law](double x) { return normal_density(x, law.mean, law.variance); }};
  // chi == eta_0, so the ratio is exactly one and the weight is g_0.
  return init_cloud(eta0, eta0.density, [&obs, y0](double x) { return obs.density(x, y0); }, n, key);
}

AliasTable::AliasTable(std::span<const double> weights)
    : prob_(weights.size()), alias_(weights.size()) {
  const std::size_t n = weights.size();
  if (n == 0) throw DomainError("AliasTable: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("AliasTable: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("AliasTable: all weights are zero");
  std::vector<double> scaled(n);
  std::vector<std::size_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t l : large) {
    prob_[l] = 1.0;
    alias_[l] = l;
  }
  for (std::size_t s : small) {  // rounding leftovers
    prob_[s] = 1.0;
    alias_[s] = s;
  }
}

std::size_t AliasTable::sample(RngStream& rng) const {
  const double u = rng.uniform() * static_cast<double>(prob_.size());
  std::size_t i = static_cast<std::size_t>(u);
  if (i >= prob_.size()) i = prob_.size() - 1;
  return (u - static_cast<double>(i)) < prob_[i] ? i : alias_[i];
}

ParticleCloud filter_step(const ParticleCloud& cloud, const StateSpaceModel& ssm,
                          const ProposalKernel& proposal, const AdjustmentMultiplier& multiplier,
                          double y_next, const FilterStepOptions& options, const StreamKey& key) {
  if (options.density_draws < 1) throw DomainError("filter_step: density_draws must be >= 1");
  const std::size_t n = cloud.size();
  const std::size_t step = cloud.step + 1;

  std::vector<double> selection(n);
  std::vector<double> theta(n);
  for (std::size_t j = 0; j < n; ++j) {
    theta[j] = multiplier(cloud.particles[j], y_next);
    selection[j] = cloud.weights[j] * theta[j];
  }
  const AliasTable table(selection);

  ParticleCloud next;
  next.step = step;
  next.particles.resize(n);
  next.weights.resize(n);
  next.ancestors.resize(n);
  next.density_means.resize(n);
  const auto& transition = *ssm.transition;
  parallel_for(n, options.threads, [&](std::size_t i) {
    RngStream move(key.child({step, i, tag(StreamTag::propagate)}));
    const std::size_t a = table.sample(move);
    const double x = cloud.particles[a];
    const double x_new = proposal.sample(x, y_next, move);
    RngStream draws(key.child({step, i, tag(StreamTag::weight)}));
    const double q_bar = transition.mean_estimate(x, x_new, options.density_draws, draws);
    next.ancestors[i] = a;
    next.particles[i] = x_new;
    next.density_means[i] = q_bar;
    next.weights[i] = q_bar * ssm.observation.density(x_new, y_next) /
                      (theta[a] * proposal.density(x, x_new, y_next));
  });
  double total = 0.0;
  for (double w : next.weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw WeightDegeneracyError(step, "filter_step: non-finite weight at step " + std::to_string(step));
    total += w;
  }
  if (!(total > 0.0))
    throw WeightDegeneracyError(step, "filter_step: all weights vanished at step " + std::to_string(step));
  next.total_weight = total;
  return next;
}

double filter_estimate(const ParticleCloud& cloud, const std::function<double(double)>& h) {
  double acc = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) acc += cloud.weights[i] * h(cloud.particles[i]);
  return acc / cloud.total_weight;
}

}  // namespace grandparis
