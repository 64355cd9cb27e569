#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grandparis/density.hpp"
#include "grandparis/models.hpp"
#include "grandparis/particle_filter.hpp"
#include "grandparis/smoother.hpp"

namespace grandparis {

/// Inputs of one experiment. Keys of the key-value config file mirror the
/// field names; model parameters (theta, kappa, sigma, gamma, a,
/// state_variance) are accepted only for the model that uses them.
struct ExperimentConfig {
  std::string model = "sine";
  std::map<std::string, double> parameters;  // overrides of the model defaults
  std::optional<double> x0;                  // model default when absent
  double t0 = 0.0;
  double dt = 0.5;
  std::size_t n = 100;
  double obs_variance = 1.0;
  int substeps = 100;
  double init_variance = 1.0;

  std::size_t particles = 100;         // N for GRand PaRIS
  std::size_t backward_draws = 2;      // N tilde
  int density_draws = 30;              // M, draws averaged into each weight
  int log_density_draws = 30;          // draws averaged inside log q of the EM functional
  std::vector<std::size_t> lags{1, 2, 5, 10, 50};
  std::size_t fixed_lag_particles = 400;
  std::size_t replicates = 20;
  std::size_t reference_particles = 500;
  std::size_t reference_replicates = 5;
  std::size_t datasets = 1;
  std::uint64_t seed = 1;
  BoundStrategy bound_strategy = BoundStrategy::A3_pairwise;
  MultiplierKind multiplier = MultiplierKind::unit;
  std::size_t max_trials = 1'000'000;
  bool record_timings = true;
  int threads = 1;
  std::string out_dir = "results";

  void validate() const;
  /// Explicit parameters over the model defaults.
  std::map<std::string, double> resolved_parameters() const;
  double parameter(const std::string& name) const;
  double initial_state() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical key = value rendering; parse_config(config_to_text(c)) == c.
std::string config_to_text(const ExperimentConfig& config);
/// FNV-1a 64 of config_to_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

DiffusionModel make_diffusion(const ExperimentConfig& config);
StateSpaceModel make_state_space(const ExperimentConfig& config);
SimulatedData simulate_dataset(const ExperimentConfig& config, std::size_t dataset);

/// h_k(x, x') = log g_{k+1}(x') + log q_k(x, x'), the latter estimated from
/// `draws` density draws; h_0 also carries log chi(x) + log g_0(x).
AdditiveFunctional em_functional(const StateSpaceModel& ssm, std::span<const double> observations,
                                 int draws);

enum class Method { reference, grand_paris, fixed_lag };
const char* to_string(Method m);
Method parse_method(const std::string& s);

struct ReplicateResult {
  Method method = Method::grand_paris;
  std::size_t lag = 0;  // fixed_lag only
  std::size_t replicate = 0;
  double q_hat = 0.0;
  double wall_time_s = 0.0;
  std::optional<double> mean_acceptance_rate;  // GRand PaRIS runs only
};

struct MetricsRow {
  Method method = Method::grand_paris;
  std::size_t lag = 0;
  double arb = 0.0;
  double acv = 0.0;
  double mean_q = 0.0;
  double sd_q = 0.0;
  double q_star = 0.0;
};

/// arb = |mean - q_star| / |q_star|; acv = sd / |mean| with the R - 1 denominator.
MetricsRow compute_metrics(std::span<const double> estimates, double q_star);

struct DatasetOutput {
  std::size_t dataset = 0;
  SimulatedData data;
  std::vector<ReplicateResult> results;  // sorted by (method, lag, replicate)
  std::vector<MetricsRow> metrics;       // grand_paris, then each lag
};

struct ExperimentOutput {
  std::vector<DatasetOutput> datasets;
};

/// Metrics for every non-reference method, with q_star the mean of the
/// reference rows.
std::vector<MetricsRow> metrics_from_results(std::span<const ReplicateResult> results);
void sort_results(std::vector<ReplicateResult>& results);

/// Runs the whole protocol. When `write_outputs` is set, each dataset is
/// written under config.out_dir as it completes and completed replicates are
/// flushed before an error propagates.
ExperimentOutput run_experiment(const ExperimentConfig& config, bool write_outputs = false);

struct OutputPaths {
  std::filesystem::path results_csv;
  std::filesystem::path metrics_csv;
};

void emit_results(std::span<const ReplicateResult> results, std::span<const MetricsRow> metrics,
                  const OutputPaths& paths, bool record_timings = true);
void write_manifest(const ExperimentConfig& config, const std::filesystem::path& path);
void write_summary(std::span<const DatasetOutput> datasets, const std::filesystem::path& path);

void write_dataset_csv(const SimulatedData& data, const std::filesystem::path& path);
SimulatedData read_dataset_csv(const std::filesystem::path& path);
std::vector<ReplicateResult> read_results_csv(const std::filesystem::path& path);
void write_metrics_csv(std::span<const MetricsRow> metrics, const std::filesystem::path& path);

/// Prints with 17 significant digits.
std::string format_real(double v);

}  // namespace grandparis
