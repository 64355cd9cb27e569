// Command-line front end: simulate datasets, run single smoothers, run the
// replicated experiment protocol and recompute metrics from results files.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "grandparis/errors.hpp"
#include "grandparis/experiment.hpp"
#include "grandparis/parallel.hpp"

using namespace grandparis;

namespace {

ExperimentConfig base_config(const std::string& path) {
  return path.empty() ? parse_config("") : load_config(path);
}

void print_metrics(const std::vector<MetricsRow>& rows) {
  std::printf("%-12s %5s %14s %14s %20s %20s %20s\n", "method", "lag", "arb", "acv", "mean_Q", "sd_Q",
              "Q_star");
  for (const auto& m : rows)
    std::printf("%-12s %5s %14.6g %14.6g %20.12g %20.12g %20.12g\n", to_string(m.method),
                m.method == Method::fixed_lag ? std::to_string(m.lag).c_str() : "", m.arb, m.acv,
                m.mean_q, m.sd_q, m.q_star);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GRand PaRIS online smoothing for partially observed diffusions"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = default_thread_count();

  auto* sim = app.add_subcommand("simulate", "Simulate one dataset and write it as CSV (t, x, y)");
  std::size_t sim_dataset = 0;
  std::string sim_out;
  sim->add_option("--config", config_path, "Config file (key = value) or run manifest (.json)");
  sim->add_option("--seed", seed, "Override the config seed");
  sim->add_option("--dataset", sim_dataset, "Dataset index under the seed");
  sim->add_option("--out", sim_out, "Output CSV path (stdout when omitted)");

  auto* smooth = app.add_subcommand("smooth", "Estimate the EM intermediate quantity on one dataset");
  std::string smooth_data;
  std::string smooth_method = "grand_paris";
  std::optional<std::size_t> smooth_particles;
  smooth->add_option("--config", config_path, "Config file or run manifest");
  smooth->add_option("--data", smooth_data, "Dataset CSV with columns t and y")->required();
  smooth->add_option("--seed", seed, "Override the config seed");
  smooth->add_option("--threads", threads, "Worker threads");
  smooth->add_option("--method", smooth_method, "grand_paris or fixed_lag")
      ->check(CLI::IsMember({"grand_paris", "fixed_lag"}));
  smooth->add_option("--particles", smooth_particles, "Override the particle count");

  auto* exp = app.add_subcommand("experiment", "Run the replicated comparison protocol");
  std::optional<std::string> out_dir;
  std::optional<std::size_t> datasets;
  bool no_timings = false;
  exp->add_option("--config", config_path, "Config file or run manifest");
  exp->add_option("--seed", seed, "Override the config seed");
  exp->add_option("--threads", threads, "Worker threads");
  exp->add_option("--out-dir", out_dir, "Output directory");
  exp->add_option("--datasets", datasets, "Number of simulated datasets");
  exp->add_flag("--no-timings", no_timings, "Write 0 in wall_time_s so outputs are byte-stable");

  auto* met = app.add_subcommand("metrics", "Recompute arb and acv from a results CSV");
  std::string met_results;
  std::optional<double> q_star;
  std::string met_out;
  met->add_option("--results", met_results, "Results CSV")->required();
  met->add_option("--q-star", q_star, "Reference value (default: mean of reference rows)");
  met->add_option("--out", met_out, "Write the metrics CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      auto config = base_config(config_path);
      if (seed) config.seed = *seed;
      const auto data = simulate_dataset(config, sim_dataset);
      if (sim_out.empty()) {
        std::cout << "t,x,y\n";
        for (std::size_t k = 0; k < data.times.size(); ++k)
          std::cout << format_real(data.times[k]) << ',' << format_real(data.states[k]) << ','
                    << format_real(data.observations[k]) << '\n';
      } else {
        write_dataset_csv(data, sim_out);
      }
    } else if (*smooth) {
      auto config = base_config(config_path);
      if (seed) config.seed = *seed;
      const auto data = read_dataset_csv(smooth_data);
      const auto ssm = make_state_space(config);
      const auto functional = em_functional(ssm, data.observations, config.log_density_draws);
      const StreamKey key(config.seed);
      if (smooth_method == "grand_paris") {
        SmootherOptions opts;
        opts.particles = smooth_particles.value_or(config.particles);
        opts.backward_draws = config.backward_draws;
        opts.density_draws = config.density_draws;
        opts.strategy = config.bound_strategy;
        opts.multiplier = config.multiplier;
        opts.max_trials = config.max_trials;
        opts.threads = threads;
        const auto res = smooth_additive(ssm, data.observations, functional, opts, key);
        std::printf("Q_hat = %s\n", format_real(res.estimate).c_str());
        std::printf("bound_strategy = %s\n", to_string(res.diagnostics.strategy_used));
        std::printf("mean_acceptance_rate = %.6f\n", res.diagnostics.mean_acceptance_rate());
        std::printf("wall_time_s = %.3f\n", res.diagnostics.wall_time_s);
        for (const auto& w : res.diagnostics.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      } else {
        FixedLagOptions opts;
        opts.particles = smooth_particles.value_or(config.fixed_lag_particles);
        opts.density_draws = config.density_draws;
        opts.lags = config.lags;
        opts.multiplier = config.multiplier;
        opts.threads = threads;
        const auto res = fixed_lag_smooth(ssm, data.observations, functional, opts, key);
        for (std::size_t l = 0; l < res.lags.size(); ++l)
          std::printf("lag %zu: Q_hat = %s\n", res.lags[l], format_real(res.estimates[l]).c_str());
        std::printf("wall_time_s = %.3f\n", res.wall_time_s);
      }
    } else if (*exp) {
      auto config = base_config(config_path);
      if (seed) config.seed = *seed;
      if (out_dir) config.out_dir = *out_dir;
      if (datasets) config.datasets = *datasets;
      if (no_timings) config.record_timings = false;
      config.threads = threads;
      const auto out = run_experiment(config, true);
      for (const auto& ds : out.datasets) {
        std::printf("dataset %zu\n", ds.dataset);
        print_metrics(ds.metrics);
      }
      std::printf("outputs written to %s\n", config.out_dir.c_str());
    } else if (*met) {
      const auto results = read_results_csv(met_results);
      std::vector<MetricsRow> rows;
      if (q_star) {
        std::map<std::pair<Method, std::size_t>, std::vector<double>> groups;
        for (const auto& r : results)
          if (r.method != Method::reference) groups[{r.method, r.lag}].push_back(r.q_hat);
        for (const auto& [key, values] : groups) {
          auto row = compute_metrics(values, *q_star);
          row.method = key.first;
          row.lag = key.second;
          rows.push_back(row);
        }
      } else {
        rows = metrics_from_results(results);
      }
      if (!met_out.empty()) write_metrics_csv(rows, met_out);
      print_metrics(rows);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
