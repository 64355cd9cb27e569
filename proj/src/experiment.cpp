#include "grandparis/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "grandparis/errors.hpp"
#include "grandparis/parallel.hpp"

namespace grandparis {

namespace {

constexpr const char* kVersion = "grandparis 1.0.0";

struct ModelDefaults {
  std::map<std::string, double> parameters;
  double dt;
  std::size_t n;
  double obs_variance;
};

ModelDefaults model_defaults(const std::string& model) {
  if (model == "sine") return {{{"theta", 0.0}}, 0.5, 100, 1.0};
  if (model == "log_growth")
    return {{{"kappa", 0.1}, {"sigma", 0.1}, {"gamma", 1000.0}}, 2.0, 50, 4.0};
  if (model == "linear_gaussian") return {{{"a", 0.9}, {"state_variance", 1.0}}, 1.0, 100, 1.0};
  throw ConfigurationError("unknown model '" + model + "' (expected sine, log_growth or linear_gaussian)");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigurationError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  if (pos != v.size()) throw ConfigurationError("config key '" + key + "': trailing text in '" + v + "'");
  return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigurationError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigurationError("config key '" + key + "': integer out of range '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigurationError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_unsigned(key, item));
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string canonical_text(const ExperimentConfig& c, bool runtime_keys) {
  std::ostringstream os;
  os << "model = " << c.model << "\n";
  for (const auto& [k, v] : c.resolved_parameters()) os << k << " = " << format_real(v) << "\n";
  os << "x0 = " << format_real(c.initial_state()) << "\n"
     << "t0 = " << format_real(c.t0) << "\n"
     << "dt = " << format_real(c.dt) << "\n"
     << "n = " << c.n << "\n"
     << "obs_variance = " << format_real(c.obs_variance) << "\n"
     << "substeps = " << c.substeps << "\n"
     << "init_variance = " << format_real(c.init_variance) << "\n"
     << "particles = " << c.particles << "\n"
     << "backward_draws = " << c.backward_draws << "\n"
     << "density_draws = " << c.density_draws << "\n"
     << "log_density_draws = " << c.log_density_draws << "\n"
     << "lags = " << join(c.lags) << "\n"
     << "fixed_lag_particles = " << c.fixed_lag_particles << "\n"
     << "replicates = " << c.replicates << "\n"
     << "reference_particles = " << c.reference_particles << "\n"
     << "reference_replicates = " << c.reference_replicates << "\n"
     << "datasets = " << c.datasets << "\n"
     << "seed = " << c.seed << "\n"
     << "bound_strategy = " << to_string(c.bound_strategy) << "\n"
     << "multiplier = " << to_string(c.multiplier) << "\n"
     << "max_trials = " << c.max_trials << "\n"
     << "record_timings = " << (c.record_timings ? "true" : "false") << "\n";
  if (runtime_keys) os << "threads = " << c.threads << "\n" << "out_dir = " << c.out_dir << "\n";
  return os.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void close_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string dataset_dir_name(std::size_t d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "dataset_%03zu", d);
  return buf;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double ExperimentConfig::initial_state() const {
  if (x0) return *x0;
  if (model == "log_growth") return lamperti(parameter("sigma"))(parameter("gamma"));
  return 0.0;
}

std::map<std::string, double> ExperimentConfig::resolved_parameters() const {
  auto out = model_defaults(model).parameters;
  for (const auto& [k, v] : parameters) out[k] = v;
  return out;
}

double ExperimentConfig::parameter(const std::string& name) const {
  const auto all = resolved_parameters();
  const auto it = all.find(name);
  if (it == all.end()) throw ConfigurationError("model " + model + " has no parameter '" + name + "'");
  return it->second;
}

void ExperimentConfig::validate() const {
  const auto defaults = model_defaults(model);
  for (const auto& [k, v] : parameters)
    if (!defaults.parameters.count(k))
      throw ConfigurationError("parameter '" + k + "' does not apply to model " + model);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigurationError("dt must be > 0");
  if (model == "linear_gaussian" && dt != 1.0)
    throw ConfigurationError("linear_gaussian runs on unit time steps (dt = 1)");
  if (n < 1) throw ConfigurationError("n must be >= 1");
  if (!(obs_variance > 0.0)) throw ConfigurationError("obs_variance must be > 0");
  if (!(init_variance > 0.0)) throw ConfigurationError("init_variance must be > 0");
  if (substeps < 1) throw ConfigurationError("substeps must be >= 1");
  if (particles < 1 || backward_draws < 1 || density_draws < 1 || log_density_draws < 1 ||
      replicates < 1 || datasets < 1)
    throw ConfigurationError("particles, backward_draws, density_draws, log_density_draws, replicates "
                             "and datasets must be >= 1");
  if (reference_replicates < 1 || reference_particles < 1)
    throw ConfigurationError("reference_particles and reference_replicates must be >= 1");
  if (!lags.empty() && fixed_lag_particles < 1)
    throw ConfigurationError("fixed_lag_particles must be >= 1");
  for (auto lag : lags)
    if (lag < 1) throw ConfigurationError("lags must be >= 1");
  if (max_trials < 1) throw ConfigurationError("max_trials must be >= 1");
  if (threads < 1) throw ConfigurationError("threads must be >= 1");
  if (model == "log_growth")
    for (const char* k : {"kappa", "sigma", "gamma"})
      if (!(parameter(k) > 0.0)) throw ConfigurationError(std::string(k) + " must be > 0");
  if (model == "linear_gaussian" && !(parameter("state_variance") > 0.0))
    throw ConfigurationError("state_variance must be > 0");
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigurationError("config line " + std::to_string(lineno) + ": empty key");
    if (!entries.emplace(key, value).second)
      throw ConfigurationError("config key '" + key + "' given twice");
  }

  ExperimentConfig c;
  if (auto it = entries.find("model"); it != entries.end()) {
    c.model = it->second;
    entries.erase(it);
  }
  const auto defaults = model_defaults(c.model);
  c.parameters = defaults.parameters;
  c.dt = defaults.dt;
  c.n = defaults.n;
  c.obs_variance = defaults.obs_variance;

  for (const auto& [key, v] : entries) {
    if (defaults.parameters.count(key)) c.parameters[key] = parse_real(key, v);
    else if (key == "x0") c.x0 = parse_real(key, v);
    else if (key == "t0") c.t0 = parse_real(key, v);
    else if (key == "dt") c.dt = parse_real(key, v);
    else if (key == "n") c.n = parse_unsigned(key, v);
    else if (key == "obs_variance") c.obs_variance = parse_real(key, v);
    else if (key == "substeps") c.substeps = static_cast<int>(parse_unsigned(key, v));
    else if (key == "init_variance") c.init_variance = parse_real(key, v);
    else if (key == "particles") c.particles = parse_unsigned(key, v);
    else if (key == "backward_draws") c.backward_draws = parse_unsigned(key, v);
    else if (key == "density_draws") c.density_draws = static_cast<int>(parse_unsigned(key, v));
    else if (key == "log_density_draws") c.log_density_draws = static_cast<int>(parse_unsigned(key, v));
    else if (key == "lags") c.lags = parse_list(key, v);
    else if (key == "fixed_lag_particles") c.fixed_lag_particles = parse_unsigned(key, v);
    else if (key == "replicates") c.replicates = parse_unsigned(key, v);
    else if (key == "reference_particles") c.reference_particles = parse_unsigned(key, v);
    else if (key == "reference_replicates") c.reference_replicates = parse_unsigned(key, v);
    else if (key == "datasets") c.datasets = parse_unsigned(key, v);
    else if (key == "seed") c.seed = parse_unsigned(key, v);
    else if (key == "bound_strategy") c.bound_strategy = parse_bound_strategy(v);
    else if (key == "multiplier") c.multiplier = parse_multiplier_kind(v);
    else if (key == "max_trials") c.max_trials = parse_unsigned(key, v);
    else if (key == "record_timings") c.record_timings = parse_bool(key, v);
    else if (key == "threads") c.threads = static_cast<int>(parse_unsigned(key, v));
    else if (key == "out_dir") c.out_dir = v;
    else throw ConfigurationError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
      throw IoError("cannot parse manifest " + path.string() + ": " + e.what());
    }
    if (!manifest.contains("config_text"))
      throw ConfigurationError("manifest " + path.string() + " has no config_text");
    return parse_config(manifest.at("config_text").get<std::string>());
  }
  return parse_config(buf.str());
}

std::string config_to_text(const ExperimentConfig& config) { return canonical_text(config, true); }

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(config, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DiffusionModel make_diffusion(const ExperimentConfig& config) {
  if (config.model == "sine") return sine_model(config.parameter("theta"));
  if (config.model == "log_growth")
    return log_growth_model(config.parameter("kappa"), config.parameter("sigma"), config.parameter("gamma"));
  throw ConfigurationError("model " + config.model + " is not a diffusion");
}

namespace {

LinearGaussianModel linear_gaussian_of(const ExperimentConfig& config) {
  return {config.parameter("a"), config.parameter("state_variance"), config.obs_variance};
}

}  // namespace

StateSpaceModel make_state_space(const ExperimentConfig& config) {
  const GaussianLaw initial{config.initial_state(), config.init_variance};
  if (config.model == "linear_gaussian")
    return make_linear_gaussian_state_space(linear_gaussian_of(config), initial);
  return make_sde_state_space(make_diffusion(config), config.obs_variance, config.dt, initial);
}

SimulatedData simulate_dataset(const ExperimentConfig& config, std::size_t dataset) {
  RngStream rng(StreamKey(config.seed).child({dataset, tag(StreamTag::data)}));
  if (config.model == "linear_gaussian") {
    auto data = simulate_linear_gaussian(linear_gaussian_of(config), config.initial_state(),
                                         config.init_variance, config.n, rng);
    for (auto& t : data.times) t += config.t0;
    return data;
  }
  std::vector<double> times(config.n + 1);
  for (std::size_t k = 0; k <= config.n; ++k) times[k] = config.t0 + static_cast<double>(k) * config.dt;
  return simulate_data(make_diffusion(config), ObservationModel(config.obs_variance),
                       config.initial_state(), times, config.substeps, rng);
}

AdditiveFunctional em_functional(const StateSpaceModel& ssm, std::span<const double> observations,
                                 int draws) {
  if (observations.size() < 2) throw PreconditionError("em_functional: need at least two observations");
  if (draws < 1) throw DomainError("em_functional: draws must be >= 1");
  std::vector<double> y(observations.begin(), observations.end());
  auto transition = ssm.transition;
  const ObservationModel obs = ssm.observation;
  const GaussianLaw chi = ssm.initial;
  AdditiveFunctional f;
  f.terms = y.size() - 1;
  f.term = [y = std::move(y), transition, obs, chi, draws](std::size_t k, double x, double x_next,
                                                           RngStream& rng) {
    double v = obs.log_density(x_next, y[k + 1]) + transition->log_density_estimate(x, x_next, draws, rng);
    if (k == 0) v += normal_log_density(x, chi.mean, chi.variance) + obs.log_density(x, y[0]);
    return v;
  };
  return f;
}

const char* to_string(Method m) {
  switch (m) {
    case Method::reference: return "reference";
    case Method::grand_paris: return "grand_paris";
    case Method::fixed_lag: return "fixed_lag";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "reference") return Method::reference;
  if (s == "grand_paris") return Method::grand_paris;
  if (s == "fixed_lag") return Method::fixed_lag;
  throw ConfigurationError("unknown method '" + s + "'");
}

MetricsRow compute_metrics(std::span<const double> estimates, double q_star) {
  if (estimates.size() < 2) throw MetricUndefinedError("compute_metrics: need at least two estimates");
  if (q_star == 0.0) throw MetricUndefinedError("compute_metrics: reference value is zero");
  const double r = static_cast<double>(estimates.size());
  const double mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / r;
  if (mean == 0.0) throw MetricUndefinedError("compute_metrics: mean estimate is zero");
  double ss = 0.0;
  for (double q : estimates) ss += (q - mean) * (q - mean);
  MetricsRow row;
  row.mean_q = mean;
  row.sd_q = std::sqrt(ss / (r - 1.0));
  row.q_star = q_star;
  row.arb = std::abs(mean - q_star) / std::abs(q_star);
  row.acv = row.sd_q / std::abs(mean);
  return row;
}

void sort_results(std::vector<ReplicateResult>& results) {
  std::sort(results.begin(), results.end(), [](const ReplicateResult& a, const ReplicateResult& b) {
    if (a.method != b.method) return a.method < b.method;
    if (a.lag != b.lag) return a.lag < b.lag;
    return a.replicate < b.replicate;
  });
}

std::vector<MetricsRow> metrics_from_results(std::span<const ReplicateResult> results) {
  std::vector<double> reference;
  std::map<std::pair<Method, std::size_t>, std::vector<double>> groups;
  for (const auto& r : results) {
    if (r.method == Method::reference) reference.push_back(r.q_hat);
    else groups[{r.method, r.lag}].push_back(r.q_hat);
  }
  if (reference.empty()) throw MetricUndefinedError("no reference rows to define Q_star");
  const double q_star =
      std::accumulate(reference.begin(), reference.end(), 0.0) / static_cast<double>(reference.size());
  std::vector<MetricsRow> rows;
  for (const auto& [key, values] : groups) {
    auto row = compute_metrics(values, q_star);
    row.method = key.first;
    row.lag = key.second;
    rows.push_back(row);
  }
  return rows;
}

namespace {

struct Job {
  Method method;
  std::size_t replicate;
};

void write_dataset_files(const DatasetOutput& out, const std::filesystem::path& dir, bool timings,
                         bool with_metrics) {
  write_dataset_csv(out.data, dir / "data.csv");
  emit_results(out.results, with_metrics ? std::span<const MetricsRow>(out.metrics)
                                         : std::span<const MetricsRow>(),
               {dir / "results.csv", dir / "metrics.csv"}, timings);
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config, bool write_outputs) {
  config.validate();
  const std::filesystem::path root(config.out_dir);
  if (write_outputs) write_manifest(config, root / "manifest.json");

  const auto ssm = make_state_space(config);
  const StreamKey base(config.seed);
  ExperimentOutput output;

  for (std::size_t d = 0; d < config.datasets; ++d) {
    DatasetOutput ds;
    ds.dataset = d;
    ds.data = simulate_dataset(config, d);
    const auto functional = em_functional(ssm, ds.data.observations, config.log_density_draws);

    std::vector<Job> jobs;
    for (std::size_t r = 0; r < config.reference_replicates; ++r) jobs.push_back({Method::reference, r});
    for (std::size_t r = 0; r < config.replicates; ++r) jobs.push_back({Method::grand_paris, r});
    if (!config.lags.empty())
      for (std::size_t r = 0; r < config.replicates; ++r) jobs.push_back({Method::fixed_lag, r});

    std::vector<std::vector<ReplicateResult>> slots(jobs.size());
    std::vector<char> done(jobs.size(), 0);
    auto run_job = [&](std::size_t j) {
      const Job job = jobs[j];
      if (job.method == Method::fixed_lag) {
        FixedLagOptions opts;
        opts.particles = config.fixed_lag_particles;
        opts.density_draws = config.density_draws;
        opts.lags = config.lags;
        opts.multiplier = config.multiplier;
        const auto res = fixed_lag_smooth(ssm, ds.data.observations, functional, opts,
                                          base.child({d, tag(StreamTag::fixed_lag), job.replicate}));
        for (std::size_t l = 0; l < res.lags.size(); ++l)
          slots[j].push_back({Method::fixed_lag, res.lags[l], job.replicate, res.estimates[l],
                              res.wall_time_s, std::nullopt});
      } else {
        SmootherOptions opts;
        const bool ref = job.method == Method::reference;
        opts.particles = ref ? config.reference_particles : config.particles;
        opts.backward_draws = config.backward_draws;
        opts.density_draws = config.density_draws;
        opts.strategy = config.bound_strategy;
        opts.multiplier = config.multiplier;
        opts.max_trials = config.max_trials;
        const auto tag_value = tag(ref ? StreamTag::reference : StreamTag::grand_paris);
        const auto res = smooth_additive(ssm, ds.data.observations, functional, opts,
                                         base.child({d, tag_value, job.replicate}));
        slots[j].push_back({job.method, 0, job.replicate, res.estimate, res.diagnostics.wall_time_s,
                            res.diagnostics.mean_acceptance_rate()});
      }
      done[j] = 1;
    };

    const auto dir = root / dataset_dir_name(d);
    auto gather = [&] {
      ds.results.clear();
      for (std::size_t j = 0; j < jobs.size(); ++j)
        if (done[j]) ds.results.insert(ds.results.end(), slots[j].begin(), slots[j].end());
      sort_results(ds.results);
    };
    try {
      parallel_for(jobs.size(), config.threads, run_job);
    } catch (...) {
      if (write_outputs) {
        gather();
        write_dataset_files(ds, dir, config.record_timings, false);
      }
      throw;
    }
    gather();
    try {
      ds.metrics = metrics_from_results(ds.results);
    } catch (...) {
      if (write_outputs) write_dataset_files(ds, dir, config.record_timings, false);
      throw;
    }
    if (write_outputs) write_dataset_files(ds, dir, config.record_timings, true);
    output.datasets.push_back(std::move(ds));
  }
  if (write_outputs) write_summary(output.datasets, root / "summary.csv");
  return output;
}

void emit_results(std::span<const ReplicateResult> results, std::span<const MetricsRow> metrics,
                  const OutputPaths& paths, bool record_timings) {
  auto out = open_output(paths.results_csv);
  out << "method,lag,replicate,Q_hat,wall_time_s,mean_acceptance_rate\n";
  for (const auto& r : results) {
    out << to_string(r.method) << ',';
    if (r.method == Method::fixed_lag) out << r.lag;
    out << ',' << r.replicate << ',' << format_real(r.q_hat) << ','
        << format_real(record_timings ? r.wall_time_s : 0.0) << ',';
    if (r.mean_acceptance_rate) out << format_real(*r.mean_acceptance_rate);
    out << '\n';
  }
  close_output(out, paths.results_csv);
  write_metrics_csv(metrics, paths.metrics_csv);
}

void write_metrics_csv(std::span<const MetricsRow> metrics, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "method,lag,arb,acv,mean_Q,sd_Q,Q_star\n";
  for (const auto& m : metrics) {
    out << to_string(m.method) << ',';
    if (m.method == Method::fixed_lag) out << m.lag;
    out << ',' << format_real(m.arb) << ',' << format_real(m.acv) << ',' << format_real(m.mean_q) << ','
        << format_real(m.sd_q) << ',' << format_real(m.q_star) << '\n';
  }
  close_output(out, path);
}

void write_summary(std::span<const DatasetOutput> datasets, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "dataset,method,lag,arb,acv,mean_Q,sd_Q,Q_star\n";
  for (const auto& ds : datasets)
    for (const auto& m : ds.metrics) {
      out << ds.dataset << ',' << to_string(m.method) << ',';
      if (m.method == Method::fixed_lag) out << m.lag;
      out << ',' << format_real(m.arb) << ',' << format_real(m.acv) << ',' << format_real(m.mean_q)
          << ',' << format_real(m.sd_q) << ',' << format_real(m.q_star) << '\n';
    }
  close_output(out, path);
}

void write_manifest(const ExperimentConfig& config, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["compiler"] = __VERSION__;
  j["seed"] = config.seed;
  j["config_hash"] = config_hash(config);
  j["config_text"] = canonical_text(config, false);
  nlohmann::ordered_json echo;
  std::stringstream ss(canonical_text(config, false));
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find('=');
    echo[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  j["config"] = echo;
  j["datasets"] = config.datasets;
  auto out = open_output(path);
  out << j.dump(2) << '\n';
  close_output(out, path);
}

void write_dataset_csv(const SimulatedData& data, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "t,x,y\n";
  for (std::size_t k = 0; k < data.times.size(); ++k)
    out << format_real(data.times[k]) << ',' << format_real(data.states[k]) << ','
        << format_real(data.observations[k]) << '\n';
  close_output(out, path);
}

SimulatedData read_dataset_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  const auto header = split_csv(line);
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto ct = col("t"), cx = col("x"), cy = col("y");
  if (!ct || !cy) throw IoError(path.string() + ": expected columns t and y");
  SimulatedData data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    auto cell = [&](std::size_t i) {
      if (i >= cells.size()) throw IoError(path.string() + ":" + std::to_string(lineno) + ": missing column");
      try {
        return parse_real("csv", cells[i]);
      } catch (const ConfigurationError& e) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    };
    data.times.push_back(cell(*ct));
    data.states.push_back(cx && *cx < cells.size() && !cells[*cx].empty() ? cell(*cx) : std::nan(""));
    data.observations.push_back(cell(*cy));
  }
  return data;
}

std::vector<ReplicateResult> read_results_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  if (trim(line) != "method,lag,replicate,Q_hat,wall_time_s,mean_acceptance_rate")
    throw IoError(path.string() + ": unexpected results header");
  std::vector<ReplicateResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto c = split_csv(line);
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (c.size() != 6) throw IoError(where + ": expected 6 columns");
    try {
      ReplicateResult r;
      r.method = parse_method(c[0]);
      r.lag = c[1].empty() ? 0 : parse_unsigned("lag", c[1]);
      r.replicate = parse_unsigned("replicate", c[2]);
      r.q_hat = parse_real("Q_hat", c[3]);
      r.wall_time_s = parse_real("wall_time_s", c[4]);
      if (!c[5].empty()) r.mean_acceptance_rate = parse_real("mean_acceptance_rate", c[5]);
      out.push_back(r);
    } catch (const ConfigurationError& e) {
      throw IoError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace grandparis
