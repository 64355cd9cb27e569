// Acceptance suite: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; the CLI path for the determinism criterion
// comes from --cli=PATH.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grandparis/experiment.hpp"
#include "grandparis/parallel.hpp"
#include "grandparis/smoother.hpp"
#include "support/oracles.hpp"

using namespace grandparis;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass;
  std::string detail;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

AdditiveFunctional cross_product(std::size_t terms) {
  return {terms, [](std::size_t, double x, double xn, RngStream&) { return x * xn; }};
}

// 1. Backward-index law against the exact backward kernel.
Verdict backward_law() {
  const auto t0 = Clock::now();
  const LinearGaussianModel lg{0.9, 1.0, 1.0};
  RngStream data_rng(101, 0);
  const auto data = simulate_linear_gaussian(lg, 0.0, 1.0, 4, data_rng);
  const auto ssm = make_linear_gaussian_state_space(lg, {0.0, 1.0}, 0.5);
  const auto& density = dynamic_cast<const GaussianTransition&>(*ssm.transition);
  const StreamKey key(102);
  const auto proposal = optimal_proposal(ssm);
  const auto mult = make_multiplier(MultiplierKind::unit, ssm);
  auto prev = init_cloud(ssm, data.observations[0], 10, key);
  for (int k = 1; k <= 2; ++k) prev = filter_step(prev, ssm, proposal, mult, data.observations[k], {30, 1}, key);
  const auto next = filter_step(prev, ssm, proposal, mult, data.observations[3], {30, 1}, key);
  const AliasTable table(prev.weights);
  const double sp = sigma_plus(BoundStrategy::A3_pairwise, density, prev.particles, next.particles);
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double target = next.particles[i];
    const auto lambda = exact_lambda(prev, target, [&](double x, double y) { return density.exact(x, y); });
    RngStream rng(key.child({i, tag(StreamTag::backward)}));
    std::vector<double> counts(prev.size(), 0.0);
    const int draws = 100000;
    for (int d = 0; d < draws; ++d) counts[backward_index(prev, table, target, density, sp, rng, 1000000).index] += 1;
    double tv = 0.0;
    for (std::size_t l = 0; l < prev.size(); ++l) tv += 0.5 * std::abs(counts[l] / draws - lambda[l]);
    worst = std::max(worst, tv);
  }
  const double secs = since(t0);
  return {worst < 0.01 && secs < 30.0,
          "max TV over 5 targets = " + fmt("%.4f", worst) + " (< 0.01), runtime " + fmt("%.1f", secs) + " s (< 30 s)"};
}

// 2. GPE-1 unbiasedness against the bridge-discretization oracle.
Verdict gpe_unbiased() {
  const auto t0 = Clock::now();
  const auto model = sine_model(0.0);
  const double dt = 0.5;
  const std::vector<std::pair<double, double>> pairs{{0.0, 0.3}, {0.0, 0.0}, {1.0, -0.5}, {-2.0, -1.2}, {2.5, 3.5}};
  double worst = 0.0;
  std::string zs;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [x, y] = pairs[p];
    const auto q = oracle::bridge_density(model, x, y, dt, 100000, 1000, 200 + p);
    RngStream rng(201, p);
    const int n = 1000000;
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = gpe1_value(model, x, y, dt, rng);
      s += v;
      ss += v * v;
    }
    const double m = s / n;
    const double se = std::sqrt((ss / n - m * m) / (n - 1));
    const double z = std::abs(m - q.value) / std::hypot(se, q.std_error);
    worst = std::max(worst, z);
    zs += (p ? ", " : "") + fmt("%.2f", z);
  }
  const double secs = since(t0);
  return {worst < 3.0 && secs < 300.0,
          "|z| per pair = [" + zs + "] (< 3), runtime " + fmt("%.1f", secs) + " s (< 300 s)"};
}

// 3. Smoother consistency on the linear-Gaussian model.
Verdict smoother_consistency() {
  const LinearGaussianModel lg{0.9, 1.0, 1.0};
  RngStream data_rng(301, 0);
  const auto data = simulate_linear_gaussian(lg, 0.0, 1.0, 50, data_rng);
  const double truth = oracle::smoothed_cross_moment(oracle::rts_smooth(lg, 0.0, 1.0, data.observations));
  const auto ssm = make_linear_gaussian_state_space(lg, {0.0, 1.0}, 0.5);
  auto run = [&](std::size_t particles) {
    SmootherOptions opts;
    opts.particles = particles;
    opts.backward_draws = 2;
    std::vector<double> est(20);
    for (std::size_t s = 0; s < est.size(); ++s)
      est[s] = smooth_additive(ssm, data.observations, cross_product(50), opts, StreamKey(310 + s)).estimate;
    return est;
  };
  const auto big = run(2000);
  const auto small = run(500);
  const double rel = std::abs(oracle::mean(big) - truth) / std::abs(truth);
  const double ratio = std::sqrt(oracle::sample_variance(small) / oracle::sample_variance(big));
  return {rel < 0.02 && ratio >= 1.6 && ratio <= 2.5,
          "relative error at N=2000 = " + fmt("%.5f", rel) + " (< 0.02), sd(N=500)/sd(N=2000) = " + fmt("%.3f", ratio) +
              " (in [1.6, 2.5]), RTS value " + fmt("%.4f", truth)};
}

// 4. Linear complexity under the fixed-source bound.
Verdict linear_complexity() {
  auto c = parse_config("model = sine\nseed = 401\n");
  const auto data = simulate_dataset(c, 0);
  const auto ssm = make_state_space(c);
  const auto f = em_functional(ssm, data.observations, c.log_density_draws);
  const std::vector<std::size_t> sizes{250, 500, 1000, 2000};
  std::vector<double> medians;
  for (auto n : sizes) {
    std::vector<double> times;
    for (int r = 0; r < 5; ++r) {
      SmootherOptions opts;
      opts.particles = n;
      opts.strategy = BoundStrategy::A2_fixed_source;
      opts.allow_fallback = false;
      // The data contain a well crossing where a few targets need ~1e6 trials.
      opts.max_trials = 100'000'000;
      const auto t0 = Clock::now();
      smooth_additive(ssm, data.observations, f, opts, StreamKey(410 + r));
      times.push_back(since(t0));
    }
    medians.push_back(median(times));
  }
  bool ok = true;
  std::string detail = "median wall times [";
  for (std::size_t i = 0; i < medians.size(); ++i) detail += (i ? ", " : "") + fmt("%.3f", medians[i]);
  detail += "] s, ratios [";
  for (std::size_t i = 1; i < medians.size(); ++i) {
    const double r = medians[i] / medians[i - 1];
    ok = ok && r >= 1.5 && r <= 2.5;
    detail += (i > 1 ? ", " : "") + fmt("%.2f", r);
  }
  return {ok, detail + "] (each in [1.5, 2.5])"};
}

// 5. Method ordering over replicated experiments.
Verdict ordering(const std::string& model_text, const std::string& label) {
  const auto t0 = Clock::now();
  auto c = parse_config(model_text +
                        "particles = 200\nfixed_lag_particles = 800\nreplicates = 50\ndatasets = 5\n"
                        "reference_particles = 1000\nreference_replicates = 10\nlags = 1, 2, 5, 10, 50\n");
  c.threads = default_thread_count();
  const auto out = run_experiment(c, false);
  std::map<std::size_t, std::vector<double>> arb, acv;  // lag 0 = GRand PaRIS
  for (const auto& ds : out.datasets)
    for (const auto& m : ds.metrics) {
      const std::size_t key = m.method == Method::grand_paris ? 0 : m.lag;
      arb[key].push_back(m.arb);
      acv[key].push_back(m.acv);
    }
  const double grp_arb = median(arb[0]), grp_acv = median(acv[0]);
  bool ok = grp_arb < median(arb[1]) && grp_arb < median(arb[2]);
  std::string detail = label + ": median arb/acv GRand PaRIS " + fmt("%.3g", grp_arb) + "/" + fmt("%.3g", grp_acv);
  for (const auto& [lag, values] : arb) {
    if (lag == 0) continue;
    const double a = median(values), v = median(acv[lag]);
    detail += ", FL" + std::to_string(lag) + " " + fmt("%.3g", a) + "/" + fmt("%.3g", v);
    if (a <= 2.0 * grp_arb && grp_acv > v) {
      ok = false;
      detail += "(acv below GRand PaRIS at comparable bias)";
    }
  }
  return {ok, detail + "; " + fmt("%.0f", since(t0)) + " s"};
}

// 6. Fixed-lag bias on a near-unit-root linear-Gaussian model.
Verdict fixed_lag_bias() {
  const LinearGaussianModel lg{0.999, 1.0, 1.0};
  const std::size_t n = 50;
  RngStream data_rng(601, 0);
  const auto data = simulate_linear_gaussian(lg, 0.0, 1.0, n, data_rng);
  const double truth = oracle::smoothed_cross_moment(oracle::rts_smooth(lg, 0.0, 1.0, data.observations));
  const auto ssm = make_linear_gaussian_state_space(lg, {0.0, 1.0});
  FixedLagOptions opts;
  opts.particles = 1000;
  opts.density_draws = 1;
  opts.lags = {1, n};
  const int runs = 40;
  std::vector<double> short_lag(runs), full_lag(runs);
  for (int r = 0; r < runs; ++r) {
    const auto res = fixed_lag_smooth(ssm, data.observations, cross_product(n), opts, StreamKey(610 + r));
    short_lag[r] = res.estimates[0];
    full_lag[r] = res.estimates[1];
  }
  const double z1 = std::abs(oracle::mean(short_lag) - truth) / std::sqrt(oracle::sample_variance(short_lag) / runs);
  const double zn = std::abs(oracle::mean(full_lag) - truth) / std::sqrt(oracle::sample_variance(full_lag) / runs);
  return {z1 > 3.0 && zn < 3.0,
          "lag 1: |bias|/se = " + fmt("%.2f", z1) + " (> 3); lag n: |bias|/se = " + fmt("%.2f", zn) + " (< 3)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 7. Byte-identical outputs across thread counts through the CLI.
Verdict determinism(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found: '" + cli + "'"};
  const auto dir = fs::temp_directory_path() / "grandparis_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "model = sine\nn = 20\nparticles = 50\nfixed_lag_particles = 100\nreplicates = 4\n"
           "reference_particles = 100\nreference_replicates = 2\ndatasets = 2\nseed = 701\n";
  }
  for (int threads : {1, 4}) {
    const std::string cmd = "\"" + cli + "\" experiment --config \"" + (dir / "run.cfg").string() + "\" --threads " +
                            std::to_string(threads) + " --no-timings --out-dir \"" +
                            (dir / ("t" + std::to_string(threads))).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "experiment command failed: " + cmd};
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "t1")) {
    if (entry.path().extension() != ".csv") continue;
    const auto other = dir / "t4" / fs::relative(entry.path(), dir / "t1");
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other))
      return {false, "differs: " + fs::relative(entry.path(), dir / "t1").string()};
    ++compared;
  }
  return {compared > 0, std::to_string(compared) + " CSV files byte-identical between 1 and 4 threads"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a.rfind("--cli=", 0) == 0) cli = a.substr(6);
    else selected.insert(std::atoi(a.c_str()));
  }
  auto wanted = [&](int id) { return selected.empty() || selected.count(id); };

  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "backward-index law matches exact kernel", backward_law},
      {2, "GPE-1 unbiased on SINE", gpe_unbiased},
      {3, "smoother consistency and sqrt-N scaling", smoother_consistency},
      {4, "linear complexity under A2", linear_complexity},
      {5, "method ordering, SINE", [] { return ordering("model = sine\n", "SINE"); }},
      {5, "method ordering, log-growth",
       [] { return ordering("model = log_growth\nbound_strategy = A2\n", "log-growth"); }},
      {6, "fixed-lag bias is detectable", fixed_lag_bias},
      {7, "byte-identical outputs across thread counts", [&] { return determinism(cli); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted(c.id)) continue;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s [%d] %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
