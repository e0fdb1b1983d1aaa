// Command-line front end: detect, test and the simulation studies.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cpinfer/error.hpp"
#include "cpinfer/harness.hpp"
#include "cpinfer/parallel.hpp"

using namespace cpinfer;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct DetectorArgs {
  std::string algorithm = "bs";
  std::optional<int> count;
  std::optional<double> threshold;
  int intervals = 100;
  std::uint64_t interval_seed = 0;

  void add(CLI::App* app) {
    app->add_option("--detector", algorithm, "bs, wbs or l0")->check(CLI::IsMember({"bs", "wbs", "l0"}));
    app->add_option("--count", count, "fixed number of changepoints");
    app->add_option("--threshold,--penalty", threshold, "bs/wbs: |CUSUM|/sigma threshold; l0: penalty");
    app->add_option("--intervals", intervals, "number of WBS intervals")->check(CLI::PositiveNumber);
    app->add_option("--interval-seed", interval_seed, "seed for WBS intervals");
  }

  // Series-dependent resolution (l0 with a count) happens in resolve_for().
  DetectorConfig base() const {
    DetectorConfig d;
    d.algorithm = parse_algorithm(algorithm);
    d.fixed_count = count;
    d.threshold = threshold;
    if (d.algorithm == Algorithm::bs && !count && !threshold) d.fixed_count = 1;
    d.interval_count = intervals;
    d.interval_seed = interval_seed;
    return d;
  }

  DetectorConfig resolve_for(const Series& x) const {
    DetectorConfig d = base();
    if (d.algorithm == Algorithm::l0 && d.fixed_count) {
      if (d.threshold) throw ConfigError("give either --count or --penalty for l0, not both");
      const PenaltySearch s = l0_penalty_for_count(x, *d.fixed_count);
      if (!s.exact) {
        throw DataError("no l0 penalty yields exactly " + std::to_string(*d.fixed_count) + " changepoints (nearest " +
                        std::to_string(s.nearest_below) + " / " + std::to_string(s.nearest_above) + ")");
      }
      d.fixed_count.reset();
      d.threshold = s.penalty;
    }
    return prepare_detector(d, static_cast<int>(x.size()));
  }
};

struct InferenceArgs {
  std::string window = "fixed_h";
  int h = 10;
  std::string condition = "contains_tau";
  int samples = 10;
  std::optional<double> sigma;
  bool mad = false;
  double alpha = 0.05;
  std::string correction = "holm";
  std::uint64_t seed = 0;
  bool exclude_observed = false;

  void add(CLI::App* app) {
    app->add_option("--window", window, "fixed_h, truncate_at_neighbors, between_neighbors or midpoint");
    app->add_option("--half-width", h, "window half-width")->check(CLI::PositiveNumber);
    app->add_option("--condition", condition, "contains_tau or exact_match");
    app->add_option("-N,--samples", samples, "psi samples per p-value (N)")->check(CLI::PositiveNumber);
    auto* s = app->add_option("--sigma", sigma, "known noise sd");
    app->add_flag("--mad", mad, "estimate sigma by MAD of first differences")->excludes(s);
    app->add_option("--alpha", alpha, "significance level");
    app->add_option("--correction", correction, "none, holm or bh");
    app->add_option("--seed", seed, "master seed");
    app->add_flag("--exclude-observed", exclude_observed, "draw every psi afresh (negative control, not valid)");
  }

  WindowSpec window_spec() const { return {parse_window_policy(window), h}; }
};

struct OutputArgs {
  std::string json_path;
  std::string csv_path;

  void add(CLI::App* app, bool csv) {
    app->add_option("--json", json_path, "write the JSON report here ('-' for stdout, the default)");
    if (csv) app->add_option("--csv", csv_path, "write the flat CSV table here");
  }

  void emit(const nlohmann::json& j, const std::function<void(std::ostream&)>& csv) const {
    if (json_path.empty() || json_path == "-") {
      std::cout << j.dump(2) << '\n';
    } else {
      std::ofstream out(json_path);
      if (!out) throw DataError("cannot write '" + json_path + "'");
      out << j.dump(2) << '\n';
    }
    if (!csv_path.empty()) {
      std::ofstream out(csv_path);
      if (!out) throw DataError("cannot write '" + csv_path + "'");
      csv(out);
    }
  }
};

struct ScenarioArgs {
  int length = 500;
  std::vector<int> changepoints;
  std::vector<double> means;
  int alternating = -1;
  double amplitude = 1.0;
  std::string noise = "gaussian";
  double noise_sd = 1.0;
  double dof = 5.0;
  double scale = 1.0;

  void add(CLI::App* app) {
    app->add_option("--length", length, "series length T")->check(CLI::Range(2, 100000000));
    app->add_option("--changepoints", changepoints, "true changepoints (last index of the left segment)")
        ->delimiter(',');
    app->add_option("--means", means, "segment means, one more than changepoints")->delimiter(',');
    app->add_option("--alternating", alternating, "K equally spaced changes with means +-amplitude");
    app->add_option("--amplitude", amplitude, "mean amplitude for --alternating");
    app->add_option("--noise", noise, "gaussian, t or laplace")->check(CLI::IsMember({"gaussian", "t", "laplace"}));
    app->add_option("--noise-sd", noise_sd, "gaussian noise sd");
    app->add_option("--dof", dof, "t noise degrees of freedom");
    app->add_option("--scale", scale, "laplace scale");
  }

  Scenario build() const {
    Scenario s;
    if (alternating >= 0) {
      if (!changepoints.empty() || !means.empty()) {
        throw ConfigError("--alternating excludes --changepoints/--means");
      }
      s.model = alternating == 0 ? MeanModel{length, {}, {0.0}} : make_alternating_model(length, alternating, amplitude);
    } else {
      s.model = {length, changepoints, means.empty() ? std::vector<double>(changepoints.size() + 1, 0.0) : means};
    }
    if (noise == "gaussian") {
      s.noise = NoiseSpec::gaussian(noise_sd);
    } else if (noise == "t") {
      s.noise = NoiseSpec::student_t(dof);
    } else {
      s.noise = NoiseSpec::laplace(scale);
    }
    s.model.validate();
    s.noise.validate();
    return s;
  }
};

TestConfig test_config(const InferenceArgs& a, const DetectorConfig& d, int threads) {
  TestConfig c;
  c.detector = d;
  c.window = a.window_spec();
  c.condition = parse_condition(a.condition);
  c.samples = a.samples;
  c.sigma = a.mad ? SigmaSpec::mad() : SigmaSpec::known(a.sigma.value_or(1.0));
  c.alpha = a.alpha;
  c.correction = parse_correction(a.correction);
  c.master_seed = a.seed;
  c.include_observed = !a.exclude_observed;
  c.threads = threads;
  return c;
}

StudyConfig study_config(const InferenceArgs& a, const DetectorArgs& d, const ScenarioArgs& s, int threads) {
  StudyConfig c;
  c.scenario = s.build();
  c.detector = d.base();
  if (c.detector.algorithm == Algorithm::l0 && c.detector.fixed_count) {
    throw ConfigError("studies need an explicit l0 --penalty");
  }
  c.window = a.window_spec();
  c.condition = parse_condition(a.condition);
  c.sigma = a.sigma;
  c.mad = a.mad;
  c.alpha = a.alpha;
  c.correction = parse_correction(a.correction);
  c.master_seed = a.seed;
  c.include_observed = !a.exclude_observed;
  c.threads = threads;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Changepoint detection with post-selection p-values"};
  app.set_config("--config", "", "key = value configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  int threads = default_thread_count();
  app.add_option("--threads", threads, "worker threads (default: CPINFER_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "run a changepoint detector on a series");
  std::string input;
  std::string column;
  DetectorArgs detect_det;
  std::optional<double> detect_sigma;
  bool detect_mad = false;
  OutputArgs detect_out;
  detect_cmd->add_option("input", input, "CSV / text file, one observation per line")->required();
  detect_cmd->add_option("--column", column, "column index (0-based) or header name");
  detect_det.add(detect_cmd);
  auto* ds = detect_cmd->add_option("--sigma", detect_sigma, "known noise sd (threshold detectors)");
  detect_cmd->add_flag("--mad", detect_mad, "estimate sigma by MAD")->excludes(ds);
  detect_out.add(detect_cmd, false);

  // test
  auto* test_cmd = app.add_subcommand("test", "detect, then compute a p-value for every changepoint");
  DetectorArgs test_det;
  InferenceArgs test_inf;
  OutputArgs test_out;
  test_cmd->add_option("input", input, "CSV / text file, one observation per line")->required();
  test_cmd->add_option("--column", column, "column index (0-based) or header name");
  test_det.add(test_cmd);
  test_inf.add(test_cmd);
  test_out.add(test_cmd, true);

  // studies
  auto* null_cmd = app.add_subcommand("null-study", "p-value distribution under no change (QQ data)");
  auto* power_cmd = app.add_subcommand("power-study", "rejection rates and true/false positives");
  DetectorArgs study_det;
  InferenceArgs study_inf;
  ScenarioArgs scenario;
  OutputArgs study_out;
  std::vector<int> n_grid{1, 5, 10};
  int replicates = 1000;
  bool count_retained = false;
  int match_radius = 10;
  for (CLI::App* cmd : {null_cmd, power_cmd}) {
    study_det.add(cmd);
    study_inf.add(cmd);
    scenario.add(cmd);
    study_out.add(cmd, true);
    cmd->add_option("--n-grid", n_grid, "values of N, comma separated")->delimiter(',');
    cmd->add_option("--replicates", replicates, "number of replicates")->check(CLI::PositiveNumber);
    cmd->add_flag("--count-retained", count_retained, "simulate until this many replicates have a detection");
  }
  power_cmd->add_option("--match-radius", match_radius, "true-positive radius (default h)");

  auto* corr_cmd = app.add_subcommand("corr-study", "correlation of p-values across changepoints");
  DetectorArgs corr_det;
  ScenarioArgs corr_scenario;
  OutputArgs corr_out;
  int corr_h = 10;
  int corr_samples = 10;
  int resamples = 1000;
  std::optional<double> corr_sigma;
  std::uint64_t corr_seed = 0;
  corr_det.add(corr_cmd);
  corr_scenario.add(corr_cmd);
  corr_out.add(corr_cmd, true);
  corr_cmd->add_option("--half-width", corr_h, "window half-width")->check(CLI::PositiveNumber);
  corr_cmd->add_option("-N,--samples", corr_samples, "psi samples per p-value")->check(CLI::PositiveNumber);
  corr_cmd->add_option("--resamples", resamples, "phi resamples per changepoint")->check(CLI::PositiveNumber);
  corr_cmd->add_option("--sigma", corr_sigma, "known noise sd (default: the noise sd)");
  corr_cmd->add_option("--seed", corr_seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*detect_cmd) {
      const Series x = read_series_csv(input, column);
      const SigmaSpec sigma = detect_mad ? SigmaSpec::mad() : SigmaSpec::known(detect_sigma.value_or(1.0));
      const DetectReport r = run_detect(x, detect_det.resolve_for(x), sigma);
      detect_out.emit(to_json(r), {});
    } else if (*test_cmd) {
      const Series x = read_series_csv(input, column);
      const TestReport r = run_test(x, test_config(test_inf, test_det.resolve_for(x), threads));
      for (const ChangepointRecord& rec : r.records) {
        if (!rec.tested) std::cerr << "warning: changepoint " << rec.tau_hat << " skipped: " << rec.warning << '\n';
      }
      test_out.emit(to_json(r), [&](std::ostream& o) { write_test_csv(o, r); });
    } else if (*null_cmd || *power_cmd) {
      StudyConfig c = study_config(study_inf, study_det, scenario, threads);
      c.n_grid = n_grid;
      c.replicates = replicates;
      c.count_retained = count_retained;
      c.match_radius = power_cmd->count("--match-radius") ? match_radius : c.window.h;
      if (*null_cmd) {
        const NullStudyResult r = run_null_study(c);
        study_out.emit(to_json(r), [&](std::ostream& o) { write_null_csv(o, r); });
      } else {
        const PowerStudyResult r = run_power_study(c);
        study_out.emit(to_json(r), [&](std::ostream& o) { write_power_csv(o, r); });
      }
    } else if (*corr_cmd) {
      CorrelationConfig c;
      c.scenario = corr_scenario.build();
      c.detector = corr_det.base();
      if (!corr_cmd->count("--count") && !corr_cmd->count("--threshold")) c.detector.fixed_count = 3;
      c.h = corr_h;
      c.samples = corr_samples;
      c.resamples = resamples;
      c.sigma = corr_sigma;
      c.master_seed = corr_seed;
      c.threads = threads;
      const CorrelationResult r = run_correlation_study(c);
      corr_out.emit(to_json(r), [&](std::ostream& o) { write_correlation_csv(o, r); });
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
