#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cpinfer/error.hpp"
#include "cpinfer/harness.hpp"

namespace py = pybind11;
using namespace cpinfer;

namespace {

DetectorConfig make_detector(const std::string& name, std::optional<int> count, std::optional<double> threshold,
                             int intervals, std::uint64_t interval_seed) {
  DetectorConfig d;
  d.algorithm = parse_algorithm(name);
  d.fixed_count = count;
  d.threshold = threshold;
  if (d.algorithm != Algorithm::l0 && !count && !threshold) d.fixed_count = 1;
  d.interval_count = intervals;
  d.interval_seed = interval_seed;
  return d;
}

DetectorConfig resolve(DetectorConfig d, const Series& x) {
  if (d.algorithm == Algorithm::l0 && d.fixed_count) {
    const PenaltySearch s = l0_penalty_for_count(x, *d.fixed_count);
    if (!s.exact) throw DataError("no l0 penalty yields the requested number of changepoints");
    d.fixed_count.reset();
    d.threshold = s.penalty;
  }
  return prepare_detector(d, static_cast<int>(x.size()));
}

Scenario make_scenario(int length, const std::vector<int>& changepoints, std::vector<double> means,
                       const std::string& noise, double sd, double dof, double scale) {
  if (means.empty()) means.assign(changepoints.size() + 1, 0.0);
  Scenario s{MeanModel{length, changepoints, means}, NoiseSpec::gaussian(sd)};
  if (noise == "t") {
    s.noise = NoiseSpec::student_t(dof);
  } else if (noise == "laplace") {
    s.noise = NoiseSpec::laplace(scale);
  } else if (noise != "gaussian") {
    throw ConfigError("noise must be gaussian, t or laplace");
  }
  return s;
}

}  // namespace

PYBIND11_MODULE(_cpinfer, m) {
  m.doc() = "Changepoint detection with post-selection p-values (native core)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<InternalError>(m, "InternalError", PyExc_RuntimeError);

  m.def(
      "simulate",
      [](int length, const std::vector<int>& changepoints, const std::vector<double>& means, const std::string& noise,
         double sd, double dof, double scale, std::uint64_t seed) {
        const Scenario s = make_scenario(length, changepoints, means, noise, sd, dof, scale);
        return simulate_series(s.model, s.noise, seed).vector();
      },
      py::arg("length"), py::arg("changepoints") = std::vector<int>{}, py::arg("means") = std::vector<double>{},
      py::arg("noise") = "gaussian", py::arg("sd") = 1.0, py::arg("dof") = 5.0, py::arg("scale") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "estimate_sigma_mad", [](const std::vector<double>& values) { return estimate_sigma_mad(Series(values)); },
      py::arg("values"));

  m.def(
      "_detect",
      [](const std::vector<double>& values, const std::string& detector, std::optional<int> count,
         std::optional<double> threshold, std::optional<double> sigma, bool mad, int intervals,
         std::uint64_t interval_seed) {
        const Series x(values);
        const SigmaSpec s = mad ? SigmaSpec::mad() : SigmaSpec::known(sigma.value_or(1.0));
        return to_json(run_detect(x, resolve(make_detector(detector, count, threshold, intervals, interval_seed), x), s))
            .dump();
      },
      py::arg("values"), py::arg("detector") = "bs", py::arg("count") = py::none(), py::arg("threshold") = py::none(),
      py::arg("sigma") = py::none(), py::arg("mad") = false, py::arg("intervals") = 100, py::arg("interval_seed") = 0);

  m.def(
      "_test",
      [](const std::vector<double>& values, const std::string& detector, std::optional<int> count,
         std::optional<double> threshold, int intervals, std::uint64_t interval_seed, const std::string& window, int h,
         const std::string& condition, int samples, std::optional<double> sigma, bool mad, double alpha,
         const std::string& correction, std::uint64_t seed, bool include_observed, int threads) {
        const Series x(values);
        TestConfig c;
        c.detector = resolve(make_detector(detector, count, threshold, intervals, interval_seed), x);
        c.window = {parse_window_policy(window), h};
        c.condition = parse_condition(condition);
        c.samples = samples;
        if (mad && sigma) throw ConfigError("mad mode takes no sigma");
        c.sigma = mad ? SigmaSpec::mad() : SigmaSpec::known(sigma.value_or(1.0));
        c.alpha = alpha;
        c.correction = parse_correction(correction);
        c.master_seed = seed;
        c.include_observed = include_observed;
        c.threads = threads;
        py::gil_scoped_release release;
        return to_json(run_test(x, c)).dump();
      },
      py::arg("values"), py::arg("detector") = "bs", py::arg("count") = py::none(), py::arg("threshold") = py::none(),
      py::arg("intervals") = 100, py::arg("interval_seed") = 0, py::arg("window") = "fixed_h", py::arg("h") = 10,
      py::arg("condition") = "contains_tau", py::arg("samples") = 10, py::arg("sigma") = py::none(),
      py::arg("mad") = false, py::arg("alpha") = 0.05, py::arg("correction") = "holm", py::arg("seed") = 0,
      py::arg("include_observed") = true, py::arg("threads") = 1);

  m.def(
      "p_value",
      [](const std::vector<double>& values, int tau, int h, const std::string& detector, std::optional<int> count,
         std::optional<double> threshold, int intervals, std::uint64_t interval_seed, const std::string& window,
         const std::string& condition, int samples, double sigma, std::uint64_t seed, bool include_observed,
         int threads) {
        const Series x(values);
        const DetectorConfig d = resolve(make_detector(detector, count, threshold, intervals, interval_seed), x);
        InferenceOptions opt;
        opt.samples = samples;
        opt.sigma = sigma;
        opt.master_seed = seed;
        opt.include_observed = include_observed;
        opt.condition = parse_condition(condition);
        opt.threads = threads;
        PValueReport r;
        {
          py::gil_scoped_release release;
          r = estimate_p_value(x, tau, {parse_window_policy(window), h}, d, opt);
        }
        py::list sets;
        for (const SampleResult& s : r.samples) {
          py::list ivs;
          for (const PhiInterval& iv : s.s.intervals()) ivs.append(py::make_tuple(iv.lo, iv.hi));
          sets.append(ivs);
        }
        py::list prefix;
        for (int n = 1; n <= samples; ++n) prefix.append(r.p_hat_prefix(n));
        py::dict out;
        out["p_hat"] = r.p_hat;
        out["p_hat_ratio"] = r.p_hat_ratio;
        out["phi_obs"] = r.phi_obs;
        out["phi_sd"] = r.phi_sd;
        out["h1"] = r.window.h1;
        out["h2"] = r.window.h2;
        out["condition"] = to_string(r.condition);
        out["zero_weight"] = r.zero_weight;
        out["selection_sets"] = sets;
        out["p_hat_prefix"] = prefix;
        return out;
      },
      py::arg("values"), py::arg("tau"), py::arg("h") = 10, py::arg("detector") = "bs", py::arg("count") = py::none(),
      py::arg("threshold") = py::none(), py::arg("intervals") = 100, py::arg("interval_seed") = 0,
      py::arg("window") = "fixed_h", py::arg("condition") = "contains_tau", py::arg("samples") = 10,
      py::arg("sigma") = 1.0, py::arg("seed") = 0, py::arg("include_observed") = true, py::arg("threads") = 1);

  m.def(
      "adjust",
      [](const std::vector<double>& p, const std::string& correction) { return adjust(p, parse_correction(correction)); },
      py::arg("p"), py::arg("correction") = "holm");

  m.def(
      "_study",
      [](const std::string& kind, int length, const std::vector<int>& changepoints, const std::vector<double>& means,
         const std::string& noise, double sd, double dof, double scale, const std::string& detector,
         std::optional<int> count, std::optional<double> threshold, int h, const std::vector<int>& n_grid,
         int replicates, bool count_retained, std::optional<double> sigma, bool mad, double alpha,
         const std::string& correction, std::uint64_t seed, bool include_observed, int threads) {
        StudyConfig c;
        c.scenario = make_scenario(length, changepoints, means, noise, sd, dof, scale);
        c.detector = make_detector(detector, count, threshold, 100, 0);
        c.window = {WindowPolicy::fixed_h, h};
        c.n_grid = n_grid;
        c.replicates = replicates;
        c.count_retained = count_retained;
        c.sigma = sigma;
        c.mad = mad;
        c.alpha = alpha;
        c.correction = parse_correction(correction);
        c.master_seed = seed;
        c.include_observed = include_observed;
        c.match_radius = h;
        c.threads = threads;
        py::gil_scoped_release release;
        if (kind == "null") return to_json(run_null_study(c)).dump();
        if (kind == "power") return to_json(run_power_study(c)).dump();
        throw ConfigError("study kind must be null or power");
      },
      py::arg("kind"), py::arg("length"), py::arg("changepoints") = std::vector<int>{},
      py::arg("means") = std::vector<double>{}, py::arg("noise") = "gaussian", py::arg("sd") = 1.0,
      py::arg("dof") = 5.0, py::arg("scale") = 1.0, py::arg("detector") = "bs", py::arg("count") = py::none(),
      py::arg("threshold") = py::none(), py::arg("h") = 10, py::arg("n_grid") = std::vector<int>{1, 5, 10},
      py::arg("replicates") = 1000, py::arg("count_retained") = false, py::arg("sigma") = py::none(),
      py::arg("mad") = false, py::arg("alpha") = 0.05, py::arg("correction") = "holm", py::arg("seed") = 0,
      py::arg("include_observed") = true, py::arg("threads") = 1);
}
