#include "cpinfer/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cpinfer/error.hpp"
#include "cpinfer/normal.hpp"
#include "cpinfer/parallel.hpp"

namespace cpinfer {

namespace {

constexpr double kUnderflow = 1e-300;

double report_prob(double log_p) {
  const double p = std::exp(log_p);
  if (p < kUnderflow) return 0.0;
  return std::min(p, 1.0);
}

struct Aggregate {
  double weighted = 0.0;
  double ratio = 0.0;
};

// Both forms over the first n samples. Weights are rescaled by the largest
// one so a run of tiny weights cannot underflow the sums.
Aggregate aggregate(const std::vector<SampleResult>& samples, int n) {
  if (n < 1 || n > static_cast<int>(samples.size())) throw ConfigError("prefix length out of range");
  double top = -kInf;
  for (int j = 0; j < n; ++j) top = std::max(top, samples[j].log_w);
  // Only reachable without the observed sample; no sample carries evidence.
  if (top == -kInf) return {1.0, 1.0};

  double sw = 0.0;
  double swp = 0.0;
  double log_num = -kInf;
  double log_den = -kInf;
  for (int j = 0; j < n; ++j) {
    const SampleResult& s = samples[j];
    if (s.log_w == -kInf) continue;
    const double w = std::exp(s.log_w - top);
    sw += w;
    swp += w * *s.p;
    log_num = normal::log_add(log_num, s.log_numerator);
    log_den = normal::log_add(log_den, s.log_w);
  }
  Aggregate out;
  out.weighted = std::clamp(swp / sw, 0.0, 1.0);
  out.ratio = log_num == -kInf ? 0.0 : std::clamp(std::exp(log_num - log_den), 0.0, 1.0);
  return out;
}

}  // namespace

PhiLaw::PhiLaw(double sd_) : sd(sd_) {
  if (!(sd > 0.0) || !std::isfinite(sd)) throw ConfigError("phi law needs a finite sd > 0");
}

PhiLaw PhiLaw::for_contrast(const Contrast& contrast, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and > 0");
  return PhiLaw(sigma * std::sqrt(contrast.norm_sq));
}

double log_interval_union_prob(const PhiLaw& law, const PhiIntervalUnion& u) {
  double total = -kInf;
  for (const PhiInterval& iv : u.intervals()) {
    total = normal::log_add(total, normal::log_mass(iv.lo / law.sd, iv.hi / law.sd));
  }
  return std::min(total, 0.0);
}

double interval_union_prob(const PhiLaw& law, const PhiIntervalUnion& u) {
  return report_prob(log_interval_union_prob(law, u));
}

double log_exceedance_prob(const PhiLaw& law, const PhiIntervalUnion& u, double c) {
  if (!(c >= 0.0)) throw ConfigError("exceedance cut-off must be >= 0");
  return log_interval_union_prob(law, u.intersect(PhiIntervalUnion::two_sided_tails(c)));
}

double exceedance_prob(const PhiLaw& law, const PhiIntervalUnion& u, double c) {
  return report_prob(log_exceedance_prob(law, u, c));
}

SampleProb p_for_sample(const PhiLaw& law, const PhiIntervalUnion& s, double c) {
  SampleProb out;
  out.log_w = log_interval_union_prob(law, s);
  out.log_numerator = log_exceedance_prob(law, s, std::abs(c));
  out.w = report_prob(out.log_w);
  if (out.log_w > -kInf) {
    out.p = out.log_numerator == -kInf ? 0.0 : std::clamp(std::exp(out.log_numerator - out.log_w), 0.0, 1.0);
  }
  return out;
}

double PValueReport::p_hat_prefix(int prefix) const { return aggregate(samples, prefix).weighted; }

double PValueReport::p_hat_ratio_prefix(int prefix) const { return aggregate(samples, prefix).ratio; }

std::uint64_t psi_seed(std::uint64_t master_seed, int tau_hat) {
  return mix_seed(master_seed, static_cast<std::uint64_t>(tau_hat));
}

PValueReport estimate_p_value(const Series& series, const ChangeSet& detected, int tau_hat, const WindowSpec& window_spec,
                              const DetectorConfig& detector, const InferenceOptions& options) {
  if (options.samples < 1) throw ConfigError("N must be >= 1");
  if (!(options.sigma > 0.0) || !std::isfinite(options.sigma)) throw ConfigError("sigma must be finite and > 0");
  if (!detected.contains(tau_hat)) {
    throw ConfigError("tau_hat = " + std::to_string(tau_hat) + " is not among the detected changepoints");
  }
  const int length = static_cast<int>(series.size());

  PValueReport report;
  report.tau_hat = tau_hat;
  report.window = resolve_window(window_spec, detected, tau_hat, length);
  // A window sized from the neighbouring detections is itself a function of
  // the detected set, so only the exact-match event keeps it fixed.
  report.condition = window_spec.policy == WindowPolicy::fixed_h ? options.condition
                                                                  : SelectionCondition::Kind::exact_match;
  report.detector = detector;
  report.sigma = options.sigma;
  report.master_seed = options.master_seed;
  report.include_observed = options.include_observed;
  report.n = options.samples;

  const Contrast contrast = build_contrast(report.window, length);
  const NuisanceBasis basis = build_nuisance_basis(report.window, series);
  const PhiPsiCoords obs = decompose(series, basis, contrast);
  const PhiLaw law = PhiLaw::for_contrast(contrast, options.sigma);
  report.phi_obs = obs.phi;
  report.phi_sd = law.sd;

  const SelectionCondition condition = report.condition == SelectionCondition::Kind::exact_match
                                           ? SelectionCondition::exact(tau_hat, detected)
                                           : SelectionCondition::contains(tau_hat);
  const PhiInterval domain = default_phi_domain(law.sd, obs.phi);
  SelectionOptions sel = options.selection;
  sel.phi_sd = law.sd;
  const std::uint64_t seed = psi_seed(options.master_seed, tau_hat);
  const int dim = basis.dimension();

  report.samples.resize(static_cast<std::size_t>(options.samples));
  parallel_for(report.samples.size(), options.threads, [&](std::size_t i) {
    SampleResult& s = report.samples[i];
    s.index = static_cast<int>(i) + 1;
    std::vector<double> psi;
    if (options.include_observed && i == 0) {
      s.observed = true;
      psi = obs.psi;
    } else {
      s.stream_index = options.include_observed ? i + 1 : i + 2;
      std::mt19937_64 rng = make_stream(seed, s.stream_index);
      std::normal_distribution<double> draw(0.0, options.sigma);
      psi.resize(static_cast<std::size_t>(dim));
      for (double& v : psi) v = draw(rng);
    }
    SelectionStats stats;
    s.s = selection_set(psi, basis, contrast, detector, options.sigma, condition, domain, sel, &stats);
    s.pieces = stats.pieces;
    const SampleProb prob = p_for_sample(law, s.s, obs.phi);
    s.w = prob.w;
    s.p = prob.p;
    s.log_w = prob.log_w;
    s.log_numerator = prob.log_numerator;
  });

  if (options.include_observed && report.samples.front().log_w == -kInf) {
    throw InternalError("observed psi has an empty selection set");
  }
  for (const SampleResult& s : report.samples) report.zero_weight += s.log_w == -kInf;
  const Aggregate agg = aggregate(report.samples, options.samples);
  report.p_hat = agg.weighted;
  report.p_hat_ratio = agg.ratio;
  return report;
}

PValueReport estimate_p_value(const Series& series, int tau_hat, const WindowSpec& window,
                              const DetectorConfig& detector, const InferenceOptions& options) {
  return estimate_p_value(series, detect(series, detector, options.sigma), tau_hat, window, detector, options);
}

}  // namespace cpinfer
