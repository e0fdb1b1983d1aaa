#include "cpinfer/harness.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cpinfer/error.hpp"
#include "cpinfer/normal.hpp"
#include "cpinfer/parallel.hpp"

namespace cpinfer {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  const char delim = line.find(',') != std::string::npos ? ',' : (line.find('\t') != std::string::npos ? '\t' : ' ');
  if (delim == ' ') {
    while (ss >> field) out.push_back(field);
    return out;
  }
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  std::string t = s;
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

int first_detected(const ChangeSet& cs) { return cs.order_found.empty() ? cs.indices.front() : cs.order_found.front(); }

}  // namespace

// ---------------------------------------------------------------- ingestion

Series parse_series_csv(std::istream& in, const std::string& column) {
  std::vector<double> values;
  std::optional<std::size_t> col;
  if (column.empty()) {
    col = 0;
  } else if (all_digits(column)) {
    col = static_cast<std::size_t>(std::stoul(column));
  }
  std::string line;
  int line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (first_row) {
      first_row = false;
      if (!col) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
          if (unquote(fields[i]) == column) col = i;
        }
        if (!col) throw DataError("column '" + column + "' not found in header");
        continue;
      }
      if (*col < fields.size() && !parse_number(fields[*col])) continue;  // header row
    }
    if (*col >= fields.size()) {
      throw DataError("line " + std::to_string(line_no) + " has no column " + std::to_string(*col));
    }
    const auto v = parse_number(fields[*col]);
    if (!v) throw DataError("line " + std::to_string(line_no) + ": '" + fields[*col] + "' is not a number");
    values.push_back(*v);
  }
  if (values.empty()) throw DataError("no observations found");
  return Series(std::move(values));
}

Series read_series_csv(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_series_csv(in, column);
}

// ---------------------------------------------------------------- configuration

double SigmaSpec::resolve(const Series& series) const {
  if (mode == SigmaMode::known) {
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError("sigma must be finite and > 0");
    return value;
  }
  const double s = estimate_sigma_mad(series);
  if (!(s > 0.0)) throw DataError("MAD estimate of sigma is zero");
  return s;
}

DetectorConfig prepare_detector(const DetectorConfig& detector, int length) {
  DetectorConfig out = detector;
  if (out.algorithm == Algorithm::wbs && out.intervals.empty()) {
    if (out.interval_count < 1) out.interval_count = 100;
    out.intervals = draw_wbs_intervals(length, out.interval_count, out.interval_seed);
  }
  out.validate();
  return out;
}

void TestConfig::validate() const {
  if (samples < 1) throw ConfigError("N must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (sigma.mode == SigmaMode::known && (!(sigma.value > 0.0) || !std::isfinite(sigma.value))) {
    throw ConfigError("sigma must be finite and > 0");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

// ---------------------------------------------------------------- detect / test

DetectReport run_detect(const Series& series, const DetectorConfig& detector, const SigmaSpec& sigma) {
  DetectReport r;
  r.length = static_cast<int>(series.size());
  r.detector = prepare_detector(detector, r.length);
  // Penalised and fixed-count detectors never look at sigma.
  const bool needs_sigma = r.detector.algorithm != Algorithm::l0 && r.detector.threshold.has_value();
  if (needs_sigma || sigma.mode == SigmaMode::known) {
    r.sigma = sigma.resolve(series);
  } else {
    r.sigma = estimate_sigma_mad(series);
  }
  r.changes = detect(series, r.detector, needs_sigma ? r.sigma : 1.0);
  return r;
}

int TestReport::significant() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(), [&](const ChangepointRecord& r) {
    return r.tested && r.p_adjusted < config.alpha;
  }));
}

TestReport run_test(const Series& series, const TestConfig& config) {
  config.validate();
  TestReport report;
  report.config = config;
  report.length = static_cast<int>(series.size());
  report.config.detector = prepare_detector(config.detector, report.length);
  report.sigma = config.sigma.resolve(series);
  report.changes = detect(series, report.config.detector, report.sigma);

  InferenceOptions opt;
  opt.samples = config.samples;
  opt.sigma = report.sigma;
  opt.master_seed = config.master_seed;
  opt.include_observed = config.include_observed;
  opt.condition = config.condition;
  opt.threads = config.threads;

  const ChangeSet& cs = report.changes;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    ChangepointRecord rec;
    rec.tau_hat = cs.indices[k];
    rec.sign = cs.signs.empty() ? 0 : cs.signs[k];
    const auto it = std::find(cs.order_found.begin(), cs.order_found.end(), rec.tau_hat);
    rec.order = it == cs.order_found.end() ? static_cast<int>(k) + 1 : static_cast<int>(it - cs.order_found.begin()) + 1;
    try {
      const PValueReport p = estimate_p_value(series, cs, rec.tau_hat, config.window, report.config.detector, opt);
      rec.tested = true;
      rec.h1 = p.window.h1;
      rec.h2 = p.window.h2;
      rec.phi_obs = p.phi_obs;
      rec.p_hat = p.p_hat;
      rec.p_hat_ratio = p.p_hat_ratio;
      rec.interval_count = static_cast<int>(p.samples.front().s.size());
      for (const SampleResult& s : p.samples) rec.pieces += s.pieces;
      rec.zero_weight = p.zero_weight;
    } catch (const ConfigError& e) {
      rec.warning = e.what();
    }
    report.records.push_back(std::move(rec));
  }

  std::vector<double> p;
  std::vector<std::size_t> slot;
  for (std::size_t k = 0; k < report.records.size(); ++k) {
    if (!report.records[k].tested) continue;
    p.push_back(report.records[k].p_hat);
    slot.push_back(k);
  }
  if (!p.empty()) {
    const std::vector<double> adj = adjust(p, config.correction);
    for (std::size_t i = 0; i < slot.size(); ++i) report.records[slot[i]].p_adjusted = adj[i];
  }
  return report;
}

json to_json(const DetectorConfig& d) {
  json j;
  j["algorithm"] = to_string(d.algorithm);
  if (d.fixed_count) j["fixed_count"] = *d.fixed_count;
  if (d.threshold) j[d.algorithm == Algorithm::l0 ? "penalty" : "threshold"] = *d.threshold;
  if (d.algorithm == Algorithm::wbs) {
    j["interval_count"] = d.intervals.size();
    j["interval_seed"] = d.interval_seed;
  }
  return j;
}

namespace {

json changes_json(const ChangeSet& cs) {
  return {{"indices", cs.indices}, {"order_found", cs.order_found}, {"signs", cs.signs}};
}

json sigma_json(const SigmaSpec& s, double resolved) {
  return {{"mode", s.mode == SigmaMode::known ? "known" : "mad"}, {"value", resolved}};
}

}  // namespace

json to_json(const DetectReport& r) {
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "detect"},
          {"length", r.length},
          {"sigma", r.sigma},
          {"detector", to_json(r.detector)},
          {"changepoints", changes_json(r.changes)}};
}

json to_json(const TestReport& r) {
  json records = json::array();
  for (const ChangepointRecord& c : r.records) {
    json j = {{"tau_hat", c.tau_hat}, {"sign", c.sign}, {"order", c.order}, {"tested", c.tested}};
    if (c.tested) {
      j.update({{"h1", c.h1},
                {"h2", c.h2},
                {"phi_obs", c.phi_obs},
                {"p_hat", c.p_hat},
                {"p_hat_ratio", c.p_hat_ratio},
                {"p_adjusted", c.p_adjusted},
                {"significant", c.p_adjusted < r.config.alpha},
                {"interval_count", c.interval_count},
                {"certified_pieces", c.pieces},
                {"zero_weight_samples", c.zero_weight}});
    } else {
      j["warning"] = c.warning;
    }
    records.push_back(std::move(j));
  }
  const TestConfig& c = r.config;
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "test"},
          {"length", r.length},
          {"config",
           {{"detector", to_json(c.detector)},
            {"window", {{"policy", to_string(c.window.policy)}, {"h", c.window.h}}},
            {"condition", to_string(c.condition)},
            {"samples", c.samples},
            {"sigma", sigma_json(c.sigma, r.sigma)},
            {"alpha", c.alpha},
            {"correction", to_string(c.correction)},
            {"master_seed", c.master_seed},
            {"include_observed", c.include_observed}}},
          {"changepoints", changes_json(r.changes)},
          {"records", records},
          {"significant", r.significant()}};
}

void write_test_csv(std::ostream& out, const TestReport& report) {
  out << "index,p,p_adjusted\n";
  out.precision(17);
  for (const ChangepointRecord& c : report.records) {
    if (!c.tested) continue;
    out << c.tau_hat << ',' << c.p_hat << ',' << c.p_adjusted << '\n';
  }
}

// ---------------------------------------------------------------- evaluation helpers

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    // Dual theta-function series converges fast for small x.
    constexpr double pi = std::numbers::pi;
    const double f = -pi * pi / (8.0 * x * x);
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) cdf += std::exp(f * (2.0 * k - 1.0) * (2.0 * k - 1.0));
    cdf *= std::sqrt(2.0 * pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KsResult ks_uniform(std::vector<double> values) {
  if (values.empty()) throw ConfigError("KS test needs at least one value");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - x, x - static_cast<double>(i) / n});
  }
  const double rn = std::sqrt(n);
  return {d, kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d)};
}

MatchCounts match_changepoints(const std::vector<int>& flagged, const std::vector<int>& truth, int radius) {
  struct Pair {
    int dist;
    std::size_t f;
    std::size_t t;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < flagged.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const int d = std::abs(flagged[i] - truth[j]);
      if (d < radius) pairs.push_back({d, i, j});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.dist < b.dist; });
  std::vector<bool> used_f(flagged.size());
  std::vector<bool> used_t(truth.size());
  MatchCounts m;
  for (const Pair& p : pairs) {
    if (used_f[p.f] || used_t[p.t]) continue;
    used_f[p.f] = used_t[p.t] = true;
    ++m.true_positives;
  }
  m.false_positives = static_cast<int>(flagged.size()) - m.true_positives;
  return m;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b, bool* degenerate) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("correlation needs two equal-length vectors");
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double sample_truncated(const PhiLaw& law, const PhiIntervalUnion& set, std::mt19937_64& rng) {
  if (set.empty()) throw ConfigError("cannot sample from an empty set");
  const auto& ivs = set.intervals();
  std::vector<double> log_mass(ivs.size());
  double top = -kInf;
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    log_mass[i] = normal::log_mass(ivs[i].lo / law.sd, ivs[i].hi / law.sd);
    top = std::max(top, log_mass[i]);
  }
  if (top == -kInf) throw DataError("truncation set has zero probability");
  std::vector<double> weight(ivs.size());
  for (std::size_t i = 0; i < ivs.size(); ++i) weight[i] = std::exp(log_mass[i] - top);
  std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const PhiInterval iv = ivs[pick(rng)];
  const double u = unif(rng);

  double a = iv.lo / law.sd;
  double b = iv.hi / law.sd;
  bool mirrored = false;
  if (b <= 0.0) {
    std::tie(a, b) = std::pair(-b, -a);
    mirrored = true;
  }
  double z = 0.0;
  if (a >= 0.0) {
    // Upper tail: interpolate survival probabilities, which keep precision.
    const double qa = 0.5 * std::erfc(a / std::numbers::sqrt2);
    const double qb = b == kInf ? 0.0 : 0.5 * std::erfc(b / std::numbers::sqrt2);
    const double q = qa - u * (qa - qb);
    z = q <= 0.0 ? b : std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
  } else {
    const double pa = a == -kInf ? 0.0 : 0.5 * std::erfc(-a / std::numbers::sqrt2);
    const double pb = b == kInf ? 1.0 : 0.5 * std::erfc(-b / std::numbers::sqrt2);
    z = normal::quantile(std::clamp(pa + u * (pb - pa), 1e-300, 1.0 - 1e-16));
  }
  z = std::clamp(z, a, b);
  if (mirrored) z = -z;
  return z * law.sd;
}

// ---------------------------------------------------------------- simulation studies

void StudyConfig::validate() const {
  scenario.model.validate();
  scenario.noise.validate();
  if (n_grid.empty()) throw ConfigError("N grid is empty");
  for (int n : n_grid) {
    if (n < 1) throw ConfigError("every N must be >= 1");
  }
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (sigma && mad) throw ConfigError("mad mode takes no sigma");
  if (sigma && (!(*sigma > 0.0) || !std::isfinite(*sigma))) throw ConfigError("sigma must be finite and > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (match_radius < 1) throw ConfigError("match radius must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

int StudyConfig::max_n() const { return *std::max_element(n_grid.begin(), n_grid.end()); }

namespace {

// Per-replicate outcome: for each detected changepoint (position order) the
// p-value estimate for every N in the grid.
struct Replicate {
  ChangeSet changes;
  std::vector<std::vector<double>> p;  // [changepoint][grid index]
  std::vector<bool> tested;
  double identity_gap = 0.0;
  bool discarded = false;
};

Replicate run_replicate(const StudyConfig& config, int r) {
  const std::uint64_t data_seed = mix_seed(config.master_seed, 2 * static_cast<std::uint64_t>(r));
  const std::uint64_t infer_seed = mix_seed(config.master_seed, 2 * static_cast<std::uint64_t>(r) + 1);
  const Series x = simulate_series(config.scenario.model, config.scenario.noise, data_seed);

  DetectorConfig det = config.detector;
  if (det.algorithm == Algorithm::wbs) {
    det.intervals.clear();
    det.interval_seed = mix_seed(data_seed, 0x57);
    det = prepare_detector(det, static_cast<int>(x.size()));
  }
  double sigma = config.sigma.value_or(config.scenario.noise.std_dev());
  if (config.mad) sigma = estimate_sigma_mad(x);

  Replicate out;
  if (!(sigma > 0.0)) {
    out.discarded = true;
    return out;
  }
  out.changes = detect(x, det, sigma);
  if (out.changes.empty()) {
    out.discarded = true;
    return out;
  }
  InferenceOptions opt;
  opt.samples = config.max_n();
  opt.sigma = sigma;
  opt.master_seed = infer_seed;
  opt.include_observed = config.include_observed;
  opt.condition = config.condition;
  for (int tau : out.changes.indices) {
    std::vector<double> row(config.n_grid.size(), 1.0);
    try {
      const PValueReport rep = estimate_p_value(x, out.changes, tau, config.window, det, opt);
      for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
        const int n = config.n_grid[g];
        if (n == 1 && !config.include_observed) {
          // A single sample is the observed one in either mode.
          InferenceOptions one = opt;
          one.samples = 1;
          one.include_observed = true;
          const PValueReport base = estimate_p_value(x, out.changes, tau, config.window, det, one);
          row[g] = base.p_hat;
          out.identity_gap = std::max(out.identity_gap, std::abs(base.p_hat - base.p_hat_ratio));
          continue;
        }
        row[g] = rep.p_hat_prefix(n);
        out.identity_gap = std::max(out.identity_gap, std::abs(row[g] - rep.p_hat_ratio_prefix(n)));
      }
      out.tested.push_back(true);
    } catch (const ConfigError&) {
      out.tested.push_back(false);
    }
    out.p.push_back(std::move(row));
  }
  return out;
}

std::vector<Replicate> run_replicates(const StudyConfig& config) {
  config.validate();
  const auto target = static_cast<std::size_t>(config.replicates);
  std::vector<Replicate> reps;
  std::size_t retained = 0;
  // Batches keep the outcome independent of the thread count: replicate r
  // always uses the same seeds and the first `target` retained ones win.
  while (reps.size() < target || (config.count_retained && retained < target)) {
    const std::size_t begin = reps.size();
    std::size_t batch = target;
    if (begin > 0) {
      const double rate = std::max(static_cast<double>(retained), 1.0) / static_cast<double>(begin);
      batch = 64 + static_cast<std::size_t>(1.2 * static_cast<double>(target - retained) / rate);
    }
    if (begin + batch > 1000 * target + 1000) throw DataError("too few replicates with a detection");
    reps.resize(begin + batch);
    parallel_for(batch, config.threads,
                 [&](std::size_t i) { reps[begin + i] = run_replicate(config, static_cast<int>(begin + i)); });
    for (std::size_t r = begin; r < reps.size(); ++r) {
      if (config.count_retained && retained == target) {
        reps.resize(r);
        break;
      }
      retained += !reps[r].discarded;
    }
  }
  return reps;
}

}  // namespace

NullStudyResult run_null_study(const StudyConfig& config) {
  NullStudyResult out;
  out.config = config;
  const std::vector<Replicate> reps = run_replicates(config);
  out.rows.resize(config.n_grid.size());
  for (std::size_t g = 0; g < config.n_grid.size(); ++g) out.rows[g].n = config.n_grid[g];
  for (const Replicate& rep : reps) {
    out.discarded += rep.discarded;
    out.max_identity_gap = std::max(out.max_identity_gap, rep.identity_gap);
    for (std::size_t k = 0; k < rep.p.size(); ++k) {
      if (!rep.tested[k]) continue;
      for (std::size_t g = 0; g < config.n_grid.size(); ++g) out.rows[g].p_values.push_back(rep.p[k][g]);
    }
  }
  for (NullStudyRow& row : out.rows) {
    std::sort(row.p_values.begin(), row.p_values.end());
    if (row.p_values.empty()) continue;
    row.ks = ks_uniform(row.p_values);
    const auto above = std::count_if(row.p_values.begin(), row.p_values.end(), [](double p) { return p > 0.99; });
    row.frac_above_99 = static_cast<double>(above) / static_cast<double>(row.p_values.size());
  }
  out.retained = static_cast<int>(reps.size()) - out.discarded;
  return out;
}

PowerStudyResult run_power_study(const StudyConfig& config) {
  PowerStudyResult out;
  out.config = config;
  const std::vector<Replicate> reps = run_replicates(config);
  const std::vector<int>& truth = config.scenario.model.changepoints;
  for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
    PowerStudyRow row;
    row.n = config.n_grid[g];
    int rejected = 0;
    double tp = 0.0;
    double fp = 0.0;
    double fdr = 0.0;
    int any_fp = 0;
    for (const Replicate& rep : reps) {
      if (rep.discarded) continue;
      const ChangeSet& cs = rep.changes;
      const auto first = std::lower_bound(cs.indices.begin(), cs.indices.end(), first_detected(cs)) - cs.indices.begin();
      if (rep.tested[static_cast<std::size_t>(first)]) {
        ++row.tested;
        rejected += rep.p[static_cast<std::size_t>(first)][g] < config.alpha;
      }
      std::vector<double> p;
      std::vector<int> where;
      for (std::size_t k = 0; k < rep.p.size(); ++k) {
        if (!rep.tested[k]) continue;
        p.push_back(rep.p[k][g]);
        where.push_back(cs.indices[k]);
      }
      if (p.empty()) continue;
      const std::vector<double> adj = adjust(p, config.correction);
      std::vector<int> flagged;
      for (std::size_t k = 0; k < adj.size(); ++k) {
        if (adj[k] < config.alpha) flagged.push_back(where[k]);
      }
      const MatchCounts m = match_changepoints(flagged, truth, config.match_radius);
      tp += m.true_positives;
      fp += m.false_positives;
      any_fp += m.false_positives > 0;
      if (!flagged.empty()) fdr += static_cast<double>(m.false_positives) / static_cast<double>(flagged.size());
    }
    const auto kept = std::count_if(reps.begin(), reps.end(), [](const Replicate& r) { return !r.discarded; });
    const double total = std::max<double>(1.0, static_cast<double>(kept));
    row.rejection_rate = row.tested ? static_cast<double>(rejected) / row.tested : 0.0;
    row.mean_true_positives = tp / total;
    row.mean_false_positives = fp / total;
    row.fwer = any_fp / total;
    row.fdr = fdr / total;
    out.rows.push_back(row);
  }
  for (const Replicate& rep : reps) {
    out.discarded += rep.discarded;
    out.max_identity_gap = std::max(out.max_identity_gap, rep.identity_gap);
  }
  out.retained = static_cast<int>(reps.size()) - out.discarded;
  return out;
}

std::vector<std::vector<double>> pairwise_correlations(const std::vector<std::vector<double>>& p, bool* degenerate) {
  const std::size_t k = p.size();
  std::vector<std::vector<double>> out(k, std::vector<double>(k, 1.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) out[a][b] = out[b][a] = pearson(p[a], p[b], degenerate);
  }
  return out;
}

CorrelationResult run_correlation_study(const CorrelationConfig& config) {
  if (config.resamples < 2) throw ConfigError("correlation study needs at least 2 resamples");
  if (config.samples < 1) throw ConfigError("N must be >= 1");
  if (config.h < 1) throw ConfigError("h must be >= 1");
  config.scenario.model.validate();
  config.scenario.noise.validate();

  CorrelationResult out;
  out.config = config;
  const Series x = simulate_series(config.scenario.model, config.scenario.noise, mix_seed(config.master_seed, 0));
  const int length = static_cast<int>(x.size());
  const DetectorConfig det = prepare_detector(config.detector, length);
  const double sigma = config.sigma.value_or(config.scenario.noise.std_dev());
  out.changes = detect(x, det, sigma);
  const ChangeSet& cs = out.changes;
  if (cs.size() < 2) throw DataError("correlation study needs at least 2 detected changepoints");
  for (std::size_t k = 0; k + 1 < cs.size(); ++k) {
    if (cs.indices[k + 1] - cs.indices[k] < 2 * config.h) {
      throw DataError("windows around changepoints " + std::to_string(cs.indices[k]) + " and " +
                      std::to_string(cs.indices[k + 1]) + " overlap; reduce h");
    }
  }
  const WindowSpec window{WindowPolicy::fixed_h, config.h};
  for (std::size_t a = 0; a < cs.size(); ++a) {
    for (std::size_t b = a + 1; b < cs.size(); ++b) out.pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
  }

  for (std::size_t a = 0; a < cs.size(); ++a) {
    const int tau = cs.indices[a];
    const Window w = resolve_window(window, cs, tau, length);
    const Contrast contrast = build_contrast(w, length);
    const NuisanceBasis basis = build_nuisance_basis(w, x);
    const PhiPsiCoords obs = decompose(x, basis, contrast);
    const PhiLaw law = PhiLaw::for_contrast(contrast, sigma);
    SelectionOptions sel;
    sel.phi_sd = law.sd;
    const PhiIntervalUnion s = selection_set(obs.psi, basis, contrast, det, sigma, SelectionCondition::exact(tau, cs),
                                             default_phi_domain(law.sd, obs.phi), sel);

    std::vector<std::vector<double>> p(cs.size(), std::vector<double>(static_cast<std::size_t>(config.resamples)));
    parallel_for(static_cast<std::size_t>(config.resamples), config.threads, [&](std::size_t r) {
      std::mt19937_64 rng = make_stream(mix_seed(config.master_seed, 1 + a), r);
      PhiPsiCoords c = obs;
      c.phi = sample_truncated(law, s, rng);
      const Series xr = reconstruct(c, basis, contrast);
      const ChangeSet csr = detect(xr, det, sigma);
      if (!(csr == cs)) throw InternalError("resampled phi left the exact-match selection set");
      InferenceOptions opt;
      opt.samples = config.samples;
      opt.sigma = sigma;
      opt.master_seed = mix_seed(config.master_seed, 1000 + r);
      for (std::size_t k = 0; k < cs.size(); ++k) {
        p[k][r] = estimate_p_value(xr, csr, cs.indices[k], window, det, opt).p_hat;
      }
    });
    const auto matrix = pairwise_correlations(p, &out.degenerate);
    std::vector<double> row;
    for (const auto& [i, j] : out.pairs) {
      row.push_back(matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      out.max_abs_rho = std::max(out.max_abs_rho, std::abs(row.back()));
    }
    out.rho.push_back(std::move(row));
  }
  return out;
}

json to_json(const StudyConfig& c) {
  return {{"length", c.scenario.model.length},
          {"true_changepoints", c.scenario.model.changepoints},
          {"segment_means", c.scenario.model.segment_means},
          {"noise",
           {{"family", c.scenario.noise.family == NoiseFamily::gaussian    ? "gaussian"
                       : c.scenario.noise.family == NoiseFamily::student_t ? "student_t"
                                                                           : "laplace"},
            {"sd", c.scenario.noise.std_dev()}}},
          {"detector", to_json(c.detector)},
          {"window", {{"policy", to_string(c.window.policy)}, {"h", c.window.h}}},
          {"condition", to_string(c.condition)},
          {"n_grid", c.n_grid},
          {"replicates", c.replicates},
          {"count_retained", c.count_retained},
          {"sigma_mode", c.mad ? "mad" : "known"},
          {"alpha", c.alpha},
          {"correction", to_string(c.correction)},
          {"master_seed", c.master_seed},
          {"include_observed", c.include_observed},
          {"match_radius", c.match_radius}};
}

json to_json(const NullStudyResult& r) {
  json rows = json::array();
  for (const NullStudyRow& row : r.rows) {
    rows.push_back({{"n", row.n},
                    {"count", row.p_values.size()},
                    {"ks_statistic", row.ks.statistic},
                    {"ks_p_value", row.ks.p_value},
                    {"frac_above_0_99", row.frac_above_99}});
  }
  return {{"schema_version", kReportSchemaVersion}, {"kind", "null-study"},  {"config", to_json(r.config)},
          {"retained", r.retained},                  {"discarded", r.discarded},                {"rows", rows},           {"max_identity_gap", r.max_identity_gap}};
}

json to_json(const PowerStudyResult& r) {
  json rows = json::array();
  for (const PowerStudyRow& row : r.rows) {
    rows.push_back({{"n", row.n},
                    {"rejection_rate", row.rejection_rate},
                    {"tested", row.tested},
                    {"mean_true_positives", row.mean_true_positives},
                    {"mean_false_positives", row.mean_false_positives},
                    {"fwer", row.fwer},
                    {"fdr", row.fdr}});
  }
  return {{"schema_version", kReportSchemaVersion}, {"kind", "power-study"}, {"config", to_json(r.config)},
          {"retained", r.retained},                  {"discarded", r.discarded},                {"rows", rows},           {"max_identity_gap", r.max_identity_gap}};
}

json to_json(const CorrelationResult& r) {
  json pairs = json::array();
  for (const auto& [a, b] : r.pairs) pairs.push_back({r.changes.indices[a], r.changes.indices[b]});
  return {{"schema_version", kReportSchemaVersion},
          {"kind", "corr-study"},
          {"length", r.config.scenario.model.length},
          {"h", r.config.h},
          {"samples", r.config.samples},
          {"resamples", r.config.resamples},
          {"master_seed", r.config.master_seed},
          {"changepoints", changes_json(r.changes)},
          {"pairs", pairs},
          {"rho", r.rho},
          {"max_abs_rho", r.max_abs_rho},
          {"degenerate", r.degenerate}};
}

void write_null_csv(std::ostream& out, const NullStudyResult& r) {
  out << "n,rank,p,uniform_quantile\n";
  out.precision(17);
  for (const NullStudyRow& row : r.rows) {
    const double m = static_cast<double>(row.p_values.size());
    for (std::size_t i = 0; i < row.p_values.size(); ++i) {
      out << row.n << ',' << i + 1 << ',' << row.p_values[i] << ',' << (static_cast<double>(i) + 0.5) / m << '\n';
    }
  }
}

void write_power_csv(std::ostream& out, const PowerStudyResult& r) {
  out << "n,rejection_rate,tested,mean_true_positives,mean_false_positives,fwer,fdr\n";
  out.precision(17);
  for (const PowerStudyRow& row : r.rows) {
    out << row.n << ',' << row.rejection_rate << ',' << row.tested << ',' << row.mean_true_positives << ','
        << row.mean_false_positives << ',' << row.fwer << ',' << row.fdr << '\n';
  }
}

void write_correlation_csv(std::ostream& out, const CorrelationResult& r) {
  out << "resampled_at,tau_a,tau_b,rho\n";
  out.precision(17);
  for (std::size_t a = 0; a < r.rho.size(); ++a) {
    for (std::size_t k = 0; k < r.pairs.size(); ++k) {
      out << r.changes.indices[a] << ',' << r.changes.indices[r.pairs[k].first] << ','
          << r.changes.indices[r.pairs[k].second] << ',' << r.rho[a][k] << '\n';
    }
  }
}

}  // namespace cpinfer
