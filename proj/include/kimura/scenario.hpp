#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kimura/coefficients.hpp"
#include "kimura/evolution.hpp"
#include "kimura/io.hpp"
#include "kimura/metric.hpp"
#include "kimura/montecarlo.hpp"
#include "kimura/qprocess.hpp"
#include "kimura/spectral.hpp"
#include "kimura/variational.hpp"

namespace kimura {

struct ScenarioConfig {
  std::string theta = "wright-fisher";
  std::string potential = "neutral";
  std::string initial = "dirac:0.5";
  std::string conditioned_initial;  // empty: condition the initial measure by eta

  std::size_t n = 400;
  double dt = 1e-3;
  double horizon = 1.0;
  double record_every = 0.01;
  std::size_t modes = 8;

  std::size_t particles = 100000;
  double mc_horizon = 2.0;
  double mc_dt = 1e-3;
  std::uint64_t seed = 1;
  std::size_t bins = 40;

  std::string out = "out";
  std::vector<std::string> checks = all_checks();

  std::filesystem::path base_dir = ".";

  static std::vector<std::string> all_checks() {
    return {"stationarity", "edi",  "evi",       "contraction", "longtime",
            "lsi",          "ckp",  "monotone",  "naive-entropy"};
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"theta", theta},
            {"potential", potential},
            {"initial", initial},
            {"conditioned_initial", conditioned_initial},
            {"solver", {{"n", n}, {"dt", dt}, {"T", horizon}, {"record_every", record_every},
                        {"modes", modes}}},
            {"montecarlo", {{"particles", particles}, {"T", mc_horizon}, {"dt", mc_dt},
                            {"seed", seed}, {"bins", bins}}},
            {"output", out},
            {"checks", checks}};
  }

  [[nodiscard]] std::string hash() const { return io::fnv1a_hex(to_json().dump()); }

  /// Relative table paths are taken relative to the config file.
  [[nodiscard]] std::string resolve_path(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (base_dir / path).lexically_normal().string();
  }

  [[nodiscard]] std::string resolve_preset(const std::string& name) const {
    if (name.rfind("table:", 0) == 0) return "table:" + resolve_path(name.substr(6));
    return name;
  }
};

namespace detail {

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

inline std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

class ConfigReader {
 public:
  ConfigReader(std::string text, std::string source) : text_(std::move(text)), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const auto line = line_of_key(text_, key);
    throw Error(source_ + ":" + (line ? std::to_string(line) + ":" : std::string()) + " '" + key +
                "': " + msg);
  }

  nlohmann::json parse() const {
    try {
      return nlohmann::json::parse(text_);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(source_ + ":" + std::to_string(line_of_offset(text_, e.byte ? e.byte - 1 : 0)) +
                  ": invalid JSON (" + e.what() + ")");
    }
  }

  void only_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::none_of(allowed.begin(), allowed.end(),
                       [&](const char* a) { return it.key() == a; }))
        fail(it.key(), "unknown key");
    }
  }

  void get(const nlohmann::json& obj, const char* key, std::string& v) const {
    if (!obj.contains(key)) return;
    if (!obj[key].is_string()) fail(key, "expected a string");
    v = obj[key].get<std::string>();
  }

  void get(const nlohmann::json& obj, const char* key, double& v, double lo, double hi) const {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number()) fail(key, "expected a number");
    v = obj[key].get<double>();
    if (!(v >= lo && v <= hi))
      fail(key, "must be in [" + io::fmt(lo) + ", " + io::fmt(hi) + "], got " + io::fmt(v));
  }

  template <class Int>
  void get_int(const nlohmann::json& obj, const char* key, Int& v, Int lo, Int hi) const {
    if (!obj.contains(key)) return;
    if (!obj[key].is_number_unsigned()) fail(key, "expected a non-negative integer");
    v = obj[key].get<Int>();
    if (v < lo || v > hi)
      fail(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }

 private:
  std::string text_;
  std::string source_;
};

}  // namespace detail

inline ScenarioConfig parse_scenario(const std::string& text, const std::string& source,
                                     const std::filesystem::path& base_dir = ".") {
  const detail::ConfigReader r(text, source);
  const auto j = r.parse();
  if (!j.is_object()) throw Error(source + ":1: config must be a JSON object");
  r.only_keys(j, {"theta", "potential", "initial", "conditioned_initial", "solver", "montecarlo",
                  "output", "checks"});
  ScenarioConfig c;
  c.base_dir = base_dir;
  r.get(j, "theta", c.theta);
  r.get(j, "potential", c.potential);
  r.get(j, "initial", c.initial);
  r.get(j, "conditioned_initial", c.conditioned_initial);
  r.get(j, "output", c.out);
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    if (!s.is_object()) r.fail("solver", "expected an object");
    r.only_keys(s, {"n", "dt", "T", "record_every", "modes"});
    r.get_int<std::size_t>(s, "n", c.n, 16, 100000);
    r.get(s, "dt", c.dt, 1e-7, 0.1);
    r.get(s, "T", c.horizon, 1e-6, 1000.0);
    r.get(s, "record_every", c.record_every, 1e-7, 1000.0);
    r.get_int<std::size_t>(s, "modes", c.modes, 1, 10000);
    if (c.modes > c.n / 4) r.fail("modes", "must not exceed n/4");
  }
  if (j.contains("montecarlo")) {
    const auto& m = j["montecarlo"];
    if (!m.is_object()) r.fail("montecarlo", "expected an object");
    r.only_keys(m, {"particles", "T", "dt", "seed", "bins"});
    r.get_int<std::size_t>(m, "particles", c.particles, 1, 100000000);
    r.get(m, "T", c.mc_horizon, 1e-6, 1000.0);
    r.get(m, "dt", c.mc_dt, 1e-7, 1e-3);
    r.get_int<std::uint64_t>(m, "seed", c.seed, 0, UINT64_MAX);
    r.get_int<std::size_t>(m, "bins", c.bins, 1, 100000);
  }
  if (j.contains("checks")) {
    if (!j["checks"].is_array()) r.fail("checks", "expected an array of names");
    c.checks.clear();
    const auto known = ScenarioConfig::all_checks();
    for (const auto& v : j["checks"]) {
      if (!v.is_string()) r.fail("checks", "expected an array of names");
      const auto name = v.get<std::string>();
      if (std::find(known.begin(), known.end(), name) == known.end())
        r.fail("checks", "unknown check '" + name + "'");
      c.checks.push_back(name);
    }
  }
  return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.string(), path.parent_path());
}

/// A scenario with lazily computed derived objects.
class Scenario {
 public:
  explicit Scenario(ScenarioConfig cfg)
      : cfg_(std::move(cfg)),
        c_(build_coefficients(cfg_.resolve_preset(cfg_.theta), cfg_.resolve_preset(cfg_.potential),
                              cfg_.n)) {}

  [[nodiscard]] const ScenarioConfig& config() const { return cfg_; }
  [[nodiscard]] const CoefficientSet& coefficients() const { return c_; }

  const EtaFunction& eta() {
    if (!eta_) eta_ = principal_eta(c_);
    return *eta_;
  }
  const SpectralDecomposition& spectrum() {
    if (!sd_) sd_ = eigendecompose(assemble_adjoint_operator(c_), std::max<std::size_t>(cfg_.modes, 2));
    return *sd_;
  }
  const StationaryPi& pi() {
    if (!pi_) pi_ = stationary_pi(c_, eta(), qsd(spectrum()));
    return *pi_;
  }
  const IsometryTable& isometry() {
    if (!iso_) iso_ = std::make_unique<IsometryTable>(c_);
    return *iso_;
  }
  double lambda() {
    if (!lambda_) lambda_ = convexity_modulus(c_, eta()).lambda;
    return *lambda_;
  }

  /// "dirac:x", "uniform", "alpha", "pi", "pi-restricted:a,b", "table:<csv x,density>".
  BoundaryMeasure measure(const std::string& spec) {
    const auto& g = c_.grid;
    if (spec.rfind("dirac:", 0) == 0) return dirac(g, parse_number(spec.substr(6), spec));
    if (spec == "uniform") return uniform_measure(g);
    if (spec == "alpha") return qsd(spectrum());
    if (spec == "pi") return pi().measure();
    if (spec.rfind("pi-restricted:", 0) == 0) {
      const auto rest = spec.substr(14);
      const auto comma = rest.find(',');
      if (comma == std::string::npos) throw Error("pi-restricted needs 'a,b': " + spec);
      return restricted_pi(pi(), parse_number(rest.substr(0, comma), spec),
                           parse_number(rest.substr(comma + 1), spec));
    }
    if (spec.rfind("table:", 0) == 0) {
      const auto pts = read_table_csv(cfg_.resolve_path(spec.substr(6)));
      if (pts.size() < 2) throw Error("initial table needs at least two rows: " + spec);
      std::vector<double> d(g.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = g.center(i);
        auto it = std::lower_bound(pts.begin(), pts.end(), x,
                                   [](const TablePoint& p, double v) { return p.x < v; });
        if (it == pts.begin()) it = std::next(it);
        if (it == pts.end()) it = std::prev(it);
        const auto& b = *it;
        const auto& a = *std::prev(it);
        d[i] = std::max(0.0, a.value + (b.value - a.value) * (x - a.x) / (b.x - a.x));
      }
      return from_density(g, std::move(d));
    }
    throw Error("unknown measure spec: " + spec);
  }

  /// Exact law for sampling: Diracs stay Diracs.
  QuantileTable law(const std::string& spec) {
    if (spec.rfind("dirac:", 0) == 0) {
      const double x = parse_number(spec.substr(6), spec);
      const double w = 1.0;
      return QuantileTable::from_atoms(std::span(&x, 1), std::span(&w, 1));
    }
    return QuantileTable::from_measure(measure(spec));
  }

  BoundaryMeasure conditioned_initial() {
    if (!cfg_.conditioned_initial.empty()) return measure(cfg_.conditioned_initial);
    return condition_measure(measure(cfg_.initial), eta());
  }

  [[nodiscard]] std::vector<double> record_times() const {
    return uniform_times(cfg_.horizon, cfg_.record_every);
  }

  void describe(std::ostream& os) {
    os << "config " << cfg_.hash() << "\n" << cfg_.to_json().dump(2) << "\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "lambda0=%.6f, lambda=%.6f, diameter=%.8f\n", eta().lambda0,
                  lambda(), isometry().diameter());
    os << buf;
  }

  nlohmann::json summary_header() const {
    return {{"config_hash", cfg_.hash()}, {"seed", cfg_.seed}, {"config", cfg_.to_json()}};
  }

  [[nodiscard]] std::filesystem::path out_path(const std::string& name) const {
    return std::filesystem::path(cfg_.out) / name;
  }

 private:
  static double parse_number(const std::string& s, const std::string& spec) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error("not a number in measure spec: " + spec);
    }
  }

  ScenarioConfig cfg_;
  CoefficientSet c_;
  std::optional<EtaFunction> eta_;
  std::optional<SpectralDecomposition> sd_;
  std::optional<StationaryPi> pi_;
  std::unique_ptr<IsometryTable> iso_;
  std::optional<double> lambda_;
};

/// The variational suite on one scenario. Every row gates except the
/// inflated-rate contraction probe.
inline VerificationReport run_verification(Scenario& s) {
  const auto& cfg = s.config();
  const auto& c = s.coefficients();
  const auto& eta = s.eta();
  const auto& pi = s.pi();
  const double lambda = s.lambda();
  const auto& iso = s.isometry();
  const bool want_all = cfg.checks.empty();
  auto want = [&](const char* name) {
    return want_all || std::find(cfg.checks.begin(), cfg.checks.end(), name) != cfg.checks.end();
  };
  // Fine recording: EDI integrates over it and EVI differences on it.
  const auto fine = uniform_times(cfg.horizon, cfg.dt);
  const auto traj = evolve_conditioned(c, eta, s.conditioned_initial(), fine, cfg.dt);

  VerificationReport rep;
  if (want("stationarity")) {
    rep.run([&] {
      const auto st = evolve_conditioned(c, eta, pi.measure(), fine, cfg.dt);
      double err = 0.0;
      for (std::size_t i = 0; i < c.grid.size(); ++i)
        err = std::max(err, std::abs(st.states.back().interior[i] / pi.values[i] - 1.0));
      return VerificationRow{"stationarity", "pi is stationary for the conditioned flow", err,
                             1e-3, 1e-3 - err, 0.0};
    });
  }
  if (want("edi")) {
    rep.run([&] {
      const double t0 = std::min(0.05, 0.5 * cfg.horizon);
      const auto r = edi_residual(c, traj, pi, t0, cfg.horizon);
      const double tol = 2e-2 * std::abs(r.h_t0) + 1e-10;
      return VerificationRow{"edi", "energy-dissipation balance on [t0, T]", r.residual, tol,
                             -std::abs(r.residual), tol};
    });
  }
  if (want("evi")) {
    for (double t : {0.1, 0.2, 0.3, 0.4, 0.5}) {
      if (t + 1e-3 > cfg.horizon) continue;
      rep.run([&] {
        const auto r = evi_residual(iso, traj, pi, pi.measure(), lambda, t);
        char name[32];
        std::snprintf(name, sizeof name, "evi@%.1f", t);
        return VerificationRow{name, "evolution variational inequality, reference pi",
                               r.residual, 0.0, -r.residual, 5e-2 * r.scale + 1e-10};
      });
    }
  }
  if (want("contraction")) {
    const auto a = evolve_conditioned(c, eta, restricted_pi(pi, 0.0, 0.5), s.record_times(), cfg.dt);
    const auto b = evolve_conditioned(c, eta, restricted_pi(pi, 0.5, 1.0), s.record_times(), cfg.dt);
    rep.run([&] {
      const auto r = contraction_check(iso, a, b, lambda);
      return VerificationRow{"contraction", "W contraction at rate lambda", r.max_ratio, 1.0,
                             1.0 - r.max_ratio, 0.02};
    });
    rep.run([&] {
      const auto r = contraction_check(iso, a, b, lambda + 0.5);
      VerificationRow row{"contraction-sharpness", "inflated rate lambda + 1/2", r.max_ratio, 1.0,
                          1.0 - r.max_ratio, 0.02};
      row.gating = false;
      return row;
    });
  }
  if (want("longtime")) {
    Trajectory coarse;
    coarse.times = s.record_times();
    for (double t : coarse.times) coarse.states.push_back(traj.states[traj.index_of(t)]);
    const auto sum = summarize(longtime_report(iso, coarse, pi, lambda));
    rep.run([&] {
      return VerificationRow{"decay-W", "W(q_t, pi) <= exp(-lambda t) W(q_0, pi)", sum.w_ratio,
                             1.0, 1.0 - sum.w_ratio, 0.02};
    });
    rep.run([&] {
      return VerificationRow{"decay-TV", "TV <= exp(-lambda t) sqrt(2 H(q_0))", sum.tv_ratio, 1.0,
                             1.0 - sum.tv_ratio, 0.02};
    });
    rep.run([&] {
      return VerificationRow{"decay-H", "H(q_t) <= exp(-2 lambda t) H(q_0)", sum.h_ratio, 1.0,
                             1.0 - sum.h_ratio, 0.02};
    });
  }
  if (want("lsi")) {
    rep.run([&] {
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& q : random_perturbations(pi, 50, 0.5, cfg.seed))
        worst = std::min(worst, lsi_check(c, q, pi, lambda).margin.as_double());
      return VerificationRow{"lsi", "log-Sobolev, 50 perturbations of pi", worst, 0.0, worst,
                             1e-4};
    });
  }
  if (want("ckp")) {
    rep.run([&] {
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& q : random_perturbations(pi, 50, 2.0, cfg.seed + 1))
        worst = std::min(worst, ckp_margin(q, pi));
      return VerificationRow{"ckp", "TV <= sqrt(2 H), 50 random q", worst, 0.0, worst, 1e-12};
    });
  }
  if (want("monotone")) {
    rep.run([&] {
      double rise = 0.0, prev = std::numeric_limits<double>::infinity();
      for (const auto& q : traj.states) {
        const double h = relative_entropy(q, pi).value();
        rise = std::max(rise, h - prev);
        prev = h;
      }
      return VerificationRow{"entropy-monotone", "H(q_t) nonincreasing", rise, 0.0, -rise, 1e-12};
    });
  }
  if (want("naive-entropy") && c.theta_profile.label == "wright-fisher") {
    const std::vector<double> ks{10, 100, 1000, 10000};
    const auto probe = naive_entropy_probe(c, ks);
    rep.run([&] {
      double step = std::numeric_limits<double>::infinity();
      for (std::size_t j = 1; j < probe.value.size(); ++j)
        step = std::min(step, probe.value[j - 1] - probe.value[j]);
      VerificationRow row{"naive-entropy-decreasing", "restricted naive entropy along k",
                          probe.value.back(), probe.value.front(), step, 0.0};
      if (!(step > 0)) row.margin = -1.0;
      return row;
    });
    rep.run([&] {
      return VerificationRow{"naive-entropy-loglog", "correlation with -log log k",
                             probe.correlation, 0.99, probe.correlation - 0.99, 0.0};
    });
  }
  return rep;
}

/// Subcommand dispatch; returns the process exit status.
class ScenarioRunner {
 public:
  explicit ScenarioRunner(Scenario& s, std::ostream& log = std::cout) : s_(s), log_(log) {}

  int spectrum() {
    const auto& sd = s_.spectrum();
    const auto& eta = s_.eta();
    io::write_eigenpairs(s_.out_path("eigenpairs.csv"), sd);
    {
      io::CsvWriter w(s_.out_path("eta.csv"), {"x", "eta"});
      for (std::size_t i = 0; i < eta.values.size(); ++i)
        w.row({s_.coefficients().grid.center(i), eta.values[i]});
    }
    auto j = s_.summary_header();
    j["lambdas"] = sd.lambdas;
    j["lambda0_inverse_iteration"] = eta.lambda0;
    j["gap"] = sd.lambdas[1] - sd.lambdas[0];
    io::write_json(s_.out_path("spectrum.json"), j);
    log_ << "lambdas:";
    for (double l : sd.lambdas) log_ << ' ' << io::fmt(l);
    log_ << "\n";
    return 0;
  }

  int evolve() {
    const auto& c = s_.coefficients();
    const auto p0 = s_.measure(s_.config().initial);
    const auto traj = evolve_unconditioned(c, p0, s_.record_times(), s_.config().dt);
    const auto F = fixation_probability(c);
    const auto cons = conservation_report(traj, F);
    const auto lim = fixation_limits(p0, F);
    io::write_trajectory(s_.out_path("trajectory.csv"), traj);
    {
      io::CsvWriter w(s_.out_path("fixation.csv"), {"x", "F"});
      for (std::size_t i = 0; i < F.cells.size(); ++i) w.row({c.grid.center(i), F.cells[i]});
    }
    auto j = s_.summary_header();
    j["max_mass_deviation"] = cons.max_mass_deviation;
    j["max_moment_deviation"] = cons.max_moment_deviation;
    j["final_atoms"] = {traj.states.back().atom0, traj.states.back().atom1};
    j["fixation_limits"] = {lim.a_inf, lim.b_inf};
    io::write_json(s_.out_path("evolve.json"), j);
    log_ << "atoms at T: " << io::fmt(traj.states.back().atom0) << ' '
         << io::fmt(traj.states.back().atom1) << "; limits " << io::fmt(lim.a_inf) << ' '
         << io::fmt(lim.b_inf) << "\n";
    return 0;
  }

  int condition() {
    const auto& c = s_.coefficients();
    const auto& eta = s_.eta();
    const auto& pi = s_.pi();
    const auto ladder = potential_ladder(c, eta);
    {
      const auto alpha = qsd(s_.spectrum());
      io::CsvWriter w(s_.out_path("pi.csv"), {"x", "pi", "eta", "alpha", "V"});
      for (std::size_t i = 0; i < c.grid.size(); ++i)
        w.row({c.grid.center(i), pi.values[i], eta.values[i], alpha.interior[i], ladder.v[i]});
    }
    const auto traj =
        evolve_conditioned(c, eta, s_.conditioned_initial(), s_.record_times(), s_.config().dt);
    io::write_trajectory(s_.out_path("conditioned.csv"), traj);
    {
      io::CsvWriter w(s_.out_path("conditioned_functionals.csv"), {"t", "H", "I", "W_to_pi"});
      const auto pq = QuantileTable::from_measure(pi.measure());
      for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto& q = traj.states[k];
        w.row({traj.times[k], relative_entropy(q, pi).as_double(),
               fisher_information(c, q, pi).as_double(),
               wasserstein_shahshahani(s_.isometry(), QuantileTable::from_measure(q), pq)});
      }
    }
    auto j = s_.summary_header();
    j["lambda0"] = eta.lambda0;
    j["lambda"] = s_.lambda();
    j["pi_normalizer"] = pi.z;
    io::write_json(s_.out_path("condition.json"), j);
    return 0;
  }

  int sample() {
    const auto& cfg = s_.config();
    const auto& c = s_.coefficients();
    std::vector<double> snaps;
    for (int k = 0; k <= 10; ++k) snaps.push_back(cfg.mc_horizon * k / 10.0);
    const SimulationParameters p{cfg.mc_horizon, cfg.mc_dt, cfg.particles, cfg.seed, snaps};
    const auto killed = simulate_killed(c, s_.law(cfg.initial), p);
    auto j = s_.summary_header();
    {
      io::CsvWriter w(s_.out_path("snapshots.csv"),
                      {"t", "bin_lo", "bin_hi", "count", "density", "density_error"});
      for (double t : snaps) {
        try {
          io::append_histogram(w, t, yaglom_estimate(killed, t, cfg.bins));
        } catch (const Error&) {
        }
      }
    }
    std::vector<double> times;
    for (int k = 0; k <= 200; ++k) times.push_back(cfg.mc_horizon * k / 200.0);
    try {
      const auto sc = survival_curve(killed, times, 0.25 * cfg.mc_horizon);
      io::CsvWriter w(s_.out_path("survival.csv"), {"t", "fraction"});
      for (std::size_t k = 0; k < sc.times.size(); ++k) w.row({sc.times[k], sc.fraction[k]});
      j["decay_rate"] = sc.decay_rate();
      j["decay_rate_error"] = sc.slope_error;
      j["fit_window"] = {sc.window_start, sc.window_end};
    } catch (const Error& e) {
      j["decay_rate_error_message"] = e.what();
    }
    try {
      const auto hg = yaglom_estimate(killed, cfg.mc_horizon, cfg.bins);
      j["yaglom_W_to_alpha"] = wasserstein_shahshahani(
          s_.isometry(), hg.law(), QuantileTable::from_measure(qsd(s_.spectrum())));
      j["survivors_at_T"] = hg.samples;
    } catch (const Error& e) {
      j["yaglom_error_message"] = e.what();
    }
    j["lambda0"] = s_.eta().lambda0;
    io::write_json(s_.out_path("sample.json"), j);
    if (j.contains("decay_rate"))
      log_ << "decay rate " << io::fmt(j["decay_rate"].get<double>()) << " +- "
           << io::fmt(j["decay_rate_error"].get<double>()) << "\n";
    return 0;
  }

  int metric() {
    const auto& c = s_.coefficients();
    io::write_isometry(s_.out_path("isometry.csv"), s_.isometry());
    const auto mod = convexity_modulus(c, s_.eta());
    {
      io::CsvWriter w(s_.out_path("convexity.csv"), {"x", "g"});
      for (std::size_t i = 0; i < mod.g.size(); ++i) w.row({c.grid.center(i), mod.g[i]});
    }
    const auto q0 = s_.conditioned_initial();
    auto j = s_.summary_header();
    j["diameter"] = s_.isometry().diameter();
    j["lambda"] = mod.lambda;
    j["argmin"] = mod.argmin;
    j["W_initial_to_pi"] = wasserstein_shahshahani(s_.isometry(), q0, s_.pi().measure());
    j["H_initial"] = io::number(relative_entropy(q0, s_.pi()));
    j["I_initial"] = io::number(fisher_information(c, q0, s_.pi()));
    io::write_json(s_.out_path("metric.json"), j);
    log_ << "diameter=" << io::fmt(s_.isometry().diameter()) << " lambda=" << io::fmt(mod.lambda)
         << "\n";
    return 0;
  }

  int verify() {
    const auto rep = run_verification(s_);
    rep.print_table(log_);
    {
      auto os = io::open_out(s_.out_path("verification.csv"));
      rep.write_csv(os);
    }
    auto j = s_.summary_header();
    j["passed"] = rep.gating_passed();
    io::write_json(s_.out_path("verification.json"), j);
    return rep.gating_passed() ? 0 : 1;
  }

  int all() {
    int status = 0;
    for (auto stage : {&ScenarioRunner::spectrum, &ScenarioRunner::evolve,
                       &ScenarioRunner::condition, &ScenarioRunner::sample,
                       &ScenarioRunner::metric, &ScenarioRunner::verify})
      status |= (this->*stage)();
    return status;
  }

  int run(const std::string& sub) {
    if (sub == "spectrum") return spectrum();
    if (sub == "evolve") return evolve();
    if (sub == "condition") return condition();
    if (sub == "sample") return sample();
    if (sub == "metric") return metric();
    if (sub == "verify") return verify();
    if (sub == "all") return all();
    if (sub == "describe") {
      s_.describe(log_);
      return 0;
    }
    throw Error("unknown subcommand: " + sub);
  }

 private:
  Scenario& s_;
  std::ostream& log_;
};

}  // namespace kimura
