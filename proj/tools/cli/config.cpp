#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "cli/experiments.hpp"
#include "twophase/errors.hpp"
#include "twophase/simulator.hpp"

namespace twophase::cli {

namespace {

using nlohmann::json;
using detail::fail;
using detail::require;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Reads one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), "config: '" + (path_.empty() ? std::string("<root>") : path_) +
                               "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    if (!has(key)) fail("config: missing required key '" + join(path_, key) + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  std::string key_path(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key) { return as_number(at(key), key_path(key)); }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const std::string& key) { return as_integer(at(key), key_path(key)); }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::string string(const std::string& key) { return as_string(at(key), key_path(key)); }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    require(v.is_boolean(), "config: key '" + key_path(key) + "' must be a boolean");
    return v.get<bool>();
  }

  template <typename F>
  auto list(const std::string& key, F&& element) {
    const auto& v = at(key);
    require(v.is_array() && !v.empty(), "config: key '" + key_path(key) + "' must be a non-empty array");
    std::vector<decltype(element(v[0], std::string()))> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(element(v[i], key_path(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail("config: unknown key '" + join(path_, key) + "'");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    require(v.is_number(), "config: key '" + path + "' must be a number");
    return v.get<double>();
  }
  static std::int64_t as_integer(const json& v, const std::string& path) {
    require(v.is_number_integer(), "config: key '" + path + "' must be an integer");
    return v.get<std::int64_t>();
  }
  static std::string as_string(const json& v, const std::string& path) {
    require(v.is_string(), "config: key '" + path + "' must be a string");
    return v.get<std::string>();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

int to_int(std::int64_t v, const std::string& path) {
  require(v >= std::numeric_limits<int>::min() && v <= std::numeric_limits<int>::max(),
          "config: key '" + path + "' is out of range");
  return static_cast<int>(v);
}

SpectrumSpec parse_spectrum(const json& j, const std::string& path) {
  Reader r(j, path);
  if (r.has("entries")) {
    require(j.size() == 1, "config: '" + path + "' with entries takes no other keys");
    r.at("entries");
    return {j, Spectrum::from_json(j)};
  }
  const std::string kind = r.string("kind");
  const std::int64_t d = r.integer("D");
  json resolved{{"kind", kind}, {"D", d}};
  std::optional<Spectrum> built;
  if (kind == "spiked") {
    const double frac = r.number("bulk_frac", 0.99);
    const double val = r.number("bulk_val", 1.0);
    const double ratio = r.number("spike_ratio", 20.0);
    resolved.update({{"bulk_frac", frac}, {"bulk_val", val}, {"spike_ratio", ratio}});
    built = make_spiked(d, frac, val, ratio);
  } else if (kind == "power_law") {
    const double alpha = r.number("alpha");
    resolved["alpha"] = alpha;
    require(d >= 1, "config: key '" + path + ".D' must be positive");
    built = make_power_law(d, alpha);
  } else if (kind == "isotropic") {
    const double value = r.number("value", 1.0);
    resolved["value"] = value;
    require(d >= 1, "config: key '" + path + ".D' must be positive");
    require(value > 0.0, "config: key '" + path + ".value' must be positive");
    built = make_isotropic(d, value);
  } else {
    fail("config: key '" + path + ".kind' must be spiked, power_law or isotropic (got '" + kind + "')");
  }
  r.finish();
  return {resolved, *built};
}

AxisScale parse_scale(const std::string& text, const std::string& path) {
  if (text == "log") return AxisScale::kLog;
  if (text == "linear") return AxisScale::kLinear;
  fail("config: key '" + path + "' must be log or linear");
}

Axis parse_axis(const json& j, const std::string& path, const std::string& label, Axis defaults) {
  Reader r(j, path);
  Axis a;
  a.min = r.number("min", defaults.min);
  a.max = r.number("max", defaults.max);
  a.count = to_int(r.integer("count", defaults.count), r.key_path("count"));
  a.scale = r.has("scale") ? parse_scale(r.string("scale"), r.key_path("scale")) : defaults.scale;
  r.finish();
  a.validate(label);
  return a;
}

json axis_json(const Axis& a) {
  return {{"min", a.min}, {"max", a.max}, {"count", a.count},
          {"scale", a.scale == AxisScale::kLog ? "log" : "linear"}};
}

const Axis kEtaDefault{1e-3, 1.0, 40, AxisScale::kLog};
const Axis kNuDefault{0.0, 4.0, 40, AxisScale::kLinear};

GridParams parse_grid(Reader& r) {
  GridParams p{parse_spectrum(r.at("spectrum"), r.key_path("spectrum")), 1, 1, 10, 1, {}, {}};
  p.batch = r.integer("B");
  p.workers = r.integer("R", 1);
  p.sync_period = to_int(r.integer("S", 10), r.key_path("S"));
  p.cycles = to_int(r.integer("cycles", 1), r.key_path("cycles"));
  p.eta = r.has("eta_grid") ? parse_axis(r.at("eta_grid"), r.key_path("eta_grid"), "eta grid", kEtaDefault)
                            : kEtaDefault;
  p.nu = r.has("nu_grid") ? parse_axis(r.at("nu_grid"), r.key_path("nu_grid"), "nu grid", kNuDefault)
                          : kNuDefault;
  // Construct the grid once so every semantic check fires before any work.
  GridSpec{p.eta, p.nu, p.spectrum.spectrum,
           NoiseModel(p.batch, p.spectrum.spectrum.dimension(), p.workers), p.sync_period, p.cycles}
      .validate();
  return p;
}

json grid_json(const GridParams& p) {
  return {{"spectrum", p.spectrum.resolved}, {"B", p.batch},          {"R", p.workers},
          {"S", p.sync_period},              {"cycles", p.cycles},    {"eta_grid", axis_json(p.eta)},
          {"nu_grid", axis_json(p.nu)}};
}

RScalingParams parse_rscaling(Reader& r) {
  RScalingParams p{parse_spectrum(r.at("spectrum"), r.key_path("spectrum")), 1, {}, {}, 1.0, 10, 50, {}, 0,
                   kDefaultNtkDimensionCap};
  p.total_batch = r.integer("B_tot");
  p.workers = r.list("R", Reader::as_integer);
  if (r.has("etas")) {
    p.etas = r.list("etas", Reader::as_number);
  } else {
    p.etas = parse_axis(r.at("eta_grid"), r.key_path("eta_grid"), "eta grid", kEtaDefault).values();
  }
  for (double e : p.etas) require(e > 0.0, "config: key '" + r.key_path("etas") + "' values must be positive");
  p.nu = r.number("nu", 1.0);
  p.sync_period = to_int(r.integer("S", 10), r.key_path("S"));
  p.cycles = to_int(r.integer("cycles", 50), r.key_path("cycles"));
  if (r.has("rules")) {
    for (const auto& name : r.list("rules", Reader::as_string)) p.rules.push_back(parse_nu_rule(name));
  } else {
    p.rules = {NuRule::kFixed, NuRule::kSqrtRule};
  }
  p.mc_replicas = to_int(r.integer("mc_replicas", 0), r.key_path("mc_replicas"));
  p.ntk_cap = r.integer("ntk_cap", kDefaultNtkDimensionCap);
  require(p.total_batch >= 1, "config: key '" + r.key_path("B_tot") + "' must be positive");
  for (auto w : p.workers) {
    require(w >= 1 && p.total_batch % w == 0,
            "config: key '" + r.key_path("R") + "': R = " + std::to_string(w) +
                " does not divide B_tot = " + std::to_string(p.total_batch));
    require(p.total_batch / w <= p.spectrum.spectrum.dimension(),
            "config: key '" + r.key_path("B_tot") + "': per-worker batch exceeds D");
  }
  require(p.nu >= 0.0, "config: key '" + r.key_path("nu") + "' must be nonnegative");
  require(p.sync_period >= 1, "config: key '" + r.key_path("S") + "' must be at least 1");
  require(p.cycles >= 1, "config: key '" + r.key_path("cycles") + "' must be at least 1");
  require(p.mc_replicas >= 0, "config: key '" + r.key_path("mc_replicas") + "' must be nonnegative");
  if (p.mc_replicas > 0) {
    require(p.spectrum.spectrum.dimension() <= p.ntk_cap,
            "config: key '" + r.key_path("ntk_cap") + "': D exceeds the NTK dimension cap");
  }
  return p;
}

json rscaling_json(const RScalingParams& p) {
  json rules = json::array();
  for (auto rule : p.rules) rules.push_back(std::string(to_string(rule)));
  return {{"spectrum", p.spectrum.resolved}, {"B_tot", p.total_batch}, {"R", p.workers},
          {"etas", p.etas},                  {"nu", p.nu},             {"S", p.sync_period},
          {"cycles", p.cycles},              {"rules", rules},         {"mc_replicas", p.mc_replicas},
          {"ntk_cap", p.ntk_cap}};
}

RatesParams parse_rates(Reader& r) {
  RatesParams p;
  p.lam = r.number("lam", p.lam);
  p.eta = r.number("eta", p.eta);
  p.beta_in = r.number("beta_in", p.beta_in);
  p.beta_out = r.number("beta_out", p.beta_out);
  p.inner = parse_flavor(r.string("flavor_in", "ema"));
  for (auto s : r.list("S", Reader::as_integer)) p.sync_periods.push_back(to_int(s, r.key_path("S")));
  p.nus = r.list("nu", Reader::as_number);
  if (r.has("flavor_out")) {
    for (const auto& f : r.list("flavor_out", Reader::as_string)) p.outer.push_back(parse_flavor(f));
  } else {
    p.outer = {MomentumFlavor::kEma, MomentumFlavor::kNesterov};
  }
  if (r.has("sync_variant")) {
    for (const auto& v : r.list("sync_variant", Reader::as_string)) p.sync.push_back(parse_sync_variant(v));
  } else {
    p.sync = {SyncVariant::kResetInnerMomentum, SyncVariant::kKeepInnerMomentum};
  }
  ModeParams probe;
  probe.lam = p.lam;
  probe.eta = p.eta;
  probe.beta_in = p.beta_in;
  probe.beta_out = p.beta_out;
  for (int s : p.sync_periods) {
    probe.sync_period = s;
    probe.validate();
  }
  for (double nu : p.nus) require(std::isfinite(nu), "config: key '" + r.key_path("nu") + "' must be finite");
  return p;
}

json rates_json(const RatesParams& p) {
  json outer = json::array(), sync = json::array();
  for (auto f : p.outer) outer.push_back(std::string(to_string(f)));
  for (auto v : p.sync) sync.push_back(std::string(to_string(v)));
  return {{"lam", p.lam},         {"eta", p.eta},
          {"beta_in", p.beta_in}, {"beta_out", p.beta_out},
          {"flavor_in", std::string(to_string(p.inner))},
          {"S", p.sync_periods},  {"nu", p.nus},
          {"flavor_out", outer},  {"sync_variant", sync}};
}

TheoremParams parse_theorem(Reader& r) {
  TheoremParams p;
  p.lam0 = r.number("lam0", p.lam0);
  p.dimension = r.integer("D", p.dimension);
  p.sync_period = to_int(r.integer("S", p.sync_period), r.key_path("S"));
  p.eta = r.number("eta", p.eta);
  p.nu = r.number("nu", p.nu);
  p.total_batch = r.integer("B_tot", p.total_batch);
  p.workers = r.list("R", Reader::as_integer);
  require(p.lam0 > 0.0, "config: key '" + r.key_path("lam0") + "' must be positive");
  require(p.dimension >= 1, "config: key '" + r.key_path("D") + "' must be positive");
  require(p.eta > 0.0, "config: key '" + r.key_path("eta") + "' must be positive");
  require(p.nu >= 0.0, "config: key '" + r.key_path("nu") + "' must be nonnegative");
  require(p.sync_period >= 1, "config: key '" + r.key_path("S") + "' must be at least 1");
  for (auto w : p.workers) {
    require(w >= 1 && p.total_batch % w == 0,
            "config: key '" + r.key_path("R") + "': R = " + std::to_string(w) +
                " does not divide B_tot = " + std::to_string(p.total_batch));
    require(p.total_batch / w <= p.dimension, "config: key '" + r.key_path("B_tot") + "': per-worker batch exceeds D");
  }
  return p;
}

json theorem_json(const TheoremParams& p) {
  return {{"lam0", p.lam0}, {"D", p.dimension}, {"S", p.sync_period}, {"eta", p.eta},
          {"nu", p.nu},     {"B_tot", p.total_batch}, {"R", p.workers}};
}

SimulateParams parse_simulate(Reader& r) {
  SimulateParams p{parse_spectrum(r.at("spectrum"), r.key_path("spectrum")), 1, 1, 0.01, 1.0, 10, 20, 100,
                   false, kDefaultNtkDimensionCap};
  p.batch = r.integer("B");
  p.workers = r.integer("R", 1);
  p.eta = r.number("eta");
  p.nu = r.number("nu", 1.0);
  p.sync_period = to_int(r.integer("S", 10), r.key_path("S"));
  p.cycles = to_int(r.integer("cycles", 20), r.key_path("cycles"));
  p.replicas = to_int(r.integer("replicas", 100), r.key_path("replicas"));
  p.keep_replicas = r.boolean("keep_replicas", false);
  p.ntk_cap = r.integer("ntk_cap", kDefaultNtkDimensionCap);
  const TwoPhaseConfig cfg{p.eta, p.nu, p.sync_period,
                           NoiseModel(p.batch, p.spectrum.spectrum.dimension(), p.workers)};
  cfg.validate();
  ReplicaPlan{0, p.replicas, p.cycles}.validate();
  require(p.spectrum.spectrum.dimension() <= p.ntk_cap,
          "config: key '" + r.key_path("ntk_cap") + "': D exceeds the NTK dimension cap");
  return p;
}

json simulate_json(const SimulateParams& p) {
  return {{"spectrum", p.spectrum.resolved}, {"B", p.batch},           {"R", p.workers},
          {"eta", p.eta},                    {"nu", p.nu},             {"S", p.sync_period},
          {"cycles", p.cycles},              {"replicas", p.replicas}, {"keep_replicas", p.keep_replicas},
          {"ntk_cap", p.ntk_cap}};
}

StabilityParams parse_stability(Reader& r) {
  StabilityParams p;
  for (auto s : r.list("S", Reader::as_integer)) {
    require(s >= 1, "config: key '" + r.key_path("S") + "' values must be at least 1");
    p.sync_periods.push_back(to_int(s, r.key_path("S")));
  }
  p.eta_lambda = parse_axis(r.at("eta_lambda_grid"), r.key_path("eta_lambda_grid"), "eta_lambda grid",
                            {0.0, 3.0, 100, AxisScale::kLinear});
  p.nu = r.has("nu_grid") ? parse_axis(r.at("nu_grid"), r.key_path("nu_grid"), "nu grid", kNuDefault) : kNuDefault;
  p.cycles = to_int(r.integer("cycles", 200), r.key_path("cycles"));
  require(p.cycles >= 1, "config: key '" + r.key_path("cycles") + "' must be at least 1");
  require(p.eta_lambda.min >= 0.0, "eta_lambda grid: values must be nonnegative");
  require(p.nu.min >= 0.0, "nu grid: values must be nonnegative");
  return p;
}

json stability_json(const StabilityParams& p) {
  return {{"S", p.sync_periods}, {"eta_lambda_grid", axis_json(p.eta_lambda)},
          {"nu_grid", axis_json(p.nu)}, {"cycles", p.cycles}};
}

}  // namespace

nlohmann::json ExperimentConfig::resolved() const {
  json params = std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GridParams>) return grid_json(p);
        if constexpr (std::is_same_v<T, RScalingParams>) return rscaling_json(p);
        if constexpr (std::is_same_v<T, RatesParams>) return rates_json(p);
        if constexpr (std::is_same_v<T, TheoremParams>) return theorem_json(p);
        if constexpr (std::is_same_v<T, SimulateParams>) return simulate_json(p);
        if constexpr (std::is_same_v<T, StabilityParams>) return stability_json(p);
      },
      this->params);
  return {{"experiment", experiment}, {"seed", seed},   {"threads", threads},
          {"dense_cap", dense_cap},   {"out", out.generic_string()}, {"params", params}};
}

ExperimentConfig parse_config(const nlohmann::json& doc, const Overrides& overrides) {
  Reader root(doc, "");
  ExperimentConfig cfg{};
  cfg.experiment = root.string("experiment");
  require(find_experiment(cfg.experiment) != nullptr,
          "config: key 'experiment' names unknown experiment '" + cfg.experiment + "'");
  if (root.has("seed")) {
    const auto& v = root.at("seed");
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
            "config: key 'seed' must be a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  cfg.threads = to_int(root.integer("threads", 1), "threads");
  cfg.dense_cap = root.integer("dense_cap", kDefaultDenseCap);
  cfg.out = root.string("out", "out/" + cfg.experiment);

  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.threads) cfg.threads = *overrides.threads;
  if (overrides.dense_cap) cfg.dense_cap = *overrides.dense_cap;
  if (overrides.out) cfg.out = *overrides.out;
  require(cfg.threads >= 0, "config: key 'threads' must be nonnegative (0 = auto)");
  require(cfg.dense_cap >= 1, "config: key 'dense_cap' must be positive");

  Reader params(root.at("params"), "params");
  const auto& name = cfg.experiment;
  if (name == "fig1-surface" || name == "fig1-nu-curve" || name == "sweep") {
    cfg.params = parse_grid(params);
  } else if (name == "fig2-rscaling") {
    cfg.params = parse_rscaling(params);
  } else if (name == "fig3-rates") {
    cfg.params = parse_rates(params);
  } else if (name == "theorem1") {
    auto p = parse_theorem(params);
    require(p.dimension <= cfg.dense_cap, "config: key 'params.D' exceeds dense_cap = " + std::to_string(cfg.dense_cap));
    cfg.params = std::move(p);
  } else if (name == "simulate") {
    cfg.params = parse_simulate(params);
  } else {
    cfg.params = parse_stability(params);
  }
  params.finish();
  root.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "config: cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  json doc;
  try {
    doc = json::parse(text.str());
  } catch (const json::parse_error& e) {
    fail("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, overrides);
}

}  // namespace twophase::cli
