#include "cli/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "twophase/errors.hpp"
#include "twophase/format.hpp"
#include "twophase/simulator.hpp"
#include "twophase/sweeps.hpp"

namespace twophase::cli {

namespace {

using nlohmann::json;

constexpr ExperimentInfo kCatalog[] = {
    {"fig1-surface", "loss after one LA cycle over an (eta, nu) grid, with per-nu optima", "[Figure 1, top]"},
    {"fig1-nu-curve", "optimal eta*(nu) and L*(nu) curve plus the LA-vs-SGD gain", "[Figure 1, bottom]"},
    {"fig2-rscaling", "LA-DiLoCo loss curves across worker counts, fixed vs sqrt rule", "[Figure 2]"},
    {"fig3-rates", "SLA spectral radius and convergence rates versus sync period", "[Figure 3]"},
    {"theorem1", "largest cycle-operator eigenvalue versus R at fixed total batch", "[Theorem 1]"},
    {"sweep", "generic multi-cycle (eta, nu) loss grid for any spectrum", "[Figure 1, multi-cycle]"},
    {"simulate", "Monte Carlo LA-DiLoCo against the exact theory curve", "[Figure 2, Monte Carlo]"},
    {"stability-map", "deterministic LA stability inequality against iterated dynamics",
     "[Appendix: stability region]"},
};

/// Non-finite values become null; everything else keeps full precision.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = root_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
    files_.push_back(name);
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  std::vector<std::string> files() const {
    auto out = files_;
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

json point_json(const OptimalPoint& p) {
  return {{"nu", p.nu},
          {"eta_star", number(p.eta_star)},
          {"loss_star", number(p.loss_star)},
          {"boundary", p.boundary},
          {"all_diverged", p.all_diverged}};
}

json summary_json(const SweepResult& res) {
  std::size_t diverged = 0;
  for (auto d : res.diverged) diverged += d;
  return {{"global", point_json(res.global())},
          {"global_boundary", res.global_boundary},
          {"diverged_cells", diverged},
          {"cells", res.loss.size()}};
}

SweepResult run_grid(const GridParams& p, int threads) {
  const GridSpec spec{p.eta, p.nu, p.spectrum.spectrum,
                      NoiseModel(p.batch, p.spectrum.spectrum.dimension(), p.workers), p.sync_period,
                      p.cycles};
  return loss_grid(spec, threads);
}

template <typename Writer>
std::string to_text(Writer&& writer) {
  std::ostringstream out;
  writer(out);
  return out.str();
}

void surface(const GridParams& p, int threads, OutputDir& dir) {
  const auto res = run_grid(p, threads);
  dir.write("surface.csv", to_text([&](std::ostream& o) { write_surface_csv(o, res); }));
  dir.write("optimal.csv", to_text([&](std::ostream& o) { write_optimal_csv(o, res.per_nu); }));
  dir.write_json("summary.json", summary_json(res));
}

void nu_curve(const GridParams& p, int threads, OutputDir& dir) {
  const auto res = run_grid(p, threads);
  const auto etas = p.eta.values();
  const auto nus = p.nu.values();
  const auto gain = la_vs_sgd_gain(p.spectrum.spectrum,
                                   NoiseModel(p.batch, p.spectrum.spectrum.dimension(), p.workers),
                                   p.sync_period, etas, nus, p.cycles, threads);
  dir.write("optimal.csv", to_text([&](std::ostream& o) { write_optimal_csv(o, optimal_eta_curve(res)); }));
  dir.write_json("gain.json", {{"gain", number(gain.gain)},
                               {"la", point_json(gain.la)},
                               {"la_boundary", gain.la_boundary},
                               {"sgd", point_json(gain.sgd)},
                               {"sgd_boundary", gain.sgd_boundary}});
}

void rscaling(const RScalingParams& p, std::uint64_t seed, int threads, OutputDir& dir) {
  json summary = json::object();
  for (auto rule : p.rules) {
    RScalingSpec spec{p.spectrum.spectrum, p.total_batch, p.workers, p.etas, p.nu, p.sync_period, p.cycles};
    spec.rule = rule;
    spec.mc_replicas = p.mc_replicas;
    spec.seed = seed;
    spec.ntk_cap = p.ntk_cap;
    const auto runs = r_scaling_experiment(spec, threads);

    std::vector<TrajectoryRecord> records;
    for (const auto& run : runs) {
      records.push_back(run.theory);
      if (run.monte_carlo) records.push_back(*run.monte_carlo);
    }
    const std::string name(to_string(rule));
    dir.write("trajectories_" + name + ".csv", to_text([&](std::ostream& o) { write_trajectory_csv(o, records); }));

    json divergence = json::object();
    for (auto r : p.workers) {
      const auto eta = first_divergent_eta(runs, r);
      divergence[std::to_string(r)] = eta ? json(*eta) : json(nullptr);
    }
    // Distance of every R's theory curve to the first R in the list, per base eta.
    json distances = json::array();
    for (double eta : p.etas) {
      const RScalingRun* ref = nullptr;
      json row{{"eta", eta}};
      for (const auto& run : runs) {
        if (run.base_eta != eta) continue;
        if (!ref) ref = &run;
        row["R" + std::to_string(run.workers)] = number(sup_distance(ref->theory, run.theory));
      }
      distances.push_back(row);
    }
    summary[name] = {{"first_divergent_eta", divergence}, {"sup_distance_to_first_R", distances}};
  }
  dir.write_json("summary.json", summary);
}

void rates(const RatesParams& p, OutputDir& dir) {
  ModeParams base;
  base.lam = p.lam;
  base.eta = p.eta;
  base.beta_in = p.beta_in;
  base.beta_out = p.beta_out;
  base.inner = p.inner;
  const auto rows = sla_rate_sweep(base, p.sync_periods, p.nus, p.outer, p.sync);
  dir.write("rates.csv", to_text([&](std::ostream& o) { write_rate_csv(o, rows); }));
}

void theorem(const TheoremParams& p, std::int64_t dense_cap, OutputDir& dir) {
  const auto res = theorem_scan(p.lam0, p.dimension, p.sync_period, p.eta, p.nu, p.total_batch, p.workers, dense_cap);
  dir.write("theorem.csv", to_text([&](std::ostream& o) { write_theorem_csv(o, res); }));
  dir.write_json("summary.json", {{"strictly_increasing", res.strictly_increasing}});
}

void simulate(const SimulateParams& p, std::uint64_t seed, int threads, OutputDir& dir) {
  const auto& spec = p.spectrum.spectrum;
  const TwoPhaseConfig cfg{p.eta, p.nu, p.sync_period, NoiseModel(p.batch, spec.dimension(), p.workers)};
  const auto ntk = realize_ntk(spec, seed, p.ntk_cap);
  const auto sim = run_diloco(ntk, cfg, {seed, p.replicas, p.cycles}, seed, {threads, p.keep_replicas});
  const auto curve = iterate_cycles(CycleOperator(spec, cfg), spec, init_pvec_iid(spec), p.cycles);

  TrajectoryRecord theory;
  theory.losses = curve.losses;
  theory.diverged = curve.diverged;
  theory.config = sim.mean.config;
  std::vector<TrajectoryRecord> records{theory, sim.mean};
  records.insert(records.end(), sim.replicas.begin(), sim.replicas.end());
  dir.write("trajectory.csv", to_text([&](std::ostream& o) { write_trajectory_csv(o, records); }));

  const std::size_t n = std::min(theory.losses.size(), sim.mean.losses.size());
  std::size_t within = 0;
  double worst = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    const double se = sim.mean.standard_errors[c];
    const double gap = std::abs(sim.mean.losses[c] - theory.losses[c]);
    if (gap <= 3.0 * se) ++within;
    if (se > 0.0) worst = std::max(worst, gap / se);
  }
  dir.write_json("summary.json", {{"cycles_compared", n},
                                  {"within_3se", within},
                                  {"max_gap_in_se", number(worst)},
                                  {"theory_diverged", theory.diverged},
                                  {"montecarlo_diverged", sim.mean.diverged}});
}

void stability(const StabilityParams& p, OutputDir& dir) {
  const auto map = stability_map(p.sync_periods, p.eta_lambda, p.nu, p.cycles);
  std::size_t interior = 0;
  for (const auto& c : map.cells) interior += c.near_boundary ? 0 : 1;
  dir.write("stability.csv", to_text([&](std::ostream& o) { write_stability_csv(o, map); }));
  dir.write_json("summary.json", {{"cells", map.cells.size()},
                                  {"interior_cells", interior},
                                  {"mismatches", map.mismatches()}});
}

}  // namespace

std::span<const ExperimentInfo> experiment_catalog() { return kCatalog; }

const ExperimentInfo* find_experiment(std::string_view name) {
  for (const auto& info : kCatalog) {
    if (info.name == name) return &info;
  }
  return nullptr;
}

void print_catalog(std::ostream& out) {
  for (const auto& info : kCatalog) {
    std::string name(info.name);
    name.resize(std::max<std::size_t>(name.size(), 15), ' ');
    out << name << ' ' << info.description << ' ' << info.anchor << '\n';
  }
}

std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
  OutputDir dir(cfg.out);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GridParams>) {
          if (cfg.experiment == "fig1-nu-curve") {
            nu_curve(p, cfg.threads, dir);
          } else {
            surface(p, cfg.threads, dir);
          }
        } else if constexpr (std::is_same_v<T, RScalingParams>) {
          rscaling(p, cfg.seed, cfg.threads, dir);
        } else if constexpr (std::is_same_v<T, RatesParams>) {
          rates(p, dir);
        } else if constexpr (std::is_same_v<T, TheoremParams>) {
          theorem(p, cfg.dense_cap, dir);
        } else if constexpr (std::is_same_v<T, SimulateParams>) {
          simulate(p, cfg.seed, cfg.threads, dir);
        } else {
          stability(p, dir);
        }
      },
      cfg.params);

  auto outputs = dir.files();
  json manifest{{"experiment", cfg.experiment},
                {"version", std::string(kVersion)},
                {"seed", cfg.seed},
                {"config", cfg.resolved()},
                {"outputs", outputs}};
  dir.write_json("manifest.json", manifest);
  return dir.files();
}

}  // namespace twophase::cli
