#include "twophase/sweeps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "twophase/errors.hpp"
#include "twophase/format.hpp"
#include "twophase/parallel.hpp"
#include "twophase/simulator.hpp"

namespace twophase {

using detail::require;

void Axis::validate(std::string_view name) const {
  const std::string prefix(name);
  require(count >= 2, prefix + ": count must be ≥ 2");
  require(std::isfinite(min) && std::isfinite(max), prefix + ": bounds must be finite");
  require(min < max, prefix + ": min must be below max");
  if (scale == AxisScale::kLog) require(min > 0.0, prefix + ": log scale needs min > 0");
}

std::vector<double> Axis::values() const {
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
  const double span = static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / span;
    if (scale == AxisScale::kLog) {
      out[i] = std::exp(std::log(min) + t * (std::log(max) - std::log(min)));
    } else {
      out[i] = min + t * (max - min);
    }
  }
  // Pin the endpoints so boundary checks compare against the configured values.
  if (count >= 2) {
    out.front() = min;
    out.back() = max;
  }
  return out;
}

void GridSpec::validate() const {
  eta.validate("eta grid");
  nu.validate("nu grid");
  require(nu.min >= 0.0, "nu grid: values must be nonnegative");
  require(sync_period >= 1, "grid: sync period S must be at least 1");
  require(cycles >= 1, "grid: cycles must be at least 1");
  require(spectrum.dimension() == noise.dimension(),
          "grid: noise model dimension does not match spectrum dimension");
}

SweepResult evaluate_grid(const Spectrum& spectrum, const NoiseModel& noise, int sync_period,
                          int cycles, std::span<const double> nu_values,
                          std::span<const double> eta_values, int threads) {
  require(!nu_values.empty() && !eta_values.empty(), "grid: axes must not be empty");
  require(cycles >= 1, "grid: cycles must be at least 1");
  const std::size_t n_nu = nu_values.size();
  const std::size_t n_eta = eta_values.size();

  SweepResult result;
  result.nu_values.assign(nu_values.begin(), nu_values.end());
  result.eta_values.assign(eta_values.begin(), eta_values.end());
  result.loss.assign(n_nu * n_eta, std::numeric_limits<double>::infinity());
  result.diverged.assign(n_nu * n_eta, 0);

  const PVec p0 = init_pvec_iid(spectrum);
  parallel_for(n_nu, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < n_eta; ++j) {
      const TwoPhaseConfig config{eta_values[j], nu_values[i], sync_period, noise};
      config.validate();
      const auto curve = iterate_cycles(CycleOperator(spectrum, config), spectrum, p0, cycles);
      const std::size_t k = i * n_eta + j;
      if (curve.diverged) {
        result.diverged[k] = 1;
      } else {
        result.loss[k] = curve.losses.back();
      }
    }
  });

  result.per_nu = optimal_eta_curve(result);
  bool found = false;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_nu; ++i) {
    const auto& row = result.per_nu[i];
    if (row.all_diverged) continue;
    if (!found || row.loss_star < best) {
      found = true;
      best = row.loss_star;
      result.best_nu_index = i;
      result.best_eta_index = row.eta_index;
    }
  }
  require(found, "grid: every cell diverged");
  result.global_boundary = result.best_eta_index == 0 || result.best_eta_index + 1 == n_eta ||
                           (n_nu > 1 && (result.best_nu_index == 0 || result.best_nu_index + 1 == n_nu));
  return result;
}

SweepResult loss_grid(const GridSpec& spec, int threads) {
  spec.validate();
  const auto nus = spec.nu.values();
  const auto etas = spec.eta.values();
  return evaluate_grid(spec.spectrum, spec.noise, spec.sync_period, spec.cycles, nus, etas,
                       threads);
}

std::vector<OptimalPoint> optimal_eta_curve(const SweepResult& result) {
  const std::size_t n_eta = result.eta_values.size();
  std::vector<OptimalPoint> curve;
  curve.reserve(result.nu_values.size());
  for (std::size_t i = 0; i < result.nu_values.size(); ++i) {
    OptimalPoint point;
    point.nu = result.nu_values[i];
    point.all_diverged = true;
    for (std::size_t j = 0; j < n_eta; ++j) {
      if (result.diverged_at(i, j)) continue;
      const double loss = result.loss_at(i, j);
      if (point.all_diverged || loss < point.loss_star) {
        point.all_diverged = false;
        point.loss_star = loss;
        point.eta_index = j;
      }
    }
    if (point.all_diverged) {
      point.eta_star = std::numeric_limits<double>::quiet_NaN();
      point.loss_star = std::numeric_limits<double>::infinity();
    } else {
      point.eta_star = result.eta_values[point.eta_index];
      point.boundary = point.eta_index == 0 || point.eta_index + 1 == n_eta;
    }
    curve.push_back(point);
  }
  return curve;
}

GainReport la_vs_sgd_gain(const Spectrum& spectrum, const NoiseModel& noise, int sync_period,
                          std::span<const double> eta_values, std::span<const double> nu_values,
                          int cycles, int threads) {
  const auto la = evaluate_grid(spectrum, noise, sync_period, cycles, nu_values, eta_values, threads);
  const double one[] = {1.0};
  const auto sgd = evaluate_grid(spectrum, noise, sync_period, cycles, one, eta_values, threads);
  GainReport report;
  report.la = la.global();
  report.sgd = sgd.global();
  report.la_boundary = la.global_boundary;
  report.sgd_boundary = report.sgd.boundary;
  report.gain = 1.0 - report.la.loss_star / report.sgd.loss_star;
  return report;
}

std::string_view to_string(NuRule rule) {
  return rule == NuRule::kFixed ? "fixed" : "sqrt_rule";
}

NuRule parse_nu_rule(std::string_view text) {
  if (text == "fixed") return NuRule::kFixed;
  if (text == "sqrt_rule") return NuRule::kSqrtRule;
  detail::fail("unknown nu rule '" + std::string(text) + "' (expected fixed or sqrt_rule)");
}

std::vector<RScalingRun> r_scaling_experiment(const RScalingSpec& spec, int threads) {
  require(!spec.workers.empty(), "rscaling: R list must not be empty");
  require(!spec.etas.empty(), "rscaling: eta list must not be empty");
  require(spec.total_batch >= 1, "rscaling: B_tot must be positive");
  require(spec.cycles >= 1, "rscaling: cycles must be at least 1");
  require(spec.mc_replicas >= 0, "rscaling: mc_replicas must be nonnegative");
  for (auto r : spec.workers) {
    require(r >= 1 && spec.total_batch % r == 0,
            "rscaling: R = " + std::to_string(r) + " does not divide B_tot = " +
                std::to_string(spec.total_batch));
  }

  std::optional<NtkMatrix> ntk;
  if (spec.mc_replicas > 0) ntk.emplace(realize_ntk(spec.spectrum, spec.seed, spec.ntk_cap));

  const PVec p0 = init_pvec_iid(spec.spectrum);
  std::vector<RScalingRun> runs;
  for (auto r : spec.workers) {
    const NoiseModel noise(spec.total_batch / r, spec.spectrum.dimension(), r);
    for (double base_eta : spec.etas) {
      LearningRates rates{spec.nu, base_eta};
      if (spec.rule == NuRule::kSqrtRule) rates = scaling_rule(rates, r);
      const TwoPhaseConfig config{rates.eta, rates.nu, spec.sync_period, noise};
      config.validate();

      RScalingRun run;
      run.workers = r;
      run.base_eta = base_eta;
      run.rule = spec.rule;
      const auto curve =
          iterate_cycles(CycleOperator(spec.spectrum, config), spec.spectrum, p0, spec.cycles);
      run.theory.losses = curve.losses;
      run.theory.diverged = curve.diverged;
      run.theory.provenance = Provenance::kTheory;
      run.theory.config = {r,          noise.batch(), spec.spectrum.dimension(), spec.sync_period,
                           rates.eta,  rates.nu,      spec.seed};
      if (ntk) {
        const ReplicaPlan plan{spec.seed, spec.mc_replicas, spec.cycles};
        run.monte_carlo = run_diloco(*ntk, config, plan, spec.seed, {threads, false}).mean;
      }
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

double sup_distance(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.losses.size() != b.losses.size()) return std::numeric_limits<double>::infinity();
  double out = 0.0;
  for (std::size_t i = 0; i < a.losses.size(); ++i) {
    out = std::max(out, std::abs(a.losses[i] - b.losses[i]));
  }
  return out;
}

std::optional<double> first_divergent_eta(std::span<const RScalingRun> runs, std::int64_t workers) {
  std::optional<double> out;
  for (const auto& run : runs) {
    if (run.workers != workers || !run.theory.diverged) continue;
    if (!out || run.base_eta < *out) out = run.base_eta;
  }
  return out;
}

std::vector<RateRow> sla_rate_sweep(const ModeParams& base, std::span<const int> sync_periods,
                                    std::span<const double> nus,
                                    std::span<const MomentumFlavor> outer_flavors,
                                    std::span<const SyncVariant> sync_variants) {
  require(!sync_periods.empty() && !nus.empty() && !outer_flavors.empty() && !sync_variants.empty(),
          "rate sweep: every axis needs at least one value");
  std::vector<RateRow> rows;
  for (auto sync : sync_variants) {
    for (auto outer : outer_flavors) {
      for (double nu : nus) {
        for (int s : sync_periods) {
          ModeParams p = base;
          p.sync = sync;
          p.outer = outer;
          p.nu = nu;
          p.sync_period = s;
          p.validate();
          const Eigen::MatrixXd m = sync == SyncVariant::kResetInnerMomentum
                                        ? Eigen::MatrixXd(sla_reduced_matrix(p))
                                        : Eigen::MatrixXd(sla_full_matrix(p));
          rows.push_back({p, spectral_summary(m, s)});
        }
      }
    }
  }
  return rows;
}

Theorem1Result theorem_scan(double lam0, std::int64_t dimension, int sync_period, double eta,
                            double nu, std::int64_t total_batch,
                            std::span<const std::int64_t> workers, std::int64_t dense_cap) {
  return theorem1_check(lam0, dimension, sync_period, eta, nu, total_batch, workers, dense_cap);
}

std::size_t StabilityMap::mismatches() const {
  std::size_t out = 0;
  for (const auto& c : cells) {
    if (c.near_boundary || c.predicted == Stability::kMarginal) continue;
    if ((c.predicted == Stability::kUnstable) != c.empirical_diverged) ++out;
  }
  return out;
}

StabilityMap stability_map(std::span<const int> sync_periods, const Axis& eta_lambda,
                           const Axis& nu, int cycles) {
  eta_lambda.validate("eta_lambda grid");
  nu.validate("nu grid");
  require(nu.min >= 0.0, "nu grid: values must be nonnegative");
  require(eta_lambda.min >= 0.0, "eta_lambda grid: values must be nonnegative");
  require(!sync_periods.empty(), "stability map: S list must not be empty");
  require(cycles >= 1, "stability map: cycles must be at least 1");

  const auto xs = eta_lambda.values();
  const auto nus = nu.values();
  const Spectrum mode = make_isotropic(1, 1.0);
  const NoiseModel exact(1, 1, 1);
  const PVec p0 = init_pvec_iid(mode);

  StabilityMap map;
  map.nu_count = nus.size();
  map.eta_count = xs.size();
  for (int s : sync_periods) {
    require(s >= 1, "stability map: S must be at least 1");
    const std::size_t base = map.cells.size();
    for (double n : nus) {
      for (double x : xs) {
        StabilityCell cell;
        cell.sync_period = s;
        cell.eta_lambda = x;
        cell.nu = n;
        cell.predicted = stability_region(x, n, 1.0, s);
        const auto curve =
            iterate_cycles(CycleOperator(mode, {x, n, s, exact}), mode, p0, cycles);
        cell.empirical_diverged = curve.diverged || curve.losses.back() > curve.losses.front();
        map.cells.push_back(cell);
      }
    }
    auto at = [&](std::size_t i, std::size_t j) -> StabilityCell& {
      return map.cells[base + i * xs.size() + j];
    };
    for (std::size_t i = 0; i < nus.size(); ++i) {
      for (std::size_t j = 0; j < xs.size(); ++j) {
        auto& cell = at(i, j);
        bool near = cell.predicted == Stability::kMarginal;
        auto differs = [&](std::size_t a, std::size_t b) {
          if (at(a, b).predicted != cell.predicted) near = true;
        };
        if (i > 0) differs(i - 1, j);
        if (i + 1 < nus.size()) differs(i + 1, j);
        if (j > 0) differs(i, j - 1);
        if (j + 1 < xs.size()) differs(i, j + 1);
        cell.near_boundary = near;
      }
    }
  }
  return map;
}

void write_surface_csv(std::ostream& out, const SweepResult& result) {
  out << "nu,eta,loss,diverged\n";
  for (std::size_t i = 0; i < result.nu_values.size(); ++i) {
    for (std::size_t j = 0; j < result.eta_values.size(); ++j) {
      out << format_double(result.nu_values[i]) << ',' << format_double(result.eta_values[j])
          << ',' << format_double(result.loss_at(i, j)) << ',' << (result.diverged_at(i, j) ? 1 : 0)
          << '\n';
    }
  }
}

void write_optimal_csv(std::ostream& out, std::span<const OptimalPoint> curve) {
  out << "nu,eta_star,loss_star,boundary_flag\n";
  for (const auto& p : curve) {
    out << format_double(p.nu) << ',' << format_double(p.eta_star) << ','
        << format_double(p.loss_star) << ',' << (p.boundary ? 1 : 0) << '\n';
  }
}

void write_rate_csv(std::ostream& out, std::span<const RateRow> rows) {
  out << "S,flavor_out,nu,rho,r_cycle,r_step,sync_variant,lam,eta,beta_in,beta_out,flavor_in\n";
  for (const auto& row : rows) {
    const auto& p = row.params;
    const auto& m = row.system;
    out << p.sync_period << ',' << to_string(p.outer) << ',' << format_double(p.nu) << ','
        << format_double(m.rho) << ',' << format_double(m.r_cycle) << ','
        << format_double(m.r_step) << ',' << to_string(p.sync) << ',' << format_double(p.lam)
        << ',' << format_double(p.eta) << ',' << format_double(p.beta_in) << ','
        << format_double(p.beta_out) << ',' << to_string(p.inner) << '\n';
  }
}

void write_theorem_csv(std::ostream& out, const Theorem1Result& result) {
  out << "R,B,max_eigenvalue,strictly_increasing\n";
  for (const auto& row : result.rows) {
    out << row.workers << ',' << row.batch << ',' << format_double(row.max_eigenvalue) << ','
        << (result.strictly_increasing ? 1 : 0) << '\n';
  }
}

void write_stability_csv(std::ostream& out, const StabilityMap& map) {
  out << "S,eta_lambda,nu,predicted,empirical_diverged,near_boundary\n";
  for (const auto& c : map.cells) {
    const char* predicted = c.predicted == Stability::kStable     ? "stable"
                            : c.predicted == Stability::kUnstable ? "unstable"
                                                                  : "marginal";
    out << c.sync_period << ',' << format_double(c.eta_lambda) << ',' << format_double(c.nu) << ','
        << predicted << ',' << (c.empirical_diverged ? 1 : 0) << ',' << (c.near_boundary ? 1 : 0)
        << '\n';
  }
}

}  // namespace twophase
