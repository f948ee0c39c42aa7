#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "twophase/momentum.hpp"
#include "twophase/spectrum.hpp"
#include "twophase/theory.hpp"
#include "twophase/trajectory.hpp"

namespace twophase {

enum class AxisScale { kLinear, kLog };

struct Axis {
  double min = 0.0;
  double max = 1.0;
  int count = 2;
  AxisScale scale = AxisScale::kLinear;

  /// Throws InvalidArgument naming `name`, e.g. "nu grid: count must be ≥ 2".
  void validate(std::string_view name) const;
  std::vector<double> values() const;
};

/// (eta, nu) grid over `cycles` LA-DiLoCo cycles from p0 = Lambda^+ 1.
struct GridSpec {
  Axis eta;
  Axis nu;
  Spectrum spectrum;
  NoiseModel noise;
  int sync_period = 1;
  int cycles = 1;

  void validate() const;
};

struct OptimalPoint {
  double nu = 0.0;
  double eta_star = 0.0;
  double loss_star = 0.0;
  std::size_t eta_index = 0;
  bool boundary = false;      // eta_star sits on the first or last grid value
  bool all_diverged = false;  // no finite cell in this row
};

struct SweepResult {
  std::vector<double> nu_values;
  std::vector<double> eta_values;
  std::vector<double> loss;            // row-major [nu][eta], +inf if diverged
  std::vector<std::uint8_t> diverged;  // same layout
  std::vector<OptimalPoint> per_nu;
  std::size_t best_nu_index = 0;
  std::size_t best_eta_index = 0;
  bool global_boundary = false;  // argmin touches any edge of the grid

  double loss_at(std::size_t nu_i, std::size_t eta_i) const { return loss[nu_i * eta_values.size() + eta_i]; }
  bool diverged_at(std::size_t nu_i, std::size_t eta_i) const {
    return diverged[nu_i * eta_values.size() + eta_i] != 0;
  }
  OptimalPoint global() const { return per_nu[best_nu_index]; }
};

/// Grid over explicit value lists (any length >= 1). Throws InvalidArgument
/// if every cell diverges.
SweepResult evaluate_grid(const Spectrum& spectrum, const NoiseModel& noise, int sync_period,
                          int cycles, std::span<const double> nu_values,
                          std::span<const double> eta_values, int threads = 1);

SweepResult loss_grid(const GridSpec& spec, int threads = 1);

/// Per-nu argmin over eta, in nu order.
std::vector<OptimalPoint> optimal_eta_curve(const SweepResult& result);

struct GainReport {
  double gain = 0.0;  // 1 - L(nu*, eta*) / L(1, eta*_SGD)
  OptimalPoint la;
  OptimalPoint sgd;
  bool la_boundary = false;
  bool sgd_boundary = false;
};

/// Best LA point over the full grid against SGD (nu = 1) tuned over the same eta grid.
GainReport la_vs_sgd_gain(const Spectrum& spectrum, const NoiseModel& noise, int sync_period,
                          std::span<const double> eta_values, std::span<const double> nu_values,
                          int cycles = 1, int threads = 1);

enum class NuRule { kFixed, kSqrtRule };
std::string_view to_string(NuRule rule);
NuRule parse_nu_rule(std::string_view text);

struct RScalingSpec {
  Spectrum spectrum;
  std::int64_t total_batch = 1;
  std::vector<std::int64_t> workers;
  std::vector<double> etas;  // base (R = 1) learning rates
  double nu = 1.0;           // base outer learning rate
  int sync_period = 1;
  int cycles = 1;
  NuRule rule = NuRule::kFixed;
  int mc_replicas = 0;  // 0 disables the Monte Carlo companion runs
  std::uint64_t seed = 0;
  std::int64_t ntk_cap = kDefaultNtkDimensionCap;
};

struct RScalingRun {
  std::int64_t workers = 1;
  double base_eta = 0.0;
  NuRule rule = NuRule::kFixed;
  TrajectoryRecord theory;
  std::optional<TrajectoryRecord> monte_carlo;
};

/// Theory trajectory (and optional Monte Carlo mean) per (R, eta), R-major.
std::vector<RScalingRun> r_scaling_experiment(const RScalingSpec& spec, int threads = 1);

/// max_c |a_c - b_c|; +inf when one curve is truncated earlier than the other.
double sup_distance(const TrajectoryRecord& a, const TrajectoryRecord& b);

/// Smallest base eta whose theory trajectory for `workers` diverged.
std::optional<double> first_divergent_eta(std::span<const RScalingRun> runs, std::int64_t workers);

struct RateRow {
  ModeParams params;
  ModeSystem system;
};

/// reset_inner_momentum rows use the 2x2 reduction, keep_inner_momentum rows
/// the full 4x4 product. Order: sync variant, outer flavor, nu, S.
std::vector<RateRow> sla_rate_sweep(const ModeParams& base, std::span<const int> sync_periods,
                                    std::span<const double> nus,
                                    std::span<const MomentumFlavor> outer_flavors,
                                    std::span<const SyncVariant> sync_variants);

Theorem1Result theorem_scan(double lam0, std::int64_t dimension, int sync_period, double eta,
                            double nu, std::int64_t total_batch,
                            std::span<const std::int64_t> workers,
                            std::int64_t dense_cap = kDefaultDenseCap);

struct StabilityCell {
  int sync_period = 1;
  double eta_lambda = 0.0;
  double nu = 0.0;
  Stability predicted = Stability::kMarginal;
  bool empirical_diverged = false;
  bool near_boundary = false;  // a grid neighbour is classified differently
};

struct StabilityMap {
  std::vector<StabilityCell> cells;  // [S][nu][eta_lambda]
  std::size_t nu_count = 0;
  std::size_t eta_count = 0;

  /// Cells away from the boundary whose empirical outcome contradicts the prediction.
  std::size_t mismatches() const;
};

/// Deterministic (w = 0) iteration of a single mode for `cycles` cycles.
/// A cell is empirically divergent when its loss overflows or ends above the start.
StabilityMap stability_map(std::span<const int> sync_periods, const Axis& eta_lambda,
                           const Axis& nu, int cycles);

void write_surface_csv(std::ostream& out, const SweepResult& result);
void write_optimal_csv(std::ostream& out, std::span<const OptimalPoint> curve);
void write_rate_csv(std::ostream& out, std::span<const RateRow> rows);
void write_theorem_csv(std::ostream& out, const Theorem1Result& result);
void write_stability_csv(std::ostream& out, const StabilityMap& map);

}  // namespace twophase
