#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "twophase/momentum.hpp"
#include "twophase/spectrum.hpp"
#include "twophase/sweeps.hpp"

namespace twophase::cli {

/// Spectrum as written in a config: a generator form or explicit entries.
struct SpectrumSpec {
  nlohmann::json resolved;  // generator form with defaults filled in
  Spectrum spectrum;
};

/// fig1-surface, fig1-nu-curve and sweep.
struct GridParams {
  SpectrumSpec spectrum;
  std::int64_t batch = 1;
  std::int64_t workers = 1;
  int sync_period = 10;
  int cycles = 1;
  Axis eta;
  Axis nu;
};

struct RScalingParams {
  SpectrumSpec spectrum;
  std::int64_t total_batch = 1;
  std::vector<std::int64_t> workers;
  std::vector<double> etas;
  double nu = 1.0;
  int sync_period = 10;
  int cycles = 50;
  std::vector<NuRule> rules;
  int mc_replicas = 0;
  std::int64_t ntk_cap = kDefaultNtkDimensionCap;
};

struct RatesParams {
  double lam = 0.2;
  double eta = 1.0;
  double beta_in = 0.9;
  double beta_out = 0.8;
  MomentumFlavor inner = MomentumFlavor::kEma;
  std::vector<int> sync_periods;
  std::vector<double> nus;
  std::vector<MomentumFlavor> outer;
  std::vector<SyncVariant> sync;
};

struct TheoremParams {
  double lam0 = 1.0;
  std::int64_t dimension = 100;
  int sync_period = 5;
  double eta = 0.05;
  double nu = 1.0;
  std::int64_t total_batch = 20;
  std::vector<std::int64_t> workers;
};

struct SimulateParams {
  SpectrumSpec spectrum;
  std::int64_t batch = 1;
  std::int64_t workers = 1;
  double eta = 0.01;
  double nu = 1.0;
  int sync_period = 10;
  int cycles = 20;
  int replicas = 100;
  bool keep_replicas = false;
  std::int64_t ntk_cap = kDefaultNtkDimensionCap;
};

struct StabilityParams {
  std::vector<int> sync_periods;
  Axis eta_lambda;
  Axis nu;
  int cycles = 200;
};

using ExperimentParams =
    std::variant<RatesParams, TheoremParams, StabilityParams, GridParams, RScalingParams, SimulateParams>;

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::int64_t> dense_cap;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  int threads = 1;
  std::int64_t dense_cap = kDefaultDenseCap;
  std::filesystem::path out;
  ExperimentParams params;

  /// Round-trips through parse_config to the same config.
  nlohmann::json resolved() const;
};

/// Strict schema check. Unknown keys and type mismatches throw
/// InvalidArgument naming the offending key path.
ExperimentConfig parse_config(const nlohmann::json& doc, const Overrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

}  // namespace twophase::cli
