#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "cli/config.hpp"

namespace twophase::cli {

inline constexpr std::string_view kVersion = "0.1.0";

struct ExperimentInfo {
  std::string_view name;
  std::string_view description;
  std::string_view anchor;
};

/// All experiments in listing order.
std::span<const ExperimentInfo> experiment_catalog();
const ExperimentInfo* find_experiment(std::string_view name);
void print_catalog(std::ostream& out);

/// Runs the experiment and writes its artifacts plus manifest.json into
/// cfg.out. Returns the written file names (relative to cfg.out), sorted.
std::vector<std::string> run_experiment(const ExperimentConfig& cfg);

}  // namespace twophase::cli
