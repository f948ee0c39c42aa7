#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace twophase {

enum class Provenance { kTheory, kMonteCarloMean, kMonteCarloReplica };

std::string_view to_string(Provenance p);

/// Parameters a trajectory was produced with, echoed into every CSV row.
struct RunSnapshot {
  std::int64_t workers = 1;
  std::int64_t batch = 1;
  std::int64_t dimension = 1;
  int sync_period = 1;
  double eta = 0.0;
  double nu = 1.0;
  std::uint64_t seed = 0;
};

/// Per-cycle losses. `losses[0]` is the initial loss, so a complete record
/// has cycles + 1 values; a diverged record is truncated at the first
/// unbounded cycle. `standard_errors` is non-empty only for Monte Carlo means.
struct TrajectoryRecord {
  std::vector<double> losses;
  std::vector<double> standard_errors;
  Provenance provenance = Provenance::kTheory;
  RunSnapshot config;
  int replicas = 0;
  bool diverged = false;
};

/// Header: cycle,loss_mean,loss_se,provenance,R,B,D,S,eta,nu,seed
/// loss_se is left empty when a record carries no standard errors.
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRecord> records);

}  // namespace twophase
