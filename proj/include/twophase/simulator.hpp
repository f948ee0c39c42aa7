#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "twophase/rng.hpp"
#include "twophase/spectrum.hpp"
#include "twophase/theory.hpp"
#include "twophase/trajectory.hpp"

namespace twophase {

struct ReplicaPlan {
  std::uint64_t base_seed = 0;
  int replicas = 1;
  int cycles = 1;

  void validate() const;
};

/// Uniform B-subset of {0, ..., D-1} without replacement, sorted ascending.
std::vector<std::int32_t> sample_projection(std::int64_t dimension, std::int64_t batch,
                                            CounterStream& stream);

/// z' = z - eta (D/B) Theta P z for one freshly sampled projection P.
Eigen::VectorXd sgd_inner_step(const Eigen::VectorXd& z, const NtkMatrix& ntk, double eta,
                               std::int64_t batch, CounterStream& stream);

/// Residual loss ||z||^2 / (2D).
double residual_loss(const Eigen::VectorXd& z);

/// p_i = (V^T z)_i^2 / lambda_i in the NTK's eigenvector order; pairs with
/// `ntk.spectrum().expanded()`.
PVec empirical_pvec(const Eigen::VectorXd& z, const NtkMatrix& ntk);

/// Initial residual of a replica: i.i.d. standard normal entries.
Eigen::VectorXd initial_residual(const NtkMatrix& ntk, std::uint64_t init_seed, std::uint32_t replica);

/// Stream address of inner step `step_in_cycle` of `cycle` for one worker.
/// Steps are numbered globally (cycle * S + step), so a run with S = 1
/// consumes exactly the draws of the matching multi-step run.
CounterStream inner_stream(std::uint64_t seed, std::uint32_t replica, std::uint32_t worker,
                           int cycle, int sync_period, int step_in_cycle);

/// (1/R) sum_k z~_k - z for one cycle, worker k drawing from stream
/// `worker_streams[k]`. Used for exchangeability checks.
Eigen::VectorXd averaged_pseudo_gradient(const Eigen::VectorXd& z, const NtkMatrix& ntk,
                                         const TwoPhaseConfig& config, std::uint64_t seed,
                                         std::uint32_t replica, int cycle,
                                         std::span<const std::uint32_t> worker_streams);

/// z <- (1 - nu) z + nu * mean_k z~_k after S inner steps per worker.
Eigen::VectorXd diloco_outer_cycle(const Eigen::VectorXd& z, const NtkMatrix& ntk,
                                   const TwoPhaseConfig& config, std::uint64_t seed,
                                   std::uint32_t replica, int cycle);

struct SimulationResult {
  TrajectoryRecord mean;                  // provenance kMonteCarloMean
  std::vector<TrajectoryRecord> replicas;  // provenance kMonteCarloReplica
};

struct SimulationOptions {
  int threads = 1;               // 0 = hardware concurrency
  bool keep_replicas = false;
};

/// Monte Carlo LA-DiLoCo. Replica r starts from initial_residual(init_seed, r)
/// and its workers draw from plan.base_seed. Losses are recorded at cycle
/// boundaries. If any replica diverges the mean is truncated there and flagged.
SimulationResult run_diloco(const NtkMatrix& ntk, const TwoPhaseConfig& config,
                            const ReplicaPlan& plan, std::uint64_t init_seed,
                            const SimulationOptions& options = {});

/// Single worker lookahead; config.noise must have R = 1.
SimulationResult run_la(const NtkMatrix& ntk, const TwoPhaseConfig& config,
                        const ReplicaPlan& plan, std::uint64_t init_seed,
                        const SimulationOptions& options = {});

/// Plain SGD for plan.cycles steps (R = 1, nu = 1, S = 1).
SimulationResult run_sgd(const NtkMatrix& ntk, double eta, std::int64_t batch,
                         const ReplicaPlan& plan, std::uint64_t init_seed,
                         const SimulationOptions& options = {});

}  // namespace twophase
