#include "twophase/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "twophase/errors.hpp"
#include "twophase/parallel.hpp"

namespace twophase {

using detail::require;

void ReplicaPlan::validate() const {
  require(replicas >= 1, "replica plan: replica count must be positive");
  require(cycles >= 1, "replica plan: cycle count must be positive");
}

std::vector<std::int32_t> sample_projection(std::int64_t dimension, std::int64_t batch,
                                            CounterStream& stream) {
  require(dimension >= 1 && dimension <= std::numeric_limits<std::int32_t>::max(),
          "sample_projection: D out of range");
  require(batch >= 1 && batch <= dimension, "sample_projection: batch size must satisfy 1 <= B <= D");
  // Floyd's algorithm: each B-subset is produced with probability 1/C(D, B).
  std::vector<std::uint8_t> chosen(static_cast<std::size_t>(dimension), 0);
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (std::int64_t j = dimension - batch; j < dimension; ++j) {
    auto t = static_cast<std::int64_t>(stream.uniform_index(static_cast<std::uint32_t>(j + 1)));
    if (chosen[static_cast<std::size_t>(t)]) t = j;
    chosen[static_cast<std::size_t>(t)] = 1;
    out.push_back(static_cast<std::int32_t>(t));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::VectorXd sgd_inner_step(const Eigen::VectorXd& z, const NtkMatrix& ntk, double eta,
                               std::int64_t batch, CounterStream& stream) {
  require(z.size() == ntk.dimension(), "sgd_inner_step: residual has wrong dimension");
  const auto subset = sample_projection(ntk.dimension(), batch, stream);
  const double gain = eta * static_cast<double>(ntk.dimension()) / static_cast<double>(batch);
  Eigen::VectorXd out = z;
  if (ntk.is_scalar()) {
    const double c = gain * ntk.scalar_value();
    for (auto i : subset) out[i] -= c * z[i];
  } else {
    for (auto i : subset) out.noalias() -= (gain * z[i]) * ntk.kernel().col(i);
  }
  return out;
}

double residual_loss(const Eigen::VectorXd& z) {
  return z.squaredNorm() / (2.0 * static_cast<double>(z.size()));
}

PVec empirical_pvec(const Eigen::VectorXd& z, const NtkMatrix& ntk) {
  const Eigen::VectorXd rotated = ntk.basis().transpose() * z;
  std::vector<double> out(static_cast<std::size_t>(rotated.size()));
  for (Eigen::Index i = 0; i < rotated.size(); ++i) {
    const double lam = ntk.eigenvalues()[i];
    out[static_cast<std::size_t>(i)] = lam > 0.0 ? rotated[i] * rotated[i] / lam : 0.0;
  }
  return PVec(std::move(out));
}

Eigen::VectorXd initial_residual(const NtkMatrix& ntk, std::uint64_t init_seed, std::uint32_t replica) {
  CounterStream stream(init_seed, replica, kInitWorker, 0);
  Eigen::VectorXd z(ntk.dimension());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = stream.normal();
  return z;
}

CounterStream inner_stream(std::uint64_t seed, std::uint32_t replica, std::uint32_t worker,
                           int cycle, int sync_period, int step_in_cycle) {
  const auto step = static_cast<std::uint64_t>(cycle) * static_cast<std::uint64_t>(sync_period) +
                    static_cast<std::uint64_t>(step_in_cycle);
  require(step <= std::numeric_limits<std::uint32_t>::max(), "inner_stream: step counter overflow");
  return CounterStream(seed, replica, worker, static_cast<std::uint32_t>(step));
}

namespace {

Eigen::VectorXd worker_sum(const Eigen::VectorXd& z, const NtkMatrix& ntk,
                           const TwoPhaseConfig& config, std::uint64_t seed, std::uint32_t replica,
                           int cycle, std::span<const std::uint32_t> worker_streams) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(z.size());
  for (auto worker : worker_streams) {
    Eigen::VectorXd inner = z;
    for (int s = 0; s < config.sync_period; ++s) {
      auto stream = inner_stream(seed, replica, worker, cycle, config.sync_period, s);
      inner = sgd_inner_step(inner, ntk, config.eta, config.noise.batch(), stream);
    }
    sum += inner;
  }
  return sum;
}

std::vector<std::uint32_t> identity_workers(std::int64_t workers) {
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(workers));
  for (std::size_t k = 0; k < ids.size(); ++k) ids[k] = static_cast<std::uint32_t>(k);
  return ids;
}

void check_config(const NtkMatrix& ntk, const TwoPhaseConfig& config) {
  config.validate();
  require(config.noise.dimension() == ntk.dimension(),
          "simulation: noise model dimension does not match NTK dimension");
}

}  // namespace

Eigen::VectorXd averaged_pseudo_gradient(const Eigen::VectorXd& z, const NtkMatrix& ntk,
                                         const TwoPhaseConfig& config, std::uint64_t seed,
                                         std::uint32_t replica, int cycle,
                                         std::span<const std::uint32_t> worker_streams) {
  require(!worker_streams.empty(), "averaged_pseudo_gradient: no workers");
  const Eigen::VectorXd sum = worker_sum(z, ntk, config, seed, replica, cycle, worker_streams);
  return sum / static_cast<double>(worker_streams.size()) - z;
}

Eigen::VectorXd diloco_outer_cycle(const Eigen::VectorXd& z, const NtkMatrix& ntk,
                                   const TwoPhaseConfig& config, std::uint64_t seed,
                                   std::uint32_t replica, int cycle) {
  const auto workers = identity_workers(config.noise.workers());
  const Eigen::VectorXd mean =
      worker_sum(z, ntk, config, seed, replica, cycle, workers) / static_cast<double>(workers.size());
  // Convex-combination form: with nu = 1 the result is bitwise the worker mean.
  return (1.0 - config.nu) * z + config.nu * mean;
}

SimulationResult run_diloco(const NtkMatrix& ntk, const TwoPhaseConfig& config,
                            const ReplicaPlan& plan, std::uint64_t init_seed,
                            const SimulationOptions& options) {
  check_config(ntk, config);
  plan.validate();
  const RunSnapshot snapshot{config.noise.workers(), config.noise.batch(), ntk.dimension(),
                             config.sync_period,     config.eta,           config.nu,
                             plan.base_seed};

  std::vector<TrajectoryRecord> replicas(static_cast<std::size_t>(plan.replicas));
  parallel_for(replicas.size(), options.threads, [&](std::size_t r) {
    auto& rec = replicas[r];
    rec.provenance = Provenance::kMonteCarloReplica;
    rec.config = snapshot;
    rec.replicas = 1;
    const auto replica = static_cast<std::uint32_t>(r);
    Eigen::VectorXd z = initial_residual(ntk, init_seed, replica);
    rec.losses.reserve(static_cast<std::size_t>(plan.cycles) + 1);
    rec.losses.push_back(residual_loss(z));
    for (int c = 0; c < plan.cycles; ++c) {
      z = diloco_outer_cycle(z, ntk, config, plan.base_seed, replica, c);
      const double loss = residual_loss(z);
      if (!std::isfinite(loss) || loss > kDivergenceLimit) {
        rec.diverged = true;
        break;
      }
      rec.losses.push_back(loss);
    }
  });

  SimulationResult result;
  auto& mean = result.mean;
  mean.provenance = Provenance::kMonteCarloMean;
  mean.config = snapshot;
  mean.replicas = plan.replicas;
  std::size_t length = replicas.front().losses.size();
  for (const auto& rec : replicas) {
    length = std::min(length, rec.losses.size());
    mean.diverged = mean.diverged || rec.diverged;
  }
  const auto n = static_cast<double>(replicas.size());
  for (std::size_t c = 0; c < length; ++c) {
    double sum = 0.0;
    for (const auto& rec : replicas) sum += rec.losses[c];
    const double avg = sum / n;
    double sq = 0.0;
    for (const auto& rec : replicas) sq += (rec.losses[c] - avg) * (rec.losses[c] - avg);
    mean.losses.push_back(avg);
    mean.standard_errors.push_back(replicas.size() > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0);
  }
  if (options.keep_replicas) result.replicas = std::move(replicas);
  return result;
}

SimulationResult run_la(const NtkMatrix& ntk, const TwoPhaseConfig& config,
                        const ReplicaPlan& plan, std::uint64_t init_seed,
                        const SimulationOptions& options) {
  require(config.noise.workers() == 1, "run_la: lookahead has a single worker (R = 1)");
  return run_diloco(ntk, config, plan, init_seed, options);
}

SimulationResult run_sgd(const NtkMatrix& ntk, double eta, std::int64_t batch,
                         const ReplicaPlan& plan, std::uint64_t init_seed,
                         const SimulationOptions& options) {
  const TwoPhaseConfig config{eta, 1.0, 1, NoiseModel(batch, ntk.dimension(), 1)};
  return run_diloco(ntk, config, plan, init_seed, options);
}

}  // namespace twophase
