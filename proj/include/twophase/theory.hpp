#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "twophase/spectrum.hpp"

namespace twophase {

/// Values above this (or non-finite) end a trajectory with the diverged flag.
inline constexpr double kDivergenceLimit = 1e300;
inline constexpr std::int64_t kDefaultDenseCap = 512;

/// Normalized second-moment diagonal, one value per spectrum entry.
///
/// A PVec built for `spectrum.expanded()` is the length-D per-mode form; a
/// PVec built for a block spectrum carries one value per (value, count)
/// block. The operators map block-constant vectors to block-constant ones,
/// so the two forms agree.
class PVec {
 public:
  PVec() = default;
  explicit PVec(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  /// False once any entry is non-finite or exceeds `limit`.
  bool is_bounded(double limit = kDivergenceLimit) const;

  friend bool operator==(const PVec&, const PVec&) = default;

 private:
  std::vector<double> values_;
};

/// Minibatch noise: per-worker batch B out of D samples, R workers.
class NoiseModel {
 public:
  NoiseModel(std::int64_t batch, std::int64_t dimension, std::int64_t workers = 1);
  static NoiseModel full_batch(std::int64_t dimension) { return {dimension, dimension, 1}; }

  std::int64_t batch() const { return batch_; }
  std::int64_t dimension() const { return dimension_; }
  std::int64_t workers() const { return workers_; }
  std::int64_t total_batch() const { return batch_ * workers_; }
  /// 1/B - 1/D; zero exactly when B == D.
  double weight() const { return weight_; }

 private:
  std::int64_t batch_;
  std::int64_t dimension_;
  std::int64_t workers_;
  double weight_;
};

/// Inner learning rate eta, outer learning rate nu, sync period S.
struct TwoPhaseConfig {
  double eta = 0.0;
  double nu = 1.0;
  int sync_period = 1;
  NoiseModel noise = NoiseModel::full_batch(1);

  void validate() const;
};

/// One LA-DiLoCo cycle on p:
///   p' = [(1-nu) + nu(1-eta*lam)^S]^2 p + (nu^2/R) [T_S - (1-eta*lam)^{2S}] p,
/// with T_S = (A + B)^S, A = (1-eta*Lambda)^2, B = w eta^2 Lambda 1 1^T Lambda.
///
/// T_S is never formed. The noise bracket is accumulated as n <- A n + B (A^k p + n),
/// a sum of nonnegative terms, so the result stays elementwise nonnegative and
/// is exactly zero when w == 0.
class CycleOperator {
 public:
  CycleOperator(const Spectrum& spectrum, const TwoPhaseConfig& config);

  PVec apply(const PVec& p) const;

  /// [(1-nu) + nu(1-eta*lam)^S]^2 per spectrum entry.
  std::span<const double> deterministic_diagonal() const { return diagonal_; }
  double noise_weight() const { return weight_; }
  const TwoPhaseConfig& config() const { return config_; }

  nlohmann::json debug_dump() const;

 private:
  std::vector<double> lambda_;
  std::vector<double> count_;
  std::vector<double> contraction_;  // (1 - eta*lam)^2
  std::vector<double> diagonal_;
  TwoPhaseConfig config_;
  double weight_;
};

/// p' = (A + B) p. eta >= 0. R in `noise` is ignored.
PVec sgd_step(const PVec& p, const Spectrum& spectrum, double eta, const NoiseModel& noise);
/// Lookahead cycle; requires a single worker.
PVec la_cycle(const PVec& p, const Spectrum& spectrum, const TwoPhaseConfig& config);
PVec diloco_cycle(const PVec& p, const Spectrum& spectrum, const TwoPhaseConfig& config);

/// Loss (1/(2D)) sum_i lambda_i p_i. The 1/2 matches L = ||z||^2 / (2D).
double loss_from_pvec(const PVec& p, const Spectrum& spectrum);
/// p_i = 1/lambda_i (0 for zero modes): the image of z_0 ~ N(0, I).
PVec init_pvec_iid(const Spectrum& spectrum);
/// Broadcast a block PVec to per-mode form aligned with `spectrum.expanded()`.
PVec expand_pvec(const PVec& p, const Spectrum& spectrum);

struct LossCurve {
  std::vector<double> losses;  // initial loss followed by one value per cycle
  bool diverged = false;
};

/// Iterates `op` for `cycles` cycles; truncates at the first unbounded state.
LossCurve iterate_cycles(const CycleOperator& op, const Spectrum& spectrum, PVec p0, int cycles);

/// Closed-form noise series coefficient a_s = R^{s-1} nu^2 eta^{2s} / B_tot^s, 1 <= s <= S.
/// This is the B << D form; the exact expansion uses w^s in place of B^{-s}.
double noise_coefficient(int s, const TwoPhaseConfig& config);

struct LearningRates {
  double nu = 1.0;
  double eta = 0.0;
};

/// a_{s,dil} / a_{s,loc} at equal total batch.
double coefficient_ratio(int s, LearningRates local, LearningRates diloco, std::int64_t workers);
/// eta_dil = eta_loc / sqrt(R), nu_dil * eta_dil = nu_loc * eta_loc.
LearningRates scaling_rule(LearningRates local, std::int64_t workers);

enum class Stability { kStable, kUnstable, kMarginal };

/// Deterministic LA stability of one mode: 1 - 2/nu < (1 - eta*lam)^S < 1.
/// Equality on either side, and nu == 0 (frozen dynamics), are kMarginal.
Stability stability_region(double eta, double nu, double lam, int sync_period);

/// Dense D x D cycle operator over `spectrum.expanded()`.
Eigen::MatrixXd dense_cycle_matrix(const Spectrum& spectrum, const TwoPhaseConfig& config,
                                   std::int64_t dense_cap = kDefaultDenseCap);

struct Theorem1Row {
  std::int64_t workers = 1;
  std::int64_t batch = 1;
  double max_eigenvalue = 0.0;
};

struct Theorem1Result {
  std::vector<Theorem1Row> rows;
  bool strictly_increasing = true;
};

/// Largest eigenvalue of the dense cycle operator for each R at fixed total
/// batch on an isotropic spectrum. Every R must divide B_tot.
Theorem1Result theorem1_check(double lam0, std::int64_t dimension, int sync_period, double eta,
                              double nu, std::int64_t total_batch,
                              std::span<const std::int64_t> workers,
                              std::int64_t dense_cap = kDefaultDenseCap);

}  // namespace twophase
