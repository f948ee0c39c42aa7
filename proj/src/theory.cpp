#include "twophase/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "twophase/errors.hpp"

namespace twophase {

using detail::require;

PVec::PVec(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) require(!std::isnan(v) && v >= 0.0, "pvec: entries must be nonnegative");
}

bool PVec::is_bounded(double limit) const {
  return std::all_of(values_.begin(), values_.end(),
                     [&](double v) { return std::isfinite(v) && v <= limit; });
}

NoiseModel::NoiseModel(std::int64_t batch, std::int64_t dimension, std::int64_t workers)
    : batch_(batch), dimension_(dimension), workers_(workers) {
  require(dimension >= 1, "noise model: D must be positive");
  require(batch >= 1 && batch <= dimension, "noise model: batch size must satisfy 1 <= B <= D");
  require(workers >= 1, "noise model: worker count R must be at least 1");
  weight_ = batch == dimension ? 0.0 : 1.0 / static_cast<double>(batch) - 1.0 / static_cast<double>(dimension);
}

void TwoPhaseConfig::validate() const {
  require(std::isfinite(eta) && eta > 0.0, "config: eta must be positive");
  require(std::isfinite(nu) && nu >= 0.0, "config: nu must be nonnegative");
  require(sync_period >= 1, "config: sync period S must be at least 1");
}

namespace {

void require_shape(const PVec& p, const Spectrum& spectrum) {
  require(p.size() == spectrum.size(), "pvec: size " + std::to_string(p.size()) +
                                           " does not match spectrum with " +
                                           std::to_string(spectrum.size()) + " entries");
}

void require_dimension(const Spectrum& spectrum, const NoiseModel& noise) {
  require(spectrum.dimension() == noise.dimension(),
          "noise model dimension does not match spectrum dimension");
}

}  // namespace

CycleOperator::CycleOperator(const Spectrum& spectrum, const TwoPhaseConfig& config)
    : config_(config), weight_(config.noise.weight()) {
  require(std::isfinite(config.eta) && config.eta >= 0.0, "config: eta must be nonnegative");
  require(std::isfinite(config.nu) && config.nu >= 0.0, "config: nu must be nonnegative");
  require(config.sync_period >= 1, "config: sync period S must be at least 1");
  require_dimension(spectrum, config.noise);
  const auto n = spectrum.size();
  lambda_.resize(n);
  count_.resize(n);
  contraction_.resize(n);
  diagonal_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = spectrum.entries()[i];
    lambda_[i] = e.value;
    count_[i] = static_cast<double>(e.count);
    const double step = 1.0 - config.eta * e.value;
    contraction_[i] = step * step;
    const double mean = (1.0 - config.nu) + config.nu * std::pow(step, config.sync_period);
    diagonal_[i] = mean * mean;
  }
}

PVec CycleOperator::apply(const PVec& p) const {
  require(p.size() == lambda_.size(), "pvec: size does not match operator");
  const auto n = lambda_.size();
  const double kick = weight_ * config_.eta * config_.eta;
  std::vector<double> signal(p.values().begin(), p.values().end());
  std::vector<double> noise(n, 0.0);
  if (kick != 0.0) {
    for (int k = 0; k < config_.sync_period; ++k) {
      double load = 0.0;
      for (std::size_t j = 0; j < n; ++j) load += count_[j] * lambda_[j] * (signal[j] + noise[j]);
      for (std::size_t i = 0; i < n; ++i) {
        noise[i] = contraction_[i] * noise[i] + kick * lambda_[i] * load;
        signal[i] *= contraction_[i];
      }
    }
  }
  const double scale = config_.nu * config_.nu / static_cast<double>(config_.noise.workers());
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = diagonal_[i] * p[i] + scale * noise[i];
  return PVec(std::move(out));
}

nlohmann::json CycleOperator::debug_dump() const {
  nlohmann::json modes = nlohmann::json::array();
  for (std::size_t i = 0; i < lambda_.size(); ++i) {
    modes.push_back({{"lambda", lambda_[i]}, {"count", count_[i]}, {"d", diagonal_[i]}});
  }
  return {{"eta", config_.eta},
          {"nu", config_.nu},
          {"S", config_.sync_period},
          {"B", config_.noise.batch()},
          {"R", config_.noise.workers()},
          {"D", config_.noise.dimension()},
          {"w", weight_},
          {"modes", modes}};
}

PVec sgd_step(const PVec& p, const Spectrum& spectrum, double eta, const NoiseModel& noise) {
  require_shape(p, spectrum);
  require_dimension(spectrum, noise);
  require(std::isfinite(eta) && eta >= 0.0, "sgd_step: eta must be nonnegative");
  const auto entries = spectrum.entries();
  double load = 0.0;
  for (std::size_t j = 0; j < entries.size(); ++j) {
    load += static_cast<double>(entries[j].count) * entries[j].value * p[j];
  }
  const double kick = noise.weight() * eta * eta * load;
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double step = 1.0 - eta * entries[i].value;
    out[i] = step * step * p[i] + kick * entries[i].value;
  }
  return PVec(std::move(out));
}

PVec la_cycle(const PVec& p, const Spectrum& spectrum, const TwoPhaseConfig& config) {
  require(config.noise.workers() == 1, "la_cycle: lookahead has a single worker (R = 1)");
  return diloco_cycle(p, spectrum, config);
}

PVec diloco_cycle(const PVec& p, const Spectrum& spectrum, const TwoPhaseConfig& config) {
  require_shape(p, spectrum);
  return CycleOperator(spectrum, config).apply(p);
}

double loss_from_pvec(const PVec& p, const Spectrum& spectrum) {
  require_shape(p, spectrum);
  double total = 0.0;
  const auto entries = spectrum.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    total += static_cast<double>(entries[i].count) * entries[i].value * p[i];
  }
  return total / (2.0 * static_cast<double>(spectrum.dimension()));
}

PVec init_pvec_iid(const Spectrum& spectrum) {
  std::vector<double> out;
  out.reserve(spectrum.size());
  for (const auto& e : spectrum.entries()) out.push_back(e.value > 0.0 ? 1.0 / e.value : 0.0);
  return PVec(std::move(out));
}

PVec expand_pvec(const PVec& p, const Spectrum& spectrum) {
  require_shape(p, spectrum);
  // Same stable descending order as Spectrum::expanded_values().
  std::vector<std::size_t> order(spectrum.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto entries = spectrum.entries();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return entries[a].value > entries[b].value; });
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(spectrum.dimension()));
  for (auto idx : order) out.insert(out.end(), static_cast<std::size_t>(entries[idx].count), p[idx]);
  return PVec(std::move(out));
}

LossCurve iterate_cycles(const CycleOperator& op, const Spectrum& spectrum, PVec p0, int cycles) {
  require(cycles >= 0, "iterate_cycles: cycle count must be nonnegative");
  LossCurve curve;
  curve.losses.reserve(static_cast<std::size_t>(cycles) + 1);
  PVec p = std::move(p0);
  curve.losses.push_back(loss_from_pvec(p, spectrum));
  for (int c = 0; c < cycles; ++c) {
    p = op.apply(p);
    const double loss = loss_from_pvec(p, spectrum);
    if (!p.is_bounded() || !std::isfinite(loss) || loss > kDivergenceLimit) {
      curve.diverged = true;
      break;
    }
    curve.losses.push_back(loss);
  }
  return curve;
}

double noise_coefficient(int s, const TwoPhaseConfig& config) {
  require(s >= 1 && s <= config.sync_period, "noise_coefficient: s must satisfy 1 <= s <= S");
  const auto r = static_cast<double>(config.noise.workers());
  const auto total = static_cast<double>(config.noise.total_batch());
  return std::pow(r, s - 1) / std::pow(total, s) * config.nu * config.nu *
         std::pow(config.eta, 2 * s);
}

double coefficient_ratio(int s, LearningRates local, LearningRates diloco, std::int64_t workers) {
  require(workers >= 1, "coefficient_ratio: R must be at least 1");
  const double nu_ratio = diloco.nu / local.nu;
  return nu_ratio * nu_ratio * std::pow(static_cast<double>(workers), s - 1) *
         std::pow(diloco.eta / local.eta, 2 * s);
}

LearningRates scaling_rule(LearningRates local, std::int64_t workers) {
  require(workers >= 1, "scaling_rule: R must be at least 1");
  if (workers == 1) return local;
  const double root = std::sqrt(static_cast<double>(workers));
  return {local.nu * root, local.eta / root};
}

Stability stability_region(double eta, double nu, double lam, int sync_period) {
  require(nu >= 0.0, "stability_region: nu must be nonnegative");
  require(sync_period >= 1, "stability_region: S must be at least 1");
  if (nu == 0.0) return Stability::kMarginal;
  const double inner = std::pow(1.0 - eta * lam, sync_period);
  const double lower = 1.0 - 2.0 / nu;
  if (inner == 1.0 || inner == lower) return Stability::kMarginal;
  return (lower < inner && inner < 1.0) ? Stability::kStable : Stability::kUnstable;
}

Eigen::MatrixXd dense_cycle_matrix(const Spectrum& spectrum, const TwoPhaseConfig& config,
                                   std::int64_t dense_cap) {
  require(spectrum.dimension() <= dense_cap,
          "dense_cycle_matrix: dimension " + std::to_string(spectrum.dimension()) +
              " exceeds dense cap " + std::to_string(dense_cap));
  require_dimension(spectrum, config.noise);
  const auto values = spectrum.expanded_values();
  const auto n = static_cast<Eigen::Index>(values.size());
  const Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
  const Eigen::ArrayXd step = 1.0 - config.eta * lam.array();
  const Eigen::VectorXd contraction = (step * step).matrix();
  const Eigen::MatrixXd kick = config.noise.weight() * config.eta * config.eta * lam * lam.transpose();

  Eigen::MatrixXd signal = Eigen::MatrixXd::Identity(n, n);  // A^k
  Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(n, n);      // T_k - A^k
  for (int k = 0; k < config.sync_period; ++k) {
    noise = contraction.asDiagonal() * noise + kick * (signal + noise);
    signal = contraction.asDiagonal() * signal;
  }
  const Eigen::ArrayXd mean = (1.0 - config.nu) + config.nu * step.pow(config.sync_period);
  Eigen::MatrixXd out = config.nu * config.nu / static_cast<double>(config.noise.workers()) * noise;
  out.diagonal() += (mean * mean).matrix();
  return out;
}

Theorem1Result theorem1_check(double lam0, std::int64_t dimension, int sync_period, double eta,
                              double nu, std::int64_t total_batch,
                              std::span<const std::int64_t> workers, std::int64_t dense_cap) {
  require(!workers.empty(), "theorem1_check: R list must not be empty");
  const Spectrum spectrum = make_isotropic(dimension, lam0);
  Theorem1Result result;
  for (auto r : workers) {
    require(r >= 1 && total_batch % r == 0,
            "theorem1_check: R = " + std::to_string(r) + " does not divide B_tot = " +
                std::to_string(total_batch));
    const NoiseModel noise(total_batch / r, dimension, r);
    const TwoPhaseConfig config{eta, nu, sync_period, noise};
    config.validate();
    const Eigen::MatrixXd f = dense_cycle_matrix(spectrum, config, dense_cap);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(f, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("theorem1_check: eigensolve failed");
    result.rows.push_back({r, noise.batch(), solver.eigenvalues().maxCoeff()});
  }
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    if (!(result.rows[i].max_eigenvalue > result.rows[i - 1].max_eigenvalue)) {
      result.strictly_increasing = false;
    }
  }
  return result;
}

}  // namespace twophase
