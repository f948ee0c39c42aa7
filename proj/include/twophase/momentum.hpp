#pragma once

#include <array>
#include <complex>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace twophase {

enum class MomentumFlavor { kEma, kNesterov };
enum class SyncVariant { kKeepInnerMomentum, kResetInnerMomentum };

std::string_view to_string(MomentumFlavor f);
std::string_view to_string(SyncVariant v);
MomentumFlavor parse_flavor(std::string_view text);
SyncVariant parse_sync_variant(std::string_view text);

/// Per-eigenmode SLA parameters. Nesterov is expressed in EMA units; see
/// `nesterov_traditional_lr` for the usual parameterization.
struct ModeParams {
  double lam = 0.0;
  double eta = 1.0;
  double nu = 1.0;
  int sync_period = 1;
  double beta_in = 0.0;
  double beta_out = 0.0;
  MomentumFlavor inner = MomentumFlavor::kEma;
  MomentumFlavor outer = MomentumFlavor::kEma;
  SyncVariant sync = SyncVariant::kResetInnerMomentum;

  void validate() const;
};

/// eta~ = (1 - beta) eta.
double nesterov_traditional_lr(double eta, double beta);
double nesterov_ema_units_lr(double traditional_eta, double beta);

/// One momentum-GD step on the (z, k) coordinates of a single mode.
///   EMA:      [[1 - eta(1-b)lam, -eta b],   [(1-b)lam, b]]
///   Nesterov: [[1 - (1-b^2)eta lam, -eta b^2], [(1-b)lam, b]]
Eigen::Matrix2d single_step_matrix(double lam, double eta, double beta, MomentumFlavor flavor);

/// Open interval of eta*lambda where the single-step eigenvalues form a
/// complex pair. `lower`/`upper` are the exact roots of the discriminant
/// (a quadratic in eta*lambda); `asymptotic_*` are the 1 - beta << 1 forms:
/// EMA ((1-b)/4, 2(1+b)/(1-b)), Nesterov ((1-b)/(1+b)^2, 1/(1-b)).
struct ComplexWindow {
  bool empty = true;
  double lower = 0.0;
  double upper = 0.0;
  double asymptotic_lower = 0.0;
  double asymptotic_upper = 0.0;

  bool contains(double eta_lambda) const { return !empty && lower < eta_lambda && eta_lambda < upper; }
};

ComplexWindow complex_region(double beta, MomentumFlavor flavor);

/// F = (inner single-step matrix)^S; F(0,0) sets the effective eigenvalue 1 - F11.
Eigen::Matrix2d inner_cycle_matrix(const ModeParams& params);

/// Momentum-GD on the effective eigenvalue 1 - F11 (reset_inner_momentum only).
Eigen::Matrix2d sla_reduced_matrix(const ModeParams& params);

/// T_sync * T_out * T_in on (z~, k~, z, k).
Eigen::Matrix4d sla_full_matrix(const ModeParams& params);

/// (z, k, z_hat) with z_hat an EMA of z evaluated after each EMA-momentum step.
Eigen::Matrix3d weight_ema_matrix(double lam, double eta, double beta1, double beta_ema);

/// GPA on (y, z, x) with the base update d(y) = -lam y.
Eigen::Matrix3d gpa_matrix(double lam, double eta, double mu_x, double mu_y);

/// k^ = (-y + (1 - mu_x mu_y) z + mu_x mu_y x) / (mu_x mu_y)
double gpa_khat(double y, double z, double x, double mu_x, double mu_y);

/// Eigenvalues, spectral radius and convergence rates of a transition matrix.
/// r_cycle = -ln(rho), r_step = r_cycle / S_effective.
struct ModeSystem {
  Eigen::MatrixXd matrix;
  std::vector<std::complex<double>> eigenvalues;
  double rho = 0.0;
  double r_cycle = 0.0;
  double r_step = 0.0;
  int s_effective = 1;
  bool divergent = false;  // rho >= 1
};

/// 2x2 uses the closed form; larger matrices use a real Schur eigensolver.
/// Every eigenvalue must leave |det(M - wI)| below 1e-8 * max(1, ||M||)^n,
/// otherwise NumericalError (with the matrix in the message) is thrown.
ModeSystem spectral_summary(const Eigen::MatrixXd& matrix, int s_effective);

/// Closed-form eigenvalues of a real 2x2 matrix.
std::array<std::complex<double>, 2> eigenvalues_2x2(const Eigen::Matrix2d& m);

}  // namespace twophase
