#include "twophase/momentum.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "twophase/errors.hpp"

namespace twophase {

using detail::require;

std::string_view to_string(MomentumFlavor f) {
  return f == MomentumFlavor::kEma ? "ema" : "nesterov";
}

std::string_view to_string(SyncVariant v) {
  return v == SyncVariant::kKeepInnerMomentum ? "keep_inner_momentum" : "reset_inner_momentum";
}

MomentumFlavor parse_flavor(std::string_view text) {
  if (text == "ema") return MomentumFlavor::kEma;
  if (text == "nesterov") return MomentumFlavor::kNesterov;
  detail::fail("unknown momentum flavor '" + std::string(text) + "' (expected ema or nesterov)");
}

SyncVariant parse_sync_variant(std::string_view text) {
  if (text == "keep_inner_momentum") return SyncVariant::kKeepInnerMomentum;
  if (text == "reset_inner_momentum") return SyncVariant::kResetInnerMomentum;
  detail::fail("unknown sync variant '" + std::string(text) +
               "' (expected keep_inner_momentum or reset_inner_momentum)");
}

void ModeParams::validate() const {
  require(std::isfinite(lam) && lam >= 0.0, "mode params: lambda must be nonnegative");
  require(std::isfinite(eta) && eta >= 0.0, "mode params: eta must be nonnegative");
  require(std::isfinite(nu), "mode params: nu must be finite");
  require(sync_period >= 1, "mode params: S must be at least 1");
  require(beta_in >= 0.0 && beta_in < 1.0, "mode params: beta_in must lie in [0, 1)");
  require(beta_out >= 0.0 && beta_out < 1.0, "mode params: beta_out must lie in [0, 1)");
}

double nesterov_traditional_lr(double eta, double beta) { return (1.0 - beta) * eta; }
double nesterov_ema_units_lr(double traditional_eta, double beta) { return traditional_eta / (1.0 - beta); }

Eigen::Matrix2d single_step_matrix(double lam, double eta, double beta, MomentumFlavor flavor) {
  Eigen::Matrix2d m;
  if (flavor == MomentumFlavor::kEma) {
    m << 1.0 - eta * (1.0 - beta) * lam, -eta * beta,
         (1.0 - beta) * lam, beta;
  } else {
    m << 1.0 - (1.0 - beta * beta) * eta * lam, -eta * beta * beta,
         (1.0 - beta) * lam, beta;
  }
  return m;
}

ComplexWindow complex_region(double beta, MomentumFlavor flavor) {
  require(beta >= 0.0 && beta < 1.0, "complex_region: beta must lie in [0, 1)");
  // trace = t0 + t1 x, det = d0 + d1 x with x = eta * lambda.
  const double t0 = 1.0 + beta;
  double t1, d0 = beta, d1;
  ComplexWindow w;
  if (flavor == MomentumFlavor::kEma) {
    t1 = -(1.0 - beta);
    d1 = 0.0;
    w.asymptotic_lower = (1.0 - beta) / 4.0;
    w.asymptotic_upper = 2.0 * (1.0 + beta) / (1.0 - beta);
  } else {
    t1 = -(1.0 - beta * beta);
    d1 = -beta * (1.0 - beta);
    w.asymptotic_lower = (1.0 - beta) / ((1.0 + beta) * (1.0 + beta));
    w.asymptotic_upper = 1.0 / (1.0 - beta);
  }
  // disc(x) = a x^2 + b x + c with a > 0; complex pair strictly between the roots.
  const double a = t1 * t1;
  const double b = 2.0 * t0 * t1 - 4.0 * d1;
  const double c = t0 * t0 - 4.0 * d0;
  const double q = b * b - 4.0 * a * c;
  if (q <= 0.0) return w;
  const double sq = std::sqrt(q);
  const double big = -0.5 * (b + std::copysign(sq, b));
  double r1 = big / a;
  double r2 = c / big;
  if (r1 > r2) std::swap(r1, r2);
  w.empty = !(r1 < r2);
  w.lower = r1;
  w.upper = r2;
  return w;
}

namespace {

Eigen::Matrix2d matrix_power(Eigen::Matrix2d base, int exponent) {
  Eigen::Matrix2d result = Eigen::Matrix2d::Identity();
  while (exponent > 0) {
    if (exponent & 1) result = result * base;
    base = base * base;
    exponent >>= 1;
  }
  return result;
}

Eigen::Matrix2d outer_momentum_matrix(double effective, double nu, double beta, MomentumFlavor flavor) {
  const double gain = flavor == MomentumFlavor::kEma ? 1.0 - beta : 1.0 - beta * beta;
  const double carry = flavor == MomentumFlavor::kEma ? beta : beta * beta;
  Eigen::Matrix2d m;
  m << 1.0 - nu * gain * effective, -nu * carry,
       (1.0 - beta) * effective, beta;
  return m;
}

}  // namespace

Eigen::Matrix2d inner_cycle_matrix(const ModeParams& params) {
  params.validate();
  return matrix_power(single_step_matrix(params.lam, params.eta, params.beta_in, params.inner),
                      params.sync_period);
}

Eigen::Matrix2d sla_reduced_matrix(const ModeParams& params) {
  require(params.sync == SyncVariant::kResetInnerMomentum,
          "sla_reduced_matrix: the 2-D reduction requires reset_inner_momentum");
  const double effective = 1.0 - inner_cycle_matrix(params)(0, 0);
  return outer_momentum_matrix(effective, params.nu, params.beta_out, params.outer);
}

Eigen::Matrix4d sla_full_matrix(const ModeParams& params) {
  Eigen::Matrix4d t_in = Eigen::Matrix4d::Identity();
  t_in.topLeftCorner<2, 2>() = inner_cycle_matrix(params);

  const double b = params.beta_out;
  const double gain = params.outer == MomentumFlavor::kEma ? 1.0 - b : 1.0 - b * b;
  const double carry = params.outer == MomentumFlavor::kEma ? b : b * b;
  Eigen::Matrix4d t_out = Eigen::Matrix4d::Identity();
  t_out.row(2) << params.nu * gain, 0.0, 1.0 - params.nu * gain, -params.nu * carry;
  t_out.row(3) << -(1.0 - b), 0.0, 1.0 - b, b;

  Eigen::Matrix4d t_sync = Eigen::Matrix4d::Zero();
  t_sync(0, 2) = 1.0;
  t_sync(1, 1) = params.sync == SyncVariant::kKeepInnerMomentum ? 1.0 : 0.0;
  t_sync(2, 2) = 1.0;
  t_sync(3, 3) = 1.0;
  return t_sync * t_out * t_in;
}

Eigen::Matrix3d weight_ema_matrix(double lam, double eta, double beta1, double beta_ema) {
  require(beta_ema >= 0.0 && beta_ema <= 1.0, "weight_ema_matrix: beta_ema must lie in [0, 1]");
  Eigen::Matrix3d step = Eigen::Matrix3d::Identity();
  step.topLeftCorner<2, 2>() = single_step_matrix(lam, eta, beta1, MomentumFlavor::kEma);
  Eigen::Matrix3d average = Eigen::Matrix3d::Identity();
  average.row(2) << 1.0 - beta_ema, 0.0, beta_ema;
  return average * step;
}

Eigen::Matrix3d gpa_matrix(double lam, double eta, double mu_x, double mu_y) {
  const double mix = mu_x * mu_y;
  Eigen::Matrix3d m;
  m << -eta * lam * (1.0 - mix), 1.0 - mix, mix,
       -eta * lam, 1.0, 0.0,
       -(1.0 - mu_x) * eta * lam, 1.0 - mu_x, mu_x;
  return m;
}

double gpa_khat(double y, double z, double x, double mu_x, double mu_y) {
  const double mix = mu_x * mu_y;
  require(mix != 0.0, "gpa_khat: mu_x * mu_y must be nonzero");
  return (-y + (1.0 - mix) * z + mix * x) / mix;
}

std::array<std::complex<double>, 2> eigenvalues_2x2(const Eigen::Matrix2d& m) {
  const double tr = m.trace();
  const double det = m.determinant();
  const double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) {
    const double im = 0.5 * std::sqrt(-disc);
    return {{{0.5 * tr, im}, {0.5 * tr, -im}}};
  }
  const double big = 0.5 * (tr + std::copysign(std::sqrt(disc), tr));
  const double small = big != 0.0 ? det / big : 0.0;
  return {{{big, 0.0}, {small, 0.0}}};
}

ModeSystem spectral_summary(const Eigen::MatrixXd& matrix, int s_effective) {
  require(matrix.rows() == matrix.cols() && matrix.rows() >= 1,
          "spectral_summary: matrix must be square");
  require(s_effective >= 1, "spectral_summary: S_effective must be at least 1");
  ModeSystem out;
  out.matrix = matrix;
  out.s_effective = s_effective;
  const auto n = matrix.rows();
  if (n == 2) {
    const auto ev = eigenvalues_2x2(matrix);
    out.eigenvalues.assign(ev.begin(), ev.end());
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(matrix, false);
    if (solver.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "spectral_summary: eigensolver did not converge for\n" << matrix;
      throw NumericalError(msg.str());
    }
    const auto& ev = solver.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  }

  const double norm = std::max(1.0, matrix.cwiseAbs().rowwise().sum().maxCoeff());
  const double tolerance = 1e-8 * std::pow(norm, static_cast<double>(n));
  const Eigen::MatrixXcd complex_matrix = matrix.cast<std::complex<double>>();
  for (const auto& w : out.eigenvalues) {
    const Eigen::MatrixXcd shifted =
        complex_matrix - w * Eigen::MatrixXcd::Identity(n, n);
    if (std::abs(shifted.determinant()) > tolerance) {
      std::ostringstream msg;
      msg << "spectral_summary: eigenvalue " << w << " fails the residual check for\n" << matrix;
      throw NumericalError(msg.str());
    }
    out.rho = std::max(out.rho, std::abs(w));
  }
  out.r_cycle = -std::log(out.rho) + 0.0;
  out.r_step = out.r_cycle / static_cast<double>(s_effective);
  out.divergent = out.rho >= 1.0;
  return out;
}

}  // namespace twophase
