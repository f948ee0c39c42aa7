#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace twophase {

/// One distinct eigenvalue of the empirical NTK and its multiplicity.
struct SpectrumEntry {
  double value = 0.0;
  std::int64_t count = 0;

  friend bool operator==(const SpectrumEntry&, const SpectrumEntry&) = default;
};

/// Eigenvalue multiset of the empirical NTK stored as (value, count) blocks.
///
/// Every operator in the theory module acts block-wise, so a spectrum with
/// few distinct eigenvalues costs O(#entries) per step regardless of D.
/// Entries are kept in the order given; `expanded_values()` is the canonical
/// per-mode ordering (descending, ties in entry order).
class Spectrum {
 public:
  explicit Spectrum(std::vector<SpectrumEntry> entries);

  std::span<const SpectrumEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::int64_t dimension() const { return dimension_; }
  double max_value() const;
  bool is_isotropic() const;

  /// Length-D eigenvalue vector, descending, stable with respect to entries.
  std::vector<double> expanded_values() const;
  /// One count-1 entry per mode, in `expanded_values()` order.
  Spectrum expanded() const;
  /// Equal values merged (first occurrence keeps its position).
  Spectrum merged() const;

  nlohmann::json to_json() const;
  static Spectrum from_json(const nlohmann::json& j);

  friend bool operator==(const Spectrum&, const Spectrum&) = default;

 private:
  std::vector<SpectrumEntry> entries_;
  std::int64_t dimension_ = 0;
};

/// Two-level spectrum: bulk_val on round(bulk_frac*D) modes, spike_ratio*bulk_val
/// on the rest. Equal levels are merged.
Spectrum make_spiked(std::int64_t dimension, double bulk_frac, double bulk_val, double spike_ratio);

/// lambda_i = i^alpha for i = 1..D, scaled so the largest eigenvalue is 1.
Spectrum make_power_law(std::int64_t dimension, double alpha);

Spectrum make_isotropic(std::int64_t dimension, double value);

inline constexpr std::int64_t kDefaultNtkDimensionCap = 4096;

/// Explicit NTK with a given spectrum: Theta = V diag(lambda) V^T with a
/// Haar-random orthogonal V. Column i of V is the eigenvector for
/// `eigenvalues()[i]`, which follows `Spectrum::expanded_values()`.
class NtkMatrix {
 public:
  const Spectrum& spectrum() const { return spectrum_; }
  std::int64_t dimension() const { return spectrum_.dimension(); }
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& kernel() const { return kernel_; }
  /// True when the kernel is exactly a multiple of the identity.
  bool is_scalar() const { return scalar_; }
  double scalar_value() const { return eigenvalues_.size() ? eigenvalues_[0] : 0.0; }

  friend NtkMatrix realize_ntk(const Spectrum& spectrum, std::uint64_t seed,
                               std::int64_t dimension_cap);

 private:
  NtkMatrix(Spectrum spectrum) : spectrum_(std::move(spectrum)) {}

  Spectrum spectrum_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd kernel_;
  bool scalar_ = false;
};

/// Deterministic in (spectrum, seed). Isotropic spectra yield the kernel
/// value*I exactly; the basis is still drawn so `basis()` is always Haar.
NtkMatrix realize_ntk(const Spectrum& spectrum, std::uint64_t seed,
                      std::int64_t dimension_cap = kDefaultNtkDimensionCap);

/// Haar-distributed D x D orthogonal matrix (QR of a Gaussian matrix with
/// the R-diagonal sign fix).
Eigen::MatrixXd haar_orthogonal(std::int64_t dimension, std::uint64_t seed);

}  // namespace twophase
