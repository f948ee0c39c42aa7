#include "twophase/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "twophase/errors.hpp"
#include "twophase/rng.hpp"

namespace twophase {

using detail::require;

Spectrum::Spectrum(std::vector<SpectrumEntry> entries) : entries_(std::move(entries)) {
  require(!entries_.empty(), "spectrum: at least one entry required");
  for (const auto& e : entries_) {
    require(std::isfinite(e.value) && e.value >= 0.0,
            "spectrum: eigenvalues must be finite and nonnegative");
    require(e.count >= 1, "spectrum: entry counts must be positive");
    dimension_ += e.count;
  }
}

double Spectrum::max_value() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, e.value);
  return m;
}

bool Spectrum::is_isotropic() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [&](const SpectrumEntry& e) { return e.value == entries_.front().value; });
}

std::vector<double> Spectrum::expanded_values() const {
  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return entries_[a].value > entries_[b].value;
  });
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(dimension_));
  for (auto idx : order) out.insert(out.end(), static_cast<std::size_t>(entries_[idx].count), entries_[idx].value);
  return out;
}

Spectrum Spectrum::expanded() const {
  std::vector<SpectrumEntry> out;
  for (double v : expanded_values()) out.push_back({v, 1});
  return Spectrum(std::move(out));
}

Spectrum Spectrum::merged() const {
  std::vector<SpectrumEntry> out;
  for (const auto& e : entries_) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SpectrumEntry& o) { return o.value == e.value; });
    if (it == out.end()) {
      out.push_back(e);
    } else {
      it->count += e.count;
    }
  }
  return Spectrum(std::move(out));
}

nlohmann::json Spectrum::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : entries_) entries.push_back({e.value, e.count});
  return {{"entries", entries}};
}

Spectrum Spectrum::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("entries") && j.size() == 1,
          "spectrum: expected {\"entries\": [[value, count], ...]}");
  const auto& arr = j.at("entries");
  require(arr.is_array(), "spectrum.entries: must be an array");
  std::vector<SpectrumEntry> entries;
  for (const auto& item : arr) {
    require(item.is_array() && item.size() == 2 && item[0].is_number() &&
                item[1].is_number_integer(),
            "spectrum.entries: each entry must be [value, integer count]");
    entries.push_back({item[0].get<double>(), item[1].get<std::int64_t>()});
  }
  return Spectrum(std::move(entries));
}

Spectrum make_spiked(std::int64_t dimension, double bulk_frac, double bulk_val, double spike_ratio) {
  require(dimension >= 2, "make_spiked: D must be at least 2");
  require(bulk_frac > 0.0 && bulk_frac < 1.0, "make_spiked: bulk_frac must lie in (0, 1)");
  require(bulk_val > 0.0 && spike_ratio > 0.0,
          "make_spiked: bulk_val and spike_ratio must be positive");
  const auto bulk = static_cast<std::int64_t>(std::llround(bulk_frac * static_cast<double>(dimension)));
  require(bulk >= 1 && dimension - bulk >= 1,
          "make_spiked: bulk_frac produces an empty bulk or spike block");
  return Spectrum({{bulk_val, bulk}, {spike_ratio * bulk_val, dimension - bulk}}).merged();
}

Spectrum make_power_law(std::int64_t dimension, double alpha) {
  require(dimension >= 1, "make_power_law: D must be positive");
  std::vector<double> raw(static_cast<std::size_t>(dimension));
  for (std::int64_t i = 0; i < dimension; ++i) raw[static_cast<std::size_t>(i)] = std::pow(static_cast<double>(i + 1), alpha);
  const double top = *std::max_element(raw.begin(), raw.end());
  std::vector<SpectrumEntry> entries;
  entries.reserve(raw.size());
  for (double v : raw) entries.push_back({v / top, 1});
  return Spectrum(std::move(entries));
}

Spectrum make_isotropic(std::int64_t dimension, double value) {
  require(dimension >= 1, "make_isotropic: D must be positive");
  require(value > 0.0, "make_isotropic: value must be positive");
  return Spectrum({{value, dimension}});
}

Eigen::MatrixXd haar_orthogonal(std::int64_t dimension, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(dimension);
  Eigen::MatrixXd gaussian(n, n);
  // Column j draws from its own substream so the fill order is irrelevant.
  for (Eigen::Index j = 0; j < n; ++j) {
    CounterStream stream(seed, 0, static_cast<std::uint32_t>(j), 0xB0A5u);
    for (Eigen::Index i = 0; i < n; ++i) gaussian(i, j) = stream.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

NtkMatrix realize_ntk(const Spectrum& spectrum, std::uint64_t seed, std::int64_t dimension_cap) {
  require(spectrum.dimension() <= dimension_cap,
          "realize_ntk: dimension " + std::to_string(spectrum.dimension()) +
              " exceeds cap " + std::to_string(dimension_cap));
  NtkMatrix ntk(spectrum);
  const auto values = spectrum.expanded_values();
  ntk.eigenvalues_ = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  ntk.basis_ = haar_orthogonal(spectrum.dimension(), seed);
  if (spectrum.is_isotropic()) {
    const auto n = static_cast<Eigen::Index>(values.size());
    ntk.kernel_ = values.front() * Eigen::MatrixXd::Identity(n, n);
    ntk.scalar_ = true;
  } else {
    Eigen::MatrixXd k = ntk.basis_ * ntk.eigenvalues_.asDiagonal() * ntk.basis_.transpose();
    ntk.kernel_ = 0.5 * (k + k.transpose());
  }
  return ntk;
}

}  // namespace twophase
