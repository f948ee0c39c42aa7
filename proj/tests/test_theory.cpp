#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "twophase/errors.hpp"
#include "twophase/theory.hpp"

using namespace twophase;

namespace {

PVec ones(std::size_t n) { return PVec(std::vector<double>(n, 1.0)); }

Eigen::VectorXd to_eigen(const PVec& p) {
  return Eigen::Map<const Eigen::VectorXd>(p.values().data(), static_cast<Eigen::Index>(p.size()));
}

double rel_diff(const PVec& a, const PVec& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-300});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

// Independent dense construction of A, B and the cycle matrix straight from
// the defining formulas (matrix powers, no accumulation trick).
struct DenseParts {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
};

DenseParts dense_parts(const std::vector<double>& lam, double eta, const NoiseModel& noise) {
  const auto n = static_cast<Eigen::Index>(lam.size());
  Eigen::VectorXd l = Eigen::Map<const Eigen::VectorXd>(lam.data(), n);
  DenseParts parts;
  parts.a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) parts.a(i, i) = (1.0 - eta * l[i]) * (1.0 - eta * l[i]);
  parts.b = noise.weight() * eta * eta * l * l.transpose();
  return parts;
}

Eigen::MatrixXd mpow(const Eigen::MatrixXd& m, int k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < k; ++i) out = out * m;
  return out;
}

Eigen::MatrixXd brute_cycle(const std::vector<double>& lam, const TwoPhaseConfig& cfg) {
  const auto parts = dense_parts(lam, cfg.eta, cfg.noise);
  const auto n = static_cast<Eigen::Index>(lam.size());
  Eigen::MatrixXd det = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = (1.0 - cfg.nu) + cfg.nu * std::pow(1.0 - cfg.eta * lam[i], cfg.sync_period);
    det(i, i) = m * m;
  }
  const Eigen::MatrixXd bracket = mpow(parts.a + parts.b, cfg.sync_period) - mpow(parts.a, cfg.sync_period);
  return det + cfg.nu * cfg.nu / static_cast<double>(cfg.noise.workers()) * bracket;
}

}  // namespace

TEST_CASE("sgd_step: full batch has no noise term") {
  const Spectrum s({{1.0, 2}, {0.3, 3}});
  const PVec p({2.0, 5.0});
  const auto out = sgd_step(p, s, 0.4, NoiseModel::full_batch(5));
  CHECK(out[0] == (1 - 0.4) * (1 - 0.4) * 2.0);
  CHECK(out[1] == (1 - 0.12) * (1 - 0.12) * 5.0);
}

TEST_CASE("sgd_step: zero learning rate is the identity") {
  const Spectrum s({{1.0, 2}, {0.3, 3}});
  const PVec p({2.0, 5.0});
  CHECK(sgd_step(p, s, 0.0, NoiseModel(1, 5)) == p);
}

TEST_CASE("sgd_step: two-mode hand example matches dense oracle") {
  const auto s = make_isotropic(2, 1.0).expanded();
  const NoiseModel noise(1, 2);
  const auto out = sgd_step(ones(2), s, 0.5, noise);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-15));
  const auto parts = dense_parts({1.0, 1.0}, 0.5, noise);
  const Eigen::VectorXd dense = (parts.a + parts.b) * Eigen::VectorXd::Ones(2);
  CHECK(std::abs(dense[0] - out[0]) < 1e-15);
}

TEST_CASE("la_cycle: nu = 1 equals S sgd steps") {
  const auto s = make_spiked(100, 0.99, 1.0, 20.0);
  const NoiseModel noise(20, 100);
  PVec p = init_pvec_iid(s);
  PVec q = p;
  const int S = 7;
  for (int k = 0; k < S; ++k) q = sgd_step(q, s, 0.03, noise);
  const auto r = la_cycle(p, s, {0.03, 1.0, S, noise});
  CHECK(rel_diff(q, r) <= 1e-12);
}

TEST_CASE("la_cycle: nu = 0 is the identity") {
  const auto s = make_spiked(100, 0.99, 1.0, 20.0);
  const PVec p = init_pvec_iid(s);
  CHECK(la_cycle(p, s, {0.05, 0.0, 4, NoiseModel(3, 100)}) == p);
}

TEST_CASE("la_cycle: two-mode S = 2 example") {
  const auto s = make_isotropic(2, 1.0).expanded();
  const TwoPhaseConfig cfg{0.5, 2.0, 2, NoiseModel(1, 2)};
  const auto out = la_cycle(ones(2), s, cfg);
  const Eigen::VectorXd dense = brute_cycle({1.0, 1.0}, cfg) * Eigen::VectorXd::Ones(2);
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(out[0] - dense[0]) < 1e-14);
  CHECK(std::abs(out[1] - dense[1]) < 1e-14);
}

TEST_CASE("la_cycle rejects multiple workers") {
  const auto s = make_isotropic(4, 1.0);
  CHECK_THROWS_AS(la_cycle(init_pvec_iid(s), s, {0.1, 1.0, 2, NoiseModel(2, 4, 2)}), InvalidArgument);
}

TEST_CASE("diloco_cycle: R = 1 is bitwise la_cycle") {
  const auto s = make_power_law(50, -1.5);
  const TwoPhaseConfig cfg{0.4, 1.7, 6, NoiseModel(5, 50)};
  const PVec p = init_pvec_iid(s);
  CHECK(diloco_cycle(p, s, cfg) == la_cycle(p, s, cfg));
}

TEST_CASE("diloco_cycle: huge R approaches the deterministic diagonal") {
  const auto s = make_spiked(100, 0.99, 1.0, 20.0);
  const TwoPhaseConfig cfg{0.05, 1.5, 10, NoiseModel(20, 100, 1000000000000LL)};
  const PVec p = init_pvec_iid(s);
  const auto out = diloco_cycle(p, s, cfg);
  const CycleOperator op(s, cfg);
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(std::abs(out[i] - op.deterministic_diagonal()[i] * p[i]) < 1e-10);
  }
}

TEST_CASE("diloco_cycle: one-cycle loss is nondecreasing in R at fixed total batch") {
  const auto s = make_isotropic(100, 1.0);
  const PVec p = init_pvec_iid(s);
  double prev = 0.0;
  for (std::int64_t r : {1, 2, 4, 8}) {
    const TwoPhaseConfig cfg{0.1, 1.0, 5, NoiseModel(16 / r, 100, r)};
    const double loss = loss_from_pvec(diloco_cycle(p, s, cfg), s);
    CHECK(loss >= prev);
    prev = loss;
  }
}

TEST_CASE("loss_from_pvec") {
  const auto s = make_spiked(100, 0.99, 1.0, 20.0);
  CHECK(loss_from_pvec(init_pvec_iid(s), s) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(loss_from_pvec(PVec({0.0, 0.0}), s) == 0.0);
  const auto iso = make_isotropic(7, 3.0);
  CHECK(loss_from_pvec(init_pvec_iid(iso), iso) == doctest::Approx(0.5));
}

TEST_CASE("init_pvec_iid") {
  CHECK(init_pvec_iid(make_isotropic(4, 2.0)) == PVec({0.5}));
  CHECK(init_pvec_iid(Spectrum({{0.0, 2}, {1.0, 1}})) == PVec({0.0, 1.0}));
  const auto p = init_pvec_iid(Spectrum({{1.0, 1}, {20.0, 1}}));
  CHECK(p[0] == 1.0);
  CHECK(p[1] == doctest::Approx(0.05));
}

TEST_CASE("zero modes are inert and carry no loss") {
  const Spectrum s({{0.0, 3}, {1.0, 2}});
  const PVec p({4.0, 1.0});
  const auto out = diloco_cycle(p, s, {0.3, 1.2, 3, NoiseModel(1, 5, 2)});
  CHECK(out[0] == 4.0);
  CHECK(loss_from_pvec(PVec({4.0, 0.0}), s) == 0.0);
}

TEST_CASE("expand_pvec follows the expanded spectrum order") {
  const Spectrum s({{1.0, 2}, {3.0, 1}});
  const auto e = expand_pvec(PVec({0.5, 7.0}), s);
  CHECK(e == PVec({7.0, 0.5, 0.5}));
  CHECK(loss_from_pvec(e, s.expanded()) == doctest::Approx(loss_from_pvec(PVec({0.5, 7.0}), s)));
}

TEST_CASE("noise_coefficient closed form") {
  CHECK(noise_coefficient(1, {0.1, 1.0, 2, NoiseModel(64, 1000, 1)}) == doctest::Approx(1.5625e-4).epsilon(1e-12));
  CHECK(noise_coefficient(2, {0.1, 1.0, 2, NoiseModel(32, 1000, 2)}) ==
        doctest::Approx(2.0 * 1e-4 / 4096.0).epsilon(1e-12));
  const TwoPhaseConfig single{0.2, 1.5, 3, NoiseModel(8, 1000, 1)};
  for (int s = 1; s <= 3; ++s) {
    CHECK(noise_coefficient(s, single) == doctest::Approx(1.5 * 1.5 * std::pow(0.2, 2 * s) / std::pow(8.0, s)));
  }
  CHECK_THROWS_AS(noise_coefficient(0, single), InvalidArgument);
  CHECK_THROWS_AS(noise_coefficient(4, single), InvalidArgument);
}

TEST_CASE("noise bracket equals the word sum over B-counts") {
  // T_S - A^S expanded as a sum over all 2^S words in {A, B}; the words with
  // s copies of B scale as (w eta^2)^s, which is what the closed-form a_s track.
  const std::vector<double> lam{1.0, 0.6, 0.25};
  const double eta = 0.3;
  const int S = 4;
  auto word_sum = [&](const NoiseModel& noise) {
    const auto parts = dense_parts(lam, eta, noise);
    std::vector<Eigen::MatrixXd> by_count(S + 1, Eigen::MatrixXd::Zero(3, 3));
    for (int mask = 0; mask < (1 << S); ++mask) {
      Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(3, 3);
      for (int k = 0; k < S; ++k) prod = ((mask >> k) & 1 ? parts.b : parts.a) * prod;
      by_count[__builtin_popcount(static_cast<unsigned>(mask))] += prod;
    }
    return by_count;
  };
  const Spectrum spec({{1.0, 1}, {0.6, 1}, {0.25, 1}});
  for (std::int64_t r : {1, 3}) {
    const NoiseModel noise(1, 3, r);
    const TwoPhaseConfig cfg{eta, 1.3, S, noise};
    const auto words = word_sum(noise);
    Eigen::MatrixXd bracket = Eigen::MatrixXd::Zero(3, 3);
    for (int s = 1; s <= S; ++s) bracket += words[s];
    Eigen::MatrixXd expected = cfg.nu * cfg.nu / static_cast<double>(r) * bracket;
    for (int i = 0; i < 3; ++i) {
      const double m = (1 - cfg.nu) + cfg.nu * std::pow(1 - eta * lam[i], S);
      expected(i, i) += m * m;
    }
    CHECK((dense_cycle_matrix(spec, cfg) - expected).cwiseAbs().maxCoeff() < 1e-14);
    // Same A with w four times smaller (B = 2): the s-word group scales by 4^-s.
    const auto lighter = word_sum(NoiseModel(2, 3, r));
    for (int s = 1; s <= S; ++s) {
      CHECK((words[s] - std::pow(4.0, s) * lighter[s]).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("exact noise coefficients approach a_s for large D") {
  // Exact weight per s-word group: (nu^2/R) (1/B - 1/D)^s eta^{2s}.
  const double eta = 0.1, nu = 1.4;
  const std::int64_t b_tot = 64;
  for (std::int64_t r : {1, 2, 4}) {
    const TwoPhaseConfig cfg{eta, nu, 3, NoiseModel(b_tot / r, 100000000, r)};
    for (int s = 1; s <= 3; ++s) {
      const double exact = nu * nu / static_cast<double>(r) * std::pow(cfg.noise.weight(), s) * std::pow(eta, 2 * s);
      CHECK(exact == doctest::Approx(noise_coefficient(s, cfg)).epsilon(1e-5));
    }
  }
}

TEST_CASE("coefficient_ratio and scaling_rule") {
  const LearningRates loc{2.0, 0.1};
  const auto dil = scaling_rule(loc, 4);
  CHECK(dil.nu == doctest::Approx(4.0));
  CHECK(dil.eta == doctest::Approx(0.05));
  for (int s = 1; s <= 12; ++s) CHECK(coefficient_ratio(s, loc, dil, 4) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coefficient_ratio(3, loc, loc, 1) == 1.0);
  CHECK(coefficient_ratio(2, loc, loc, 4) == doctest::Approx(4.0));
  const auto one = scaling_rule(loc, 1);
  CHECK(one.nu == loc.nu);
  CHECK(one.eta == loc.eta);
  const auto two = scaling_rule({1.0, 0.2}, 2);
  CHECK(two.nu == doctest::Approx(std::sqrt(2.0)));
  CHECK(two.eta == doctest::Approx(0.2 / std::sqrt(2.0)));
}

TEST_CASE("stability_region") {
  for (double x : {0.01, 0.5, 1.0, 1.5, 1.99}) CHECK(stability_region(x, 1.0, 1.0, 1) == Stability::kStable);
  for (double x : {2.01, 3.0}) CHECK(stability_region(x, 1.0, 1.0, 1) == Stability::kUnstable);
  CHECK(stability_region(2.0, 1.0, 1.0, 1) == Stability::kMarginal);
  CHECK(stability_region(0.0, 1.0, 1.0, 3) == Stability::kMarginal);
  CHECK(stability_region(1.5, 4.0, 1.0, 2) == Stability::kUnstable);
  CHECK(stability_region(0.5, 0.0, 1.0, 2) == Stability::kMarginal);
  // Scale: only eta*lambda matters.
  CHECK(stability_region(0.25, 1.0, 4.0, 1) == stability_region(1.0, 1.0, 1.0, 1));
}

TEST_CASE("dense_cycle_matrix special cases") {
  const auto s = make_power_law(6, -1.0);
  const auto nu0 = dense_cycle_matrix(s, {0.2, 0.0, 3, NoiseModel(2, 6)});
  CHECK((nu0 - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  const TwoPhaseConfig full{0.2, 1.5, 3, NoiseModel::full_batch(6)};
  const auto diag = dense_cycle_matrix(s, full);
  const auto values = s.expanded_values();
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (i != j) {
        CHECK(diag(i, j) == 0.0);
      } else {
        const double m = (1 - 1.5) + 1.5 * std::pow(1 - 0.2 * values[i], 3);
        CHECK(diag(i, i) == doctest::Approx(m * m).epsilon(1e-14));
      }
    }
  }
  CHECK_THROWS_AS(dense_cycle_matrix(make_isotropic(600, 1.0), {0.1, 1.0, 1, NoiseModel(1, 600)}),
                  InvalidArgument);
}

TEST_CASE("dense_cycle_matrix matches basis-vector probes and brute force") {
  const Spectrum s({{0.9, 1}, {0.4, 1}, {0.05, 1}});
  const TwoPhaseConfig cfg{0.7, 2.3, 5, NoiseModel(1, 3, 2)};
  const auto dense = dense_cycle_matrix(s, cfg);
  const auto brute = brute_cycle({0.9, 0.4, 0.05}, cfg);
  CHECK((dense - brute).cwiseAbs().maxCoeff() < 1e-13);
  for (int j = 0; j < 3; ++j) {
    std::vector<double> e(3, 0.0);
    e[j] = 1.0;
    const auto col = to_eigen(diloco_cycle(PVec(e), s, cfg));
    CHECK((col - dense.col(j)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("theorem1_check") {
  const std::int64_t one[] = {1};
  const auto single = theorem1_check(1.0, 100, 5, 0.05, 1.0, 20, one);
  CHECK(single.rows.size() == 1);
  CHECK(single.strictly_increasing);
  const std::int64_t rs[] = {1, 2, 4};
  const auto res = theorem1_check(1.0, 100, 5, 0.05, 1.0, 20, rs);
  REQUIRE(res.rows.size() == 3);
  CHECK(res.strictly_increasing);
  CHECK(res.rows[0].max_eigenvalue != res.rows[1].max_eigenvalue);
  CHECK(res.rows[2].batch == 5);
  const std::int64_t bad[] = {1, 3};
  CHECK_THROWS_WITH_AS(theorem1_check(1.0, 100, 5, 0.05, 1.0, 20, bad),
                       "theorem1_check: R = 3 does not divide B_tot = 20", InvalidArgument);
}

TEST_CASE("property: operator entries are nonnegative") {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + static_cast<int>(u(gen) * 10);
    std::vector<SpectrumEntry> entries;
    for (int i = 0; i < d; ++i) entries.push_back({u(gen) * 3.0, 1});
    const Spectrum s(entries);
    const std::int64_t batch = 1 + static_cast<std::int64_t>(u(gen) * (d - 1));
    const TwoPhaseConfig cfg{0.01 + 1.5 * u(gen), 4.0 * u(gen), 1 + static_cast<int>(u(gen) * 8),
                             NoiseModel(batch, d, 1 + static_cast<int>(u(gen) * 4))};
    CHECK(dense_cycle_matrix(s, cfg).minCoeff() >= 0.0);
    for (int j = 0; j < d; ++j) {
      std::vector<double> e(d, 0.0);
      e[j] = 1.0;
      const auto out = diloco_cycle(PVec(e), s.expanded(), cfg);
      for (double v : out.values()) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("property: scale invariance under (Lambda, eta) -> (c Lambda, eta / c)") {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto base = make_spiked(100, 0.9, 1.0, 20.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double c = std::exp(4.0 * u(gen) - 2.0);
    std::vector<SpectrumEntry> scaled;
    for (const auto& e : base.entries()) scaled.push_back({c * e.value, e.count});
    const Spectrum s2(scaled);
    const TwoPhaseConfig cfg{0.02 + 0.05 * u(gen), 3.0 * u(gen), 1 + static_cast<int>(u(gen) * 10),
                             NoiseModel(10, 100, 2)};
    TwoPhaseConfig cfg2 = cfg;
    cfg2.eta = cfg.eta / c;
    const PVec p({1.0 + u(gen), 0.5 + u(gen)});
    CHECK(rel_diff(diloco_cycle(p, base, cfg), diloco_cycle(p, s2, cfg2)) <= 1e-12);
  }
}

TEST_CASE("property: noise monotonicity in R for isotropic spectra") {
  const std::int64_t rs[] = {1, 2, 4, 8};
  for (double eta : {0.02, 0.1, 0.3}) {
    for (double nu : {0.5, 1.0, 2.0}) {
      const auto res = theorem1_check(1.0, 40, 4, eta, nu, 16, rs);
      for (std::size_t i = 1; i < res.rows.size(); ++i) {
        CHECK(res.rows[i].max_eigenvalue > res.rows[i - 1].max_eigenvalue);
      }
    }
  }
}

TEST_CASE("property: structured application matches dense matrix") {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(u(gen) * 64);
    std::vector<SpectrumEntry> entries;
    for (int i = 0; i < d; ++i) entries.push_back({u(gen), 1});
    const Spectrum s = Spectrum(entries).expanded();
    const TwoPhaseConfig cfg{0.05 + u(gen), 3.0 * u(gen), 1 + static_cast<int>(u(gen) * 10),
                             NoiseModel(1 + static_cast<std::int64_t>(u(gen) * (d - 1)), d, 1 + static_cast<int>(u(gen) * 3))};
    std::vector<double> pv(d);
    for (auto& v : pv) v = u(gen);
    const PVec p(pv);
    const Eigen::VectorXd dense = dense_cycle_matrix(s, cfg) * to_eigen(p);
    const Eigen::VectorXd fast = to_eigen(diloco_cycle(p, s, cfg));
    CHECK((dense - fast).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, dense.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("property: block and expanded forms agree") {
  const auto s = make_spiked(60, 0.8, 0.5, 6.0);
  const TwoPhaseConfig cfg{0.1, 1.8, 4, NoiseModel(6, 60, 2)};
  const PVec p = init_pvec_iid(s);
  const auto block = diloco_cycle(p, s, cfg);
  const auto per_mode = diloco_cycle(expand_pvec(p, s), s.expanded(), cfg);
  CHECK(rel_diff(expand_pvec(block, s), per_mode) <= 1e-13);
}

TEST_CASE("property: small learning rates collapse onto fixed nu*eta") {
  const auto s = make_spiked(100, 0.99, 1.0, 20.0);
  const NoiseModel noise(5, 100);
  const PVec p = init_pvec_iid(s);
  const double l0 = loss_from_pvec(p, s);
  const int S = 5;
  const double product = 5e-6;  // eta*lambda_max*S <= 1e-3 for every pair below
  std::vector<double> ratios;
  for (double nu : {0.5, 1.0, 2.0, 4.0}) {
    const double eta = product / nu;
    REQUIRE(eta * s.max_value() * S <= 1e-3);
    ratios.push_back(loss_from_pvec(la_cycle(p, s, {eta, nu, S, noise}), s) / l0);
  }
  for (double r : ratios) CHECK(std::abs(r - ratios[0]) / ratios[0] <= 1e-2);
}

TEST_CASE("iterate_cycles truncates diverging runs") {
  const auto s = make_isotropic(10, 1.0);
  const CycleOperator op(s, {3.5, 1.0, 1, NoiseModel::full_batch(10)});
  const auto curve = iterate_cycles(op, s, init_pvec_iid(s), 1000);
  CHECK(curve.diverged);
  CHECK(curve.losses.size() < 1001);
  for (double l : curve.losses) CHECK(std::isfinite(l));
  const CycleOperator calm(s, {0.5, 1.0, 1, NoiseModel::full_batch(10)});
  const auto ok = iterate_cycles(calm, s, init_pvec_iid(s), 5);
  CHECK_FALSE(ok.diverged);
  CHECK(ok.losses.size() == 6);
}

TEST_CASE("validation errors") {
  CHECK_THROWS_AS(NoiseModel(0, 10), InvalidArgument);
  CHECK_THROWS_AS(NoiseModel(11, 10), InvalidArgument);
  CHECK_THROWS_AS(NoiseModel(1, 10, 0), InvalidArgument);
  CHECK(NoiseModel(10, 10).weight() == 0.0);
  CHECK_THROWS_AS(PVec({-1.0}), InvalidArgument);
  CHECK_THROWS_AS((TwoPhaseConfig{0.0, 1.0, 1, NoiseModel(1, 1)}.validate()), InvalidArgument);
  CHECK_THROWS_AS((TwoPhaseConfig{0.1, -1.0, 1, NoiseModel(1, 1)}.validate()), InvalidArgument);
  CHECK_THROWS_AS((TwoPhaseConfig{0.1, 1.0, 0, NoiseModel(1, 1)}.validate()), InvalidArgument);
  const auto s = make_isotropic(4, 1.0);
  CHECK_THROWS_AS(diloco_cycle(PVec({1.0, 1.0}), s, {0.1, 1.0, 1, NoiseModel(1, 4)}), InvalidArgument);
  CHECK_THROWS_AS(diloco_cycle(PVec({1.0}), s, {0.1, 1.0, 1, NoiseModel(1, 5)}), InvalidArgument);
}

TEST_CASE("cycle operator debug dump lists modes and weight") {
  const auto s = make_spiked(100, 0.99, 1.0, 20.0);
  const CycleOperator op(s, {0.05, 1.5, 10, NoiseModel(20, 100)});
  const auto j = op.debug_dump();
  CHECK(j["modes"].size() == 2);
  CHECK(j["w"].get<double>() == doctest::Approx(0.05 - 0.01));
  CHECK(j["modes"][0]["d"].get<double>() == doctest::Approx(op.deterministic_diagonal()[0]));
}
