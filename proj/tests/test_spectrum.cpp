#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "twophase/errors.hpp"
#include "twophase/spectrum.hpp"

using namespace twophase;

namespace {
std::vector<SpectrumEntry> entries_of(const Spectrum& s) { return {s.entries().begin(), s.entries().end()}; }
}  // namespace

TEST_CASE("spiked spectrum with one percent spike") {
  const auto s = make_spiked(100, 0.99, 1.0, 20.0);
  CHECK(entries_of(s) == std::vector<SpectrumEntry>{{1.0, 99}, {20.0, 1}});
  CHECK(s.dimension() == 100);
}

TEST_CASE("spiked spectrum with unit ratio merges to isotropic") {
  const auto s = make_spiked(10, 0.5, 1.0, 1.0);
  CHECK(entries_of(s) == std::vector<SpectrumEntry>{{1.0, 10}});
  CHECK(s.is_isotropic());
}

TEST_CASE("spiked spectrum scaled bulk value") {
  const auto s = make_spiked(200, 0.99, 2.0, 20.0);
  CHECK(entries_of(s) == std::vector<SpectrumEntry>{{2.0, 198}, {40.0, 2}});
}

TEST_CASE("spiked spectrum rejects degenerate shapes") {
  CHECK_THROWS_AS(make_spiked(1, 0.5, 1.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(make_spiked(10, 0.01, 1.0, 2.0), InvalidArgument);
  CHECK_THROWS_AS(make_spiked(10, 0.99, 1.0, 2.0), InvalidArgument);
}

TEST_CASE("power law spectra") {
  CHECK(make_power_law(3, 0.0).expanded_values() == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(make_power_law(2, -1.0).expanded_values() == std::vector<double>{1.0, 0.5});
  const auto v = make_power_law(4, -1.5).expanded_values();
  REQUIRE(v.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(v[i] == doctest::Approx(std::pow(i + 1.0, -1.5)).epsilon(1e-15));
  // Positive exponent: the largest eigenvalue sits at i = D.
  const auto up = make_power_law(3, 1.0).expanded_values();
  CHECK(up.front() == 1.0);
  CHECK(up.back() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("isotropic spectra") {
  CHECK(entries_of(make_isotropic(5, 1.0)) == std::vector<SpectrumEntry>{{1.0, 5}});
  CHECK(entries_of(make_isotropic(1, 0.3)) == std::vector<SpectrumEntry>{{0.3, 1}});
  CHECK(make_isotropic(100, 2.5).is_isotropic());
}

TEST_CASE("spectrum validation") {
  CHECK_THROWS_AS(Spectrum({}), InvalidArgument);
  CHECK_THROWS_AS(Spectrum({{-1.0, 2}}), InvalidArgument);
  CHECK_THROWS_AS(Spectrum({{1.0, 0}}), InvalidArgument);
  CHECK_NOTHROW(Spectrum({{0.0, 3}, {1.0, 1}}));
}

TEST_CASE("expansion is descending and stable") {
  const Spectrum s({{1.0, 2}, {3.0, 1}, {1.0, 1}, {2.0, 1}});
  CHECK(s.expanded_values() == std::vector<double>{3.0, 2.0, 1.0, 1.0, 1.0});
  CHECK(s.dimension() == 5);
  const auto e = s.expanded();
  CHECK(e.size() == 5);
  CHECK(e.dimension() == 5);
  CHECK(s.merged().size() == 3);
}

TEST_CASE("spectrum JSON round trip") {
  const auto s = make_spiked(100, 0.99, 1.0, 20.0);
  const auto j = s.to_json();
  CHECK(j.dump() == R"({"entries":[[1.0,99],[20.0,1]]})");
  CHECK(Spectrum::from_json(j) == s);
  CHECK_THROWS_AS(Spectrum::from_json(nlohmann::json::parse(R"({"entries":[[1,2]],"x":1})")),
                  InvalidArgument);
  CHECK_THROWS_AS(Spectrum::from_json(nlohmann::json::parse(R"({"entries":[[1]]})")), InvalidArgument);
}

TEST_CASE("realized NTK: isotropic kernel is exact") {
  const auto ntk = realize_ntk(make_isotropic(20, 0.7), 3);
  CHECK(ntk.is_scalar());
  CHECK(ntk.kernel() == 0.7 * Eigen::MatrixXd::Identity(20, 20));
}

TEST_CASE("realized NTK: determinism") {
  const auto s = make_power_law(30, -1.0);
  const auto a = realize_ntk(s, 11);
  const auto b = realize_ntk(s, 11);
  CHECK(a.basis() == b.basis());
  CHECK(a.kernel() == b.kernel());
  const auto c = realize_ntk(s, 12);
  CHECK(a.basis() != c.basis());
}

TEST_CASE("realized NTK: orthogonality and reconstruction") {
  const auto s = make_spiked(50, 0.9, 1.0, 20.0);
  const auto ntk = realize_ntk(s, 7);
  const Eigen::MatrixXd& v = ntk.basis();
  CHECK((v.transpose() * v - Eigen::MatrixXd::Identity(50, 50)).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd& k = ntk.kernel();
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k);
  REQUIRE(solver.info() == Eigen::Success);
  auto expected = s.expanded_values();
  std::sort(expected.begin(), expected.end());
  for (int i = 0; i < 50; ++i) {
    CHECK(std::abs(solver.eigenvalues()[i] - expected[i]) <= 1e-8 * expected[i]);
  }
  CHECK(solver.eigenvalues().minCoeff() >= -1e-12);
}

TEST_CASE("realized NTK: dimension cap") {
  CHECK_THROWS_AS(realize_ntk(make_isotropic(100, 1.0), 1, 50), InvalidArgument);
}

TEST_CASE("Haar basis has no sign bias in the diagonal") {
  // With the R-diagonal sign fix the diagonal of V has mean zero.
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) sum += haar_orthogonal(4, seed)(0, 0);
  CHECK(std::abs(sum / 200.0) < 0.15);
}
