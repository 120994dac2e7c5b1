#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "noncanon/mode_set.hpp"
#include "noncanon/propagator.hpp"
#include "noncanon/rng.hpp"

using namespace noncanon;

namespace {

ModeAmplitudes random_amplitudes(int modes, std::uint64_t seed) {
  SplitMix64 rng(seed);
  ModeAmplitudes f(modes, 2);
  for (int k = 0; k < modes; ++k)
    for (int s = 0; s < 2; ++s)
      f(k, s) = Complex(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
  return f;
}

}  // namespace

TEST_CASE("radial measure is omega over 4 pi^2") {
  const double pi = 3.14159265358979323846;
  CHECK(radial_measure(1.0) == doctest::Approx(1.0 / (4.0 * pi * pi)).epsilon(1e-15));
  CHECK(radial_measure(2.0) == doctest::Approx(2.0 * radial_measure(1.0)).epsilon(1e-15));
  CHECK(radial_measure(0.0) == 0.0);
}

TEST_CASE("profile families evaluate as declared") {
  VacuumProfile flat = VacuumProfile::flat(2.0);
  CHECK(flat(1.0) == 1.0);
  CHECK(flat(2.0) == 1.0);
  CHECK(flat(2.0000001) == 0.0);

  VacuumProfile pe = VacuumProfile::powerexp(2.0, 0.5);
  CHECK(pe(1.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(pe(0.0) == 0.0);

  VacuumProfile g = VacuumProfile::gauss(3.0, 0.2);
  CHECK(g(3.0) == 1.0);
  CHECK(g(3.2) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));

  CHECK_THROWS_AS(VacuumProfile::flat(0.0), std::invalid_argument);
  CHECK_THROWS_AS(VacuumProfile::powerexp(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(VacuumProfile::gauss(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("flat two-mode weights follow the measure ratio") {
  // Midpoints of [0.5, 2.5] with two cells land on omega = 1 and 2.
  ModeSet ms = build_mode_set(VacuumProfile::flat(2.5), 0.5, 2.5, 2);
  REQUIRE(ms.size() == 2);
  CHECK(ms.omega(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ms.omega(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ms.z(0) + ms.z(1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(ms.z(1) / ms.z(0) ==
        doctest::Approx(radial_measure(2.0) / radial_measure(1.0)).epsilon(1e-13));

  // Oracle: a high-resolution quadrature of the cell masses gives the same
  // ratio (the measure is linear, so the midpoint rule is exact per cell).
  auto density = [&](double w) { return radial_measure(w); };
  double cell0 = fixed_grid_integral(density, 0.5, 1.5, 20000);
  double cell1 = fixed_grid_integral(density, 1.5, 2.5, 20000);
  CHECK(ms.z(1) / ms.z(0) == doctest::Approx(cell1 / cell0).epsilon(1e-10));
}

TEST_CASE("single-mode sets always carry unit weight") {
  for (auto profile : {VacuumProfile::flat(3.0), VacuumProfile::powerexp(1.0, 1.0),
                       VacuumProfile::gauss(2.0, 0.4)}) {
    ModeSet ms = build_mode_set(profile, 0.5, 4.0, 1);
    REQUIRE(ms.size() == 1);
    CHECK(ms.z(0) == 1.0);
  }
}

TEST_CASE("power-exp weight at the smallest grid point vanishes under refinement") {
  double prev = 1.0;
  for (int modes : {8, 64, 512}) {
    ModeSet ms = build_mode_set(VacuumProfile::powerexp(1.0, 1.0), 1e-8, 8.0, modes);
    CHECK(ms.z(0) < prev);
    prev = ms.z(0);
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("weights are normalized for every family") {
  for (auto profile : {VacuumProfile::flat(5.0), VacuumProfile::powerexp(2.0, 1.3),
                       VacuumProfile::gauss(2.0, 0.25)}) {
    ModeSet ms = build_mode_set(profile, 0.1, 6.0, 137);
    CHECK(std::abs(ms.zs().sum() - 1.0) < 1e-12);
    for (int k = 1; k < ms.size(); ++k) CHECK(ms.omega(k) > ms.omega(k - 1));
  }
}

TEST_CASE("mode set construction is scale invariant in the raw weights") {
  std::vector<double> omega = {0.5, 1.0, 2.0, 4.0};
  std::vector<double> w = {0.1, 0.4, 0.3, 0.2};
  std::vector<double> w3 = {0.3, 1.2, 0.9, 0.6};
  ModeSet a(omega, w);
  ModeSet b(omega, w3);
  for (int k = 0; k < a.size(); ++k)
    CHECK(a.z(k) == doctest::Approx(b.z(k)).epsilon(1e-15));
}

TEST_CASE("mode set constructor rejects malformed input") {
  CHECK_THROWS_AS(ModeSet({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(ModeSet({1.0, 1.0}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ModeSet({2.0, 1.0}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ModeSet({-1.0, 1.0}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ModeSet({1.0, 2.0}, {0.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ModeSet({1.0, 2.0}, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(ModeSet({1.0, 2.0}, {0.5}), std::invalid_argument);
}

TEST_CASE("mode set JSON round trip preserves values and validates on load") {
  ModeSet ms = build_mode_set(VacuumProfile::gauss(2.0, 0.5), 0.5, 4.0, 7);
  ModeSet back = ModeSet::from_json(ms.to_json());
  REQUIRE(back.size() == ms.size());
  for (int k = 0; k < ms.size(); ++k) {
    CHECK(back.omega(k) == ms.omega(k));
    CHECK(back.z(k) == doctest::Approx(ms.z(k)).epsilon(1e-15));
  }

  nlohmann::json bad = ms.to_json();
  bad["modes"][0]["z"] = bad["modes"][0]["z"].get<double>() + 0.25;
  CHECK_THROWS_AS(ModeSet::from_json(bad), std::invalid_argument);
}

TEST_CASE("inner product matches the weighted sum on hand-built data") {
  ModeSet ms({1.0, 2.0}, {0.5, 0.5});

  ModeAmplitudes ones = ModeAmplitudes::Ones(2, 2);
  CHECK(z_inner_product(ms, ones, ones).real() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(z_inner_product(ms, ones, ones).imag() == 0.0);

  ModeAmplitudes plus_only = ModeAmplitudes::Zero(2, 2);
  ModeAmplitudes minus_only = ModeAmplitudes::Zero(2, 2);
  plus_only(0, 0) = 1.0;
  plus_only(1, 0) = 1.0;
  minus_only(0, 1) = 1.0;
  minus_only(1, 1) = 1.0;
  CHECK(std::abs(z_inner_product(ms, plus_only, minus_only)) == 0.0);

  ModeAmplitudes f = ModeAmplitudes::Zero(2, 2);
  f(0, 0) = 1.0;  // (1, 0) on helicity + only
  CHECK(z_inner_product(ms, f, f).real() == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("inner product is conjugate symmetric and positive semidefinite") {
  ModeSet ms = build_mode_set(VacuumProfile::flat(4.0), 0.5, 4.0, 5);
  for (std::uint64_t trial = 0; trial < 8; ++trial) {
    ModeAmplitudes f = random_amplitudes(ms.size(), 11 + trial);
    ModeAmplitudes g = random_amplitudes(ms.size(), 900 + trial);
    Complex fg = z_inner_product(ms, f, g);
    Complex gf = z_inner_product(ms, g, f);
    CHECK(std::abs(fg - std::conj(gf)) < 1e-14);
    Complex ff = z_inner_product(ms, f, f);
    CHECK(ff.real() >= 0.0);
    CHECK(std::abs(ff.imag()) < 1e-15);
  }

  ModeAmplitudes zero = ModeAmplitudes::Zero(ms.size(), 2);
  CHECK(std::abs(z_inner_product(ms, zero, zero)) == 0.0);

  ModeAmplitudes wrong = ModeAmplitudes::Zero(ms.size() + 1, 2);
  CHECK_THROWS_AS(z_inner_product(ms, wrong, wrong), std::invalid_argument);
}

TEST_CASE("coherent spec round trips and validates") {
  ModeSet ms({1.0, 3.0}, {0.25, 0.75});
  CoherentSpec a = CoherentSpec::constant(ms, Complex(0.4, -0.3));
  CHECK(a.alpha.rows() == 2);
  CHECK(a.alpha(1, 1) == Complex(0.4, -0.3));
  CHECK_NOTHROW(a.validate(ms));

  CoherentSpec back = CoherentSpec::from_json(a.to_json());
  CHECK(back.alpha == a.alpha);

  CoherentSpec bad;
  bad.alpha = ModeAmplitudes::Ones(3, 2);
  CHECK_THROWS_AS(bad.validate(ms), std::invalid_argument);
}

TEST_CASE("current spec obeys its declared small-frequency power") {
  for (double p : {0.0, -2.0, 1.0}) {
    CurrentSpec cur;
    cur.coeff[0] = Complex(0.8, 0.1);
    cur.coeff[1] = Complex(0.0, 1.2);
    cur.ir_exponent = p;
    CHECK(cur.spot_check_ir_exponent());
    double k = 0.37;
    CHECK(cur.j_squared(k, Helicity::plus) ==
          doctest::Approx(std::norm(cur.j(k, Helicity::plus))).epsilon(1e-12));
    CHECK(cur.j_squared(k, Helicity::plus) ==
          doctest::Approx(std::norm(cur.coeff[0]) * std::pow(k, p)).epsilon(1e-12));
  }

  CurrentSpec damped;
  damped.uv_scale = 2.0;
  CHECK(damped.j_squared(4.0, Helicity::plus) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

  CurrentSpec cur;
  cur.ir_exponent = -1.0;
  CurrentSpec back = CurrentSpec::from_json(cur.to_json());
  CHECK(back.ir_exponent == cur.ir_exponent);
  CHECK(back.coeff[0] == cur.coeff[0]);
  CHECK(back.uv_scale == cur.uv_scale);

  ModeSet ms({1.0, 2.0}, {0.5, 0.5});
  ModeAmplitudes sampled = cur.sample(ms);
  CHECK(sampled.rows() == 2);
  CHECK(std::abs(sampled(0, 0) - cur.j(1.0, Helicity::plus)) < 1e-15);
}
