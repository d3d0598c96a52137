#include <doctest.h>

#include <cmath>

#include "nvqrng/errors.hpp"
#include "nvqrng/model.hpp"
#include "nvqrng/presets.hpp"
#include "oracles.hpp"

using namespace nvqrng;

TEST_SUITE("model") {

TEST_CASE("params reject invalid values") {
  CHECK_THROWS_AS(EmitterParams(0, 0.02, 0.001, 1.1, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(EmitterParams(1, 0.001, 0.02, 1.1, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(EmitterParams(1, 0.02, 0.02, 1.1, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(EmitterParams(1, 0.02, 0.001, 0.99, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(EmitterParams(1, 0.02, 0.001, 1.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(EmitterParams(1, 0.02, 0.001, 1.1, 1.01), std::invalid_argument);
  const auto p = EmitterParams::with_fixed_shelving_ratio(3, 0.04, 1.5, 0.9);
  CHECK(p.gamma2() == doctest::Approx(0.002).epsilon(1e-15));
  CHECK_THROWS_AS(FluxSpec(0.0), std::invalid_argument);
  CHECK_THROWS_AS(FluxSpec(0.05).check_against(p), std::invalid_argument);
}

TEST_CASE("g2_model examples") {
  const EmitterParams single(1, 0.02, 0.001, 1.7, 1.0);
  CHECK(std::abs(g2_model(0.0, single)) < 1e-15);
  CHECK(std::abs(g2_model(1e6, single) - 1.0) < 1e-12);
  const EmitterParams r1 = region_preset(1).params();
  CHECK(std::abs(g2_model(0.0, r1) - 0.06817) < 1e-5);
  for (double tau : {0.3, 5.0, 40.0, 333.0}) {
    CHECK(g2_model(-tau, r1) == g2_model(tau, r1));
  }
  const EmitterParams two_level(1, 0.05, 0.001, 1.0, 1.0);
  for (double tau = 0.0; tau < 200.0; tau += 3.7) {
    CHECK(std::abs(g2_model(tau, two_level) - (1.0 - std::exp(-0.05 * tau))) < 1e-12);
  }
}

TEST_CASE("g2_detected_zero limits") {
  for (double beta : {1.0, 1.3, 2.5}) {
    const EmitterParams p(1, 0.05, 0.0025, beta, 0.9);
    CHECK(std::abs(g2_detected_zero(1e-6, p) - (1.0 - 0.81)) < 1e-6);
    // At 1e-4 ns the first-order term rho^2 (beta g1 - (beta-1) g2) t / 3 is already ~1e-6.
    const double slope = 0.81 * (beta * 0.05 - (beta - 1.0) * 0.0025) / 3.0;
    CHECK(std::abs(g2_detected_zero(1e-4, p) - (1.0 - 0.81) - slope * 1e-4) < 1e-9);
  }
  for (double t : {0.01, 1.0, 50.0}) {
    CHECK(g2_detected_zero(t, 0.05, 0.0025, 1.4, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(g2_detected_zero(0.0, region_preset(1).params()), std::domain_error);
  CHECK_THROWS_AS(g2_detected_zero(-1.0, region_preset(1).params()), std::domain_error);
}

TEST_CASE("g2_detected_zero matches quadrature") {
  for (int region = 1; region <= 5; ++region) {
    const EmitterParams p = region_preset(region).params().with_n_emitters(1);
    for (double t : {0.05, 1.0, 10.0}) {
      const double want =
          oracle::g2_interval_quadrature(t, p.gamma1(), p.gamma2(), p.beta(), p.rho());
      CHECK(std::abs(g2_detected_zero(t, p) - want) < 1e-8);
    }
  }
  // Across the series switch-over.
  for (double t : {0.009, 0.0105, 0.02, 0.2}) {
    const double want = oracle::g2_interval_quadrature(t, 0.1, 0.005, 1.5, 0.95);
    CHECK(std::abs(g2_detected_zero(t, 0.1, 0.005, 1.5, 0.95) - want) < 1e-10);
  }
}

TEST_CASE("photon_number_single") {
  const EmitterParams r1 = region_preset(1).params();
  const auto vanishing = photon_number_single(0.05, FluxSpec(1e-12), r1);
  CHECK(std::abs(vanishing.p0 - 1.0) < 1e-10);
  CHECK(vanishing.p1 < 1e-10);
  CHECK(vanishing.p2 < 1e-10);

  const auto d = photon_number_single(0.05, region_preset(1).flux(), r1);
  CHECK(d.p1 == doctest::Approx(1.08e-6).epsilon(1e-6));
  CHECK(d.p2 / d.p1 < 1e-6);
  CHECK(d.p0 == 1.0 - (d.p1 + d.p2));
  CHECK(d.p1 + 2.0 * d.p2 == doctest::Approx(0.05 * 0.0000216).epsilon(1e-14));
  CHECK(d.p_any == doctest::Approx(d.p1 + d.p2).epsilon(1e-15));

  for (double lam : {1e-5, 1e-3, 0.05}) {
    const EmitterParams p(1, 0.5, 0.02, 1.4, 0.9);
    const auto q = photon_number_single(0.1, FluxSpec(lam), p);
    CHECK(q.p0 == 1.0 - (q.p1 + q.p2));
    CHECK(std::abs(q.p0 + q.p1 + q.p2 - 1.0) <= 2e-16);
    CHECK(q.p1 + 2.0 * q.p2 == doctest::Approx(lam * 0.1).epsilon(1e-14));
  }
  CHECK_THROWS_AS(photon_number_single(5.0, region_preset(1).flux(), r1), ModelValidityError);
  CHECK_THROWS_AS(photon_number_single(0.0, region_preset(1).flux(), r1), std::domain_error);
}

TEST_CASE("photon_number_multi against convolution") {
  for (int region = 1; region <= 5; ++region) {
    const RegionPreset& pr = region_preset(region);
    const auto d = photon_number_single(0.05, pr.flux(), pr.params());
    for (int n_em = 1; n_em <= 8; ++n_em) {
      const auto conv = oracle::convolve_power({d.p0, d.p1, d.p2}, n_em);
      for (int n = 0; n <= 2 * n_em; ++n) {
        CHECK(std::abs(photon_number_multi(n, n_em, d) - conv[static_cast<std::size_t>(n)]) <
              1e-12);
      }
      CHECK(photon_number_multi(2 * n_em + 1, n_em, d) == 0.0);
    }
  }
  // A fat distribution makes every term matter.
  const PhotonNumberDist fat{0.5, 0.3, 0.2, 0.5, 1.0};
  for (int n_em = 1; n_em <= 8; ++n_em) {
    const auto conv = oracle::convolve_power({0.5, 0.3, 0.2}, n_em);
    const auto dist = photon_number_multi_distribution(n_em, fat);
    REQUIRE(dist.size() == conv.size());
    for (std::size_t n = 0; n < conv.size(); ++n) CHECK(std::abs(dist[n] - conv[n]) < 1e-12);
  }
}

TEST_CASE("photon_number_multi specials") {
  const RegionPreset& r4 = region_preset(4);
  const auto d = photon_number_single(0.05, r4.flux(), r4.params());
  CHECK(photon_number_multi(0, 1, d) == d.p0);
  CHECK(photon_number_multi(1, 1, d) == d.p1);
  CHECK(photon_number_multi(2, 1, d) == d.p2);
  CHECK(photon_number_multi(0, 3, d) == doctest::Approx(d.p0 * d.p0 * d.p0).epsilon(1e-15));
  const auto conv5 = oracle::convolve_power({d.p0, d.p1, d.p2}, 5);
  CHECK(std::abs(photon_number_multi(4, 5, d) - conv5[4]) < 1e-12);
  const EmitterParams p5 = r4.params().with_n_emitters(5);
  CHECK(std::abs(photon_number_multi(4, 0.05, r4.flux(), p5) - conv5[4]) < 1e-12);
}

TEST_CASE("photon_number_multi normalization at large N") {
  const PhotonNumberDist fat{0.6, 0.3, 0.1, 0.4, 1.0};
  for (int n_em : {10, 31, 49, 200, 1000, 10000}) {
    const auto dist = photon_number_multi_distribution(n_em, fat);
    double s = 0.0;
    for (double v : dist) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  // Log domain stays continuous across the N = 30 switch.
  const auto conv = oracle::convolve_power({0.6, 0.3, 0.1}, 31);
  for (int n = 0; n <= 62; ++n) {
    CHECK(std::abs(photon_number_multi(n, 31, fat) - conv[static_cast<std::size_t>(n)]) < 1e-13);
  }
}

TEST_CASE("P(0) monotone in flux and emitter count") {
  const EmitterParams p = region_preset(3).params();
  double last = 2.0;
  for (double lam = 1e-6; lam < 1e-2; lam *= 1.7) {
    const auto d = photon_number_single(0.05, FluxSpec(lam), p);
    const double p0 = photon_number_multi(0, 4, d);
    CHECK(p0 <= last);
    last = p0;
  }
  const auto d = photon_number_single(0.05, FluxSpec(1e-4), p);
  last = 2.0;
  for (int n = 1; n <= 60; ++n) {
    const double p0 = photon_number_multi(0, n, d);
    CHECK(p0 <= last);
    last = p0;
  }
}

}  // TEST_SUITE
