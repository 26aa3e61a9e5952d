#include <cmath>
#include <numbers>

#include "doctest.h"
#include "penalab/analytic.hpp"
#include "penalab/errors.hpp"
#include "penalab/quadrature.hpp"

using namespace penalab;

namespace {
constexpr double pi = std::numbers::pi;

// Independent closed forms for the symmetric stable constants.
double p1_0_oracle(double a) { return std::tgamma(1.0 + 1.0 / a) / pi; }
double u1_0_oracle(double a) { return 1.0 / (a * std::sin(pi / a)); }
double nR_oracle(double a, double t) { return std::pow(t, 1.0 / a - 1.0) / (u1_0_oracle(a) * std::tgamma(1.0 / a)); }
double h1_gamma_oracle(double a) { return std::tgamma(2.0 - a) * std::sin(pi * (2.0 - a) / 2.0) / ((a - 1.0) * pi); }
}  // namespace

TEST_SUITE("analytic") {
  TEST_CASE("Brownian constants (variance 2t)") {
    const AlphaModel m(2.0);
    CHECK(m.p1_0() == doctest::Approx(1.0 / (2.0 * std::sqrt(pi))).epsilon(1e-12));
    CHECK(m.u1_0() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.nR1() == doctest::Approx(2.0 / std::sqrt(pi)).epsilon(1e-12));
    CHECK(m.h1() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.h(3.0) == doctest::Approx(1.5).epsilon(1e-12));
  }

  TEST_CASE("constants against gamma-function forms") {
    for (double a : {1.2, 1.5, 1.8, 2.0}) {
      CAPTURE(a);
      const AlphaModel m(a);
      CHECK(m.p1_0() == doctest::Approx(p1_0_oracle(a)).epsilon(1e-10));
      CHECK(m.u1_0() == doctest::Approx(u1_0_oracle(a)).epsilon(1e-10));
      CHECK(m.nR1() == doctest::Approx(nR_oracle(a, 1.0)).epsilon(1e-10));
      // The gamma form is 0 * inf at alpha = 2.
      if (a < 2.0) {
        CHECK(m.h1() == doctest::Approx(h1_gamma_oracle(a)).epsilon(1e-9));
        CHECK(m.h1_gamma_form() == doctest::Approx(h1_gamma_oracle(a)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("cosine form of the harmonic constant differs from the integral") {
    const AlphaModel m(2.0);
    CHECK(m.h1_cosine_form() == doctest::Approx(2.0));
    CHECK(std::abs(m.h1_cosine_form() - m.h1()) > 1.0);
  }

  TEST_CASE("tabulated values") {
    CHECK(AlphaModel(1.2).h1() == doctest::Approx(1.76224033125).epsilon(1e-9));
    CHECK(AlphaModel(1.5).h1() == doctest::Approx(0.797884560804).epsilon(1e-10));
    CHECK(AlphaModel(1.5).nR1() == doctest::Approx(0.9593242).epsilon(1e-7));
  }

  TEST_CASE("transition density") {
    const AlphaModel b(2.0);
    for (double t : {0.3, 1.0, 4.0}) {
      for (double x : {0.0, 0.5, 2.0}) {
        const double g = std::exp(-x * x / (4 * t)) / std::sqrt(4 * pi * t);
        CHECK(transition_density(b, t, x) == doctest::Approx(g).epsilon(1e-10));
      }
    }
    QuadratureConfig slow;
    slow.gaussian_fast_path = false;
    CHECK(transition_density(AlphaModel(2.0, slow), 1.0, 0.7, slow) ==
          doctest::Approx(std::exp(-0.49 / 4) / std::sqrt(4 * pi)).epsilon(1e-9));
    const AlphaModel m(1.5);
    CHECK(transition_density(m, 2.0, 0.0) == doctest::Approx(p1_0_oracle(1.5) * std::pow(2.0, -1.0 / 1.5)).epsilon(1e-10));
    // Scaling p_t(x) = t^(-1/alpha) p_1(x t^(-1/alpha)).
    const double t = 3.0, x = 0.8, c = std::pow(t, -1.0 / 1.5);
    CHECK(transition_density(m, t, x) == doctest::Approx(c * transition_density(m, 1.0, x * c)).epsilon(1e-9));
    CHECK(transition_density(m, 1.0, 40.0) >= 0.0);
  }

  TEST_CASE("resolvent density") {
    const AlphaModel b(2.0);
    for (double q : {0.5, 2.0}) {
      for (double x : {0.0, 1.0}) {
        CHECK(resolvent_density(b, q, x) == doctest::Approx(std::exp(-std::sqrt(q) * std::abs(x)) / (2 * std::sqrt(q))).epsilon(1e-9));
      }
    }
    const AlphaModel m(1.5);
    CHECK(resolvent_density(m, 2.0, 0.0) == doctest::Approx(u1_0_oracle(1.5) * std::pow(2.0, 1.0 / 1.5 - 1.0)).epsilon(1e-8));
    CHECK(resolvent_density(m, 1.0, 0.5) < resolvent_density(m, 1.0, 0.0));
  }

  TEST_CASE("harmonic function by direct quadrature") {
    for (double a : {1.2, 1.5, 2.0}) {
      const AlphaModel m(a);
      for (double x : {0.25, 1.0, 3.0}) {
        CHECK(harmonic_h(m, x) == doctest::Approx(m.h(x)).epsilon(1e-8));
      }
      CHECK(harmonic_h(m, 0.0) == 0.0);
    }
  }

  TEST_CASE("excursion tail and its Laplace transform") {
    for (double a : {1.2, 1.5, 2.0}) {
      const AlphaModel m(a);
      CHECK(excursion_tail(m, 5.0) == doctest::Approx(nR_oracle(a, 5.0)).epsilon(1e-12));
      for (double q : {0.5, 1.0, 2.0}) {
        // int e^{-qt} n(R>t) dt = q^{-1/alpha} / u_1(0)
        // t = u^(2 alpha), u = v / (1 - v) removes the t^(1/alpha - 1) endpoint singularity.
        auto f = [&](double v) {
          const double u = v / (1.0 - v), k = 2.0 * a;
          const double t = std::pow(u, k);
          return std::exp(-q * t) * excursion_tail(m, t) * k * std::pow(u, k - 1.0) / ((1.0 - v) * (1.0 - v));
        };
        const double lap = quad::gauss_kronrod<double>(f, 0.0, 1.0, {1e-13, 1e-12, 20000}).value;
        CHECK(lap == doctest::Approx(std::pow(q, -1.0 / a) / u1_0_oracle(a)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("entrance law and hitting tail in the Brownian case") {
    QuadratureConfig slow;
    slow.gaussian_fast_path = false;
    const AlphaModel m(2.0, slow);
    LaplaceInversionConfig lc;
    lc.quad.gaussian_fast_path = false;
    const double t = 1.0, x = 1.0;
    const double rho = x / (std::sqrt(4 * pi) * std::pow(t, 1.5)) * std::exp(-x * x / (4 * t));
    CHECK(entrance_density(m, t, x, lc) == doctest::Approx(rho).epsilon(1e-8));
    CHECK(hitting_tail(m, t, x, lc) == doctest::Approx(std::erf(x / (2 * std::sqrt(t)))).epsilon(1e-8));
    CHECK_THROWS_AS(entrance_density(m, 1.0, 0.0), Error);
  }

  TEST_CASE("hitting ratio table matches direct inversion") {
    const AlphaModel m(1.5);
    const HittingRatioTable Y(m);
    for (double t : {0.5, 2.0, 10.0}) {
      for (double x : {0.3, 1.0}) {
        CHECK(Y(t, x) == doctest::Approx(hitting_ratio(m, t, x)).epsilon(2e-3));
      }
    }
    CHECK(Y(1e6, 0.1) == doctest::Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("killed Green function") {
    const AlphaModel m(1.5);
    CHECK(killed_green(m, 0.0, 0.7) == doctest::Approx(0.0));
    CHECK(killed_green(m, 0.3, 0.7) == doctest::Approx(killed_green(m, 0.7, 0.3)));
    CHECK(killed_green(m, 0.7, 0.7) == doctest::Approx(2 * m.h(0.7)));
  }

  TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(AlphaModel(1.0), ConfigError);
    CHECK_THROWS_AS(AlphaModel(2.5), ConfigError);
    QuadratureConfig q;
    q.abs_tol = 2.0;
    CHECK_THROWS_AS(q.validate(), ConfigError);
    LaplaceInversionConfig lc;
    lc.node_count = 4;
    CHECK_THROWS_AS(lc.validate(), ConfigError);
  }
}
