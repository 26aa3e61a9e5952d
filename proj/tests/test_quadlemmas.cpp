#include <cmath>
#include <numbers>

#include "doctest.h"
#include "penalab/errors.hpp"
#include "penalab/quadlemmas.hpp"

using namespace penalab;

namespace {
PsiFunction indicator01() {
  PsiFunction p;
  p.description = "1 on (0, 1)";
  p.eval = [](double u) { return u > 0.0 && u < 1.0 ? 1.0 : 0.0; };
  p.breakpoints = [](double a, double b) { return a < 1.0 && 1.0 < b ? std::vector<double>{1.0} : std::vector<double>{}; };
  return p;
}
}  // namespace

TEST_SUITE("quadlemmas") {
  TEST_CASE("I of the zero function is zero") {
    for (double t : {0.5, 3.0, 40.0}) CHECK(eval_I(PsiFunction::zero(), t, 0.5) == 0.0);
  }

  TEST_CASE("indicator of (0, 1) at t = 2, gamma = 1/2") {
    // Antiderivative of (1 - u/2)^(-1/2) is -4 (1 - u/2)^(1/2); I = 4 - 2 sqrt 2 - 1.
    CHECK(eval_I(indicator01(), 2.0, 0.5) == doctest::Approx(3.0 - 2.0 * std::numbers::sqrt2).epsilon(1e-10));
  }

  TEST_CASE("exponential psi against closed form at gamma = 1/2") {
    // int_0^t (1-u/t)^(-1/2) e^{-u} du = 2 sqrt(t) e^{-t} int_0^{sqrt t} e^{v^2} dv, checked via quadrature of that form.
    const double t = 3.0;
    double s = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double v = (i + 0.5) / n * std::sqrt(t);
      s += std::exp(v * v);
    }
    s *= std::sqrt(t) / n;
    const double want = 2.0 * std::sqrt(t) * std::exp(-t) * s - (1.0 - std::exp(-t));
    CHECK(eval_I(PsiFunction::exponential(1.0), t, 0.5) == doctest::Approx(want).epsilon(1e-7));
  }

  TEST_CASE("counterexample psi") {
    const auto psi = counterexample_psi(0.5);
    CHECK(psi(2.5) == 0.0);
    CHECK(psi(1.0 - 1e-6) > 0.0);
    double bound = 0;
    const double mass = counterexample_mass(0.5, 20000, &bound);
    CHECK(std::abs(mass - std::numbers::pi * std::numbers::pi / 6.0) <= bound);
    for (double n : {5.0, 10.0, 20.0}) {
      CAPTURE(n);
      CHECK(eval_I(psi, n, 0.5) >= std::pow(n, 2.0) / 0.5 - 1.0 / (n * n));
    }
  }

  TEST_CASE("sup condition") {
    const auto e = check_sup_condition(PsiFunction::exponential(1.0), 0.5, default_lemma_grid());
    CHECK(e.pass);
    CHECK(e.meta["rows"].size() == 5);
    const auto c = check_sup_condition(counterexample_psi(0.5), 0.5, {5.0, 10.0, 20.0});
    CHECK_FALSE(c.pass);
    CHECK(check_sup_condition(PsiFunction::zero(), 0.5, default_lemma_grid()).pass);
    CHECK_THROWS_AS(check_sup_condition(PsiFunction::zero(), 1.5, {1.0}), ConfigError);
  }

  TEST_CASE("product form") {
    const auto one = PsiFunction::tabulated({0.0, 1.0}, {1.0, 1.0}, "1", true);
    const auto r = check_product_form(PsiFunction::exponential(1.0), one, 0.5, default_lemma_grid());
    CHECK(r.pass);
    // int_0^t psi_t -> psi2(inf) int psi1 = 1
    CHECK(r.meta["rows"].back()["plain"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(check_product_form(PsiFunction::exponential(1.0), PsiFunction::zero(), 0.5, {5.0}), ConfigError);
  }

  TEST_CASE("tabulated psi") {
    const auto p = PsiFunction::tabulated({1.0, 2.0}, {2.0, 4.0}, "lin");
    CHECK(p(1.5) == doctest::Approx(3.0));
    CHECK(p(3.0) == 0.0);
    CHECK(p(0.5) == 2.0);
    CHECK_THROWS_AS(PsiFunction::tabulated({2.0, 1.0}, {1.0, 1.0}, "bad"), ConfigError);
  }
}
