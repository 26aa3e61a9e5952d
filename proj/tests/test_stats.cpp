#include <cmath>

#include "doctest.h"
#include "penalab/errors.hpp"
#include "penalab/rng.hpp"
#include "penalab/stats.hpp"

using namespace penalab;

TEST_SUITE("stats") {
  TEST_CASE("mean and standard error") {
    const auto ms = mean_se({1.0, 2.0, 3.0, 4.0});
    CHECK(ms.mean == doctest::Approx(2.5));
    CHECK(ms.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(ms.n == 4);
  }

  TEST_CASE("ratio of means") {
    const auto r = ratio_se({2.0, 4.0, 6.0}, {1.0, 2.0, 3.0});
    CHECK(r.mean == doctest::Approx(2.0));
    CHECK(r.se == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS(ratio_se({1.0}, {1.0, 2.0}));
  }

  TEST_CASE("one-sample KS") {
    // Midpoint quantiles sit 1/(2n) from the CDF.
    std::vector<double> xs;
    for (int i = 0; i < 10; ++i) xs.push_back((i + 0.5) / 10);
    CHECK(ks_one_sample(xs, [](double x) { return x; }) == doctest::Approx(0.05));
    StreamRng r(1, 0);
    std::vector<double> u(5000);
    for (auto& v : u) v = r.uniform();
    CHECK(ks_one_sample(u, [](double x) { return x; }) < 1.63 / std::sqrt(5000.0));
  }

  TEST_CASE("weighted two-sample KS") {
    CHECK(ks_two_sample({1, 2, 3}, {}, {1, 2, 3}, {}) == doctest::Approx(0.0));
    CHECK(ks_two_sample({1, 2}, {}, {3, 4}, {}) == doctest::Approx(1.0));
    // Weights shift the mass: {1: 3/4, 2: 1/4} against {1: 1/2, 2: 1/2}.
    CHECK(ks_two_sample({1, 2}, {3, 1}, {1, 2}, {}) == doctest::Approx(0.25));
  }

  TEST_CASE("linear fit") {
    const auto f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK_THROWS_AS(linear_fit({1, 1, 1}, {1, 2, 3}), FitError);
    CHECK_THROWS_AS(linear_fit({1}, {1}), FitError);
  }
}
