#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "penalab/errors.hpp"
#include "penalab/sampling.hpp"
#include "penalab/stats.hpp"

using namespace penalab;

TEST_SUITE("sampling") {
  TEST_CASE("stable increments have the right characteristic function") {
    for (double a : {1.3, 1.5, 2.0}) {
      const StableStepper step(a, 0.5);
      StreamRng r(5, static_cast<std::uint64_t>(a * 10));
      const int n = 200000;
      double c1 = 0, c2 = 0;
      for (int i = 0; i < n; ++i) {
        const double x = step(r);
        c1 += std::cos(x);
        c2 += std::cos(2.0 * x);
      }
      CAPTURE(a);
      CHECK(c1 / n == doctest::Approx(std::exp(-0.5)).epsilon(0.01));
      CHECK(c2 / n == doctest::Approx(std::exp(-0.5 * std::pow(2.0, a))).epsilon(0.03));
    }
  }

  TEST_CASE("Brownian increments have variance 2 dt") {
    const AlphaModel m(2.0);
    StreamRng r(9, 0);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = stable_increment(m, 0.01, r);
    double v = 0;
    for (double x : xs) v += x * x;
    CHECK(v / xs.size() == doctest::Approx(0.02).epsilon(0.02));
  }

  TEST_CASE("grid helpers") {
    PathGrid p{0.1, {0, 1, 2, 3, 4, 5, 6, 7, 8}};
    CHECK(p.horizon() == doctest::Approx(0.8));
    CHECK(p.index_at(0.3) == 3);
    CHECK(p.index_at(0.35) == 3);
    CHECK(p.index_at(0.8) == 8);
    const auto q = p.subsample(4);
    CHECK(q.dt == doctest::Approx(0.4));
    CHECK(q.values == std::vector<double>{0, 4, 8});
    PathGrid bad{-1.0, {0.0}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("simulation config validation") {
    SimConfig c;
    c.dt = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.dt = 1e-12;
    c.horizon = 1e3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = SimConfig{};
    c.n_paths = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("paths are deterministic regardless of worker count") {
    const AlphaModel m(1.5);
    SimConfig c;
    c.dt = 1e-2;
    c.n_paths = 37;
    c.n_streams = 1;
    std::vector<PathGrid> one(c.n_paths), many(c.n_paths);
    for_each_path(m, 0.0, c, [&](std::size_t i, const PathGrid& p) { one[i] = p; });
    c.n_streams = 4;
    for_each_path(m, 0.0, c, [&](std::size_t i, const PathGrid& p) { many[i] = p; });
    for (std::size_t i = 0; i < c.n_paths; ++i) CHECK(one[i].values == many[i].values);
    CHECK(sample_path(m, 0.0, c, 5).values == one[5].values);
    CHECK(one[0].values[0] == 0.0);
    CHECK(one[0].size() == 101);
  }

  TEST_CASE("bridge ends at 0 and has the Brownian bridge variance") {
    const AlphaModel m(2.0);
    SimConfig c;
    c.dt = 1e-2;
    std::vector<double> mid;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      StreamRng r(3, i);
      const auto b = sample_bridge(m, 1.0, c, r);
      REQUIRE(b.values.back() == 0.0);
      mid.push_back(b.value_at(0.5));
    }
    double v = 0;
    for (double x : mid) v += x * x;
    // Var X_{u/2} = 2 (u/2)(u/2)/u = 0.5 for u = 1.
    CHECK(v / mid.size() == doctest::Approx(0.5).epsilon(0.08));
  }

  TEST_CASE("meanders start in the band and do not return") {
    const AlphaModel m(1.5);
    SimConfig c;
    c.dt = 1e-3;
    const double eps0 = band_width(m, c.dt);
    const auto ms = sample_meanders(m, 0.5, 50, c);
    REQUIRE(ms.size() == 50);
    for (const auto& p : ms) {
      CHECK(std::abs(p.values[0]) <= eps0);
      bool clean = true;
      for (std::size_t k = 1; k < p.size(); ++k) clean = clean && std::abs(p.values[k]) > eps0;
      CHECK(clean);
      CHECK(p.horizon() == doctest::Approx(0.5));
    }
  }

  TEST_CASE("meander normalisation n(R>t) E[h(X_t)] = 1") {
    const AlphaModel m(1.5);
    SimConfig c;
    c.dt = 1e-3;
    const auto ms = sample_meanders(m, 1.0, 1000, c);
    double s = 0;
    for (const auto& p : ms) s += m.h(p.values.back());
    CHECK(s / ms.size() * excursion_tail(m, 1.0) == doctest::Approx(1.0).epsilon(0.1));
  }

  TEST_CASE("h-path weights average to 1") {
    const AlphaModel m(1.5);
    SimConfig c;
    c.dt = 1e-3;
    c.n_paths = 2000;
    const auto e0 = sample_hpath(m, 0.0, 1.0, c);
    e0.validate();
    CHECK(e0.mean_weight() == doctest::Approx(1.0).epsilon(0.06));
    CHECK(e0.expectation([](const PathGrid&) { return 3.0; }) == doctest::Approx(3.0 * e0.mean_weight()));
    const auto ex = sample_hpath(m, 0.5, 1.0, c);
    CHECK(ex.mean_weight() == doctest::Approx(1.0).epsilon(0.06));
    CHECK(ex.attempts == c.n_paths);
    CHECK(ex.paths.size() < ex.attempts);
    // The h-path does not come back to 0.
    const double eps = band_width(m, c.dt);
    std::size_t back = 0, total = 0;
    for (const auto& p : e0.paths) {
      for (std::size_t k = p.index_at(0.1); k < p.size(); ++k) {
        back += std::abs(p.values[k]) <= eps;
        ++total;
      }
    }
    CHECK(static_cast<double>(back) / total < 0.01);
  }

  TEST_CASE("path CSV output") {
    PathGrid p{0.5, {0.0, 0.1, -1.0 / 3.0}};
    std::ostringstream os;
    write_path_csv(os, p);
    CHECK(os.str() == "t,x\n0,0\n0.5,0.10000000000000001\n1,-0.33333333333333331\n");
    WeightedEnsemble e{{p}, {2.0}, 1};
    std::ostringstream es;
    write_ensemble_csv(es, e);
    CHECK(es.str().rfind("t,x,weight\n0,0,2\n", 0) == 0);
  }
}
