#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "lbp/dynamics.hpp"
#include "lbp/error.hpp"
#include "lbp/fenwick.hpp"

using namespace lbp;
using lbp::test::binary_splitting;
using lbp::test::make_model;

TEST_CASE("Fenwick tree selection") {
  FenwickTree t(5);
  const std::int64_t w[5] = {3, 0, 2, 0, 5};
  for (std::size_t i = 0; i < 5; ++i) t.add(i, w[i]);
  CHECK(t.prefix(5) == 10);
  CHECK(t.find(0) == 0);
  CHECK(t.find(2) == 0);
  CHECK(t.find(3) == 2);
  CHECK(t.find(4) == 2);
  CHECK(t.find(5) == 4);
  CHECK(t.find(9) == 4);
  t.add(4, -5);
  CHECK(t.find(4) == 2);
}

TEST_CASE("model validation") {
  auto p = binary_splitting();
  CHECK_NOTHROW(p.validate());
  CHECK(p.c_K() == doctest::Approx(1.0 / 300.0));
  p.d = 3.0;  // b m = 2 < d
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p = binary_splitting();
  p.K = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p = binary_splitting();
  p.regime = Regime::stable(1.5);  // explicit pmf has no heavy tail
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  CHECK_THROWS_AS(make_model(1, 1, 1, 2.0, OffspringLaw::zeta(1.0), Regime::neveu()).validate(), InvalidParameter);
}

TEST_CASE("regime scaling") {
  const auto fv = regime_scaling(binary_splitting());
  CHECK(fv.n_star == doctest::Approx(1.0));
  CHECK(*fv.effective_size == doctest::Approx(0.25));
  CHECK(fv.time_factor == 300.0);
  CHECK(fv.size_factor == 300.0);

  const auto st = regime_scaling(make_model(1, 1, 1, 400, OffspringLaw::zeta(1.5), Regime::stable(1.5)));
  CHECK(st.time_factor == doctest::Approx(20.0));
  CHECK(st.n_star == doctest::Approx(test::golden("stable_b1_n_star")).epsilon(1e-12));
  CHECK_FALSE(st.effective_size.has_value());

  const auto nv = regime_scaling(make_model(1, 1, 1, 1000, OffspringLaw::zeta(1.0), Regime::neveu()));
  CHECK(nv.time_factor == 1.0);
  CHECK(nv.size_factor == doctest::Approx(1000.0 * std::log(1000.0)));
  CHECK(nv.n_star == doctest::Approx(6.0 / (std::numbers::pi * std::numbers::pi)));
}

TEST_CASE("equilibrium initial state") {
  const double fr[2] = {0.3, 0.7};
  const auto s = equilibrium_state(regime_scaling(binary_splitting()), fr);
  CHECK(s.total() == 300);
  CHECK(s.counts()[0] == 90);
  CHECK(s.counts()[1] == 210);
  CHECK(s.audit());
}

TEST_CASE("birth probability at frozen population size") {
  const auto p = make_model(1.0, 0.5, 2.0, 100.0, OffspringLaw::zeta(1.5), Regime::stable(1.5));
  const PopulationState frozen(std::vector<std::int64_t>{30, 50});
  const double n = 80.0;
  const double want = p.b * n / (p.b * n + (p.d + p.c_K() * n) * n);
  Rng rng(1);
  std::size_t births = 0;
  const std::size_t steps = 100000;
  for (std::size_t i = 0; i < steps; ++i) {
    PopulationState s = frozen;
    births += step(s, p, rng).kind == EventRecord::Kind::Birth;
  }
  CHECK(test::within_se(static_cast<double>(births) / steps, want, steps));
}

TEST_CASE("events change counts as described") {
  const auto p = binary_splitting(50);
  PopulationState s(std::vector<std::int64_t>{10, 5});
  Rng rng(2);
  for (int i = 0; i < 1000 && s.total() > 0; ++i) {
    const std::int64_t before = s.total();
    const double t0 = s.raw_time();
    const auto ev = step(s, p, rng);
    CHECK(s.total() == before + (ev.kind == EventRecord::Kind::Birth ? 1 : -1));
    CHECK(s.raw_time() > t0);
  }
  CHECK(s.audit());
  PopulationState empty(std::vector<std::int64_t>{0, 0});
  CHECK_THROWS_AS(step(empty, p, rng), AbsorbingState);
}

TEST_CASE("subcritical runs go extinct and leave the sentinel frequency") {
  // d far above b m. Validation rejects such models for simulate(), so the
  // engine is driven step by step up to raw time K (scaled time 1).
  const double one[1] = {1.0};
  ModelParams q = make_model(1.0, 50.0, 1.0, 50.0, OffspringLaw::explicit_pmf(one), Regime::finite_variance());
  const std::size_t reps = 200;
  std::size_t extinct = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = derive_stream(3, r);
    PopulationState s(std::vector<std::int64_t>{25, 25});
    while (s.total() > 0 && s.raw_time() < q.K) step(s, q, rng);
    if (s.total() == 0) {
      ++extinct;
      const auto f = frequency(s);
      CHECK(f[0] == 1.0);
      CHECK(f[1] == 0.0);
    }
  }
  CHECK(static_cast<double>(extinct) / reps > 0.99);
}

TEST_CASE("simulate: records, horizon zero, determinism") {
  const auto p = binary_splitting();
  const double fr[2] = {0.5, 0.5};
  const auto init = equilibrium_state(regime_scaling(p), fr);
  const double zero[1] = {0.0};
  Rng rng(4);
  const auto t0 = simulate(p, init, 0.0, zero, rng);
  REQUIRE(t0.records.size() == 1);
  CHECK(t0.records[0].n_bar == 1.0);
  CHECK(t0.records[0].freq[1] == 0.5);

  const double obs[3] = {0.0, 0.05, 0.1};
  Rng a(5), b(5);
  const auto ta = simulate(p, init, 0.1, obs, a);
  const auto tb = simulate(p, init, 0.1, obs, b);
  REQUIRE(ta.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ta.records[i].n_bar == tb.records[i].n_bar);
    CHECK(ta.records[i].freq == tb.records[i].freq);
  }
  const double bad[2] = {0.1, 0.05};
  CHECK_THROWS_AS(simulate(p, init, 0.1, bad, a), InvalidParameter);
  const double late[1] = {0.2};
  CHECK_THROWS_AS(simulate(p, init, 0.1, late, a), InvalidParameter);
}

TEST_CASE("mean population at the logistic fixed point") {
  // p1 = 1, b = 2, d = 1, c = 1, K = 300, started at N = 300 with one type.
  const auto p = binary_splitting();
  const double one[1] = {1.0};
  const auto init = equilibrium_state(regime_scaling(p), one);
  const double obs[1] = {0.1};
  double sum = 0.0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    Rng rng = derive_stream(6, r);
    sum += simulate(p, init, 0.1, obs, rng).records[0].n_bar;
  }
  const double mean = sum / 200.0;
  CHECK(mean >= 0.9);
  CHECK(mean <= 1.1);
}

TEST_CASE("occupation statistics") {
  Trajectory constant;
  for (int i = 0; i <= 10; ++i) constant.records.push_back({0.1 * i, 1.0, {1.0}});
  auto st = occupation_stats(constant, 0.2, 1.0);
  CHECK(st.sup_dev == 0.0);
  CHECK(st.frac_outside == 0.0);

  Trajectory half;
  for (int i = 0; i <= 10; ++i) half.records.push_back({0.1 * i, i < 5 ? 1.5 : 1.0, {1.0}});
  st = occupation_stats(half, 0.2, 1.0);
  CHECK(st.sup_dev == doctest::Approx(0.5));
  CHECK(st.frac_outside == doctest::Approx(0.5));

  Trajectory single;
  single.records.push_back({0.0, 2.0, {1.0}});
  CHECK(occupation_stats(single, 0.2, 1.0).frac_outside == 1.0);
}

TEST_CASE("occupation of a finite-variance run: time outside the band is small") {
  const auto p = binary_splitting();
  const double one[1] = {1.0};
  const auto init = equilibrium_state(regime_scaling(p), one);
  std::vector<double> obs(201);
  for (int i = 0; i <= 200; ++i) obs[i] = 0.2 * i / 200.0;
  std::size_t good = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    Rng rng = derive_stream(7, r);
    good += occupation_stats(simulate(p, init, 0.2, obs, rng), 0.2, 1.0).frac_outside < 0.05;
  }
  CHECK(good >= 190);
}

TEST_CASE("Lyapunov function and logistic flow") {
  CHECK(lyapunov(2.0, 2.0) == 0.0);
  CHECK(lyapunov(1.0, 2.0) > 0.0);
  CHECK(lyapunov(3.0, 2.0) > 0.0);
  const auto p = binary_splitting();
  CHECK(logistic_flow(0.3, 0.0, p) == doctest::Approx(0.3));
  CHECK(logistic_flow(0.3, 50.0, p) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(logistic_flow(1.0, 3.0, p) == doctest::Approx(1.0));
  // Closed form of dn/dt = (1 - n) n from n0 = 0.5: n(t) = 1 / (1 + e^-t).
  CHECK(logistic_flow(0.5, 1.0, p) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  // V decreases along the flow.
  double v = lyapunov(0.2, 1.0);
  for (double t = 0.5; t < 5.0; t += 0.5) {
    const double next = lyapunov(logistic_flow(0.2, t, p), 1.0);
    CHECK(next < v);
    v = next;
  }
}
