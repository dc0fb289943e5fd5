#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "lbp/error.hpp"
#include "lbp/offspring.hpp"
#include "lbp/special.hpp"

using namespace lbp;
using lbp::test::golden;

TEST_CASE("zeta function against golden values") {
  CHECK(special::zeta(2.5) == doctest::Approx(golden("zeta_2p5")).epsilon(1e-13));
  CHECK(special::zeta(2.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6.0).epsilon(1e-14));
  CHECK(special::zeta_tail(2.0, 101) == doctest::Approx(golden("zeta1_tail_gt100") * special::zeta(2.0)).epsilon(1e-11));
  CHECK_THROWS_AS(special::zeta(1.0), InvalidParameter);
}

TEST_CASE("zeta law tail constant and moments") {
  const OffspringLaw z15 = OffspringLaw::zeta(1.5);
  CHECK(*z15.p0_tail() == doctest::Approx(golden("zeta1p5_p0")).epsilon(1e-13));
  CHECK(*z15.p0_tail() == doctest::Approx(0.745375).epsilon(1e-3));  // quoted to 6 digits
  CHECK(z15.moments().mean.finite);
  CHECK(z15.moments().mean.value == doctest::Approx(golden("zeta1p5_mean")).epsilon(1e-12));
  CHECK_FALSE(z15.moments().second.finite);

  const OffspringLaw z1 = OffspringLaw::zeta(1.0);
  CHECK(*z1.p0_tail() == doctest::Approx(6.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-14));
  CHECK_FALSE(z1.moments().mean.finite);

  const OffspringLaw z3 = OffspringLaw::zeta(3.0);
  CHECK(z3.moments().second.finite);
  CHECK(z3.moments().second_plus.finite);
  CHECK(z3.moments().delta == doctest::Approx(0.5));
}

TEST_CASE("probabilities sum to one") {
  for (double a : {1.0, 1.5, 2.5}) {
    const OffspringLaw law = OffspringLaw::zeta(a);
    double head = 0.0;
    for (double p : law.head_table()) head += p;
    CHECK(head + law.tail_mass() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(law.probability(4097) == doctest::Approx(std::pow(4097.0, -(1.0 + a)) / special::zeta(1.0 + a)));
  }
}

TEST_CASE("explicit pmf") {
  const double raw[3] = {2.0, 1.0, 1.0};
  const OffspringLaw law = OffspringLaw::explicit_pmf(raw);
  CHECK(law.probability(1) == doctest::Approx(0.5));
  CHECK(law.probability(4) == 0.0);
  CHECK(law.moments().mean.value == doctest::Approx(1.75));
  CHECK(law.moments().second.value == doctest::Approx(0.5 + 1.0 + 2.25));
  CHECK_FALSE(law.p0_tail().has_value());
  CHECK_THROWS_AS(law.tail_exponent(), UnsupportedOperation);
  const double negative[2] = {1.0, -0.1};
  CHECK_THROWS_AS(OffspringLaw::explicit_pmf(negative), InvalidParameter);
  CHECK_THROWS_AS(OffspringLaw::explicit_pmf(std::span<const double>{}), InvalidParameter);
}

TEST_CASE("text form round trip") {
  for (const char* s : {"zeta:1.5", "zeta:1", "pmf:0.5,0.25,0.25"}) {
    CHECK(parse_offspring_law(s).spec() == parse_offspring_law(parse_offspring_law(s).spec()).spec());
  }
  CHECK_THROWS_AS(parse_offspring_law("zeta:0"), InvalidParameter);
  CHECK_THROWS_AS(parse_offspring_law("geometric:0.5"), InvalidParameter);
  CHECK_THROWS_AS(parse_offspring_law("zeta:1.5x"), InvalidParameter);
}

TEST_CASE("pgf") {
  const OffspringLaw z1 = OffspringLaw::zeta(1.0);
  CHECK(z1.pgf(0.9) == doctest::Approx(golden("zeta1_pgf_0p9")).epsilon(1e-12));
  CHECK(OffspringLaw::zeta(1.5).pgf(0.5) == doctest::Approx(golden("zeta1p5_pgf_0p5")).epsilon(1e-12));
  CHECK(z1.pgf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(z1.pgf(0.0) == 0.0);
  const double one[1] = {1.0};
  CHECK(OffspringLaw::explicit_pmf(one).pgf(0.3) == doctest::Approx(0.3));
}

TEST_CASE("tail function tends to p0") {
  const OffspringLaw z = OffspringLaw::zeta(1.5);
  CHECK(z.tail_function(1e6) == doctest::Approx(*z.p0_tail()).epsilon(1e-5));
}

TEST_CASE("regime compatibility") {
  const double one[1] = {1.0};
  CHECK(OffspringLaw::explicit_pmf(one).compatible_with(Regime::finite_variance()));
  CHECK_FALSE(OffspringLaw::zeta(1.5).compatible_with(Regime::finite_variance()));
  CHECK(OffspringLaw::zeta(1.5).compatible_with(Regime::stable(1.5)));
  CHECK_FALSE(OffspringLaw::zeta(1.5).compatible_with(Regime::stable(1.6)));
  CHECK(OffspringLaw::zeta(1.0).compatible_with(Regime::neveu()));
  CHECK(OffspringLaw::zeta(2.5).compatible_with(Regime::finite_variance()));
}

TEST_CASE("non-explosion probe is advisory and finds no explosion for the shipped laws") {
  const double one[1] = {1.0};
  CHECK(nonexplosion_check(OffspringLaw::explicit_pmf(one), 0.1));
  CHECK(nonexplosion_check(OffspringLaw::zeta(1.0), 0.1));
  CHECK(nonexplosion_check(OffspringLaw::zeta(1.5), 0.1));
}

TEST_CASE("sampler: p1 and tail frequencies") {
  const std::size_t n = 1000000;
  {
    const OffspringLaw z = OffspringLaw::zeta(1.5);
    Rng rng(1);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) ones += z.sample(rng) == 1;
    CHECK(test::within_se(static_cast<double>(ones) / n, golden("zeta1p5_p0"), n));
  }
  {
    const OffspringLaw z = OffspringLaw::zeta(1.0);
    Rng rng(2);
    std::size_t big = 0;
    std::size_t beyond_cut = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = z.sample(rng);
      big += k > 100;
      beyond_cut += k > 4096;
    }
    CHECK(test::within_se(static_cast<double>(big) / n, golden("zeta1_tail_gt100"), n));
    CHECK(test::within_se(static_cast<double>(beyond_cut) / n, z.tail_mass(), n));
  }
}

TEST_CASE("sampler: exact tail beyond the table") {
  // Conditional law above the cut, checked on P(k > 2 cut | k > cut) = zeta(2, 2cut+1)/zeta(2, cut+1).
  const OffspringLaw z = OffspringLaw::zeta(1.0, 64);
  Rng rng(3);
  std::size_t above = 0;
  std::size_t far = 0;
  for (std::size_t i = 0; i < 2000000; ++i) {
    const auto k = z.sample(rng);
    if (k > 64) {
      ++above;
      far += k > 128;
    }
  }
  const double p = special::zeta_tail(2.0, 129) / special::zeta_tail(2.0, 65);
  CHECK(test::within_se(static_cast<double>(far) / above, p, above));
}

TEST_CASE("alias table") {
  const double w[4] = {0.1, 0.2, 0.3, 0.4};
  const AliasTable t(w);
  Rng rng(4);
  std::vector<std::size_t> count(4, 0);
  const std::size_t n = 400000;
  for (std::size_t i = 0; i < n; ++i) ++count[t.sample(rng)];
  for (int i = 0; i < 4; ++i) CHECK(test::within_se(static_cast<double>(count[i]) / n, w[i], n));
}
