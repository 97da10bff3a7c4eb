#include <doctest.h>

#include "peerscore/dominance.hpp"
#include "peerscore/rounding.hpp"

using namespace peerscore;

TEST_CASE("direct rounding lottery") {
  const ScoreBounds b{-1.0, 1.0};
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    CHECK(direct_round(1.0, b, rng) == 1);
    CHECK(direct_round(-1.0, b, rng) == 0);
  }
  int ones = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ones += direct_round(0.0, b, rng);
  CHECK(std::abs(ones / static_cast<double>(draws) - 0.5) < 0.01);

  CHECK(b.lottery_probability(1.0 + 5e-13) == 1.0);
  CHECK_THROWS_AS(b.lottery_probability(1.0 + 1e-9), ValidationError);
  CHECK_THROWS_AS((ScoreBounds{1.0, 1.0}.validate()), ValidationError);
}

TEST_CASE("partition rounding") {
  const ScoreBounds b{0.0, 5.0};
  Rng rng(4);
  const std::vector<double> top(3, 5.0);
  CHECK(partition_round(top, b, rng) == 1.0);
  const std::vector<double> mixed{0.0, 5.0};
  for (int i = 0; i < 50; ++i) CHECK(partition_round(mixed, b, rng) == 0.5);
  CHECK_THROWS_AS(partition_round(std::vector<double>{}, b, rng), ValidationError);

  const std::vector<double> half(4, 2.5);
  const int trials = 100000;
  double s = 0, ss = 0;
  for (int i = 0; i < trials; ++i) {
    const double x = partition_round(half, b, rng);
    s += x;
    ss += x * x;
  }
  const double mean = s / trials, var = ss / trials - mean * mean;
  // Bin(4, 1/2)/4: mean 1/2, variance 1/16; sd of the sample mean is 0.25/sqrt(T)
  CHECK(std::abs(mean - 0.5) < 3 * 0.25 / std::sqrt(trials));
  CHECK(std::abs(var - 1.0 / 16.0) < 0.002);
}

TEST_CASE("partition plans") {
  const auto pts = partition_plan(Family::pts, 5);
  CHECK(pts.num_groups == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(pts.groups[i] == std::vector<int>{static_cast<int>(i)});
  const auto ca6 = partition_plan(Family::ca, 6);
  CHECK(ca6.num_groups == 3);
  CHECK(ca6.groups[2] == std::vector<int>{4, 5});
  const auto ca7 = partition_plan(Family::ca, 7);
  CHECK(ca7.num_groups == 3);
  CHECK(ca7.unused == std::vector<int>{6});
  CHECK_THROWS_AS(partition_plan(Family::ma, 1), ValidationError);
  CHECK(questions_per_group(Family::ma) == 2);
  CHECK(questions_per_group(Family::oa) == 1);
}

TEST_CASE("direct rounding preserves the normalized expectation") {
  const auto& info = preset("J1");
  for (const char* base : {"oa", "pts", "ca", "ma"}) {
    const MechanismSpec spec = parse_mechanism(base);
    const Mechanism mech(spec, info);
    const auto bounds = mech.score_bounds();
    for (int n = 2; n <= 4; ++n)
      for (const auto& theta : {Strategy::truthful(2), Strategy::constant(2, 0),
                                Strategy(RealMatrix{{0.3, 0.7}, {0.6, 0.4}})}) {
        const double raw = exact_distribution(spec, info, theta, n).mean();
        const double rounded =
            exact_distribution(parse_mechanism(std::string(base) + "-direct-round"), info, theta, n).mean();
        CHECK(rounded == doctest::Approx((raw - bounds.inf) / (bounds.sup - bounds.inf)).epsilon(1e-12));
      }
  }
}
