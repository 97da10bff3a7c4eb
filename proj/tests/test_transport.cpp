#include <doctest.h>

#include <functional>
#include <random>

#include "peerscore/transport.hpp"
#include "test_support.hpp"

using namespace peerscore;


TEST_CASE("transport matches exhaustive enumeration") {
  std::mt19937_64 g(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t c = 2 + t % 3;
    const int n = 1 + static_cast<int>(g() % 8);
    std::vector<int> rows(c, 0), cols(c, 0);
    for (int k = 0; k < n; ++k) ++rows[g() % c];
    for (int k = 0; k < n; ++k) ++cols[g() % c];
    RealMatrix profit(c, c);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) profit(i, j) = static_cast<double>(g() % 1000) / 1000.0;

    double best = -1e300;
    CountMatrix best_plan;
    testsupport::enumerate_margins(rows, cols, [&](const CountMatrix& m) {
      double v = 0;
      for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) v += m(i, j) * profit(i, j);
      // enumeration order is lexicographic, so strict improvement keeps the smallest optimum
      if (v > best + 1e-12) {
        best = v;
        best_plan = m;
      }
    });
    const auto plan = solve_max_transport(profit, rows, cols);
    CHECK(plan.objective == doctest::Approx(best).epsilon(1e-12));
    CHECK(plan.plan == best_plan);
    CHECK(plan.plan.row_sums() == rows);
    CHECK(plan.plan.col_sums() == cols);
  }
}

TEST_CASE("transport ties go to the lexicographically smallest plan") {
  const RealMatrix flat{{1.0, 1.0}, {1.0, 1.0}};
  const std::vector<int> s{2, 2}, d{2, 2};
  const auto plan = solve_max_transport(flat, s, d);
  CHECK(plan.plan(0, 0) == 0);
  CHECK(plan.plan(0, 1) == 2);
  CHECK(plan.plan(1, 0) == 2);
}

TEST_CASE("transport rejects unbalanced margins") {
  const RealMatrix p{{1.0, 0.0}, {0.0, 1.0}};
  const std::vector<int> s{2, 1}, d{1, 1};
  CHECK_THROWS_AS(solve_max_transport(p, s, d), ValidationError);
}

TEST_CASE("min cost flow on a small graph") {
  MinCostFlow f(4);
  const int a = f.add_arc(0, 1, 2, 1.0);
  const int b = f.add_arc(0, 2, 2, 3.0);
  f.add_arc(1, 3, 1, 0.0);
  f.add_arc(2, 3, 2, 0.0);
  const auto r = f.solve(0, 3, 3);
  CHECK(r.flow == 3);
  CHECK(r.cost == doctest::Approx(7.0));
  CHECK(f.flow_on(a) == 1);
  CHECK(f.flow_on(b) == 2);
}
