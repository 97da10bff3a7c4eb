#include <doctest.h>

#include <map>
#include <random>

#include "peerscore/config.hpp"
#include "peerscore/dominance.hpp"
#include "peerscore/mechanisms.hpp"
#include "test_support.hpp"

using namespace peerscore;

namespace {

const CountMatrix kIdentity2{{1, 0}, {0, 1}};
const InfoStructure kDiag(RealMatrix{{0.5, 0.0}, {0.0, 0.5}});

Reports random_reports(std::mt19937_64& g, int n, std::size_t c) {
  Reports r(static_cast<std::size_t>(n));
  for (auto& x : r) x = static_cast<int>(g() % c);
  return r;
}

}  // namespace

TEST_CASE("output agreement") {
  CHECK(score_oa(Reports{0, 1, 0}, Reports{0, 1, 0}) == 1.0);
  CHECK(score_oa(Reports{0, 1}, Reports{1, 0}) == 0.0);
  CHECK(score_oa(Reports{0, 0, 1, 1}, Reports{0, 1, 1, 1}) == 0.75);
  CHECK_THROWS_AS(score_oa(Reports{0, 1}, Reports{0}), ValidationError);
}

TEST_CASE("peer truth serum") {
  const std::vector<double> half{0.5, 0.5}, skew{0.8, 0.2};
  CHECK(score_pts(Reports{0, 0}, Reports{0, 0}, half) == 2.0);
  CHECK(score_pts(Reports{0, 1}, Reports{1, 0}, skew) == 0.0);
  CHECK(score_pts(Reports{1}, Reports{1}, skew) == doctest::Approx(5.0));
  const std::vector<double> zero{1.0, 0.0};
  CHECK_THROWS_AS(score_pts(Reports{1}, Reports{1}, zero), ValidationError);
}

TEST_CASE("PTS needs a symmetric structure or an explicit prior") {
  const InfoStructure asym(RealMatrix{{0.5, 0.2}, {0.1, 0.2}});
  CHECK_THROWS_AS(Mechanism(parse_mechanism("pts"), asym), ValidationError);
  MechanismSpec spec = parse_mechanism("pts");
  spec.pts_prior = std::vector<double>{0.6, 0.4};
  const Mechanism mech(spec, asym);
  CHECK(mech.individual_bounds().sup == doctest::Approx(2.5));
  CHECK(Mechanism(parse_mechanism("pts"), preset("biased")).individual_bounds().sup == doctest::Approx(5.0));
}

TEST_CASE("correlated agreement, all ordered pairs") {
  CHECK(score_ca_original(Reports{0, 1}, Reports{0, 1}, kIdentity2) == 1.0);
  const CountMatrix ones{{1, 1}, {1, 1}};
  std::mt19937_64 g(1);
  for (int t = 0; t < 50; ++t)
    CHECK(score_ca_original(random_reports(g, 5, 2), random_reports(g, 5, 2), ones) == 0.0);
  CHECK(score_ca_original(Reports{0, 0}, Reports{0, 0}, kIdentity2) == 0.0);
  CHECK_THROWS_AS(score_ca_original(Reports{0}, Reports{0}, kIdentity2), ValidationError);

  // count formula against a direct double loop
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 6;
    const auto a = random_reports(g, n, 3), b = random_reports(g, n, 3);
    CountMatrix table(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 3; ++k) table(i, k) = static_cast<int>(g() % 2);
    double sum = 0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (j != k) sum += table(a[j], b[j]) - table(a[j], b[k]);
    CHECK(score_ca_original(a, b, table) == doctest::Approx(sum / (n * (n - 1))).epsilon(1e-14));
  }
}

TEST_CASE("correlated agreement, disjoint pairs") {
  CHECK(score_ca_partitioned(Reports{0, 1}, Reports{0, 1}, kIdentity2, default_pairing(2)) == 1.0);
  CHECK(score_ca_partitioned(Reports{0, 0}, Reports{1, 1}, kIdentity2, default_pairing(2)) == 0.0);
  // pair one scores 1, pair two scores -1
  CHECK(score_ca_partitioned(Reports{0, 1, 0, 1}, Reports{0, 1, 1, 0}, kIdentity2, default_pairing(4)) == 0.0);
  const std::vector<std::pair<int, int>> overlapping{{0, 1}, {1, 2}};
  CHECK_THROWS_AS(score_ca_partitioned(Reports{0, 1, 0}, Reports{0, 1, 0}, kIdentity2, overlapping),
                  ValidationError);
  CHECK(default_pairing(7).size() == 3);
}

TEST_CASE("matching agreement") {
  const auto g = gamma_tensor(kDiag);
  CHECK(score_ma_original(Reports{0, 1}, Reports{0, 1}, g) == 1.0);
  CHECK(score_ma_partitioned(Reports{0, 1}, Reports{0, 1}, g, default_pairing(2)) == 1.0);
  const auto zero = gamma_tensor(InfoStructure(RealMatrix{{0.12, 0.28}, {0.18, 0.42}}));
  std::mt19937_64 r(2);
  for (int t = 0; t < 50; ++t) CHECK(score_ma_original(random_reports(r, 4, 2), random_reports(r, 4, 2), zero) == 0.0);
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2) CHECK(ma_individual(g, s1, s2, s2) == 0);
}

TEST_CASE("scores stay in their family ranges") {
  std::mt19937_64 g(3);
  const auto& info = preset("J1");
  for (const char* name : {"oa", "pts", "ca", "ma", "ca-partition", "ma-partition", "ea", "ea-uniform",
                           "oa-direct-round", "pts-partition-round", "ca-partition-round"}) {
    const Mechanism mech(parse_mechanism(name), info);
    const auto bounds = mech.score_bounds();
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
      const int n = 2 + t % 7;
      const double s = mech.score(random_reports(g, n, 2), random_reports(g, n, 2), rng);
      CHECK(s >= bounds.inf - 1e-12);
      CHECK(s <= bounds.sup + 1e-12);
    }
  }
}

TEST_CASE("binary flip enforcement") {
  std::map<Reports, int> seen;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    Rng rng(seed);
    const auto out = ea_enforce_binary(Reports{0, 0, 1}, Enforcement{1, 2}, rng);
    CHECK(out[2] == 1);
    ++seen[out];
  }
  CHECK(seen.size() == 2);
  CHECK(std::abs(seen[Reports{1, 0, 1}] / 4000.0 - 0.5) < 0.03);
  Rng rng(1);
  CHECK(ea_enforce_binary(Reports{0, 1, 1}, Enforcement{1, 2}, rng) == Reports{0, 1, 1});
  CHECK(ea_enforce_binary(Reports{0, 0}, Enforcement{0, 2}, rng) == Reports{1, 1});
  CHECK_THROWS_AS(ea_enforce_binary(Reports{0, 2}, Enforcement{1, 0, 1}, rng), ValidationError);
}

TEST_CASE("minimal enforcement case split") {
  const auto one = plan_minimal(std::vector<int>{5, 2, 3}, std::vector<int>{4, 3, 3});
  CHECK(one == CountMatrix{{4, 1, 0}, {0, 2, 0}, {0, 0, 3}});
  const auto two = plan_minimal(std::vector<int>{4, 4, 2}, std::vector<int>{3, 3, 4});
  CHECK(two == CountMatrix{{3, 0, 1}, {0, 3, 1}, {0, 0, 2}});
  const auto same = plan_minimal(std::vector<int>{2, 3, 1}, std::vector<int>{2, 3, 1});
  CHECK(same == CountMatrix{{2, 0, 0}, {0, 3, 0}, {0, 0, 1}});
  CHECK_THROWS_AS(plan_minimal(std::vector<int>{1, 1, 1, 1}, std::vector<int>{1, 1, 1, 1}), ValidationError);

  // flips are minimal: sum_j (n_j - m_j)+
  for (int m0 = 0; m0 <= 6; ++m0)
    for (int m1 = 0; m0 + m1 <= 6; ++m1)
      for (int n0 = 0; n0 <= 6; ++n0)
        for (int n1 = 0; n0 + n1 <= 6; ++n1) {
          const std::vector<int> m{m0, m1, 6 - m0 - m1}, t{n0, n1, 6 - n0 - n1};
          const auto rho = plan_minimal(m, t);
          CHECK(rho.row_sums() == m);
          CHECK(rho.col_sums() == t);
          int flips = 0, deficit = 0;
          for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j)
              if (i != j) flips += rho(i, j);
            deficit += std::max(0, t[i] - m[i]);
          }
          CHECK(flips == deficit);
        }
}

TEST_CASE("IP enforcement") {
  std::mt19937_64 g(6);
  for (int t = 0; t < 200; ++t) {
    const std::size_t c = 2 + t % 3;
    const auto info = testsupport::random_structure(g, c);
    const auto p = info.conditional_b_given_a();
    const int n = 1 + static_cast<int>(g() % 8);
    std::vector<int> m(c, 0), phi(c, 0);
    for (int k = 0; k < n; ++k) ++m[g() % c];
    for (int k = 0; k < n; ++k) ++phi[g() % c];
    double best = -1;
    testsupport::enumerate_margins(m, phi, [&](const CountMatrix& x) {
      double v = 0;
      for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) v += x(i, j) * p(i, j);
      best = std::max(best, v);
    });
    const auto rho = plan_ip(m, phi, p);
    double v = 0;
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) v += rho(i, j) * p(i, j);
    CHECK(v == doctest::Approx(best).epsilon(1e-12));
    CHECK(rho.row_sums() == m);
    CHECK(rho.col_sums() == phi);
  }
  // diagonal when nothing needs to move
  const auto p = preset("uniform-3signal").conditional_b_given_a();
  CHECK(plan_ip(std::vector<int>{2, 1, 3}, std::vector<int>{2, 1, 3}, p) == CountMatrix{{2, 0, 0}, {0, 1, 0}, {0, 0, 3}});
}

TEST_CASE("IP and binary flip agree on binary self-predicting structures") {
  std::mt19937_64 g(7);
  for (int t = 0; t < 30; ++t) {
    const auto info = testsupport::random_self_predicting_binary(g);
    const auto p = info.conditional_b_given_a();
    for (int n = 1; n <= 6; ++n)
      for (int m0 = 0; m0 <= n; ++m0)
        for (int n0 = 0; n0 <= n; ++n0) {
          const std::vector<int> m{m0, n - m0}, phi{n0, n - n0};
          CHECK(plan_ip(m, phi, p) == plan_binary_flip(m, phi));
        }
  }
}

TEST_CASE("every rule hits the target histogram") {
  std::mt19937_64 g(8);
  const auto& p3 = preset("uniform-3signal").conditional_b_given_a();
  const auto& p4 = preset("J2").conditional_b_given_a();
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + t % 12;
    Rng rng(static_cast<std::uint64_t>(t));
    for (std::size_t c : {2u, 3u, 4u}) {
      const auto a = random_reports(g, n, c);
      Enforcement phi(c, 0);
      for (int k = 0; k < n; ++k) ++phi[g() % c];
      if (c == 2) CHECK(histogram(ea_enforce_binary(a, phi, rng), c) == phi);
      if (c <= 3) CHECK(histogram(ea_enforce_minimal(a, phi, rng), c) == phi);
      const auto& p = c == 3 ? p3 : (c == 4 ? p4 : preset("J1").conditional_b_given_a());
      CHECK(histogram(ea_enforce_ip(a, phi, p, rng), c) == phi);
    }
  }
}

TEST_CASE("apply_plan only moves surplus positions") {
  Rng rng(9);
  const Reports a{0, 1, 0, 2, 0, 1};
  const CountMatrix plan{{1, 1, 1}, {0, 2, 0}, {0, 0, 1}};
  for (int t = 0; t < 50; ++t) {
    const auto out = apply_plan(a, plan, rng);
    CHECK(out[1] == 1);
    CHECK(out[3] == 2);
    CHECK(out[5] == 1);
    CHECK(histogram(out, 3) == std::vector<int>{1, 3, 2});
  }
}

TEST_CASE("enforced agreement scores") {
  const MechanismSpec hist = parse_mechanism("ea");
  std::mt19937_64 g(10);
  for (int t = 0; t < 50; ++t) {
    const auto a = random_reports(g, 5, 2), b = random_reports(g, 5, 2);
    MechanismSpec spec = hist;
    spec.enforcement = EnforcementMode::explicit_counts;
    spec.explicit_phi = histogram(a, 2);
    Rng rng(static_cast<std::uint64_t>(t));
    CHECK(score_ea(a, b, spec, preset("J1"), rng) == score_oa(a, b));
  }
  MechanismSpec even = parse_mechanism("ea-uniform");
  std::map<double, int> seen;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    Rng rng(s);
    ++seen[score_ea(Reports{0, 0}, Reports{0, 1}, even, preset("J1"), rng)];
  }
  CHECK(seen.size() == 2);
  CHECK(std::abs(seen[1.0] / 2000.0 - 0.5) < 0.04);
  CHECK(std::abs(seen[0.0] / 2000.0 - 0.5) < 0.04);

  MechanismSpec forced = parse_mechanism("ea");
  forced.enforcement = EnforcementMode::explicit_counts;
  forced.explicit_phi = {2, 0};
  Rng rng(1);
  CHECK(score_ea(Reports{1, 1}, Reports{0, 0}, forced, preset("J1"), rng) == 1.0);
}

TEST_CASE("enforcement targets") {
  const auto& j1 = preset("J1");
  CHECK(resolve_enforcement(EnforcementMode::uniform, j1, 100) == Enforcement{50, 50});
  CHECK(std::abs(j1.marginal_a()[0] - 0.664) < 1e-3);
  CHECK(resolve_enforcement(EnforcementMode::prior, j1, 100) == Enforcement{66, 34});
  CHECK(resolve_enforcement(EnforcementMode::explicit_counts, j1, 100, {30, 70}) == Enforcement{30, 70});
  CHECK_THROWS_AS(resolve_enforcement(EnforcementMode::explicit_counts, j1, 100, {30, 60}), ValidationError);
  CHECK_THROWS_AS(resolve_enforcement(EnforcementMode::optimal, preset("J2"), 10), ValidationError);
  CHECK(largest_remainder(std::vector<double>{0.5, 0.5}, 3) == std::vector<int>{2, 1});
  CHECK(largest_remainder(std::vector<double>{0.25, 0.25, 0.5}, 2) == std::vector<int>{1, 0, 1});
}

TEST_CASE("strategies") {
  Rng rng(2);
  CHECK(apply_strategy(Reports{0, 1, 0}, Strategy::truthful(2), rng) == Reports{0, 1, 0});
  CHECK(apply_strategy(Reports{0, 1, 0}, Strategy::constant(2, 0), rng) == Reports{0, 0, 0});
  const std::vector<int> flip{1, 0};
  CHECK(apply_strategy(Reports{0, 1, 0}, Strategy::permutation(flip), rng) == Reports{1, 0, 1});
  CHECK(Strategy::truthful(3).is_truthful());
  CHECK_FALSE(Strategy::constant(3, 1).is_truthful());
  CHECK_THROWS_AS(Strategy(RealMatrix{{0.5, 0.4}, {0.0, 1.0}}), ValidationError);
}

TEST_CASE("mechanism names round-trip") {
  for (const char* name : {"oa", "pts", "ca", "ma", "ca-partition", "ma-partition", "ea-prior", "ea-uniform",
                           "ea-optimal", "ea-uniform-minimal", "ea-prior-ip", "oa-direct-round",
                           "pts-partition-round", "ca-partition-round", "ma-direct-round", "ea-prior-direct-round"}) {
    CHECK(parse_mechanism(name).name() == name);
    CHECK(mechanism_from_json(mechanism_to_json(parse_mechanism(name))).name() == name);
  }
  CHECK(parse_mechanism("ea").name() == "ea-prior");
  CHECK_THROWS_AS(parse_mechanism("oa-partition"), ValidationError);
  CHECK_THROWS_AS(parse_mechanism("ea-prior-partition-round"), ValidationError);
  CHECK_THROWS_AS(parse_mechanism("bts"), ValidationError);
  const auto spec = mechanism_from_json(Json::parse(R"({"family": "ea", "enforcement": [3, 1], "rule": "ip"})"));
  CHECK(spec.enforcement == EnforcementMode::explicit_counts);
  CHECK(spec.rule == EnforcementRule::ip);
  CHECK(spec.explicit_phi == Enforcement{3, 1});
  CHECK_THROWS_AS(mechanism_from_json(Json::parse(R"({"family": "oa", "rule": "ip"})")), ValidationError);
}

TEST_CASE("Example 1: CA with all ordered pairs can be gamed at n = 2") {
  const auto& info = preset("J1");
  const auto& j = info.joint();
  // oracle: enumerate both questions' signal pairs and score them directly
  double oracle = 0;
  for (int a0 = 0; a0 < 2; ++a0)
    for (int b0 = 0; b0 < 2; ++b0)
      for (int a1 = 0; a1 < 2; ++a1)
        for (int b1 = 0; b1 < 2; ++b1) {
          const double s = score_ca_original(Reports{a0, a1}, Reports{b0, b1}, kIdentity2);
          if (s < -0.5) oracle += j(a0, b0) * j(a1, b1);
        }
  const auto truthful = exact_distribution(parse_mechanism("ca"), info, Strategy::truthful(2), 2);
  CHECK(truthful.prob_at(-1.0) == doctest::Approx(oracle).epsilon(1e-14));
  MESSAGE("Pr(S=-1) engine " << truthful.prob_at(-1.0) << ", formula 2*J01*J10 " << 2 * j(0, 1) * j(1, 0));
  for (int s = 0; s < 2; ++s)
    CHECK(exact_distribution(parse_mechanism("ca"), info, Strategy::constant(2, s), 2).prob_at(-1.0) == 0.0);
}

TEST_CASE("constant reports earn zero under CA against exchangeable peers") {
  for (const char* name : {"J1", "biased", "ca-3signal"}) {
    const auto& info = preset(name);
    const std::size_t c = info.num_signals();
    for (int n = 2; n <= 4; ++n)
      for (std::size_t s = 0; s < c; ++s) {
        const double m = exact_distribution(parse_mechanism("ca"), info, Strategy::constant(c, static_cast<int>(s)), n)
                             .mean();
        CHECK(std::abs(m) < 1e-12);
      }
  }
}
