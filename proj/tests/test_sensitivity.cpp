#include <doctest.h>

#include <cmath>
#include <random>

#include "peerscore/dominance.hpp"
#include "peerscore/sensitivity.hpp"
#include "test_support.hpp"

using namespace peerscore;

namespace {

// Shirking at rate 1-e is the same joint law as garbling the signal with
// e*I + (1-e)*1*M^a, so the exact engine can play effort e.
Strategy effort_strategy(const InfoStructure& info, double e) {
  const auto m = info.marginal_a();
  const std::size_t c = m.size();
  RealMatrix s(c, c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) s(i, j) = (i == j ? e : 0.0) + (1 - e) * m[j];
  return Strategy(s);
}

double engine_delta(const MechanismSpec& spec, const InfoStructure& info, int n, double e) {
  const auto at = exact_distribution(spec, info, effort_strategy(info, e), n);
  const auto hi = exact_distribution(spec, info, effort_strategy(info, 1.0), n);
  const auto lo = exact_distribution(spec, info, effort_strategy(info, 0.0), n);
  return (hi.mean() - lo.mean()) / at.stddev();
}

// Symmetric joint with marginal p0 and off-diagonal mass set by `agree`.
InfoStructure symmetric_binary(double p0, double agree) {
  const double off = (1 - agree) * std::min(p0, 1 - p0);
  return InfoStructure(RealMatrix{{p0 - off, off}, {off, 1 - p0 - off}});
}

}  // namespace

TEST_CASE("OA closed form against the binomial pmf") {
  const auto& info = preset("J1");
  const auto& j = info.joint();
  const auto ma = info.marginal_a(), mb = info.marginal_b();
  const double chance = ma[0] * mb[0] + ma[1] * mb[1];
  for (double e : {0.0, 0.25, 0.5, 0.75, 1.0})
    for (int n : {1, 5, 40, 100}) {
      const double q = e * (j(0, 0) + j(1, 1)) + (1 - e) * chance;
      const auto pmf = binomial_pmf(n, q);
      double mean = 0, sq = 0;
      for (int k = 0; k <= n; ++k) {
        mean += pmf[k] * k / n;
        sq += pmf[k] * (static_cast<double>(k) / n) * (static_cast<double>(k) / n);
      }
      const double oracle = (j(0, 0) + j(1, 1) - chance) / std::sqrt(sq - mean * mean);
      const auto r = closed_form_sensitivity(parse_mechanism("oa"), info, n, e);
      CHECK(std::abs(r.delta - oracle) < 1e-9);
      CHECK(r.method == SensitivityMethod::closed_form);
    }
}

TEST_CASE("closed forms against the exact engine") {
  std::mt19937_64 g(31);
  for (int t = 0; t < 4; ++t) {
    // PTS needs a symmetric joint
    const auto info = t == 0 ? preset("J1") : symmetric_binary(0.2 + 0.2 * t, 0.5 + 0.1 * t);
    for (std::string name : {"oa", "oa-direct-round", "oa-partition-round", "pts-partition-round",
                             "pts-direct-round", "ca-partition-round", "ca-direct-round"})
      for (int n : {2, 4, 5})
        for (double e : {0.5, 1.0}) {
          const auto spec = parse_mechanism(name);
          CHECK_MESSAGE(closed_form_sensitivity(spec, info, n, e).delta ==
                            doctest::Approx(engine_delta(spec, info, n, e)).epsilon(1e-9),
                        name << " n=" << n << " e=" << e);
        }
  }
}

TEST_CASE("rounding ratios") {
  const auto& info = preset("J1");
  for (int n = 1; n <= 1000; n += 37) {
    const double oa = closed_form_sensitivity(parse_mechanism("oa"), info, n, 1.0).delta;
    const double direct = closed_form_sensitivity(parse_mechanism("oa-direct-round"), info, n, 1.0).delta;
    CHECK(std::abs(oa / direct - std::sqrt(n)) < 1e-12 * std::sqrt(n));
  }
  for (const char* fam : {"oa", "pts", "ca", "ma"})
    for (int n : {2, 3, 10, 101}) {
      const std::string f(fam);
      const double part = closed_form_sensitivity(parse_mechanism(f + "-partition-round"), info, n, 0.8).delta;
      const double direct = closed_form_sensitivity(parse_mechanism(f + "-direct-round"), info, n, 0.8).delta;
      const int k = questions_per_group(parse_mechanism(f).family) == 1 ? n : n / 2;
      CHECK(std::abs(part / direct - std::sqrt(k)) < 1e-12 * std::sqrt(k));
    }
}

TEST_CASE("independent signals have zero sensitivity") {
  const InfoStructure indep(RealMatrix{{0.16, 0.24}, {0.24, 0.36}});
  for (const char* name : {"oa", "oa-direct-round", "pts-partition-round", "ca-partition-round", "ma-partition-round"})
    CHECK(closed_form_sensitivity(parse_mechanism(name), indep, 10, 1.0).delta == doctest::Approx(0.0));
  MonteCarloConfig mc;
  mc.replicates = 4000;
  const auto r = monte_carlo_sensitivity(parse_mechanism("oa"), indep, 10, mc);
  CHECK(std::abs(r.delta) <= 3 * *r.stderr_delta);
}

TEST_CASE("MA and CA agree on binary structures") {
  std::mt19937_64 g(32);
  for (int t = 0; t < 1000; ++t) {
    const auto info = testsupport::random_structure(g, 2);
    const double ca = closed_form_sensitivity(parse_mechanism("ca-partition-round"), info, 20, 1.0).delta;
    const double ma = closed_form_sensitivity(parse_mechanism("ma-partition-round"), info, 20, 1.0).delta;
    CHECK(std::abs(ca - ma) < 1e-12);
  }
}

TEST_CASE("unsupported closed forms throw") {
  CHECK_THROWS_AS(closed_form_sensitivity(parse_mechanism("ca"), preset("J1"), 10, 1.0), ValidationError);
  CHECK_THROWS_AS(closed_form_sensitivity(parse_mechanism("ea"), preset("J1"), 10, 1.0), ValidationError);
  CHECK(analytic_sensitivity(parse_mechanism("ea"), preset("J1"), 10, 1.0));
  CHECK_FALSE(analytic_sensitivity(parse_mechanism("ca"), preset("J1"), 10, 1.0));
}

TEST_CASE("EA moments against the exact engine") {
  std::mt19937_64 g(33);
  for (int t = 0; t < 5; ++t) {
    const auto info = t == 0 ? preset("J1") : testsupport::random_structure(g, 2);
    for (int n = 1; n <= 6; ++n)
      for (int n0 = 0; n0 <= n; ++n0)
        for (double e : {0.0, 0.4, 1.0}) {
          MechanismSpec spec = parse_mechanism("ea");
          spec.enforcement = EnforcementMode::explicit_counts;
          spec.explicit_phi = {n0, n - n0};
          const auto d = exact_distribution(spec, info, effort_strategy(info, e), n);
          const auto m = ea_exact_moments(info, n, n0, e);
          CHECK(m.mean == doctest::Approx(d.mean()).epsilon(1e-10));
          CHECK(m.stddev == doctest::Approx(d.stddev()).epsilon(1e-9));
          const double grad = exact_distribution(spec, info, effort_strategy(info, 1.0), n).mean() -
                              exact_distribution(spec, info, effort_strategy(info, 0.0), n).mean();
          CHECK(m.gradient == doctest::Approx(grad).epsilon(1e-9));
        }
  }
  CHECK_THROWS_AS(ea_exact_moments(preset("uniform-3signal"), 4, 2, 1.0), ValidationError);
}

TEST_CASE("EA conditional spread does not depend on the target") {
  std::mt19937_64 g(34);
  for (int t = 0; t < 20; ++t) {
    const auto info = testsupport::random_self_predicting_binary(g);
    const int n = 2 + static_cast<int>(g() % 49);
    const double e = 0.5 + 0.5 * (t % 2);
    const auto first = ea_exact_moments(info, n, 0, e);
    CHECK(std::abs(ea_exact_moments(info, n, n, e).stddev - first.stddev) < 1e-9);
    for (int n0 = 1; n0 <= n; ++n0)
      CHECK(std::abs(ea_exact_moments(info, n, n0, e).conditional_stddev - first.conditional_stddev) < 1e-9);
  }
  // the mixture std moves with n0
  const auto& j1 = preset("J1");
  CHECK(ea_exact_moments(j1, 100, 66, 1.0).stddev < ea_exact_moments(j1, 100, 30, 1.0).stddev - 1e-3);
}

TEST_CASE("perfect correlation leaves no conditional variance") {
  const InfoStructure diag(RealMatrix{{0.5, 0.0}, {0.0, 0.5}});
  for (int n0 = 0; n0 <= 10; ++n0) CHECK(ea_exact_moments(diag, 10, n0, 1.0).conditional_stddev < 1e-12);
}

TEST_CASE("optimal enforcement") {
  const auto sym = symmetric_binary(0.5, 0.8);
  const auto eta = eta_primes(sym);
  CHECK(eta.threshold_ratio() == doctest::Approx(0.5));
  const auto opt = optimal_enforcement(sym, 10);
  CHECK(opt.literal_boundary == 4);
  CHECK(opt.n0 == 5);
  CHECK(binomial_cdf(4, 10, 0.5) < 0.5);
  CHECK(binomial_cdf(5, 10, 0.5) >= 0.5);

  std::mt19937_64 g(35);
  for (int t = 0; t < 10; ++t) {
    const auto info = t == 0 ? preset("J1") : testsupport::random_self_predicting_binary(g);
    for (int n : {10, 50, 100}) {
      const auto scan = scan_enforcement(info, n);
      CHECK(optimal_enforcement(info, n).n0 == scan.argmax_gradient);
      // gradient is unimodal in n0
      int turns = 0;
      for (int k = 1; k < n; ++k) {
        const double d1 = scan.moments[k].gradient - scan.moments[k - 1].gradient;
        const double d2 = scan.moments[k + 1].gradient - scan.moments[k].gradient;
        turns += d1 > 1e-12 && d2 < -1e-12;
      }
      CHECK(turns <= 1);
    }
  }
  CHECK_THROWS_AS(optimal_enforcement(preset("uniform-3signal"), 10), ValidationError);
  const InfoStructure anti(RealMatrix{{0.1, 0.4}, {0.4, 0.1}});
  CHECK_THROWS_AS(optimal_enforcement(anti, 10), ValidationError);
}

TEST_CASE("Monte Carlo is reproducible and thread independent") {
  const auto& info = preset("J1");
  const Mechanism mech(parse_mechanism("ea-uniform"), info);
  const auto a = sample_scores_serial(mech, info, 20, 0.9, 500, 3);
  const auto b = sample_scores_parallel(mech, info, 20, 0.9, 500, 3);
  CHECK(a == b);
  MonteCarloConfig mc;
  mc.replicates = 2000;
  const auto r1 = monte_carlo_sensitivity(parse_mechanism("pts-partition-round"), info, 20, mc);
  const auto r2 = monte_carlo_sensitivity_serial(parse_mechanism("pts-partition-round"), info, 20, mc);
  CHECK(r1.delta == r2.delta);
  CHECK(*r1.stderr_delta == *r2.stderr_delta);
  CHECK(r1.method == SensitivityMethod::monte_carlo);
  mc.de = 1.5;
  CHECK_THROWS_AS(monte_carlo_sensitivity(parse_mechanism("oa"), info, 20, mc), ValidationError);
}

TEST_CASE("Monte Carlo agrees with analytic values") {
  const auto& info = preset("J1");
  MonteCarloConfig mc;
  mc.replicates = 20000;
  for (std::string name : {"oa", "ca-partition-round", "ea-prior", "ma"}) {
    const auto spec = parse_mechanism(name);
    const auto exact = analytic_sensitivity(spec, info, 20, 1.0);
    // pooled over 5 seeds, stderr of the average
    double sum = 0, var = 0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
      mc.seed = s;
      const auto r = monte_carlo_sensitivity(spec, info, 20, mc);
      REQUIRE(r.stderr_delta);
      sum += r.delta;
      var += *r.stderr_delta * *r.stderr_delta;
    }
    const double avg = sum / 5, se = std::sqrt(var) / 5;
    if (exact) CHECK_MESSAGE(std::abs(avg - exact->delta) <= 3 * se, name << " mc " << avg << " exact " << exact->delta);
    else CHECK(avg > 0);
  }
  mc.replicates = 2000;
  mc.bootstrap = true;
  mc.bootstrap_resamples = 50;
  const auto r = monte_carlo_sensitivity(parse_mechanism("oa"), info, 20, mc);
  REQUIRE(r.stderr_bootstrap);
  CHECK(*r.stderr_bootstrap == doctest::Approx(*r.stderr_delta).epsilon(0.5));
}

TEST_CASE("delta estimate from fixed samples") {
  const std::vector<double> hi{1, 0, 1, 1}, lo{0, 0, 1, 0};
  const auto d = estimate_delta(hi, lo, 0.5);
  CHECK(d.mean_hi == doctest::Approx(0.75));
  CHECK(d.mean_lo == doctest::Approx(0.25));
  CHECK(d.delta == doctest::Approx(1.0 / d.stddev_hi));
}

TEST_CASE("prior sweep family") {
  const auto [lo, hi] = prior_sweep_range();
  CHECK(lo < 0.4);
  CHECK(hi > 0.8);
  for (double p : {0.4, 0.5, 0.6, 0.7, 0.8}) {
    const auto info = prior_sweep_structure(p);
    CHECK(std::abs(info.marginal_a()[0] - p) < 1e-9);
    CHECK(classify(info).self_predicting);
  }
  CHECK_THROWS_AS(prior_sweep_structure(0.0), ValidationError);
  CHECK_THROWS_AS(prior_sweep_structure(hi + 0.01), ValidationError);
}

TEST_CASE("sensitivity sweep rows") {
  SweepConfig cfg;
  cfg.axis = SweepAxis::n;
  cfg.values = {10, 20};
  cfg.mc.replicates = 200;
  const std::vector<MechanismSpec> specs{parse_mechanism("oa"), parse_mechanism("ca"), parse_mechanism("ea-optimal")};
  const auto rows = sensitivity_sweep(specs, preset("J1"), cfg);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].method == "closed_form");
  CHECK_FALSE(rows[0].seed);
  CHECK(rows[1].method == "monte_carlo");
  CHECK(rows[1].seed);
  CHECK(rows[1].stderr_delta);
  CHECK(rows[2].method == "exact");
  CHECK(rows[3].axis == 20);
}
