#include <doctest.h>

#include <cmath>

#include "peerscore/config.hpp"
#include "peerscore/signal_model.hpp"
#include "test_support.hpp"

using namespace peerscore;

TEST_CASE("Dawid-Skene joint") {
  const auto& j1 = preset("J1");
  // two-term sum written out by hand
  CHECK(j1.joint(0, 0) == doctest::Approx(0.613 * 0.905 * 0.905 + 0.387 * 0.283 * 0.283).epsilon(1e-14));
  CHECK(std::abs(j1.joint(0, 0) - 0.5331) < 1e-4);
  CHECK(j1.symmetric());

  const auto det = joint_from_dawid_skene({{1.0}, RealMatrix{{1.0, 0.0}}});
  CHECK(det.joint(0, 0) == 1.0);
  CHECK(det.joint(0, 1) == 0.0);
  CHECK(det.joint(1, 1) == 0.0);

  const auto perfect = joint_from_dawid_skene({{0.5, 0.5}, RealMatrix{{1.0, 0.0}, {0.0, 1.0}}});
  CHECK(perfect.joint(0, 0) == 0.5);
  CHECK(perfect.joint(1, 1) == 0.5);
  CHECK(perfect.joint(0, 1) == 0.0);
}

TEST_CASE("Dawid-Skene marginals equal W times Gamma") {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + trial % 3, c = 2 + trial % 4;
    DawidSkeneModel m;
    m.prior = testsupport::random_simplex(g, k);
    m.confusion = RealMatrix(k, c);
    for (std::size_t w = 0; w < k; ++w) {
      const auto row = testsupport::random_simplex(g, c);
      for (std::size_t s = 0; s < c; ++s) m.confusion(w, s) = row[s];
    }
    const auto info = joint_from_dawid_skene(m);
    for (std::size_t s = 0; s < c; ++s) {
      double wg = 0;
      for (std::size_t w = 0; w < k; ++w) wg += m.prior[w] * m.confusion(w, s);
      CHECK(std::abs(info.marginal_a()[s] - wg) < 1e-12);
      CHECK(std::abs(info.marginal_b()[s] - wg) < 1e-12);
    }
  }
}

TEST_CASE("invalid structures are rejected") {
  CHECK_THROWS_AS(InfoStructure(RealMatrix{{0.5, 0.5}, {0.5, 0.5}}), ValidationError);
  CHECK_THROWS_AS(InfoStructure(RealMatrix{{1.1, -0.1}, {0.0, 0.0}}), ValidationError);
  CHECK_THROWS_AS(joint_from_dawid_skene({{0.5, 0.6}, RealMatrix{{1, 0}, {0, 1}}}), ValidationError);
  CHECK_THROWS_AS(joint_from_dawid_skene({{0.5, 0.5}, RealMatrix{{0.9, 0.2}, {0, 1}}}), ValidationError);
}

TEST_CASE("delta matrix") {
  const InfoStructure indep(RealMatrix{{0.12, 0.28}, {0.18, 0.42}});
  const auto d0 = delta_matrix(indep);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(d0.delta(i, k)) < 1e-12);
      CHECK(d0.agreement(i, k) == 0);
    }

  const auto d1 = delta_matrix(InfoStructure(RealMatrix{{0.5, 0.0}, {0.0, 0.5}}));
  CHECK(d1.delta(0, 0) == doctest::Approx(0.25));
  CHECK(d1.delta(0, 1) == doctest::Approx(-0.25));
  CHECK(d1.agreement(0, 0) == 1);
  CHECK(d1.agreement(1, 1) == 1);
  CHECK(d1.agreement(0, 1) == 0);

  const auto& j1 = preset("J1");
  const auto& m = j1.marginal_a();
  const double tr = j1.joint(0, 0) + j1.joint(1, 1) - m[0] * m[0] - m[1] * m[1];
  const auto dj = delta_matrix(j1);
  CHECK(dj.delta(0, 0) + dj.delta(1, 1) == doctest::Approx(tr).epsilon(1e-13));
  CHECK(std::abs(tr - 0.1836) < 1e-4);
}

TEST_CASE("delta rows and columns sum to zero") {
  std::mt19937_64 g(2);
  for (int t = 0; t < 1000; ++t) {
    const auto info = testsupport::random_structure(g, 2 + t % 4);
    const auto d = delta_matrix(info);
    for (double s : d.delta.row_sums()) CHECK(std::abs(s) < 1e-12);
    for (double s : d.delta.col_sums()) CHECK(std::abs(s) < 1e-12);
  }
}

TEST_CASE("gamma tensor") {
  const InfoStructure indep(RealMatrix{{0.12, 0.28}, {0.18, 0.42}});
  const auto g0 = gamma_tensor(indep);
  for (double x : g0.gamma) CHECK(std::abs(x) < 1e-12);

  const auto g1 = gamma_tensor(InfoStructure(RealMatrix{{0.5, 0.0}, {0.0, 0.5}}));
  CHECK(g1.at(0, 0, 1) == doctest::Approx(1.0));
  CHECK(g1.sign(0, 0, 1) == 1);

  const auto g2 = gamma_tensor(preset("J2"));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        CHECK(std::abs(g2.at(a, b, c) + g2.at(a, c, b)) < 1e-12);
        if (b == c) CHECK(g2.at(a, b, c) == 0.0);
        if (std::abs(g2.at(a, b, c)) > 1e-12) CHECK(g2.sign(a, b, c) == 1 - g2.sign(a, c, b));
      }

  CHECK_THROWS_AS(gamma_tensor(InfoStructure(RealMatrix{{0.5, 0.0}, {0.5, 0.0}})), ValidationError);
}

TEST_CASE("classify") {
  const auto diag = classify(InfoStructure(RealMatrix{{0.5, 0.0}, {0.0, 0.5}}));
  CHECK(diag.self_dominating);
  CHECK(diag.self_predicting);
  CHECK(diag.uniformly_self_predicting);

  const auto& j1 = preset("J1");
  const auto p = j1.conditional_b_given_a();
  CHECK(classify(j1).self_predicting == (p(0, 0) > p(1, 0) && p(1, 1) > p(0, 1)));
  CHECK(classify(j1).self_predicting);

  CHECK(classify(preset("uniform-3signal")).uniformly_self_predicting);
  const auto non = classify(preset("nonuniform-3signal"));
  CHECK(non.self_predicting);
  CHECK_FALSE(non.uniformly_self_predicting);
  CHECK_FALSE(classify(preset("skewed-3signal")).uniformly_self_predicting);
  CHECK(classify(preset("skewed-3signal")).self_predicting);

  // perturb one off-diagonal conditional of the uniform structure
  RealMatrix q{{0.7, 0.1, 0.2}, {0.2, 0.6, 0.2}, {0.2, 0.1, 0.7}};
  q(0, 1) += 0.05;
  q(0, 2) -= 0.05;
  const std::vector<double> marg{0.3, 0.4, 0.3};
  RealMatrix jp(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k) jp(i, k) = marg[i] * q(i, k);
  CHECK_FALSE(classify(InfoStructure(jp)).uniformly_self_predicting);
}

TEST_CASE("binary self-prediction is positive correlation") {
  std::mt19937_64 g(3);
  for (int t = 0; t < 500; ++t) {
    const auto info = testsupport::random_structure(g, 2);
    CHECK(classify(info).self_predicting == (delta_matrix(info).delta(0, 0) > 0.0));
  }
}

TEST_CASE("effort mixture") {
  const auto& j1 = preset("J1");
  const auto one = effort_mixture(j1, 1.0);
  const auto zero = effort_mixture(j1, 0.0);
  const auto prod = j1.product_of_marginals();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(one.joint()(i, k) - j1.joint()(i, k)) < 1e-15);
      CHECK(std::abs(zero.joint()(i, k) - prod(i, k)) < 1e-15);
    }
  const auto half = effort_mixture(j1, 0.5);
  const double tr = [](const InfoStructure& s) { return s.joint(0, 0) + s.joint(1, 1); }(half);
  CHECK(tr == doctest::Approx(0.5 * (j1.joint(0, 0) + j1.joint(1, 1)) + 0.5 * (prod(0, 0) + prod(1, 1))));
  for (double e : {0.0, 0.1, 0.37, 0.8, 1.0}) {
    const auto m = effort_mixture(j1, e);
    for (std::size_t s = 0; s < 2; ++s) CHECK(std::abs(m.marginal_a()[s] - j1.marginal_a()[s]) < 1e-12);
  }
  CHECK_THROWS_AS(effort_mixture(j1, 1.5), ValidationError);
  CHECK_THROWS_AS(effort_mixture(j1, -0.1), ValidationError);
}

TEST_CASE("structures load from JSON") {
  const auto j1 = structure_from_json(Json::parse(R"({"dawid_skene": {"prior": [0.613, 0.387],
      "confusion": [[0.905, 0.095], [0.283, 0.717]]}})"));
  CHECK(j1.joint(0, 1) == preset("J1").joint(0, 1));
  const auto joint = structure_from_json(Json::parse(R"({"joint": [[0.7, 0.1], [0.1, 0.1]]})"));
  CHECK(joint.joint(0, 0) == 0.7);
  CHECK(structure_from_json(Json("J2")).num_signals() == 4);
  CHECK_THROWS_AS(structure_from_json(Json::parse(R"({"joint": [[0.7, 0.1], [0.1]]})")), ValidationError);
  CHECK_THROWS_AS(structure_from_json(Json::parse(R"({"nothing": 1})")), ValidationError);
  const auto back = structure_from_json(structure_to_json(preset("J2")));
  CHECK(back.joint(2, 3) == preset("J2").joint(2, 3));
}

TEST_CASE("bundled presets carry the published matrices") {
  const auto& m1 = preset("J1").source_model();
  REQUIRE(m1.has_value());
  CHECK(m1->prior == std::vector<double>{0.613, 0.387});
  CHECK(m1->confusion(1, 0) == 0.283);
  const auto& m2 = preset("J2").source_model();
  REQUIRE(m2.has_value());
  CHECK(m2->prior == std::vector<double>{0.196, 0.241, 0.247, 0.316});
  const double g2[4][4] = {{0.770, 0.122, 0.084, 0.024},
                           {0.091, 0.735, 0.130, 0.044},
                           {0.033, 0.062, 0.866, 0.039},
                           {0.068, 0.164, 0.099, 0.669}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 4; ++k) CHECK(m2->confusion(i, k) == g2[i][k]);
}
