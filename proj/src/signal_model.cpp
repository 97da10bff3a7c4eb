#include "peerscore/signal_model.hpp"

#include <cmath>
#include <string>

namespace peerscore {

namespace {

void require_probability_vector(const std::vector<double>& v, const std::string& what) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError(what + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kExactTol)
    throw ValidationError(what + " does not sum to 1 (sum=" + std::to_string(sum) + ")");
}

}  // namespace

void DawidSkeneModel::validate() const {
  if (prior.empty()) throw ValidationError("Dawid-Skene prior is empty");
  if (confusion.rows() != prior.size())
    throw ValidationError("confusion matrix needs one row per ground-truth state");
  if (confusion.cols() < 2) throw ValidationError("signal space must have at least 2 signals");
  require_probability_vector(prior, "Dawid-Skene prior");
  for (std::size_t w = 0; w < confusion.rows(); ++w)
    require_probability_vector(confusion.row(w), "confusion row " + std::to_string(w));
}

InfoStructure::InfoStructure(RealMatrix joint) : joint_(std::move(joint)) {
  if (!joint_.square()) throw ValidationError("joint distribution must be square");
  if (joint_.rows() < 2) throw ValidationError("signal space must have at least 2 signals");
  require_probability_vector(joint_.data(), "joint distribution");
  marginal_a_ = joint_.row_sums();
  marginal_b_ = joint_.col_sums();
}

RealMatrix InfoStructure::conditional_b_given_a() const {
  const std::size_t c = num_signals();
  RealMatrix p(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    if (marginal_a_[i] <= 0.0)
      throw ValidationError("Pr(X_a=" + std::to_string(i) + ") is zero; conditional undefined");
    for (std::size_t j = 0; j < c; ++j) p(i, j) = joint_(i, j) / marginal_a_[i];
  }
  return p;
}

RealMatrix InfoStructure::conditional_a_given_b() const {
  const std::size_t c = num_signals();
  RealMatrix q(c, c);
  for (std::size_t j = 0; j < c; ++j) {
    if (marginal_b_[j] <= 0.0)
      throw ValidationError("Pr(X_b=" + std::to_string(j) + ") is zero; conditional undefined");
    for (std::size_t i = 0; i < c; ++i) q(i, j) = joint_(i, j) / marginal_b_[j];
  }
  return q;
}

RealMatrix InfoStructure::product_of_marginals() const {
  const std::size_t c = num_signals();
  RealMatrix m(c, c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = marginal_a_[i] * marginal_b_[j];
  return m;
}

bool InfoStructure::symmetric(double tol) const {
  const std::size_t c = num_signals();
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = i + 1; j < c; ++j)
      if (std::abs(joint_(i, j) - joint_(j, i)) > tol) return false;
  return true;
}

InfoStructure joint_from_dawid_skene(const DawidSkeneModel& model) {
  model.validate();
  const std::size_t c = model.num_signals();
  RealMatrix joint(c, c);
  for (std::size_t w = 0; w < model.num_states(); ++w)
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t b = 0; b < c; ++b)
        joint(a, b) += model.prior[w] * model.confusion(w, a) * model.confusion(w, b);
  InfoStructure info(std::move(joint));
  info.set_source_model(model);
  return info;
}

DeltaMatrix delta_matrix(const InfoStructure& info) {
  const std::size_t c = info.num_signals();
  DeltaMatrix out{RealMatrix(c, c), CountMatrix(c, c)};
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double d = info.joint()(i, j) - info.marginal_a()[i] * info.marginal_b()[j];
      out.delta(i, j) = d;
      out.agreement(i, j) = positive_sign(d);
    }
  return out;
}

GammaTensor gamma_tensor(const InfoStructure& info) {
  const RealMatrix q = info.conditional_a_given_b();
  const std::size_t c = info.num_signals();
  GammaTensor g;
  g.c = c;
  g.gamma.assign(c * c * c, 0.0);
  g.agreement.assign(c * c * c, 0);
  for (std::size_t s1 = 0; s1 < c; ++s1)
    for (std::size_t s2 = 0; s2 < c; ++s2)
      for (std::size_t s3 = 0; s3 < c; ++s3) {
        const int i1 = static_cast<int>(s1), i2 = static_cast<int>(s2), i3 = static_cast<int>(s3);
        // Exact zero on the diagonal, not a rounding residue.
        const double v = (s2 == s3) ? 0.0 : q(s1, s2) - q(s1, s3);
        g.gamma[g.index(i1, i2, i3)] = v;
        g.agreement[g.index(i1, i2, i3)] = positive_sign(v);
      }
  return g;
}

SignalClass classify(const InfoStructure& info) {
  const RealMatrix p = info.conditional_b_given_a();
  const std::size_t c = info.num_signals();
  SignalClass out{true, true, true};
  for (std::size_t s = 0; s < c; ++s)
    for (std::size_t t = 0; t < c; ++t) {
      if (t == s) continue;
      if (!(p(s, s) > p(s, t))) out.self_dominating = false;
      if (!(p(s, s) > p(t, s))) out.self_predicting = false;
    }
  out.uniformly_self_predicting = out.self_predicting;
  if (out.uniformly_self_predicting) {
    for (std::size_t i = 0; i < c && out.uniformly_self_predicting; ++i)
      for (std::size_t j = 0; j < c; ++j)
        for (std::size_t k = 0; k < c; ++k) {
          if (j == i || k == i) continue;
          if (std::abs(p(j, i) - p(k, i)) > kPredicateTol) out.uniformly_self_predicting = false;
        }
  }
  return out;
}

InfoStructure effort_mixture(const InfoStructure& info, double e) {
  if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("effort must lie in [0, 1]");
  const std::size_t c = info.num_signals();
  const RealMatrix prod = info.product_of_marginals();
  RealMatrix mixed(c, c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      mixed(i, j) = e * info.joint()(i, j) + (1.0 - e) * prod(i, j);
  InfoStructure out(std::move(mixed));
  if (info.source_model()) out.set_source_model(*info.source_model());
  return out;
}

// Presets ------------------------------------------------------------------

namespace {

InfoStructure conditional_preset(const std::vector<double>& marginal, const RealMatrix& p) {
  const std::size_t c = marginal.size();
  RealMatrix joint(c, c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j) joint(i, j) = marginal[i] * p(i, j);
  return InfoStructure(std::move(joint));
}

std::vector<Preset> build_presets() {
  std::vector<Preset> out;
  out.push_back({"J1",
                 "binary Dawid-Skene structure from compound-synthesis labels",
                 joint_from_dawid_skene({{0.613, 0.387}, RealMatrix{{0.905, 0.095}, {0.283, 0.717}}})});
  out.push_back({"J2",
                 "four-signal Dawid-Skene structure from tweet sentiment labels",
                 joint_from_dawid_skene({{0.196, 0.241, 0.247, 0.316},
                                         RealMatrix{{0.770, 0.122, 0.084, 0.024},
                                                    {0.091, 0.735, 0.130, 0.044},
                                                    {0.033, 0.062, 0.866, 0.039},
                                                    {0.068, 0.164, 0.099, 0.669}}})});
  out.push_back({"biased",
                 "symmetric binary structure with prior (0.8, 0.2), self-predicting",
                 InfoStructure(RealMatrix{{0.7, 0.1}, {0.1, 0.1}})});
  out.push_back({"ca-3signal",
                 "three-signal joint where a single CA draw is not stochastically dominant",
                 InfoStructure(RealMatrix{{0.02, 0.01, 0.02}, {0.2, 0.4, 0.25}, {0.00, 0.05, 0.05}})});
  out.push_back({"uniform-3signal",
                 "uniformly self-predicting three-signal structure",
                 conditional_preset({0.3, 0.4, 0.3},
                                    RealMatrix{{0.7, 0.1, 0.2}, {0.2, 0.6, 0.2}, {0.2, 0.1, 0.7}})});
  out.push_back({"nonuniform-3signal",
                 "self-predicting but not uniformly self-predicting three-signal structure",
                 conditional_preset({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                                    RealMatrix{{0.6, 0.3, 0.1}, {0.1, 0.7, 0.2}, {0.2, 0.2, 0.6}})});
  out.push_back({"skewed-3signal",
                 "self-predicting three-signal structure with widely unequal off-diagonal conditionals",
                 conditional_preset({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                                    RealMatrix{{0.6, 0.39, 0.01}, {0.1, 0.5, 0.4}, {0.2, 0.1, 0.7}})});
  return out;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build_presets();
  return all;
}

const InfoStructure& preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p.info;
  throw ValidationError("unknown structure preset '" + name + "'");
}

}  // namespace peerscore
