#include "peerscore/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "peerscore/distribution.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace peerscore {

const char* method_name(SensitivityMethod m) {
  switch (m) {
    case SensitivityMethod::closed_form: return "closed_form";
    case SensitivityMethod::exact: return "exact";
    case SensitivityMethod::monte_carlo: return "monte_carlo";
  }
  return "?";
}

namespace {

void require_binary(const InfoStructure& info, const char* what) {
  if (info.num_signals() != 2) throw ValidationError(std::string(what) + " is defined only for binary signals");
}

void require_effort(double e) {
  if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("effort must lie in [0, 1]");
}

double ratio_or_inf(double num, double den) {
  if (den > 0.0) return num / den;
  if (num == 0.0) return 0.0;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

}  // namespace

EtaPrimes eta_primes(const InfoStructure& info) {
  require_binary(info, "eta'");
  const RealMatrix p = info.conditional_b_given_a();
  EtaPrimes out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.eta[i][j] = p(i, j) - info.marginal_b()[j];
  return out;
}

double EtaPrimes::threshold_ratio() const {
  const double up = eta[0][0] - eta[0][1];
  const double down = eta[1][1] - eta[1][0];
  return up / (up + down);
}

IndividualMoments individual_moments(const Mechanism& mech, const InfoStructure& info, double e) {
  require_effort(e);
  const std::size_t c = info.num_signals();
  const RealMatrix prod = info.product_of_marginals();
  const DeltaMatrix d = delta_matrix(info);
  switch (mech.spec().family) {
    case Family::oa:
    case Family::ea: {
      const double tr_delta = d.delta.trace();
      return {prod.trace() + e * tr_delta, tr_delta};
    }
    case Family::pts: {
      const auto& r = mech.pts_prior();
      double base = 0.0, grad = 0.0;
      for (std::size_t s = 0; s < c; ++s) {
        base += prod(s, s) / r[s];
        grad += d.delta(s, s) / r[s];
      }
      return {base + e * grad, grad};
    }
    case Family::ca: {
      double grad = 0.0;
      for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < c; ++j) grad += mech.ca_table()(i, j) * d.delta(i, j);
      return {e * grad, grad};
    }
    case Family::ma: {
      const GammaTensor g = gamma_tensor(info);
      const auto& mb = info.marginal_b();
      double s = 0.0;
      for (int s1 = 0; s1 < static_cast<int>(c); ++s1)
        for (int s2 = 0; s2 < static_cast<int>(c); ++s2)
          for (int s3 = 0; s3 < static_cast<int>(c); ++s3)
            s += mb[static_cast<std::size_t>(s2)] * mb[static_cast<std::size_t>(s3)] * std::max(0.0, g.at(s1, s2, s3));
      return {0.5 + 0.5 * e * s, 0.5 * s};
    }
  }
  return {0.0, 0.0};
}

namespace {

// Exact pmf of one individual score at effort e, as (value, prob) atoms.
ScoreDistribution individual_pmf(const Mechanism& mech, const InfoStructure& info, double e) {
  const InfoStructure mixed = effort_mixture(info, e);
  const std::size_t c = info.num_signals();
  const auto& mb = info.marginal_b();
  std::vector<std::pair<double, double>> atoms;
  if (questions_per_group(mech.spec().family) == 1) {
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t b = 0; b < c; ++b)
        atoms.emplace_back(mech.individual_score(static_cast<int>(a), static_cast<int>(b), static_cast<int>(b)),
                           mixed.joint()(a, b));
  } else {
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t b = 0; b < c; ++b)
        for (std::size_t b2 = 0; b2 < c; ++b2)
          atoms.emplace_back(
              mech.individual_score(static_cast<int>(a), static_cast<int>(b), static_cast<int>(b2)),
              mixed.joint()(a, b) * mb[b2]);
  }
  return ScoreDistribution::from_atoms(std::move(atoms));
}

}  // namespace

SensitivityResult closed_form_sensitivity(const MechanismSpec& spec, const InfoStructure& info, int n, double e) {
  require_effort(e);
  if (n < 1) throw ValidationError("n must be positive");
  const Mechanism mech(spec, info);
  const Family f = spec.family;
  if (f == Family::ea) throw ValidationError("ea has no closed form here; use ea_sensitivity");

  SensitivityResult r;
  r.mechanism = mech.name();
  r.e = e;
  r.method = SensitivityMethod::closed_form;
  const ScoreBounds& b = mech.individual_bounds();

  auto rounded = [&](int k) {
    const IndividualMoments m = individual_moments(mech, info, e);
    const double lambda = (m.mean - b.inf) / (b.sup - b.inf);
    r.mean = lambda;
    r.gradient = m.gradient / (b.sup - b.inf);
    r.stddev = std::sqrt(std::max(0.0, lambda * (1.0 - lambda) / k));
    r.delta = ratio_or_inf(m.gradient * std::sqrt(static_cast<double>(k)),
                           std::sqrt(std::max(0.0, (m.mean - b.inf) * (b.sup - m.mean))));
  };
  auto iid_unrounded = [&](int k, SensitivityMethod method) {
    const ScoreDistribution hi = individual_pmf(mech, info, e);
    const double grad = individual_pmf(mech, info, 1.0).mean() - individual_pmf(mech, info, 0.0).mean();
    r.method = method;
    r.mean = hi.mean();
    r.gradient = grad;
    r.stddev = hi.stddev() / std::sqrt(static_cast<double>(k));
    r.delta = ratio_or_inf(grad * std::sqrt(static_cast<double>(k)), hi.stddev());
  };

  switch (spec.variant) {
    case Variant::direct_rounded:
      rounded(1);
      break;
    case Variant::partition_rounded:
      rounded(static_cast<int>(partition_plan(f, n).num_groups));
      break;
    case Variant::original:
      if (f == Family::oa || f == Family::pts) {
        iid_unrounded(n, SensitivityMethod::closed_form);
        if (f == Family::oa) {
          // Same value via the averaged binomial.
          const IndividualMoments m = individual_moments(mech, info, e);
          r.delta = ratio_or_inf(m.gradient * std::sqrt(static_cast<double>(n)), std::sqrt(std::max(0.0, m.mean * (1.0 - m.mean))));
        }
      } else {
        throw ValidationError("no closed form for " + mech.name() + "; use Monte Carlo");
      }
      break;
    case Variant::partition:
      iid_unrounded(static_cast<int>(partition_plan(f, n).num_groups), SensitivityMethod::exact);
      break;
  }
  return r;
}

namespace {

// Mean, variance and gradient of the EA score given m0 observed zeros.
struct Conditional {
  double mean, var, grad;
};

Conditional ea_conditional(const ManipulationMatrix& rho, const double eta[2][2], const double eta_p[2][2], int n) {
  Conditional out{0.0, 0.0, 0.0};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      // rho(i, j) reports of observed i end as j; each agrees with Bob w.p. eta_ij.
      const double cnt = rho(i, j);
      out.mean += cnt * eta[i][j];
      out.var += cnt * eta[i][j] * (1.0 - eta[i][j]);
      out.grad += cnt * eta_p[i][j];
    }
  out.mean /= n;
  out.var /= static_cast<double>(n) * n;
  out.grad /= n;
  return out;
}

EaMoments ea_moments_with_plan(const InfoStructure& info, int n, int n0, double e,
                               const std::function<ManipulationMatrix(int m0)>& plan) {
  require_binary(info, "ea_exact_moments");
  require_effort(e);
  if (n < 1) throw ValidationError("n must be positive");
  if (n0 < 0 || n0 > n) throw ValidationError("n0 must lie in [0, n]");
  const EtaPrimes ep = eta_primes(info);
  double eta[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) eta[i][j] = info.marginal_b()[j] + e * ep.eta[i][j];

  const auto w = binomial_pmf(n, info.marginal_a()[0]);
  double mean = 0.0, second = 0.0, ev = 0.0, grad = 0.0;
  for (int m0 = 0; m0 <= n; ++m0) {
    const double wt = w[static_cast<std::size_t>(m0)];
    if (wt == 0.0) continue;
    const Conditional cnd = ea_conditional(plan(m0), eta, ep.eta, n);
    mean += wt * cnd.mean;
    second += wt * cnd.mean * cnd.mean;
    ev += wt * cnd.var;
    grad += wt * cnd.grad;
  }
  EaMoments out;
  out.mean = mean;
  out.gradient = grad;
  out.conditional_stddev = std::sqrt(std::max(0.0, ev));
  out.stddev = std::sqrt(std::max(0.0, ev + second - mean * mean));
  return out;
}

}  // namespace

EaMoments ea_exact_moments(const InfoStructure& info, int n, int n0, double e) {
  const std::vector<int> target{n0, n - n0};
  return ea_moments_with_plan(info, n, n0, e, [&](int m0) {
    const std::vector<int> reported{m0, n - m0};
    return plan_binary_flip(reported, target);
  });
}

SensitivityResult ea_sensitivity(const MechanismSpec& spec, const InfoStructure& info, int n, double e) {
  if (spec.family != Family::ea) throw ValidationError("ea_sensitivity needs an ea mechanism");
  require_binary(info, "exact EA sensitivity");
  const Mechanism mech(spec, info);
  const Enforcement phi = mech.enforcement_for(n);
  const EaMoments m = ea_moments_with_plan(info, n, phi[0], e, [&](int m0) {
    const std::vector<int> reported{m0, n - m0};
    return mech.plan(reported, phi);
  });
  SensitivityResult r;
  r.mechanism = mech.name();
  r.e = e;
  r.method = SensitivityMethod::exact;
  r.gradient = m.gradient;
  if (spec.variant == Variant::direct_rounded) {
    r.mean = m.mean;
    r.stddev = std::sqrt(std::max(0.0, m.mean * (1.0 - m.mean)));
  } else {
    r.mean = m.mean;
    r.stddev = m.stddev;
  }
  r.delta = ratio_or_inf(r.gradient, r.stddev);
  return r;
}

std::optional<SensitivityResult> analytic_sensitivity(const MechanismSpec& spec, const InfoStructure& info, int n,
                                                      double e) {
  if (spec.family == Family::ea) {
    if (info.num_signals() != 2) return std::nullopt;
    return ea_sensitivity(spec, info, n, e);
  }
  if (spec.variant == Variant::original && (spec.family == Family::ca || spec.family == Family::ma))
    return std::nullopt;
  return closed_form_sensitivity(spec, info, n, e);
}

OptimalEnforcement optimal_enforcement(const InfoStructure& info, int n) {
  require_binary(info, "optimal enforcement");
  if (n < 1) throw ValidationError("n must be positive");
  if (!classify(info).self_predicting) throw ValidationError("optimal enforcement needs self-predicting signals");
  OptimalEnforcement out;
  out.threshold_ratio = eta_primes(info).threshold_ratio();
  const auto pmf = binomial_pmf(n, info.marginal_a()[0]);
  double cdf = 0.0;
  out.n0 = n;
  bool found = false;
  for (int k = 0; k <= n; ++k) {
    cdf = (k == n) ? 1.0 : cdf + pmf[static_cast<std::size_t>(k)];
    if (cdf < out.threshold_ratio) {
      out.literal_boundary = k;
    } else if (!found) {
      out.n0 = k;
      found = true;
    }
  }
  return out;
}

EnforcementScan scan_enforcement(const InfoStructure& info, int n, double e) {
  EnforcementScan scan;
  for (int n0 = 0; n0 <= n; ++n0) scan.moments.push_back(ea_exact_moments(info, n, n0, e));
  for (int n0 = 1; n0 <= n; ++n0) {
    const auto& m = scan.moments[static_cast<std::size_t>(n0)];
    if (m.delta() > scan.moments[static_cast<std::size_t>(scan.argmax_delta)].delta()) scan.argmax_delta = n0;
    if (m.gradient > scan.moments[static_cast<std::size_t>(scan.argmax_gradient)].gradient) scan.argmax_gradient = n0;
  }
  return scan;
}

// Monte Carlo ---------------------------------------------------------------

namespace {

struct SignalSampler {
  std::vector<double> ma, mb;
  std::vector<std::vector<double>> a_given_b;  // column b of Pr(X_a | X_b)

  explicit SignalSampler(const InfoStructure& info) : ma(info.marginal_a()), mb(info.marginal_b()) {
    const std::size_t c = info.num_signals();
    a_given_b.assign(c, std::vector<double>(c, 0.0));
    for (std::size_t b = 0; b < c; ++b)
      for (std::size_t a = 0; a < c; ++a) a_given_b[b][a] = mb[b] > 0.0 ? info.joint()(a, b) / mb[b] : 0.0;
  }

  double draw_score(const Mechanism& mech, int n, double e, Rng& rng) const {
    Reports a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (std::size_t q = 0; q < a.size(); ++q) {
      b[q] = rng.categorical(mb);
      a[q] = rng.bernoulli(e) ? rng.categorical(a_given_b[static_cast<std::size_t>(b[q])]) : rng.categorical(ma);
    }
    return mech.score(a, b, rng);
  }
};

void require_mc(int n, double e, int T) {
  require_effort(e);
  if (n < 1) throw ValidationError("n must be positive");
  if (T < 2) throw ValidationError("Monte Carlo needs T >= 2");
}

}  // namespace

double sample_score(const Mechanism& mech, const InfoStructure& info, int n, double e, Rng& rng) {
  require_effort(e);
  return SignalSampler(info).draw_score(mech, n, e, rng);
}

std::vector<double> sample_scores_serial(const Mechanism& mech, const InfoStructure& info, int n, double e, int T,
                                         std::uint64_t seed) {
  require_mc(n, e, T);
  const SignalSampler sampler(info);
  std::vector<double> out(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    out[static_cast<std::size_t>(i)] = sampler.draw_score(mech, n, e, rng);
  }
  return out;
}

std::vector<double> sample_scores_parallel(const Mechanism& mech, const InfoStructure& info, int n, double e, int T,
                                           std::uint64_t seed) {
  require_mc(n, e, T);
  const SignalSampler sampler(info);
  std::vector<double> out(static_cast<std::size_t>(T));
  // Surface validation errors before entering the parallel region.
  {
    Rng rng(derive_seed(seed, 0));
    out[0] = sampler.draw_score(mech, n, e, rng);
  }
  bool failed = false;
#pragma omp parallel for schedule(static) num_threads(configured_threads())
  for (int i = 1; i < T; ++i) {
    try {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      out[static_cast<std::size_t>(i)] = sampler.draw_score(mech, n, e, rng);
    } catch (...) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) throw std::runtime_error("Monte Carlo replicate failed");
  return out;
}

DeltaEstimate estimate_delta(const std::vector<double>& hi, const std::vector<double>& lo, double de) {
  if (hi.size() < 2 || lo.size() < 2) throw ValidationError("need at least 2 samples per effort level");
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double th = static_cast<double>(hi.size()), tl = static_cast<double>(lo.size());
  const double xbar = mean_of(hi), ybar = mean_of(lo);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, v_lo = 0.0;
  for (double x : hi) {
    const double d = x - xbar;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  for (double y : lo) v_lo += (y - ybar) * (y - ybar);
  const double s2 = m2 / (th - 1.0);
  const double s = std::sqrt(s2);
  m2 /= th;
  m3 /= th;
  m4 /= th;
  v_lo /= (tl - 1.0);

  DeltaEstimate out{};
  out.mean_hi = xbar;
  out.mean_lo = ybar;
  out.stddev_hi = s;
  const double diff = xbar - ybar;
  if (s == 0.0) {
    out.delta = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    out.stderr_delta = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.delta = diff / (de * s);
  const double var_x = s2 / th, var_y = v_lo / tl;
  const double var_s = std::max(0.0, (m4 - m2 * m2) / (4.0 * m2 * th));
  const double cov_xs = m3 / (2.0 * std::sqrt(m2) * th);
  const double gx = 1.0 / (de * s);
  const double gs = -diff / (de * s * s);
  const double var = gx * gx * (var_x + var_y) + gs * gs * var_s + 2.0 * gx * gs * cov_xs;
  out.stderr_delta = std::sqrt(std::max(0.0, var));
  return out;
}

double bootstrap_stderr(const std::vector<double>& hi, const std::vector<double>& lo, double de, int resamples,
                        std::uint64_t seed) {
  if (resamples < 2) throw ValidationError("bootstrap needs at least 2 resamples");
  Rng rng(seed);
  std::vector<double> estimates;
  std::vector<double> h(hi.size()), l(lo.size());
  for (int r = 0; r < resamples; ++r) {
    for (auto& x : h) x = hi[static_cast<std::size_t>(rng.uniform_int(hi.size()))];
    for (auto& y : l) y = lo[static_cast<std::size_t>(rng.uniform_int(lo.size()))];
    const double d = estimate_delta(h, l, de).delta;
    if (std::isfinite(d)) estimates.push_back(d);
  }
  if (estimates.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double m = 0.0;
  for (double d : estimates) m += d;
  m /= static_cast<double>(estimates.size());
  double v = 0.0;
  for (double d : estimates) v += (d - m) * (d - m);
  return std::sqrt(v / static_cast<double>(estimates.size() - 1));
}

int configured_threads() {
  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("PEERSCORE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) threads = static_cast<int>(v);
  }
  return std::max(1, threads);
}

namespace {

SensitivityResult monte_carlo_impl(const MechanismSpec& spec, const InfoStructure& info, int n,
                                   const MonteCarloConfig& cfg, bool parallel) {
  if (!(cfg.de > 0.0 && cfg.de <= cfg.e && cfg.e <= 1.0)) throw ValidationError("need 0 < de <= e <= 1");
  if (cfg.replicates < 2) throw ValidationError("Monte Carlo needs T >= 2");
  const Mechanism mech(spec, info);
  const auto run = parallel ? sample_scores_parallel : sample_scores_serial;
  const auto hi = run(mech, info, n, cfg.e, cfg.replicates, derive_seed(cfg.seed, 0));
  const auto lo = run(mech, info, n, cfg.e - cfg.de, cfg.replicates, derive_seed(cfg.seed, 1));
  const DeltaEstimate est = estimate_delta(hi, lo, cfg.de);

  SensitivityResult r;
  r.mechanism = mech.name();
  r.e = cfg.e;
  r.delta = est.delta;
  r.method = SensitivityMethod::monte_carlo;
  r.mean = est.mean_hi;
  r.gradient = (est.mean_hi - est.mean_lo) / cfg.de;
  r.stddev = est.stddev_hi;
  r.stderr_delta = est.stderr_delta;
  if (cfg.bootstrap)
    r.stderr_bootstrap = bootstrap_stderr(hi, lo, cfg.de, cfg.bootstrap_resamples, derive_seed(cfg.seed, 2));
  r.seed = cfg.seed;
  r.replicates = cfg.replicates;
  r.de = cfg.de;
  return r;
}

}  // namespace

SensitivityResult monte_carlo_sensitivity(const MechanismSpec& spec, const InfoStructure& info, int n,
                                          const MonteCarloConfig& cfg) {
  return monte_carlo_impl(spec, info, n, cfg, true);
}

SensitivityResult monte_carlo_sensitivity_serial(const MechanismSpec& spec, const InfoStructure& info, int n,
                                                 const MonteCarloConfig& cfg) {
  return monte_carlo_impl(spec, info, n, cfg, false);
}

// Sweeps ----------------------------------------------------------------------

namespace {

const RealMatrix& sweep_confusion() {
  static const RealMatrix g{{0.905, 0.095}, {0.283, 0.717}};
  return g;
}

}  // namespace

std::pair<double, double> prior_sweep_range() {
  const RealMatrix& g = sweep_confusion();
  return {std::min(g(0, 0), g(1, 0)), std::max(g(0, 0), g(1, 0))};
}

InfoStructure prior_sweep_structure(double target) {
  const RealMatrix& g = sweep_confusion();
  const auto [lo_reach, hi_reach] = prior_sweep_range();
  if (!(target >= lo_reach && target <= hi_reach))
    throw ValidationError("Pr(X_a=0)=" + std::to_string(target) + " is outside the sweep family's range [" +
                          std::to_string(lo_reach) + ", " + std::to_string(hi_reach) + "]");
  auto marginal0 = [&](double w0) { return w0 * g(0, 0) + (1.0 - w0) * g(1, 0); };
  // marginal0 is increasing in w0 because g(0,0) > g(1,0).
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (marginal0(mid) < target ? lo : hi) = mid;
  }
  const double w0 = 0.5 * (lo + hi);
  if (std::abs(marginal0(w0) - target) > 1e-10) throw ValidationError("prior sweep root finding did not converge");
  return joint_from_dawid_skene({{w0, 1.0 - w0}, g});
}

std::vector<SweepRow> sensitivity_sweep(const std::vector<MechanismSpec>& specs, const InfoStructure& base,
                                        const SweepConfig& cfg) {
  std::vector<SweepRow> rows;
  std::uint64_t index = 0;
  for (double v : cfg.values) {
    std::optional<InfoStructure> info;
    std::string infeasible;
    if (cfg.axis == SweepAxis::prior) {
      try {
        info = prior_sweep_structure(v);
      } catch (const ValidationError& err) {
        infeasible = err.what();
      }
    } else {
      info = base;
    }
    const int n = cfg.axis == SweepAxis::n ? static_cast<int>(std::lround(v)) : cfg.n;
    for (const auto& spec : specs) {
      SweepRow row;
      row.axis = v;
      row.mechanism = spec.name();
      const std::uint64_t row_seed = derive_seed(cfg.mc.seed, index++);
      if (!info) {
        row.method = "none";
        row.delta = std::numeric_limits<double>::quiet_NaN();
        row.note = "infeasible: " + infeasible;
        rows.push_back(row);
        continue;
      }
      try {
        std::optional<SensitivityResult> r;
        if (!cfg.force_monte_carlo) r = analytic_sensitivity(spec, *info, n, cfg.mc.e);
        if (!r) {
          MonteCarloConfig mc = cfg.mc;
          mc.seed = row_seed;
          r = monte_carlo_sensitivity(spec, *info, n, mc);
          row.seed = row_seed;
          row.stderr_delta = r->stderr_delta;
        }
        row.method = method_name(r->method);
        row.delta = r->delta;
      } catch (const ValidationError& err) {
        row.method = "none";
        row.delta = std::numeric_limits<double>::quiet_NaN();
        row.note = std::string("error: ") + err.what();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace peerscore
