#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peerscore/mechanisms.hpp"
#include "peerscore/signal_model.hpp"

namespace peerscore {

enum class SensitivityMethod { closed_form, exact, monte_carlo };
const char* method_name(SensitivityMethod m);

struct SensitivityResult {
  std::string mechanism;
  double e = 1.0;
  double delta = 0.0;
  SensitivityMethod method = SensitivityMethod::closed_form;
  double mean = 0.0;      // E[S(e)]
  double gradient = 0.0;  // d/de E[S(e)]
  double stddev = 0.0;    // std(S(e))
  // Monte Carlo only.
  std::optional<double> stderr_delta;
  std::optional<double> stderr_bootstrap;
  std::uint64_t seed = 0;
  int replicates = 0;
  double de = 0.0;
};

/// eta'_ij = Pr(X_b=j | X_a=i) - Pr(X_b=j), binary.
struct EtaPrimes {
  double eta[2][2];
  /// (eta'00 - eta'01) / (eta'00 - eta'01 + eta'11 - eta'10)
  double threshold_ratio() const;
};
EtaPrimes eta_primes(const InfoStructure& info);

/// Expected individual score m_i(e) and its e-derivative, using the
/// per-family closed forms (OA, PTS, CA, MA).
struct IndividualMoments {
  double mean;
  double gradient;
};
IndividualMoments individual_moments(const Mechanism& mech, const InfoStructure& info, double e);

/// delta = grad m * sqrt(K) / sqrt((m - inf)(sup - m)) for rounded variants;
/// OA/PTS original and CA/MA partition use the exact individual pmf.
/// Supported: oa (all variants), pts (original, rounded), ca/ma (partition,
/// rounded). Throws ValidationError otherwise.
SensitivityResult closed_form_sensitivity(const MechanismSpec& spec, const InfoStructure& info, int n, double e);

struct EaMoments {
  double mean = 0.0;
  double stddev = 0.0;              // std of the full mixture over m0
  double conditional_stddev = 0.0;  // sqrt(E[Var(S | m0)])
  double gradient = 0.0;            // d/de mean
  double delta() const { return stddev > 0.0 ? gradient / stddev : 0.0; }
};
/// Binary EA with the flip rule, target n0 zeros, at effort e.
EaMoments ea_exact_moments(const InfoStructure& info, int n, int n0, double e);

/// Exact sensitivity of EA (binary) and its direct rounding.
SensitivityResult ea_sensitivity(const MechanismSpec& spec, const InfoStructure& info, int n, double e);

/// Closed form or exact moments when available, nullopt otherwise.
std::optional<SensitivityResult> analytic_sensitivity(const MechanismSpec& spec, const InfoStructure& info, int n,
                                                      double e);

struct OptimalEnforcement {
  int n0 = 0;                   // min{k : F(k) >= ratio}, the maximizer of the EA gradient
  int literal_boundary = -1;    // max{k : F(k) < ratio}, -1 when empty
  double threshold_ratio = 0.0;
};
/// F is the Binomial(n, Pr(X_a=0)) CDF. Binary, self-predicting only.
OptimalEnforcement optimal_enforcement(const InfoStructure& info, int n);

/// Brute force over n0 in {0..n}.
struct EnforcementScan {
  std::vector<EaMoments> moments;  // index n0
  int argmax_delta = 0;
  int argmax_gradient = 0;
};
EnforcementScan scan_enforcement(const InfoStructure& info, int n, double e = 1.0);

// Monte Carlo ---------------------------------------------------------------

struct MonteCarloConfig {
  double e = 1.0;
  double de = 0.2;
  int replicates = 20000;  // T
  std::uint64_t seed = 7;
  bool bootstrap = false;
  int bootstrap_resamples = 200;
};

/// One score sample: Bob truthful at full effort, Alice truthful at effort e.
/// Per question Bob's signal is drawn from M^b; Alice's from Pr(X_a | X_b)
/// with probability e, else from M^a independently.
double sample_score(const Mechanism& mech, const InfoStructure& info, int n, double e, Rng& rng);

/// Scores of replicates [0, T); replicate i uses Rng(derive_seed(seed, i)).
std::vector<double> sample_scores_serial(const Mechanism& mech, const InfoStructure& info, int n, double e, int T,
                                         std::uint64_t seed);
/// OpenMP version; identical output for any thread count.
std::vector<double> sample_scores_parallel(const Mechanism& mech, const InfoStructure& info, int n, double e, int T,
                                           std::uint64_t seed);

/// Forward-difference estimate with delta-method stderr. Samples at e use
/// stream seed derive_seed(seed, 0), samples at e - de use derive_seed(seed, 1).
SensitivityResult monte_carlo_sensitivity(const MechanismSpec& spec, const InfoStructure& info, int n,
                                          const MonteCarloConfig& cfg);
SensitivityResult monte_carlo_sensitivity_serial(const MechanismSpec& spec, const InfoStructure& info, int n,
                                                 const MonteCarloConfig& cfg);

/// Forward-difference sensitivity and delta-method stderr from two samples.
struct DeltaEstimate {
  double delta, stderr_delta, mean_hi, mean_lo, stddev_hi;
};
DeltaEstimate estimate_delta(const std::vector<double>& hi, const std::vector<double>& lo, double de);
/// Bootstrap stderr of the estimate (resamples both samples).
double bootstrap_stderr(const std::vector<double>& hi, const std::vector<double>& lo, double de, int resamples,
                        std::uint64_t seed);

/// Threads to use: PEERSCORE_THREADS when set, else the OpenMP default.
int configured_threads();

// Sweeps ----------------------------------------------------------------------

/// Dawid-Skene structure with the J1 confusion matrix and the prior chosen
/// so that Pr(X_a=0) = target (bisection to 1e-10). Throws ValidationError
/// when the target is outside the reachable range.
InfoStructure prior_sweep_structure(double target_prior0);
/// Reachable Pr(X_a=0) range of the family.
std::pair<double, double> prior_sweep_range();

enum class SweepAxis { prior, n };

struct SweepRow {
  double axis = 0.0;
  std::string mechanism;
  std::string method;
  double delta = 0.0;
  std::optional<double> stderr_delta;
  std::optional<std::uint64_t> seed;  // Monte Carlo rows only
  std::string note;  // e.g. "infeasible: ..."
};

struct SweepConfig {
  SweepAxis axis = SweepAxis::n;
  std::vector<double> values;
  int n = 100;                  // fixed n for prior sweeps
  MonteCarloConfig mc;          // e, de, T, seed
  bool force_monte_carlo = false;
};

/// Analytic value where available, else Monte Carlo with seed
/// derive_seed(mc.seed, row index).
std::vector<SweepRow> sensitivity_sweep(const std::vector<MechanismSpec>& specs, const InfoStructure& base,
                                        const SweepConfig& cfg);

}  // namespace peerscore
