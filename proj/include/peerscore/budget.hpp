#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peerscore/mechanisms.hpp"
#include "peerscore/rng.hpp"
#include "peerscore/signal_model.hpp"

namespace peerscore {

struct CrowdConfig {
  int num_agents = 50;
  int num_tasks = 500;
  int tasks_per_agent = 50;
  int agents_per_task = 5;
  void validate() const;
};

struct Assignment {
  std::vector<std::vector<int>> agent_tasks;  // sorted
  std::vector<std::vector<int>> task_agents;  // sorted
  /// shared[i][j] = tasks both i and j work on, sorted.
  std::vector<std::vector<std::vector<int>>> shared;
};

/// Regular bipartite assignment: agent slots are shuffled into tasks, then
/// duplicate (agent, task) slots are repaired by random swaps.
Assignment assign_tasks(const CrowdConfig& cfg, Rng& rng, int max_repairs = 100000);

/// Smallest shared-task count a mechanism can score (2 for CA and MA).
int min_shared_tasks(const MechanismSpec& spec);

/// Scores of every agent in one round. The deviator is a shadow copy of each
/// agent playing e - de against the same peer and the same mechanism
/// randomness; the shadow is never seen by other agents.
struct RoundScores {
  std::vector<std::vector<double>> actual;  // [mechanism][agent]
  std::vector<std::vector<double>> shadow;  // [mechanism][agent]
  std::vector<std::vector<int>> peer;       // [mechanism][agent]
  std::vector<std::vector<int>> shared;     // [mechanism][agent] scored questions
};

/// One round: latent truth per task from the Dawid-Skene prior, per-question
/// effort draws, scoring against a uniformly chosen eligible peer.
RoundScores simulate_round(const Assignment& assignment, const InfoStructure& info,
                           const std::vector<Mechanism>& mechanisms, double e, double de, std::uint64_t seed);

struct ScoreSamples {
  std::string mechanism;
  ScoreBounds bounds;
  int rounds = 0;
  int agents = 0;
  /// Row-major [round][agent].
  std::vector<double> actual;
  std::vector<double> shadow;
  double mean_shared = 0.0;
};

struct SimulationConfig {
  CrowdConfig crowd;
  int rounds = 10000;  // T
  double de = 0.1;
  std::uint64_t seed = 11;
  bool parallel = true;
};

/// Round r uses seed derive_seed(cfg.seed, r + 1); the assignment uses
/// derive_seed(cfg.seed, 0). Output is identical for any thread count.
std::vector<ScoreSamples> simulate(const SimulationConfig& cfg, const InfoStructure& info,
                                   const std::vector<MechanismSpec>& specs, double e);

enum class SchemeKind { linear, threshold };
std::string scheme_name(SchemeKind k);
SchemeKind parse_scheme(const std::string& s);

struct PaymentScheme {
  SchemeKind kind = SchemeKind::linear;
  double a = 0.0, b = 0.0;
  double c_thres = 0.0, t = 0.0, percentile = 75.0;
  double payment(double score) const;
};

struct PaymentFit {
  std::string mechanism;
  double e = 0.0;
  bool elicitable = false;
  std::string note;
  PaymentScheme scheme;
  double mean_score = 0.0;
  double std_score = 0.0;
  double gradient = 0.0;         // of E[S] (linear) or Pr(S > t) (threshold)
  double gradient_stderr = 0.0;  // from per-round paired differences
  double sensitivity = 0.0;      // d E[S]/de / std(S) on all samples
  double expected_payment = 0.0; // per agent
  double total_payment = 0.0;    // num_agents * expected_payment
  double min_payment = 0.0;      // smallest ex-post payment over all samples
  bool individually_rational = false;
};

/// Linear: a = 2e / grad E[S], b = max(-a S_inf, e^2 - a E[S]).
/// Threshold: t = percentile of the first half of rounds (linear
/// interpolation), C = 2e / grad Pr(S > t) on the second half.
PaymentFit fit_payment(const ScoreSamples& samples, SchemeKind kind, double e, double de, int num_agents,
                       double percentile = 75.0);

/// Percentile with linear interpolation between order statistics.
double percentile(std::vector<double> values, double pct);
/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct BudgetRow {
  PaymentFit fit;
  std::string error;
};

struct BudgetTable {
  SchemeKind scheme = SchemeKind::threshold;
  std::vector<double> efforts;
  std::vector<BudgetRow> rows;
  /// Per effort: Spearman(sensitivity, total payment) over elicitable rows.
  std::vector<std::optional<double>> spearman_by_effort;
};

/// Effort index k is simulated with seed derive_seed(cfg.seed, k), shared by
/// every mechanism (common random numbers).
BudgetTable budget_table(const std::vector<MechanismSpec>& specs, const std::vector<double>& efforts, SchemeKind scheme,
                         const SimulationConfig& cfg, const InfoStructure& info, double percentile = 75.0);

/// The SD-truthful mechanisms compared under threshold payments.
std::vector<std::string> sd_truthful_budget_mechanisms();
/// Truthful mechanisms compared under linear payments.
std::vector<std::string> truthful_budget_mechanisms();

}  // namespace peerscore
