#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peerscore/distribution.hpp"
#include "peerscore/mechanisms.hpp"
#include "peerscore/signal_model.hpp"

namespace peerscore {

struct ExactConfig {
  /// Upper bound on the raw state count c^(2n) (signal pairs on n questions).
  double max_states = 1 << 20;
};

/// Exact pmf of Alice's final score when she plays `theta` iid per question
/// and Bob reports truthfully. Questions are exchangeable, so signal/report
/// vectors are collapsed to count matrices with multinomial weights and EA
/// flip subsets to hypergeometric counts. Throws BudgetExceeded.
ScoreDistribution exact_distribution(const MechanismSpec& spec, const InfoStructure& info, const Strategy& theta,
                                     int n, const ExactConfig& cfg = {});
ScoreDistribution exact_distribution(const Mechanism& mech, const InfoStructure& info, const Strategy& theta, int n,
                                     const ExactConfig& cfg = {});

/// EA score pmf given Alice's observed histogram and a manipulation
/// x (x(i,j) = questions observed i and reported j; row sums = histogram).
ScoreDistribution ea_manipulation_distribution(const Mechanism& mech, const InfoStructure& info,
                                               const ManipulationMatrix& x);
/// Multinomial probability of Alice's observed histogram.
double histogram_probability(const InfoStructure& info, std::span<const int> hist);

/// All histograms of n over c signals, lexicographic.
std::vector<std::vector<int>> all_histograms(int n, int c);
/// All nonnegative integer matrices with the given row sums, lexicographic.
std::vector<ManipulationMatrix> all_manipulations(std::span<const int> row_sums);

/// Deterministic strategies first (c^c, lexicographic by image), then the
/// remaining mixed strategies whose rows lie on the simplex grid {k/r}.
std::vector<Strategy> strategy_grid(int c, int resolution);

struct SearchConfig {
  int resolution = 4;
  /// Grid resolution is lowered until the grid has at most this many strategies.
  std::size_t max_grid = 4000;
  /// EA: also search histogram-dependent manipulation matrices.
  bool manipulations = true;
  /// EA: keep only manipulations whose reports already match the enforcement
  /// target, i.e. reallocations of which observed class fills each report.
  bool reallocations_only = false;
  /// EA: skip the iid strategy grid and search manipulations only.
  bool manipulations_only = false;
  bool parallel = true;
  ExactConfig exact;
};

struct DominanceWitness {
  std::optional<Strategy> strategy;
  std::optional<ManipulationMatrix> manipulation;
  std::vector<int> histogram;  // observed histogram for manipulations
  double threshold = 0.0;      // threshold of the largest gap
  double first_threshold = 0.0;
  double gap = 0.0;            // Pr(S(theta) >= t) - Pr(S(tau) >= t), unconditional
};

struct DominanceReport {
  std::string mechanism;
  int n = 0;
  bool certified = true;
  std::string searched_class;
  std::size_t candidates = 0;
  std::optional<DominanceWitness> witness;
  ScoreDistribution truthful;
  /// Truthfulness in expectation over the same candidates.
  double truthful_mean = 0.0;
  double best_deviation_mean = 0.0;
  std::optional<Strategy> best_deviation;
  bool truthful_in_expectation = true;
};

DominanceReport verify_sd_truthfulness(const MechanismSpec& spec, const InfoStructure& info, int n,
                                       const SearchConfig& cfg = {});

// Documented counterexamples -------------------------------------------------

struct CounterexampleReport {
  std::string target;
  std::string structure;
  DominanceReport dominance;
  /// Named quantities (e.g. Pr(S=1) under truth and under the constant strategy).
  std::vector<std::pair<std::string, double>> values;
};

/// target in {ca-original, pts, ea-3signal, ca-single-3signal}.
CounterexampleReport counterexample(const std::string& target);
const std::vector<std::string>& counterexample_targets();

}  // namespace peerscore
