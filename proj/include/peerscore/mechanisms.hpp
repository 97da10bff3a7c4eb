#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "peerscore/rng.hpp"
#include "peerscore/rounding.hpp"
#include "peerscore/signal_model.hpp"
#include "peerscore/types.hpp"

namespace peerscore {

/// Row-stochastic map from signals to report distributions.
class Strategy {
 public:
  explicit Strategy(RealMatrix matrix);

  static Strategy truthful(std::size_t c);
  static Strategy constant(std::size_t c, int report);
  static Strategy permutation(std::span<const int> image);

  const RealMatrix& matrix() const { return matrix_; }
  std::size_t num_signals() const { return matrix_.rows(); }
  bool is_truthful() const;
  bool deterministic() const;
  std::string describe() const;

  friend bool operator==(const Strategy&, const Strategy&) = default;

 private:
  RealMatrix matrix_;
};

/// Target report histogram (n_0, ..., n_{c-1}).
using Enforcement = std::vector<int>;
/// Counts of (observed or reported signal i, final report j).
using ManipulationMatrix = CountMatrix;

/// rho[i][j]: how many reports of i end up as j. Row sums are the reported
/// histogram, column sums the target.
using EnforcementPlanner = std::function<ManipulationMatrix(std::span<const int> reported,
                                                            std::span<const int> target)>;

enum class Variant { original, direct_rounded, partition_rounded, partition };
enum class EnforcementMode { uniform, prior, optimal, explicit_counts };
enum class EnforcementRule { binary_flip, minimal, ip };

struct MechanismSpec {
  Family family = Family::oa;
  Variant variant = Variant::original;

  /// PTS prior; defaults to M^a (symmetric structures only).
  std::optional<std::vector<double>> pts_prior;
  /// CA agreement table; defaults to Sign(Delta).
  std::optional<CountMatrix> ca_agreement;

  EnforcementMode enforcement = EnforcementMode::prior;
  Enforcement explicit_phi;
  EnforcementRule rule = EnforcementRule::binary_flip;
  /// Overrides `rule` when set (used to test non-minimal allocations).
  EnforcementPlanner custom_planner;
  std::string custom_planner_name;

  /// Canonical name, e.g. "ea-prior", "ca-partition-round".
  std::string name() const;
};

/// Parses canonical names: oa, pts, ca, ca-partition, ma, ma-partition, ea,
/// ea-uniform, ea-prior, ea-optimal, <family>-partition-round, <family>-direct-round.
MechanismSpec parse_mechanism(std::string_view name);

// Score functions -----------------------------------------------------------

double score_oa(std::span<const int> a, std::span<const int> b);
double score_pts(std::span<const int> a, std::span<const int> b, std::span<const double> prior);
/// Average over all n(n-1) ordered (bonus, penalty) pairs.
double score_ca_original(std::span<const int> a, std::span<const int> b, const CountMatrix& t);
/// Average over disjoint (bonus, penalty) pairs.
double score_ca_partitioned(std::span<const int> a, std::span<const int> b, const CountMatrix& t,
                            const std::vector<std::pair<int, int>>& pairing);
double score_ma_original(std::span<const int> a, std::span<const int> b, const GammaTensor& t);
double score_ma_partitioned(std::span<const int> a, std::span<const int> b, const GammaTensor& t,
                            const std::vector<std::pair<int, int>>& pairing);

inline double ca_individual(const CountMatrix& t, int aj, int bj, int bk) { return t(aj, bj) - t(aj, bk); }
inline double ma_individual(const GammaTensor& t, int aj, int bj, int bk) { return t.sign(aj, bj, bk); }

/// (2i, 2i+1) for i < floor(n/2).
std::vector<std::pair<int, int>> default_pairing(int n);

// Enforcement ---------------------------------------------------------------

std::vector<int> histogram(std::span<const int> reports, std::size_t c);
/// Largest-remainder rounding of n * weights; ties go to the lower index.
std::vector<int> largest_remainder(std::span<const double> weights, int n);

ManipulationMatrix plan_binary_flip(std::span<const int> reported, std::span<const int> target);
/// Minimal rule (c <= 3).
ManipulationMatrix plan_minimal(std::span<const int> reported, std::span<const int> target);
/// IP rule: maximize sum rho_ij p_ij; lexicographically smallest optimum.
ManipulationMatrix plan_ip(std::span<const int> reported, std::span<const int> target, const RealMatrix& p);

/// Flips reports according to `plan`. Within each report class the
/// positions are shuffled, then the first plan(i,0) go to 0, the next
/// plan(i,1) to 1, and so on.
Reports apply_plan(std::span<const int> reports, const ManipulationMatrix& plan, Rng& rng);

Reports ea_enforce_binary(std::span<const int> a, const Enforcement& phi, Rng& rng);
Reports ea_enforce_minimal(std::span<const int> a, const Enforcement& phi, Rng& rng);
Reports ea_enforce_ip(std::span<const int> a, const Enforcement& phi, const RealMatrix& p, Rng& rng);

Enforcement resolve_enforcement(EnforcementMode mode, const InfoStructure& info, int n,
                                const Enforcement& explicit_phi = {});

Reports apply_strategy(std::span<const int> signals, const Strategy& theta, Rng& rng);

// Prepared mechanism --------------------------------------------------------

/// A MechanismSpec bound to an information structure: agreement tables,
/// PTS prior and score bounds are derived once.
class Mechanism {
 public:
  Mechanism(MechanismSpec spec, const InfoStructure& info);

  const MechanismSpec& spec() const { return spec_; }
  std::size_t num_signals() const { return c_; }
  const std::string& name() const { return name_; }

  /// Bounds of one individual score (before rounding).
  const ScoreBounds& individual_bounds() const { return bounds_; }
  /// Bounds of the final score.
  ScoreBounds score_bounds() const;

  const CountMatrix& ca_table() const { return ca_table_; }
  const GammaTensor& ma_table() const { return ma_table_; }
  const std::vector<double>& pts_prior() const { return pts_prior_; }
  const RealMatrix& conditionals() const { return p_; }

  /// Score of the unrounded base mechanism for a pair of report vectors.
  double base_score(std::span<const int> a, std::span<const int> b, Rng& rng) const;
  /// Final score, including enforcement and rounding lotteries.
  double score(std::span<const int> a, std::span<const int> b, Rng& rng) const;

  /// Individual score on one group (1 or 2 questions).
  double individual_score(int aj, int bj, int bk) const;

  /// EA only.
  Enforcement enforcement_for(int n) const;
  ManipulationMatrix plan(std::span<const int> reported, std::span<const int> target) const;

 private:
  MechanismSpec spec_;
  std::size_t c_;
  std::string name_;
  ScoreBounds bounds_;
  CountMatrix ca_table_;
  GammaTensor ma_table_;
  std::vector<double> pts_prior_;
  RealMatrix p_;
  InfoStructure info_;
};

double score_ea(std::span<const int> a, std::span<const int> b, const MechanismSpec& spec,
                const InfoStructure& info, Rng& rng);

}  // namespace peerscore
