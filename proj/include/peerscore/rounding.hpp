#pragma once

#include <span>
#include <vector>

#include "peerscore/rng.hpp"
#include "peerscore/types.hpp"

namespace peerscore {

enum class Family { oa, pts, ca, ma, ea };

struct ScoreBounds {
  double inf = 0.0;
  double sup = 1.0;

  void validate() const;
  /// (score - inf) / (sup - inf). Scores outside the bounds by more than
  /// kExactTol are rejected; smaller excursions are clamped.
  double lottery_probability(double score) const;
};

/// One binary lottery: 1 with probability lottery_probability(score).
int direct_round(double score, const ScoreBounds& bounds, Rng& rng);

/// Average of one lottery per individual score.
double partition_round(std::span<const double> individual_scores, const ScoreBounds& bounds, Rng& rng);

/// Disjoint question groups, each producing one individual score.
struct PartitionPlan {
  std::size_t num_groups = 0;              // K
  std::vector<std::vector<int>> groups;    // question indices per group
  std::vector<int> unused;                 // dropped questions (odd n for pairs)
};

/// OA, PTS and EA use singletons (K = n). CA and MA use the pairs
/// (2i, 2i+1), bonus first (K = floor(n/2)); a trailing odd question is dropped.
PartitionPlan partition_plan(Family family, int n);

/// Questions one individual score consumes.
int questions_per_group(Family family);

}  // namespace peerscore
