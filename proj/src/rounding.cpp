#include "peerscore/rounding.hpp"

#include <cmath>
#include <string>

namespace peerscore {

void ScoreBounds::validate() const {
  if (!std::isfinite(inf) || !std::isfinite(sup)) throw ValidationError("score bounds must be finite");
  if (!(inf < sup)) throw ValidationError("score bounds need inf < sup");
}

double ScoreBounds::lottery_probability(double score) const {
  if (score < inf - kExactTol || score > sup + kExactTol)
    throw ValidationError("score " + std::to_string(score) + " outside [" + std::to_string(inf) + ", " +
                          std::to_string(sup) + "]");
  const double lambda = (score - inf) / (sup - inf);
  return lambda < 0.0 ? 0.0 : (lambda > 1.0 ? 1.0 : lambda);
}

int direct_round(double score, const ScoreBounds& bounds, Rng& rng) {
  return rng.bernoulli(bounds.lottery_probability(score)) ? 1 : 0;
}

double partition_round(std::span<const double> individual_scores, const ScoreBounds& bounds, Rng& rng) {
  if (individual_scores.empty()) throw ValidationError("partition rounding needs at least one individual score");
  int wins = 0;
  for (double s : individual_scores) wins += direct_round(s, bounds, rng);
  return static_cast<double>(wins) / static_cast<double>(individual_scores.size());
}

int questions_per_group(Family family) {
  return (family == Family::ca || family == Family::ma) ? 2 : 1;
}

PartitionPlan partition_plan(Family family, int n) {
  const int size = questions_per_group(family);
  if (n < size)
    throw ValidationError("need at least " + std::to_string(size) + " questions, got " + std::to_string(n));
  PartitionPlan plan;
  plan.num_groups = static_cast<std::size_t>(n / size);
  for (int g = 0; g < static_cast<int>(plan.num_groups); ++g) {
    std::vector<int> group;
    for (int q = 0; q < size; ++q) group.push_back(g * size + q);
    plan.groups.push_back(std::move(group));
  }
  for (int q = static_cast<int>(plan.num_groups) * size; q < n; ++q) plan.unused.push_back(q);
  return plan;
}

}  // namespace peerscore
