#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "peerscore/types.hpp"

namespace peerscore {

/// Finite pmf over real score values. Support is strictly increasing;
/// values closer than kValueMergeTol are merged on construction.
class ScoreDistribution {
 public:
  ScoreDistribution() = default;

  /// Sorts, merges near-equal values, drops zero-mass atoms. Throws when a
  /// probability is negative or the total is off by more than 1e-10.
  static ScoreDistribution from_atoms(std::vector<std::pair<double, double>> atoms);
  static ScoreDistribution point_mass(double value);

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return support_.size(); }

  double mean() const;
  double variance() const;
  double stddev() const;
  /// Pr(S >= t), treating values within kValueMergeTol of t as equal to t.
  double survival(double t) const;
  /// Mass on the atom within kValueMergeTol of v, or 0.
  double prob_at(double v) const;

  /// Distribution of a*S + b.
  ScoreDistribution affine(double a, double b) const;

 private:
  std::vector<double> support_;
  std::vector<double> probs_;
};

/// Distribution of X + Y for independent X, Y.
ScoreDistribution convolve(const ScoreDistribution& x, const ScoreDistribution& y);
/// Average of K iid copies.
ScoreDistribution iid_average(const ScoreDistribution& individual, int k);
/// Mixture sum_i w_i D_i; weights must sum to 1.
ScoreDistribution mixture(const std::vector<std::pair<double, ScoreDistribution>>& parts);

/// Binomial(n, p) pmf, evaluated in log space.
std::vector<double> binomial_pmf(int n, double p);
/// Binomial(n, p) CDF at k (0 for k < 0, 1 for k >= n).
double binomial_cdf(int k, int n, double p);
/// Bin(n, p) / n.
ScoreDistribution binomial_average(int n, double p);

struct FosdResult {
  bool holds = true;
  std::optional<double> witness_threshold;  // first violating t
  double max_gap = 0.0;                     // max_t Pr(bottom >= t) - Pr(top >= t)
  double max_gap_threshold = 0.0;
};

/// Does `top` first-order stochastically dominate `bottom`? Survival
/// functions are compared at every point of the merged support.
FosdResult fosd_check(const ScoreDistribution& top, const ScoreDistribution& bottom,
                      double slack = kPredicateTol);

inline double expected_score(const ScoreDistribution& d) { return d.mean(); }

}  // namespace peerscore
