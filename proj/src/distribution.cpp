#include "peerscore/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace peerscore {

ScoreDistribution ScoreDistribution::from_atoms(std::vector<std::pair<double, double>> atoms) {
  double total = 0.0;
  for (const auto& [v, p] : atoms) {
    if (!std::isfinite(v)) throw ValidationError("score value is not finite");
    if (!(p >= -kExactTol)) throw ValidationError("negative probability in score distribution");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw ValidationError("score distribution mass is " + std::to_string(total) + ", expected 1");

  std::sort(atoms.begin(), atoms.end());
  ScoreDistribution d;
  for (const auto& [v, p] : atoms) {
    if (p <= 0.0) continue;
    // Chain-merge against the first value of the current atom.
    if (!d.support_.empty() && v - d.support_.back() <= kValueMergeTol) {
      d.probs_.back() += p;
    } else {
      d.support_.push_back(v);
      d.probs_.push_back(p);
    }
  }
  return d;
}

ScoreDistribution ScoreDistribution::point_mass(double value) { return from_atoms({{value, 1.0}}); }

double ScoreDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m += support_[i] * probs_[i];
  return m;
}

double ScoreDistribution::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < size(); ++i) v += probs_[i] * (support_[i] - m) * (support_[i] - m);
  return v;
}

double ScoreDistribution::stddev() const { return std::sqrt(variance()); }

double ScoreDistribution::survival(double t) const {
  double s = 0.0;
  for (std::size_t i = size(); i-- > 0;) {
    if (support_[i] < t - kValueMergeTol) break;
    s += probs_[i];
  }
  return s;
}

double ScoreDistribution::prob_at(double v) const {
  for (std::size_t i = 0; i < size(); ++i)
    if (std::abs(support_[i] - v) <= kValueMergeTol) return probs_[i];
  return 0.0;
}

ScoreDistribution ScoreDistribution::affine(double a, double b) const {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) atoms.emplace_back(a * support_[i] + b, probs_[i]);
  return from_atoms(std::move(atoms));
}

ScoreDistribution convolve(const ScoreDistribution& x, const ScoreDistribution& y) {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(x.size() * y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      atoms.emplace_back(x.support()[i] + y.support()[j], x.probs()[i] * y.probs()[j]);
  return ScoreDistribution::from_atoms(std::move(atoms));
}

ScoreDistribution iid_average(const ScoreDistribution& individual, int k) {
  if (k < 1) throw ValidationError("iid_average needs k >= 1");
  // Repeated squaring on the sum keeps the number of convolutions at O(log k).
  ScoreDistribution sum = ScoreDistribution::point_mass(0.0);
  ScoreDistribution power = individual;
  for (int e = k; e > 0; e >>= 1) {
    if (e & 1) sum = convolve(sum, power);
    if (e > 1) power = convolve(power, power);
  }
  return sum.affine(1.0 / k, 0.0);
}

ScoreDistribution mixture(const std::vector<std::pair<double, ScoreDistribution>>& parts) {
  std::vector<std::pair<double, double>> atoms;
  for (const auto& [w, d] : parts)
    for (std::size_t i = 0; i < d.size(); ++i) atoms.emplace_back(d.support()[i], w * d.probs()[i]);
  return ScoreDistribution::from_atoms(std::move(atoms));
}

std::vector<double> binomial_pmf(int n, double p) {
  if (n < 0) throw ValidationError("binomial needs n >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("binomial needs p in [0, 1]");
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  if (p == 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf[static_cast<std::size_t>(n)] = 1.0;
    return pmf;
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  for (int k = 0; k <= n; ++k) {
    const double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    pmf[static_cast<std::size_t>(k)] = std::exp(lc + k * lp + (n - k) * lq);
  }
  return pmf;
}

double binomial_cdf(int k, int n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  const auto pmf = binomial_pmf(n, p);
  double s = 0.0;
  for (int i = 0; i <= k; ++i) s += pmf[static_cast<std::size_t>(i)];
  return std::min(s, 1.0);
}

ScoreDistribution binomial_average(int n, double p) {
  if (n < 1) throw ValidationError("binomial_average needs n >= 1");
  const auto pmf = binomial_pmf(n, p);
  std::vector<std::pair<double, double>> atoms;
  double total = 0.0;
  for (double q : pmf) total += q;
  for (int k = 0; k <= n; ++k) atoms.emplace_back(static_cast<double>(k) / n, pmf[static_cast<std::size_t>(k)] / total);
  return ScoreDistribution::from_atoms(std::move(atoms));
}

FosdResult fosd_check(const ScoreDistribution& top, const ScoreDistribution& bottom, double slack) {
  std::vector<double> points = top.support();
  points.insert(points.end(), bottom.support().begin(), bottom.support().end());
  std::sort(points.begin(), points.end());

  FosdResult r;
  r.max_gap = -std::numeric_limits<double>::infinity();
  for (double t : points) {
    const double gap = bottom.survival(t) - top.survival(t);
    if (gap > r.max_gap) {
      r.max_gap = gap;
      r.max_gap_threshold = t;
    }
    if (gap > slack && r.holds) {
      r.holds = false;
      r.witness_threshold = t;
    }
  }
  if (points.empty()) r.max_gap = 0.0;
  return r;
}

}  // namespace peerscore
