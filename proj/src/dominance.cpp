#include "peerscore/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "peerscore/sensitivity.hpp"

namespace peerscore {

namespace {

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Integer-valued pmfs indexed by count.
std::vector<double> convolve_counts(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out(x.size() + y.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  }
  return out;
}

// Enumerates every way to deal a pool (counts per label) into groups of
// the given sizes, uniformly at random without replacement. The callback
// receives assign(label, group) and the probability of that count pattern.
void split_pool(const std::vector<int>& pool, const std::vector<int>& groups,
                const std::function<void(const CountMatrix&, double)>& emit) {
  const std::size_t labels = pool.size();
  CountMatrix assign(labels, groups.size());
  std::vector<int> rest = pool;

  std::function<void(std::size_t, double)> deal_group;
  std::function<void(std::size_t, std::size_t, int, double)> deal_label;

  deal_group = [&](std::size_t g, double w) {
    if (g == groups.size()) {
      emit(assign, w);
      return;
    }
    if (g + 1 == groups.size()) {
      // Last group takes everything left.
      for (std::size_t l = 0; l < labels; ++l) assign(l, g) = rest[l];
      emit(assign, w);
      for (std::size_t l = 0; l < labels; ++l) assign(l, g) = 0;
      return;
    }
    int total = 0;
    for (int r : rest) total += r;
    const double denom = choose(total, groups[g]);
    deal_label(g, 0, groups[g], w / denom);
  };
  deal_label = [&](std::size_t g, std::size_t l, int left, double w) {
    if (l + 1 == labels) {
      if (left > rest[l]) return;
      assign(l, g) = left;
      rest[l] -= left;
      deal_group(g + 1, w * choose(rest[l] + left, left));
      rest[l] += left;
      assign(l, g) = 0;
      return;
    }
    for (int d = 0; d <= std::min(left, rest[l]); ++d) {
      assign(l, g) = d;
      rest[l] -= d;
      deal_label(g, l + 1, left - d, w * choose(rest[l] + d, d));
      rest[l] += d;
    }
    assign(l, g) = 0;
  };
  deal_group(0, 1.0);
}

// Visits every count vector of length `cells` summing to n, skipping cells
// flagged as impossible.
void for_each_composition(int n, const std::vector<char>& allowed,
                          const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> counts(allowed.size(), 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == counts.size()) {
      if (left > 0 && !allowed[i]) return;
      counts[i] = left;
      visit(counts);
      counts[i] = 0;
      return;
    }
    const int hi = allowed[i] ? left : 0;
    for (int k = 0; k <= hi; ++k) {
      counts[i] = k;
      rec(i + 1, left - k);
    }
    counts[i] = 0;
  };
  if (!counts.empty()) rec(0, n);
}

void check_budget(std::size_t c, int n, const ExactConfig& cfg) {
  const double states = std::pow(static_cast<double>(c), 2.0 * n);
  if (states > cfg.max_states) {
    std::ostringstream os;
    os << "exact engine budget exceeded: c^(2n) = " << states << " states for c=" << c << ", n=" << n
       << " (budget " << cfg.max_states << ")";
    throw BudgetExceeded(os.str());
  }
}

// K(r, b) = Pr(Alice reports r, Bob observes b) on one question.
RealMatrix report_signal_matrix(const InfoStructure& info, const Strategy& theta) {
  const std::size_t c = info.num_signals();
  RealMatrix k(c, c);
  for (std::size_t x = 0; x < c; ++x)
    for (std::size_t r = 0; r < c; ++r) {
      const double t = theta.matrix()(x, r);
      if (t == 0.0) continue;
      for (std::size_t b = 0; b < c; ++b) k(r, b) += t * info.joint()(x, b);
    }
  return k;
}

ScoreDistribution lottery(double lambda) {
  return ScoreDistribution::from_atoms({{0.0, 1.0 - lambda}, {1.0, lambda}});
}

double expected_lambda(const ScoreDistribution& d, const ScoreBounds& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += d.probs()[i] * b.lottery_probability(d.support()[i]);
  return std::clamp(s, 0.0, 1.0);
}

// Agreement-count pmf for one EA report class: pool holds Bob's labels,
// groups the final report counts.
std::vector<double> class_agreements(const std::vector<int>& pool, const std::vector<int>& groups) {
  int total = 0;
  for (int p : pool) total += p;
  std::vector<double> pmf(static_cast<std::size_t>(total) + 1, 0.0);
  split_pool(pool, groups, [&](const CountMatrix& assign, double w) {
    int agree = 0;
    for (std::size_t k = 0; k < groups.size(); ++k) agree += assign(k, k);
    pmf[static_cast<std::size_t>(agree)] += w;
  });
  return pmf;
}

ScoreDistribution counts_distribution(const Mechanism& mech, const RealMatrix& k, int n) {
  const std::size_t c = mech.num_signals();
  const Family f = mech.spec().family;
  if ((f == Family::ca || f == Family::ma) && n < 2) throw ValidationError("CA and MA need n >= 2");
  std::vector<char> allowed(c * c);
  std::vector<double> logk(c * c, 0.0);
  for (std::size_t i = 0; i < c * c; ++i) {
    allowed[i] = k.data()[i] > 0.0;
    if (allowed[i]) logk[i] = std::log(k.data()[i]);
  }
  Enforcement phi;
  if (f == Family::ea) phi = mech.enforcement_for(n);

  std::vector<std::pair<double, double>> atoms;
  const double lf_n = log_factorial(n);
  const double nn = static_cast<double>(n);
  for_each_composition(n, allowed, [&](const std::vector<int>& cells) {
    double lp = lf_n;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i] > 0) lp += cells[i] * logk[i] - log_factorial(cells[i]);
    const double prob = std::exp(lp);
    auto cell = [&](std::size_t r, std::size_t b) { return cells[r * c + b]; };

    switch (f) {
      case Family::oa: {
        int agree = 0;
        for (std::size_t s = 0; s < c; ++s) agree += cell(s, s);
        atoms.emplace_back(agree / nn, prob);
        break;
      }
      case Family::pts: {
        double s = 0.0;
        for (std::size_t x = 0; x < c; ++x) s += cell(x, x) / mech.pts_prior()[x];
        atoms.emplace_back(s / nn, prob);
        break;
      }
      case Family::ca: {
        const CountMatrix& t = mech.ca_table();
        std::vector<long long> rows(c, 0), cols(c, 0);
        long long bonus = 0;
        for (std::size_t r = 0; r < c; ++r)
          for (std::size_t b = 0; b < c; ++b) {
            rows[r] += cell(r, b);
            cols[b] += cell(r, b);
            bonus += static_cast<long long>(cell(r, b)) * t(r, b);
          }
        long long cross = 0;
        for (std::size_t r = 0; r < c; ++r)
          for (std::size_t b = 0; b < c; ++b) cross += rows[r] * cols[b] * t(r, b);
        atoms.emplace_back(static_cast<double>(n * bonus - cross) / (nn * (nn - 1.0)), prob);
        break;
      }
      case Family::ma: {
        const GammaTensor& t = mech.ma_table();
        std::vector<long long> cols(c, 0);
        for (std::size_t r = 0; r < c; ++r)
          for (std::size_t b = 0; b < c; ++b) cols[b] += cell(r, b);
        long long total = 0;
        for (std::size_t r = 0; r < c; ++r)
          for (std::size_t b = 0; b < c; ++b) {
            if (cell(r, b) == 0) continue;
            for (std::size_t b2 = 0; b2 < c; ++b2)
              total += static_cast<long long>(cell(r, b)) * cols[b2] *
                       t.sign(static_cast<int>(r), static_cast<int>(b), static_cast<int>(b2));
          }
        atoms.emplace_back(static_cast<double>(total) / (nn * (nn - 1.0)), prob);
        break;
      }
      case Family::ea: {
        std::vector<int> reported(c, 0);
        for (std::size_t r = 0; r < c; ++r)
          for (std::size_t b = 0; b < c; ++b) reported[r] += cell(r, b);
        const ManipulationMatrix rho = mech.plan(reported, phi);
        std::vector<double> agree{1.0};
        for (std::size_t r = 0; r < c; ++r) {
          if (reported[r] == 0) continue;
          std::vector<int> pool(c), groups(c);
          for (std::size_t b = 0; b < c; ++b) pool[b] = cell(r, b);
          for (std::size_t j = 0; j < c; ++j) groups[j] = rho(r, j);
          agree = convolve_counts(agree, class_agreements(pool, groups));
        }
        for (std::size_t a = 0; a < agree.size(); ++a)
          if (agree[a] > 0.0) atoms.emplace_back(static_cast<double>(a) / nn, prob * agree[a]);
        break;
      }
    }
  });
  return ScoreDistribution::from_atoms(std::move(atoms));
}

ScoreDistribution individual_distribution(const Mechanism& mech, const RealMatrix& k) {
  const std::size_t c = mech.num_signals();
  const std::vector<double> mb = k.col_sums();
  std::vector<std::pair<double, double>> atoms;
  for (std::size_t r = 0; r < c; ++r)
    for (std::size_t b = 0; b < c; ++b) {
      if (k(r, b) == 0.0) continue;
      if (questions_per_group(mech.spec().family) == 1) {
        atoms.emplace_back(mech.individual_score(static_cast<int>(r), static_cast<int>(b), static_cast<int>(b)),
                           k(r, b));
      } else {
        for (std::size_t b2 = 0; b2 < c; ++b2)
          atoms.emplace_back(
              mech.individual_score(static_cast<int>(r), static_cast<int>(b), static_cast<int>(b2)),
              k(r, b) * mb[b2]);
      }
    }
  return ScoreDistribution::from_atoms(std::move(atoms));
}

}  // namespace

ScoreDistribution exact_distribution(const MechanismSpec& spec, const InfoStructure& info, const Strategy& theta,
                                     int n, const ExactConfig& cfg) {
  return exact_distribution(Mechanism(spec, info), info, theta, n, cfg);
}

ScoreDistribution exact_distribution(const Mechanism& mech, const InfoStructure& info, const Strategy& theta, int n,
                                     const ExactConfig& cfg) {
  const std::size_t c = info.num_signals();
  if (theta.num_signals() != c) throw ValidationError("strategy size does not match the signal space");
  if (mech.num_signals() != c) throw ValidationError("mechanism was prepared for a different signal space");
  if (n < 1) throw ValidationError("n must be positive");
  check_budget(c, n, cfg);
  const RealMatrix k = report_signal_matrix(info, theta);
  const Family f = mech.spec().family;

  switch (mech.spec().variant) {
    case Variant::original:
      return counts_distribution(mech, k, n);
    case Variant::partition: {
      const auto plan = partition_plan(f, n);
      return iid_average(individual_distribution(mech, k), static_cast<int>(plan.num_groups));
    }
    case Variant::partition_rounded: {
      const auto plan = partition_plan(f, n);
      const double lambda = expected_lambda(individual_distribution(mech, k), mech.individual_bounds());
      return binomial_average(static_cast<int>(plan.num_groups), lambda);
    }
    case Variant::direct_rounded: {
      MechanismSpec base = mech.spec();
      base.variant = Variant::original;
      const Mechanism base_mech(base, info);
      return lottery(expected_lambda(counts_distribution(base_mech, k, n), mech.individual_bounds()));
    }
  }
  throw ValidationError("unknown variant");
}

double histogram_probability(const InfoStructure& info, std::span<const int> hist) {
  const auto& ma = info.marginal_a();
  if (hist.size() != ma.size()) throw ValidationError("histogram size does not match the signal space");
  int n = 0;
  double lp = 0.0;
  for (std::size_t i = 0; i < hist.size(); ++i) {
    if (hist[i] < 0) throw ValidationError("negative histogram entry");
    if (hist[i] == 0) continue;
    if (ma[i] == 0.0) return 0.0;
    n += hist[i];
    lp += hist[i] * std::log(ma[i]) - log_factorial(hist[i]);
  }
  return std::exp(lp + log_factorial(n));
}

ScoreDistribution ea_manipulation_distribution(const Mechanism& mech, const InfoStructure& info,
                                               const ManipulationMatrix& x) {
  if (mech.spec().family != Family::ea) throw ValidationError("manipulation matrices apply only to ea");
  const std::size_t c = info.num_signals();
  if (x.rows() != c || x.cols() != c) throw ValidationError("manipulation matrix has the wrong shape");
  for (int v : x.data())
    if (v < 0) throw ValidationError("manipulation matrix has a negative entry");
  const std::vector<int> observed = x.row_sums();
  const std::vector<int> reported = x.col_sums();
  int n = 0;
  for (int m : observed) n += m;
  if (n < 1) throw ValidationError("manipulation matrix is empty");
  const Enforcement phi = mech.enforcement_for(n);
  const ManipulationMatrix rho = mech.plan(reported, phi);

  // Pr(Bob = k | Alice observed i); rows with no observations are unused.
  RealMatrix p(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    if (observed[i] == 0) continue;
    const double mi = info.marginal_a()[i];
    if (mi <= 0.0) throw ValidationError("observed a signal with zero marginal");
    for (std::size_t k = 0; k < c; ++k) p(i, k) = info.joint()(i, k) / mi;
  }

  // Per report class: the possible (observed label -> final report) splits.
  std::vector<std::vector<std::pair<CountMatrix, double>>> splits(c);
  for (std::size_t j = 0; j < c; ++j) {
    std::vector<int> pool(c), groups(c);
    for (std::size_t i = 0; i < c; ++i) pool[i] = x(i, j);
    for (std::size_t k = 0; k < c; ++k) groups[k] = rho(j, k);
    split_pool(pool, groups, [&](const CountMatrix& a, double w) { splits[j].emplace_back(a, w); });
  }

  // Final theta(i, k) = observed i, final report k.
  std::map<std::vector<int>, double> finals;
  std::vector<int> theta(c * c, 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t j, double w) {
    if (j == c) {
      finals[theta] += w;
      return;
    }
    for (const auto& [a, wa] : splits[j]) {
      for (std::size_t i = 0; i < c; ++i)
        for (std::size_t k = 0; k < c; ++k) theta[i * c + k] += a(i, k);
      rec(j + 1, w * wa);
      for (std::size_t i = 0; i < c; ++i)
        for (std::size_t k = 0; k < c; ++k) theta[i * c + k] -= a(i, k);
    }
  };
  rec(0, 1.0);

  std::vector<std::pair<double, double>> atoms;
  for (const auto& [th, w] : finals) {
    std::vector<double> agree{1.0};
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t k = 0; k < c; ++k)
        if (th[i * c + k] > 0) agree = convolve_counts(agree, binomial_pmf(th[i * c + k], p(i, k)));
    for (std::size_t a = 0; a < agree.size(); ++a)
      if (agree[a] > 0.0) atoms.emplace_back(static_cast<double>(a) / n, w * agree[a]);
  }
  return ScoreDistribution::from_atoms(std::move(atoms));
}

std::vector<std::vector<int>> all_histograms(int n, int c) {
  if (n < 0 || c < 1) throw ValidationError("bad histogram request");
  std::vector<std::vector<int>> out;
  std::vector<int> h(static_cast<std::size_t>(c), 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == c - 1) {
      h[static_cast<std::size_t>(i)] = left;
      out.push_back(h);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      h[static_cast<std::size_t>(i)] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, n);
  return out;
}

std::vector<ManipulationMatrix> all_manipulations(std::span<const int> row_sums) {
  const int c = static_cast<int>(row_sums.size());
  std::vector<std::vector<std::vector<int>>> rows;
  for (int m : row_sums) rows.push_back(all_histograms(m, c));
  std::vector<ManipulationMatrix> out;
  ManipulationMatrix x(static_cast<std::size_t>(c), static_cast<std::size_t>(c));
  std::function<void(int)> rec = [&](int i) {
    if (i == c) {
      out.push_back(x);
      return;
    }
    for (const auto& r : rows[static_cast<std::size_t>(i)]) {
      for (int j = 0; j < c; ++j) x(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = r[static_cast<std::size_t>(j)];
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

std::vector<Strategy> strategy_grid(int c, int resolution) {
  if (c < 2) throw ValidationError("strategy grid needs c >= 2");
  if (resolution < 1) throw ValidationError("grid resolution must be at least 1");
  const auto points = all_histograms(resolution, c);
  auto is_vertex = [&](const std::vector<int>& pt) {
    return std::count(pt.begin(), pt.end(), resolution) == 1;
  };
  std::vector<Strategy> out;
  // Deterministic maps, lexicographic by image.
  std::vector<int> image(static_cast<std::size_t>(c), 0);
  while (true) {
    out.push_back(Strategy::permutation(image));  // any image vector, not only bijections
    int pos = c - 1;
    while (pos >= 0 && image[static_cast<std::size_t>(pos)] == c - 1) image[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
    ++image[static_cast<std::size_t>(pos)];
  }
  if (resolution == 1) return out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(c), 0);
  while (true) {
    bool all_vertices = true;
    for (std::size_t i : idx) all_vertices = all_vertices && is_vertex(points[i]);
    if (!all_vertices) {
      RealMatrix m(static_cast<std::size_t>(c), static_cast<std::size_t>(c));
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < static_cast<std::size_t>(c); ++j)
          m(r, j) = static_cast<double>(points[idx[r]][j]) / resolution;
      out.emplace_back(std::move(m));
    }
    int pos = c - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] + 1 == points.size()) idx[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
  }
  return out;
}

namespace {

std::size_t grid_size(int c, int resolution) {
  const double rows = choose(resolution + c - 1, c - 1);
  return static_cast<std::size_t>(std::pow(rows, c));
}

struct Candidate {
  FosdResult fosd;
  double weight = 1.0;  // Pr(histogram) for manipulations
  double mean = 0.0;
  std::string error;
};

}  // namespace

DominanceReport verify_sd_truthfulness(const MechanismSpec& spec, const InfoStructure& info, int n,
                                       const SearchConfig& cfg) {
  const Mechanism mech(spec, info);
  const int c = static_cast<int>(info.num_signals());
  check_budget(info.num_signals(), n, cfg.exact);
  DominanceReport rep;
  rep.mechanism = mech.name();
  rep.n = n;
  rep.truthful = exact_distribution(mech, info, Strategy::truthful(info.num_signals()), n, cfg.exact);
  rep.truthful_mean = rep.truthful.mean();
  rep.best_deviation_mean = rep.truthful_mean;
  const bool is_ea = spec.family == Family::ea;
  std::ostringstream searched;

  // iid strategies on the grid.
  std::vector<Strategy> grid;
  if (!(is_ea && cfg.manipulations_only)) {
    int res = std::max(1, cfg.resolution);
    while (res > 1 && grid_size(c, res) > cfg.max_grid) --res;
    grid = strategy_grid(c, res);
    grid.erase(std::remove_if(grid.begin(), grid.end(), [](const Strategy& s) { return s.is_truthful(); }), grid.end());
    const std::size_t det = static_cast<std::size_t>(std::pow(c, c)) - 1;
    searched << "iid strategies: " << det << " deterministic non-truthful";
    if (res > 1) searched << " + " << grid.size() - det << " mixed on simplex grid resolution " << res;
    if (res < cfg.resolution) searched << " (reduced from " << cfg.resolution << " by grid cap " << cfg.max_grid << ")";
  }

  std::vector<Candidate> results(grid.size());
#pragma omp parallel for if (cfg.parallel) schedule(dynamic) num_threads(configured_threads())
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const ScoreDistribution d = exact_distribution(mech, info, grid[i], n, cfg.exact);
      results[i].fosd = fosd_check(rep.truthful, d);
      results[i].mean = d.mean();
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  }
  for (const auto& r : results)
    if (!r.error.empty()) throw ValidationError("strategy evaluation failed: " + r.error);

  auto consider = [&](const FosdResult& f, double weight, auto&& fill) {
    const double gap = weight * f.max_gap;
    if (gap > kPredicateTol && (!rep.witness || gap > rep.witness->gap)) {
      DominanceWitness w;
      fill(w);
      w.threshold = f.max_gap_threshold;
      w.first_threshold = f.witness_threshold.value_or(f.max_gap_threshold);
      w.gap = gap;
      rep.witness = w;
    }
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    consider(results[i].fosd, 1.0, [&](DominanceWitness& w) { w.strategy = grid[i]; });
    if (results[i].mean > rep.best_deviation_mean) {
      rep.best_deviation_mean = results[i].mean;
      rep.best_deviation = grid[i];
    }
  }
  rep.candidates = grid.size();

  if (is_ea && cfg.manipulations) {
    struct Item {
      std::size_t hist;
      ManipulationMatrix x;
    };
    const auto hists = all_histograms(n, c);
    const Enforcement target = mech.enforcement_for(n);
    std::vector<double> hist_prob(hists.size());
    std::vector<ScoreDistribution> hist_truth(hists.size());
    std::vector<Item> items;
    for (std::size_t h = 0; h < hists.size(); ++h) {
      hist_prob[h] = histogram_probability(info, hists[h]);
      if (hist_prob[h] == 0.0) continue;
      ManipulationMatrix diag(static_cast<std::size_t>(c), static_cast<std::size_t>(c));
      for (int i = 0; i < c; ++i) diag(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = hists[h][static_cast<std::size_t>(i)];
      hist_truth[h] = ea_manipulation_distribution(mech, info, diag);
      for (auto& x : all_manipulations(hists[h])) {
        if (x == diag) continue;
        if (cfg.reallocations_only && x.col_sums() != target) continue;
        items.push_back({h, std::move(x)});
      }
    }
    std::vector<Candidate> mres(items.size());
#pragma omp parallel for if (cfg.parallel) schedule(dynamic) num_threads(configured_threads())
    for (std::size_t i = 0; i < items.size(); ++i) {
      try {
        const ScoreDistribution d = ea_manipulation_distribution(mech, info, items[i].x);
        mres[i].fosd = fosd_check(hist_truth[items[i].hist], d);
        mres[i].mean = d.mean();
        mres[i].weight = hist_prob[items[i].hist];
      } catch (const std::exception& e) {
        mres[i].error = e.what();
      }
    }
    std::vector<double> best_gain(hists.size(), 0.0);
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!mres[i].error.empty()) throw ValidationError("manipulation evaluation failed: " + mres[i].error);
      consider(mres[i].fosd, mres[i].weight, [&](DominanceWitness& w) {
        w.manipulation = items[i].x;
        w.histogram = hists[items[i].hist];
      });
      const std::size_t h = items[i].hist;
      best_gain[h] = std::max(best_gain[h], mres[i].mean - hist_truth[h].mean());
    }
    // Alice picks the best manipulation for each histogram she observes.
    double gain = 0.0;
    for (std::size_t h = 0; h < hists.size(); ++h) gain += hist_prob[h] * best_gain[h];
    rep.best_deviation_mean = std::max(rep.best_deviation_mean, rep.truthful_mean + gain);
    rep.candidates += items.size();
    if (!searched.str().empty()) searched << "; ";
    searched << "histogram-dependent manipulation matrices: " << items.size()
             << (cfg.reallocations_only ? " (reallocations at the target histogram)" : " (all feasible)");
  }
  rep.searched_class = searched.str();
  rep.certified = !rep.witness.has_value();
  rep.truthful_in_expectation = rep.best_deviation_mean <= rep.truthful_mean + 1e-12;
  return rep;
}

// Counterexamples -------------------------------------------------------------

const std::vector<std::string>& counterexample_targets() {
  static const std::vector<std::string> t{"ca-original", "pts", "ea-3signal", "ca-single-3signal"};
  return t;
}

CounterexampleReport counterexample(const std::string& target) {
  CounterexampleReport out;
  out.target = target;
  SearchConfig cfg;
  if (target == "ca-original") {
    out.structure = "J1";
    const InfoStructure& info = preset("J1");
    const MechanismSpec spec = parse_mechanism("ca");
    out.dominance = verify_sd_truthfulness(spec, info, 2, cfg);
    const auto& j = info.joint();
    out.values.emplace_back("Pr(S(tau)=-1) exact", out.dominance.truthful.prob_at(-1.0));
    out.values.emplace_back("2*J01*J10", 2.0 * j(0, 1) * j(1, 0));
    for (int s = 0; s < 2; ++s)
      out.values.emplace_back("Pr(S(const " + std::to_string(s) + ")=-1) exact",
                              exact_distribution(spec, info, Strategy::constant(2, s), 2).prob_at(-1.0));
  } else if (target == "pts") {
    out.structure = "biased";
    const InfoStructure& info = preset("biased");
    const MechanismSpec spec = parse_mechanism("pts");
    out.dominance = verify_sd_truthfulness(spec, info, 1, cfg);
    const Mechanism mech(spec, info);
    const double smax = mech.individual_bounds().sup;
    const auto& ma = info.marginal_a();
    const int smin = ma[0] <= ma[1] ? 0 : 1;
    out.values.emplace_back("S_max", smax);
    out.values.emplace_back("Pr(S(tau)=S_max)", out.dominance.truthful.prob_at(smax));
    out.values.emplace_back("Pr(S(const sigma_min)=S_max)",
                            exact_distribution(spec, info, Strategy::constant(2, smin), 1).prob_at(smax));
  } else if (target == "ea-3signal") {
    out.structure = "skewed-3signal";
    const InfoStructure& info = preset("skewed-3signal");
    MechanismSpec spec = parse_mechanism("ea-uniform-minimal");
    cfg.manipulations_only = true;
    cfg.reallocations_only = true;
    out.dominance = verify_sd_truthfulness(spec, info, 3, cfg);
    const RealMatrix p = info.conditional_b_given_a();
    out.values.emplace_back("p01*p12", p(0, 1) * p(1, 2));
    out.values.emplace_back("p11*p02", p(1, 1) * p(0, 2));
  } else if (target == "ca-single-3signal") {
    out.structure = "ca-3signal";
    const InfoStructure& info = preset("ca-3signal");
    const MechanismSpec spec = parse_mechanism("ca-partition");
    out.dominance = verify_sd_truthfulness(spec, info, 2, cfg);
    out.values.emplace_back("Pr(S(tau)=1) exact", out.dominance.truthful.prob_at(1.0));
    for (int s = 0; s < 3; ++s)
      out.values.emplace_back("Pr(S(const " + std::to_string(s) + ")=1) exact",
                              exact_distribution(spec, info, Strategy::constant(3, s), 2).prob_at(1.0));
    out.values.emplace_back("reference Pr(S(tau)=1)", 0.2324);
    out.values.emplace_back("reference Pr(S(const 0)=1)", 0.2474);
  } else {
    throw ValidationError("unknown counterexample target '" + target + "'");
  }
  return out;
}

}  // namespace peerscore
