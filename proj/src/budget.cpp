#include "peerscore/budget.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "peerscore/sensitivity.hpp"

namespace peerscore {

void CrowdConfig::validate() const {
  if (num_agents < 2 || num_tasks < 1 || tasks_per_agent < 1 || agents_per_task < 1)
    throw ValidationError("crowd sizes must be positive (at least two agents)");
  if (static_cast<long long>(num_agents) * tasks_per_agent != static_cast<long long>(num_tasks) * agents_per_task)
    throw ValidationError("num_agents * tasks_per_agent must equal num_tasks * agents_per_task");
  if (agents_per_task > num_agents || tasks_per_agent > num_tasks)
    throw ValidationError("assignment is not realizable without repeated (agent, task) pairs");
}

Assignment assign_tasks(const CrowdConfig& cfg, Rng& rng, int max_repairs) {
  cfg.validate();
  const int k = cfg.agents_per_task;
  std::vector<int> slots;
  slots.reserve(static_cast<std::size_t>(cfg.num_tasks) * static_cast<std::size_t>(k));
  for (int a = 0; a < cfg.num_agents; ++a)
    for (int r = 0; r < cfg.tasks_per_agent; ++r) slots.push_back(a);
  rng.shuffle(slots);

  auto task_of = [k](std::size_t slot) { return static_cast<int>(slot) / k; };
  auto in_task = [&](int task, int agent, std::size_t skip) {
    for (std::size_t s = static_cast<std::size_t>(task * k); s < static_cast<std::size_t>((task + 1) * k); ++s)
      if (s != skip && slots[s] == agent) return true;
    return false;
  };
  auto find_conflict = [&]() -> std::optional<std::size_t> {
    for (std::size_t s = 0; s < slots.size(); ++s)
      if (in_task(task_of(s), slots[s], s)) return s;
    return std::nullopt;
  };

  int repairs = 0;
  for (auto bad = find_conflict(); bad; bad = find_conflict()) {
    // swap the duplicate with a random slot where neither side conflicts
    bool fixed = false;
    while (!fixed) {
      if (++repairs > max_repairs) throw ValidationError("task assignment failed after bounded retries");
      const auto other = static_cast<std::size_t>(rng.uniform_int(slots.size()));
      const int ta = task_of(*bad), tb = task_of(other);
      if (ta == tb) continue;
      if (in_task(tb, slots[*bad], other) || in_task(ta, slots[other], *bad)) continue;
      std::swap(slots[*bad], slots[other]);
      fixed = true;
    }
  }

  Assignment out;
  out.agent_tasks.assign(static_cast<std::size_t>(cfg.num_agents), {});
  out.task_agents.assign(static_cast<std::size_t>(cfg.num_tasks), {});
  for (std::size_t s = 0; s < slots.size(); ++s) {
    out.task_agents[static_cast<std::size_t>(task_of(s))].push_back(slots[s]);
    out.agent_tasks[static_cast<std::size_t>(slots[s])].push_back(task_of(s));
  }
  for (auto& v : out.agent_tasks) std::sort(v.begin(), v.end());
  for (auto& v : out.task_agents) std::sort(v.begin(), v.end());
  const auto n = static_cast<std::size_t>(cfg.num_agents);
  out.shared.assign(n, std::vector<std::vector<int>>(n));
  for (std::size_t t = 0; t < out.task_agents.size(); ++t)
    for (int i : out.task_agents[t])
      for (int j : out.task_agents[t])
        if (i != j) out.shared[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].push_back(static_cast<int>(t));
  return out;
}

int min_shared_tasks(const MechanismSpec& spec) {
  return spec.family == Family::ca || spec.family == Family::ma ? 2 : 1;
}

RoundScores simulate_round(const Assignment& assignment, const InfoStructure& info,
                           const std::vector<Mechanism>& mechanisms, double e, double de, std::uint64_t seed) {
  const auto& model = info.source_model();
  if (!model) throw ValidationError("the crowd simulation needs a structure with a Dawid-Skene source model");
  if (e < 0.0 || e > 1.0) throw ValidationError("effort must lie in [0, 1]");
  const std::size_t num_agents = assignment.agent_tasks.size();
  const std::size_t num_tasks = assignment.task_agents.size();

  // signals[agent][task] for the actual and shadow effort levels, -1 if unassigned
  std::vector<std::vector<int>> act(num_agents, std::vector<int>(num_tasks, -1));
  std::vector<std::vector<int>> sha = act;
  Rng rng(derive_seed(seed, 0));
  const auto& marginal = info.marginal_a();
  std::vector<std::vector<double>> gamma;
  for (std::size_t y = 0; y < model->num_states(); ++y) gamma.push_back(model->confusion.row(y));
  for (std::size_t t = 0; t < num_tasks; ++t) {
    const auto y = static_cast<std::size_t>(rng.categorical(model->prior));
    for (int a : assignment.task_agents[t]) {
      const double u = rng.uniform01();
      const int informed = rng.categorical(gamma[y]);
      const int uninformed = rng.categorical(marginal);
      act[static_cast<std::size_t>(a)][t] = u < e ? informed : uninformed;
      sha[static_cast<std::size_t>(a)][t] = u < e - de ? informed : uninformed;
    }
  }

  Rng peer_rng(derive_seed(seed, 1));
  std::vector<double> peer_u(num_agents);
  for (auto& u : peer_u) u = peer_rng.uniform01();

  RoundScores out;
  const std::size_t nm = mechanisms.size();
  out.actual.assign(nm, std::vector<double>(num_agents));
  out.shadow.assign(nm, std::vector<double>(num_agents));
  out.peer.assign(nm, std::vector<int>(num_agents, -1));
  out.shared.assign(nm, std::vector<int>(num_agents, 0));
  Reports a, s, b;
  for (std::size_t m = 0; m < nm; ++m) {
    const int need = min_shared_tasks(mechanisms[m].spec());
    for (std::size_t i = 0; i < num_agents; ++i) {
      std::vector<int> eligible;
      for (std::size_t j = 0; j < num_agents; ++j)
        if (static_cast<int>(assignment.shared[i][j].size()) >= need) eligible.push_back(static_cast<int>(j));
      if (eligible.empty()) throw ValidationError("agent " + std::to_string(i) + " shares too few tasks with every peer");
      const auto pick = std::min(eligible.size() - 1, static_cast<std::size_t>(peer_u[i] * static_cast<double>(eligible.size())));
      const auto peer = static_cast<std::size_t>(eligible[pick]);
      const auto& tasks = assignment.shared[i][peer];
      a.clear();
      s.clear();
      b.clear();
      for (int t : tasks) {
        a.push_back(act[i][static_cast<std::size_t>(t)]);
        s.push_back(sha[i][static_cast<std::size_t>(t)]);
        b.push_back(act[peer][static_cast<std::size_t>(t)]);
      }
      const auto mseed = derive_seed(seed, 2 + m * num_agents + i);
      Rng r1(mseed), r2(mseed);
      out.actual[m][i] = mechanisms[m].score(a, b, r1);
      out.shadow[m][i] = mechanisms[m].score(s, b, r2);
      out.peer[m][i] = static_cast<int>(peer);
      out.shared[m][i] = static_cast<int>(tasks.size());
    }
  }
  return out;
}

std::vector<ScoreSamples> simulate(const SimulationConfig& cfg, const InfoStructure& info,
                                   const std::vector<MechanismSpec>& specs, double e) {
  if (cfg.rounds < 2) throw ValidationError("at least two rounds are needed");
  if (cfg.de <= 0.0 || e - cfg.de < 0.0) throw ValidationError("need 0 < de <= e");
  Rng arng(derive_seed(cfg.seed, 0));
  const Assignment assignment = assign_tasks(cfg.crowd, arng);
  std::vector<Mechanism> mechs;
  for (const auto& s : specs) mechs.emplace_back(s, info);

  const auto na = static_cast<std::size_t>(cfg.crowd.num_agents);
  const auto nr = static_cast<std::size_t>(cfg.rounds);
  std::vector<ScoreSamples> out(specs.size());
  for (std::size_t m = 0; m < specs.size(); ++m) {
    out[m].mechanism = mechs[m].name();
    out[m].bounds = mechs[m].score_bounds();
    out[m].rounds = cfg.rounds;
    out[m].agents = cfg.crowd.num_agents;
    out[m].actual.assign(nr * na, 0.0);
    out[m].shadow.assign(nr * na, 0.0);
  }
  std::vector<std::vector<long long>> shared_sum(specs.size(), std::vector<long long>(nr, 0));
  std::vector<std::string> errors(nr);
#pragma omp parallel for if (cfg.parallel) schedule(dynamic, 16) num_threads(configured_threads())
  for (std::size_t r = 0; r < nr; ++r) {
    try {
      const RoundScores rs = simulate_round(assignment, info, mechs, e, cfg.de, derive_seed(cfg.seed, r + 1));
      for (std::size_t m = 0; m < specs.size(); ++m) {
        std::copy(rs.actual[m].begin(), rs.actual[m].end(), out[m].actual.begin() + static_cast<std::ptrdiff_t>(r * na));
        std::copy(rs.shadow[m].begin(), rs.shadow[m].end(), out[m].shadow.begin() + static_cast<std::ptrdiff_t>(r * na));
        shared_sum[m][r] = std::accumulate(rs.shared[m].begin(), rs.shared[m].end(), 0LL);
      }
    } catch (const std::exception& ex) {
      errors[r] = ex.what();
    }
  }
  for (const auto& err : errors)
    if (!err.empty()) throw ValidationError(err);
  for (std::size_t m = 0; m < specs.size(); ++m)
    out[m].mean_shared = static_cast<double>(std::accumulate(shared_sum[m].begin(), shared_sum[m].end(), 0LL)) /
                         static_cast<double>(nr * na);
  return out;
}

std::string scheme_name(SchemeKind k) { return k == SchemeKind::linear ? "linear" : "threshold"; }

SchemeKind parse_scheme(const std::string& s) {
  if (s == "linear") return SchemeKind::linear;
  if (s == "threshold") return SchemeKind::threshold;
  throw ValidationError("unknown payment scheme '" + s + "'");
}

double PaymentScheme::payment(double score) const {
  return kind == SchemeKind::linear ? a * score + b : (score > t ? c_thres : 0.0);
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw ValidationError("percentile of an empty sample");
  if (pct < 0.0 || pct > 100.0) throw ValidationError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> rank(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

struct MeanStd {
  double mean = 0.0, sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return out;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("spearman needs two equal-length samples of size >= 2");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const auto mx = mean_std(rx), my = mean_std(ry);
  double cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) cov += (rx[i] - mx.mean) * (ry[i] - my.mean);
  cov /= static_cast<double>(x.size() - 1);
  if (mx.sd == 0.0 || my.sd == 0.0) return 0.0;
  return cov / (mx.sd * my.sd);
}

PaymentFit fit_payment(const ScoreSamples& samples, SchemeKind kind, double e, double de, int num_agents,
                       double pct) {
  PaymentFit fit;
  fit.mechanism = samples.mechanism;
  fit.e = e;
  fit.scheme.kind = kind;
  fit.scheme.percentile = pct;
  const auto na = static_cast<std::size_t>(samples.agents);
  const auto nr = static_cast<std::size_t>(samples.rounds);
  if (nr < 2 || samples.actual.size() != nr * na) throw ValidationError("malformed score samples");

  const auto all = mean_std(samples.actual);
  fit.mean_score = all.mean;
  fit.std_score = all.sd;
  std::vector<double> round_diff(nr);
  for (std::size_t r = 0; r < nr; ++r) {
    double d = 0.0;
    for (std::size_t i = 0; i < na; ++i) d += samples.actual[r * na + i] - samples.shadow[r * na + i];
    round_diff[r] = d / static_cast<double>(na) / de;
  }
  const auto diff = mean_std(round_diff);
  const double mean_gradient = diff.mean;
  fit.sensitivity = all.sd > 0.0 ? mean_gradient / all.sd : 0.0;

  if (kind == SchemeKind::linear) {
    fit.gradient = mean_gradient;
    fit.gradient_stderr = diff.sd / std::sqrt(static_cast<double>(nr));
    if (!(fit.gradient > 0.0)) {
      fit.note = "cannot elicit: nonpositive gradient estimate";
      return fit;
    }
    fit.scheme.a = 2.0 * e / fit.gradient;
    fit.scheme.b = std::max(-fit.scheme.a * samples.bounds.inf, e * e - fit.scheme.a * fit.mean_score);
    fit.expected_payment = fit.scheme.a * fit.mean_score + fit.scheme.b;
  } else {
    const std::size_t half = nr / 2;
    std::vector<double> first(samples.actual.begin(), samples.actual.begin() + static_cast<std::ptrdiff_t>(half * na));
    fit.scheme.t = percentile(std::move(first), pct);
    std::vector<double> round_gap(nr - half);
    double above = 0.0;
    for (std::size_t r = half; r < nr; ++r) {
      double g = 0.0;
      for (std::size_t i = 0; i < na; ++i) {
        const bool hit = samples.actual[r * na + i] > fit.scheme.t;
        above += hit;
        g += static_cast<double>(hit) - static_cast<double>(samples.shadow[r * na + i] > fit.scheme.t);
      }
      round_gap[r - half] = g / static_cast<double>(na) / de;
    }
    const auto gap = mean_std(round_gap);
    fit.gradient = gap.mean;
    fit.gradient_stderr = gap.sd / std::sqrt(static_cast<double>(round_gap.size()));
    if (!(fit.gradient > 0.0)) {
      fit.note = "cannot elicit: nonpositive gradient estimate";
      return fit;
    }
    fit.scheme.c_thres = 2.0 * e / fit.gradient;
    fit.expected_payment = fit.scheme.c_thres * above / static_cast<double>((nr - half) * na);
  }
  fit.elicitable = true;
  fit.total_payment = static_cast<double>(num_agents) * fit.expected_payment;
  fit.min_payment = fit.scheme.payment(samples.actual.front());
  for (double s : samples.actual) fit.min_payment = std::min(fit.min_payment, fit.scheme.payment(s));
  fit.individually_rational = fit.expected_payment - e * e >= -1e-9;
  if (!fit.individually_rational) fit.note = "IR violated at the fitted parameters";
  return fit;
}

BudgetTable budget_table(const std::vector<MechanismSpec>& specs, const std::vector<double>& efforts, SchemeKind scheme,
                         const SimulationConfig& cfg, const InfoStructure& info, double pct) {
  BudgetTable table;
  table.scheme = scheme;
  table.efforts = efforts;
  for (std::size_t k = 0; k < efforts.size(); ++k) {
    SimulationConfig sc = cfg;
    sc.seed = derive_seed(cfg.seed, k);
    // one mechanism failing must not abort the others
    std::vector<MechanismSpec> ok;
    for (const auto& s : specs) {
      try {
        Mechanism probe(s, info);
        ok.push_back(s);
      } catch (const std::exception& ex) {
        BudgetRow row;
        row.fit.mechanism = s.name();
        row.fit.e = efforts[k];
        row.error = ex.what();
        table.rows.push_back(row);
      }
    }
    std::vector<ScoreSamples> samples;
    std::string sim_error;
    try {
      samples = simulate(sc, info, ok, efforts[k]);
    } catch (const std::exception& ex) {
      sim_error = ex.what();
    }
    std::vector<double> sens, total;
    for (std::size_t m = 0; m < ok.size(); ++m) {
      BudgetRow row;
      row.fit.mechanism = ok[m].name();
      row.fit.e = efforts[k];
      if (!sim_error.empty()) {
        row.error = sim_error;
      } else {
        try {
          row.fit = fit_payment(samples[m], scheme, efforts[k], cfg.de, cfg.crowd.num_agents, pct);
          if (row.fit.elicitable) {
            sens.push_back(row.fit.sensitivity);
            total.push_back(row.fit.total_payment);
          }
        } catch (const std::exception& ex) {
          row.error = ex.what();
        }
      }
      table.rows.push_back(row);
    }
    table.spearman_by_effort.push_back(sens.size() >= 2 ? std::optional<double>(spearman(sens, total)) : std::nullopt);
  }
  return table;
}

std::vector<std::string> sd_truthful_budget_mechanisms() {
  return {"oa", "pts-partition-round", "ca-partition-round", "ma-partition-round", "ea-prior", "ea-uniform", "ea-optimal"};
}

std::vector<std::string> truthful_budget_mechanisms() { return {"oa", "pts", "ca", "ma", "ea-prior", "ea-uniform", "ea-optimal"}; }

}  // namespace peerscore
