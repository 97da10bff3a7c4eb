#include "peerscore/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "peerscore/sensitivity.hpp"
#include "peerscore/transport.hpp"

namespace peerscore {

namespace {

void require_same_length(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw ValidationError("report vectors differ in length (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  if (a.empty()) throw ValidationError("report vectors are empty");
}

void require_reports_in_range(std::span<const int> r, std::size_t c) {
  for (int x : r)
    if (x < 0 || static_cast<std::size_t>(x) >= c)
      throw ValidationError("report " + std::to_string(x) + " outside signal space of size " + std::to_string(c));
}

void require_margins(std::span<const int> reported, std::span<const int> target) {
  if (reported.size() != target.size()) throw ValidationError("histogram sizes differ");
  for (int x : target)
    if (x < 0) throw ValidationError("enforcement target has a negative count");
  for (int x : reported)
    if (x < 0) throw ValidationError("reported histogram has a negative count");
  if (std::accumulate(reported.begin(), reported.end(), 0) != std::accumulate(target.begin(), target.end(), 0))
    throw ValidationError("infeasible enforcement: target does not sum to the number of reports");
}

std::string matrix_text(const RealMatrix& m) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? ",[" : "[");
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << ']';
  }
  os << ']';
  return os.str();
}

}  // namespace

// Strategy ------------------------------------------------------------------

Strategy::Strategy(RealMatrix matrix) : matrix_(std::move(matrix)) {
  if (!matrix_.square() || matrix_.rows() < 2) throw ValidationError("strategy must be a c x c matrix, c >= 2");
  for (std::size_t i = 0; i < matrix_.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < matrix_.cols(); ++j) {
      const double v = matrix_(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("strategy entry outside [0, 1]");
      s += v;
    }
    if (std::abs(s - 1.0) > kExactTol) throw ValidationError("strategy row " + std::to_string(i) + " does not sum to 1");
  }
}

Strategy Strategy::truthful(std::size_t c) { return Strategy(RealMatrix::identity(c)); }

Strategy Strategy::constant(std::size_t c, int report) {
  RealMatrix m(c, c);
  for (std::size_t i = 0; i < c; ++i) m(i, static_cast<std::size_t>(report)) = 1.0;
  return Strategy(std::move(m));
}

Strategy Strategy::permutation(std::span<const int> image) {
  RealMatrix m(image.size(), image.size());
  for (std::size_t i = 0; i < image.size(); ++i) m(i, static_cast<std::size_t>(image[i])) = 1.0;
  return Strategy(std::move(m));
}

bool Strategy::is_truthful() const { return matrix_ == RealMatrix::identity(matrix_.rows()); }

bool Strategy::deterministic() const {
  for (double v : matrix_.data())
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

std::string Strategy::describe() const { return matrix_text(matrix_); }

// Names ---------------------------------------------------------------------

namespace {

const char* family_name(Family f) {
  switch (f) {
    case Family::oa: return "oa";
    case Family::pts: return "pts";
    case Family::ca: return "ca";
    case Family::ma: return "ma";
    case Family::ea: return "ea";
  }
  return "?";
}

}  // namespace

std::string MechanismSpec::name() const {
  std::string out = family_name(family);
  if (family == Family::ea) {
    switch (enforcement) {
      case EnforcementMode::uniform: out += "-uniform"; break;
      case EnforcementMode::prior: out += "-prior"; break;
      case EnforcementMode::optimal: out += "-optimal"; break;
      case EnforcementMode::explicit_counts: {
        out += "-explicit(";
        for (std::size_t i = 0; i < explicit_phi.size(); ++i) out += (i ? "," : "") + std::to_string(explicit_phi[i]);
        out += ")";
        break;
      }
    }
    if (custom_planner) out += "-" + (custom_planner_name.empty() ? std::string("custom") : custom_planner_name);
    else if (rule == EnforcementRule::minimal) out += "-minimal";
    else if (rule == EnforcementRule::ip) out += "-ip";
  }
  switch (variant) {
    case Variant::original: break;
    case Variant::partition: out += "-partition"; break;
    case Variant::partition_rounded: out += "-partition-round"; break;
    case Variant::direct_rounded: out += "-direct-round"; break;
  }
  return out;
}

MechanismSpec parse_mechanism(std::string_view raw) {
  std::string name(raw);
  MechanismSpec spec;
  auto strip_suffix = [&](std::string_view suffix) {
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      name.resize(name.size() - suffix.size());
      return true;
    }
    return false;
  };
  if (strip_suffix("-partition-round")) spec.variant = Variant::partition_rounded;
  else if (strip_suffix("-direct-round")) spec.variant = Variant::direct_rounded;
  else if (strip_suffix("-partition")) spec.variant = Variant::partition;

  if (name.rfind("ea", 0) == 0) {
    spec.family = Family::ea;
    if (strip_suffix("-minimal")) spec.rule = EnforcementRule::minimal;
    else if (strip_suffix("-ip")) spec.rule = EnforcementRule::ip;
    if (name == "ea" || name == "ea-prior") spec.enforcement = EnforcementMode::prior;
    else if (name == "ea-uniform") spec.enforcement = EnforcementMode::uniform;
    else if (name == "ea-optimal") spec.enforcement = EnforcementMode::optimal;
    else throw ValidationError("unknown mechanism '" + std::string(raw) + "'");
  } else if (name == "oa") {
    spec.family = Family::oa;
  } else if (name == "pts") {
    spec.family = Family::pts;
  } else if (name == "ca") {
    spec.family = Family::ca;
  } else if (name == "ma") {
    spec.family = Family::ma;
  } else {
    throw ValidationError("unknown mechanism '" + std::string(raw) + "'");
  }
  if (spec.variant == Variant::partition && spec.family != Family::ca && spec.family != Family::ma)
    throw ValidationError("unrounded partition variant exists only for ca and ma");
  if (spec.family == Family::ea && spec.variant != Variant::original && spec.variant != Variant::direct_rounded)
    throw ValidationError("ea supports only the original and direct-round variants");
  return spec;
}

// Scores --------------------------------------------------------------------

double score_oa(std::span<const int> a, std::span<const int> b) {
  require_same_length(a, b);
  int agree = 0;
  for (std::size_t j = 0; j < a.size(); ++j) agree += a[j] == b[j];
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

double score_pts(std::span<const int> a, std::span<const int> b, std::span<const double> prior) {
  require_same_length(a, b);
  for (double r : prior)
    if (!(r > 0.0)) throw ValidationError("PTS prior must be strictly positive");
  require_reports_in_range(a, prior.size());
  require_reports_in_range(b, prior.size());
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a[j] == b[j]) s += 1.0 / prior[static_cast<std::size_t>(a[j])];
  return s / static_cast<double>(a.size());
}

double score_ca_original(std::span<const int> a, std::span<const int> b, const CountMatrix& t) {
  require_same_length(a, b);
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("CA needs at least 2 questions");
  require_reports_in_range(a, t.rows());
  require_reports_in_range(b, t.cols());
  // sum_{j != k} [T(a_j,b_j) - T(a_j,b_k)] = n sum_j T(a_j,b_j) - sum_j sum_k T(a_j,b_k)
  std::vector<long long> bob(t.cols(), 0);
  for (int x : b) ++bob[static_cast<std::size_t>(x)];
  long long bonus = 0, cross = 0;
  for (std::size_t j = 0; j < n; ++j) {
    bonus += t(static_cast<std::size_t>(a[j]), static_cast<std::size_t>(b[j]));
    for (std::size_t s = 0; s < t.cols(); ++s) cross += bob[s] * t(static_cast<std::size_t>(a[j]), s);
  }
  const long long total = static_cast<long long>(n) * bonus - cross;
  return static_cast<double>(total) / static_cast<double>(n * (n - 1));
}

std::vector<std::pair<int, int>> default_pairing(int n) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; 2 * i + 1 < n; ++i) out.emplace_back(2 * i, 2 * i + 1);
  return out;
}

namespace {

void require_pairing(const std::vector<std::pair<int, int>>& pairing, std::size_t n) {
  if (pairing.empty()) throw ValidationError("pairing is empty");
  if (pairing.size() != n / 2) throw ValidationError("pairing must cover floor(n/2) pairs");
  std::vector<char> used(n, 0);
  for (auto [j, k] : pairing) {
    for (int q : {j, k}) {
      if (q < 0 || static_cast<std::size_t>(q) >= n) throw ValidationError("pairing index out of range");
      if (used[static_cast<std::size_t>(q)]) throw ValidationError("pairing reuses question " + std::to_string(q));
      used[static_cast<std::size_t>(q)] = 1;
    }
  }
}

}  // namespace

double score_ca_partitioned(std::span<const int> a, std::span<const int> b, const CountMatrix& t,
                            const std::vector<std::pair<int, int>>& pairing) {
  require_same_length(a, b);
  require_reports_in_range(a, t.rows());
  require_reports_in_range(b, t.cols());
  require_pairing(pairing, a.size());
  double s = 0.0;
  for (auto [j, k] : pairing)
    s += ca_individual(t, a[static_cast<std::size_t>(j)], b[static_cast<std::size_t>(j)], b[static_cast<std::size_t>(k)]);
  return s / static_cast<double>(pairing.size());
}

double score_ma_original(std::span<const int> a, std::span<const int> b, const GammaTensor& t) {
  require_same_length(a, b);
  const std::size_t n = a.size();
  if (n < 2) throw ValidationError("MA needs at least 2 questions");
  require_reports_in_range(a, t.c);
  require_reports_in_range(b, t.c);
  std::vector<long long> bob(t.c, 0);
  for (int x : b) ++bob[static_cast<std::size_t>(x)];
  // T(., s, s) = 0, so the j = k term drops out of the full sum.
  long long total = 0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t s = 0; s < t.c; ++s) total += bob[s] * t.sign(a[j], b[j], static_cast<int>(s));
  return static_cast<double>(total) / static_cast<double>(n * (n - 1));
}

double score_ma_partitioned(std::span<const int> a, std::span<const int> b, const GammaTensor& t,
                            const std::vector<std::pair<int, int>>& pairing) {
  require_same_length(a, b);
  require_reports_in_range(a, t.c);
  require_reports_in_range(b, t.c);
  require_pairing(pairing, a.size());
  double s = 0.0;
  for (auto [j, k] : pairing)
    s += ma_individual(t, a[static_cast<std::size_t>(j)], b[static_cast<std::size_t>(j)], b[static_cast<std::size_t>(k)]);
  return s / static_cast<double>(pairing.size());
}

// Enforcement ---------------------------------------------------------------

std::vector<int> histogram(std::span<const int> reports, std::size_t c) {
  require_reports_in_range(reports, c);
  std::vector<int> h(c, 0);
  for (int x : reports) ++h[static_cast<std::size_t>(x)];
  return h;
}

std::vector<int> largest_remainder(std::span<const double> weights, int n) {
  if (n < 0) throw ValidationError("largest_remainder needs n >= 0");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("largest_remainder weights must sum to 1");
  std::vector<int> out(weights.size());
  std::vector<double> remainder(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double x = weights[i] * n;
    out[i] = static_cast<int>(std::floor(x + 1e-12));
    remainder[i] = x - out[i];
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  // Stable: equal remainders keep the lower index first.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return remainder[x] > remainder[y]; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++out[order[r % order.size()]];
  while (assigned > n) {
    // Only reachable through the floor nudge; take back from the smallest remainder.
    for (auto it = order.rbegin(); it != order.rend() && assigned > n; ++it)
      if (out[*it] > 0) --out[*it], --assigned;
  }
  return out;
}

ManipulationMatrix plan_binary_flip(std::span<const int> reported, std::span<const int> target) {
  if (reported.size() != 2) throw ValidationError("binary flip rule needs c = 2");
  require_margins(reported, target);
  ManipulationMatrix rho(2, 2);
  if (reported[0] >= target[0]) {
    rho(0, 0) = target[0];
    rho(0, 1) = reported[0] - target[0];
    rho(1, 1) = reported[1];
  } else {
    rho(0, 0) = reported[0];
    rho(1, 0) = target[0] - reported[0];
    rho(1, 1) = reported[1] - rho(1, 0);
  }
  return rho;
}

ManipulationMatrix plan_minimal(std::span<const int> reported, std::span<const int> target) {
  const std::size_t c = reported.size();
  if (c > 3) throw ValidationError("minimal enforcement rule is defined only for c <= 3");
  require_margins(reported, target);
  ManipulationMatrix rho(c, c);
  std::vector<std::size_t> over, under;
  for (std::size_t i = 0; i < c; ++i) {
    rho(i, i) = std::min(reported[i], target[i]);
    if (reported[i] > target[i]) over.push_back(i);
    if (reported[i] < target[i]) under.push_back(i);
  }
  if (over.size() == 1) {
    for (std::size_t j : under) rho(over[0], j) = target[j] - reported[j];
  } else if (under.size() == 1) {
    for (std::size_t i : over) rho(i, under[0]) = reported[i] - target[i];
  }
  return rho;
}

ManipulationMatrix plan_ip(std::span<const int> reported, std::span<const int> target, const RealMatrix& p) {
  require_margins(reported, target);
  if (p.rows() != reported.size() || p.cols() != reported.size())
    throw ValidationError("conditional matrix does not match the signal space");
  return solve_max_transport(p, reported, target).plan;
}

Reports apply_plan(std::span<const int> reports, const ManipulationMatrix& plan, Rng& rng) {
  const std::size_t c = plan.rows();
  const auto hist = histogram(reports, c);
  if (plan.row_sums() != hist) throw ValidationError("enforcement plan rows do not match the report histogram");
  Reports out(reports.begin(), reports.end());
  std::vector<std::vector<int>> positions(c);
  for (std::size_t q = 0; q < reports.size(); ++q) positions[static_cast<std::size_t>(reports[q])].push_back(static_cast<int>(q));
  for (std::size_t i = 0; i < c; ++i) {
    if (plan(i, i) == hist[i]) continue;  // class untouched; no draws consumed
    rng.shuffle(positions[i]);
    std::size_t next = 0;
    for (std::size_t j = 0; j < c; ++j)
      for (int k = 0; k < plan(i, j); ++k) out[static_cast<std::size_t>(positions[i][next++])] = static_cast<int>(j);
  }
  return out;
}

namespace {

void require_phi(const Enforcement& phi, std::size_t n) {
  for (int x : phi)
    if (x < 0) throw ValidationError("enforcement target has a negative count");
  if (static_cast<std::size_t>(std::accumulate(phi.begin(), phi.end(), 0)) != n)
    throw ValidationError("infeasible enforcement: target does not sum to n");
}

}  // namespace

Reports ea_enforce_binary(std::span<const int> a, const Enforcement& phi, Rng& rng) {
  if (phi.size() != 2) throw ValidationError("binary enforcement needs c = 2");
  require_phi(phi, a.size());
  return apply_plan(a, plan_binary_flip(histogram(a, 2), phi), rng);
}

Reports ea_enforce_minimal(std::span<const int> a, const Enforcement& phi, Rng& rng) {
  require_phi(phi, a.size());
  return apply_plan(a, plan_minimal(histogram(a, phi.size()), phi), rng);
}

Reports ea_enforce_ip(std::span<const int> a, const Enforcement& phi, const RealMatrix& p, Rng& rng) {
  require_phi(phi, a.size());
  return apply_plan(a, plan_ip(histogram(a, phi.size()), phi, p), rng);
}

Enforcement resolve_enforcement(EnforcementMode mode, const InfoStructure& info, int n, const Enforcement& explicit_phi) {
  const std::size_t c = info.num_signals();
  if (n < 1) throw ValidationError("enforcement needs n >= 1");
  switch (mode) {
    case EnforcementMode::uniform: {
      const std::vector<double> w(c, 1.0 / static_cast<double>(c));
      return largest_remainder(w, n);
    }
    case EnforcementMode::prior:
      return largest_remainder(info.marginal_a(), n);
    case EnforcementMode::optimal: {
      if (c != 2) throw ValidationError("optimal enforcement is defined only for binary signals");
      const int n0 = optimal_enforcement(info, n).n0;
      return {n0, n - n0};
    }
    case EnforcementMode::explicit_counts: {
      if (explicit_phi.size() != c) throw ValidationError("explicit enforcement needs one count per signal");
      require_phi(explicit_phi, static_cast<std::size_t>(n));
      return explicit_phi;
    }
  }
  throw ValidationError("unknown enforcement mode");
}

Reports apply_strategy(std::span<const int> signals, const Strategy& theta, Rng& rng) {
  const std::size_t c = theta.num_signals();
  require_reports_in_range(signals, c);
  Reports out(signals.size());
  std::vector<std::vector<double>> rows(c);
  for (std::size_t i = 0; i < c; ++i) rows[i] = theta.matrix().row(i);
  for (std::size_t q = 0; q < signals.size(); ++q) out[q] = rng.categorical(rows[static_cast<std::size_t>(signals[q])]);
  return out;
}

// Mechanism -----------------------------------------------------------------

Mechanism::Mechanism(MechanismSpec spec, const InfoStructure& info)
    : spec_(std::move(spec)), c_(info.num_signals()), name_(spec_.name()), info_(info) {
  if (spec_.variant == Variant::partition && spec_.family != Family::ca && spec_.family != Family::ma)
    throw ValidationError("unrounded partition variant exists only for ca and ma");
  if (spec_.family == Family::ea && spec_.variant != Variant::original && spec_.variant != Variant::direct_rounded)
    throw ValidationError("ea supports only the original and direct-round variants");

  switch (spec_.family) {
    case Family::oa:
    case Family::ea:
      bounds_ = {0.0, 1.0};
      break;
    case Family::pts: {
      if (spec_.pts_prior) {
        pts_prior_ = *spec_.pts_prior;
        if (pts_prior_.size() != c_) throw ValidationError("PTS prior needs one entry per signal");
        double s = 0.0;
        for (double r : pts_prior_) {
          if (!(r > 0.0)) throw ValidationError("PTS prior must be strictly positive");
          s += r;
        }
        if (std::abs(s - 1.0) > kExactTol) throw ValidationError("PTS prior does not sum to 1");
      } else {
        if (!info.symmetric()) throw ValidationError("PTS requires a symmetric joint when no prior is given");
        pts_prior_ = info.marginal_a();
        for (std::size_t s = 0; s < c_; ++s)
          if (!(pts_prior_[s] > 0.0))
            throw ValidationError("PTS prior is zero for signal " + std::to_string(s));
      }
      bounds_ = {0.0, 1.0 / *std::min_element(pts_prior_.begin(), pts_prior_.end())};
      break;
    }
    case Family::ca:
      ca_table_ = spec_.ca_agreement ? *spec_.ca_agreement : delta_matrix(info).agreement;
      if (ca_table_.rows() != c_ || ca_table_.cols() != c_) throw ValidationError("CA table has the wrong shape");
      bounds_ = {-1.0, 1.0};
      break;
    case Family::ma:
      ma_table_ = gamma_tensor(info);
      bounds_ = {0.0, 1.0};
      break;
  }
  if (spec_.family == Family::ea && !spec_.custom_planner) {
    if (spec_.rule == EnforcementRule::binary_flip && c_ != 2) throw ValidationError("binary flip rule needs c = 2");
    if (spec_.rule == EnforcementRule::minimal && c_ > 3)
      throw ValidationError("minimal enforcement rule is defined only for c <= 3");
    if (spec_.rule == EnforcementRule::ip) p_ = info.conditional_b_given_a();
  }
  if (spec_.family == Family::ea && spec_.enforcement == EnforcementMode::optimal && c_ != 2)
    throw ValidationError("optimal enforcement is defined only for binary signals");
}

ScoreBounds Mechanism::score_bounds() const {
  if (spec_.variant == Variant::direct_rounded || spec_.variant == Variant::partition_rounded) return {0.0, 1.0};
  return bounds_;
}

Enforcement Mechanism::enforcement_for(int n) const {
  if (spec_.family != Family::ea) throw ValidationError("enforcement applies only to ea");
  return resolve_enforcement(spec_.enforcement, info_, n, spec_.explicit_phi);
}

ManipulationMatrix Mechanism::plan(std::span<const int> reported, std::span<const int> target) const {
  if (spec_.custom_planner) {
    auto rho = spec_.custom_planner(reported, target);
    require_margins(reported, target);
    if (rho.rows() != c_ || rho.cols() != c_) throw ValidationError("custom planner returned the wrong shape");
    for (std::size_t i = 0; i < c_; ++i)
      for (std::size_t j = 0; j < c_; ++j)
        if (rho(i, j) < 0) throw ValidationError("custom planner returned a negative count");
    const auto rows = rho.row_sums(), cols = rho.col_sums();
    if (!std::equal(rows.begin(), rows.end(), reported.begin()) || !std::equal(cols.begin(), cols.end(), target.begin()))
      throw ValidationError("custom planner violates the enforcement margins");
    return rho;
  }
  switch (spec_.rule) {
    case EnforcementRule::binary_flip: return plan_binary_flip(reported, target);
    case EnforcementRule::minimal: return plan_minimal(reported, target);
    case EnforcementRule::ip: return plan_ip(reported, target, p_);
  }
  throw ValidationError("unknown enforcement rule");
}

double Mechanism::individual_score(int aj, int bj, int bk) const {
  switch (spec_.family) {
    case Family::oa:
    case Family::ea:
      return aj == bj ? 1.0 : 0.0;
    case Family::pts:
      return aj == bj ? 1.0 / pts_prior_[static_cast<std::size_t>(aj)] : 0.0;
    case Family::ca:
      return ca_individual(ca_table_, aj, bj, bk);
    case Family::ma:
      return ma_individual(ma_table_, aj, bj, bk);
  }
  return 0.0;
}

double Mechanism::base_score(std::span<const int> a, std::span<const int> b, Rng& rng) const {
  require_same_length(a, b);
  require_reports_in_range(a, c_);
  require_reports_in_range(b, c_);
  switch (spec_.family) {
    case Family::oa: return score_oa(a, b);
    case Family::pts: return score_pts(a, b, pts_prior_);
    case Family::ca:
      return spec_.variant == Variant::partition ? score_ca_partitioned(a, b, ca_table_, default_pairing(static_cast<int>(a.size())))
                                                 : score_ca_original(a, b, ca_table_);
    case Family::ma:
      return spec_.variant == Variant::partition ? score_ma_partitioned(a, b, ma_table_, default_pairing(static_cast<int>(a.size())))
                                                 : score_ma_original(a, b, ma_table_);
    case Family::ea: {
      const auto phi = enforcement_for(static_cast<int>(a.size()));
      const auto rho = plan(histogram(a, c_), phi);
      const auto enforced = apply_plan(a, rho, rng);
      return score_oa(enforced, b);
    }
  }
  return 0.0;
}

double Mechanism::score(std::span<const int> a, std::span<const int> b, Rng& rng) const {
  switch (spec_.variant) {
    case Variant::original:
    case Variant::partition:
      return base_score(a, b, rng);
    case Variant::direct_rounded:
      return direct_round(base_score(a, b, rng), bounds_, rng);
    case Variant::partition_rounded: {
      require_same_length(a, b);
      require_reports_in_range(a, c_);
      require_reports_in_range(b, c_);
      const auto plan = partition_plan(spec_.family, static_cast<int>(a.size()));
      std::vector<double> individual;
      individual.reserve(plan.num_groups);
      for (const auto& g : plan.groups) {
        const auto j = static_cast<std::size_t>(g.front());
        const auto k = static_cast<std::size_t>(g.back());
        individual.push_back(individual_score(a[j], b[j], b[k]));
      }
      return partition_round(individual, bounds_, rng);
    }
  }
  return 0.0;
}

double score_ea(std::span<const int> a, std::span<const int> b, const MechanismSpec& spec, const InfoStructure& info,
                Rng& rng) {
  if (spec.family != Family::ea) throw ValidationError("score_ea needs an ea mechanism spec");
  return Mechanism(spec, info).score(a, b, rng);
}

}  // namespace peerscore
