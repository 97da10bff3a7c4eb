#include "peerscore/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace peerscore {

MinCostFlow::MinCostFlow(int num_nodes)
    : num_nodes_(num_nodes), adjacency_(static_cast<std::size_t>(num_nodes)) {}

int MinCostFlow::add_arc(int from, int to, int capacity, double cost) {
  const int id = static_cast<int>(arcs_.size() / 2);
  adjacency_[static_cast<std::size_t>(from)].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back({to, capacity, 0, cost});
  adjacency_[static_cast<std::size_t>(to)].push_back(static_cast<int>(arcs_.size()));
  arcs_.push_back({from, 0, 0, -cost});
  return id;
}

MinCostFlow::Result MinCostFlow::solve(int source, int sink, int max_flow) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kEps = 1e-12;
  Result result;
  const auto n = static_cast<std::size_t>(num_nodes_);
  std::vector<double> dist(n);
  std::vector<int> via(n);

  while (result.flow < max_flow) {
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(via.begin(), via.end(), -1);
    dist[static_cast<std::size_t>(source)] = 0.0;
    // Bellman-Ford; at most n-1 relaxation rounds.
    for (std::size_t round = 0; round + 1 < n; ++round) {
      bool changed = false;
      for (std::size_t u = 0; u < n; ++u) {
        if (dist[u] == kInf) continue;
        for (int ai : adjacency_[u]) {
          const Arc& a = arcs_[static_cast<std::size_t>(ai)];
          const auto v = static_cast<std::size_t>(a.to);
          if (a.capacity - a.flow > 0 && dist[u] + a.cost < dist[v] - kEps) {
            dist[v] = dist[u] + a.cost;
            via[v] = ai;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[static_cast<std::size_t>(sink)] == kInf) break;

    int push = max_flow - result.flow;
    for (int v = sink; v != source;) {
      const Arc& a = arcs_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])];
      push = std::min(push, a.capacity - a.flow);
      v = arcs_[static_cast<std::size_t>(via[static_cast<std::size_t>(v)] ^ 1)].to;
    }
    for (int v = sink; v != source;) {
      const auto ai = static_cast<std::size_t>(via[static_cast<std::size_t>(v)]);
      arcs_[ai].flow += push;
      arcs_[ai ^ 1].flow -= push;
      result.cost += push * arcs_[ai].cost;
      v = arcs_[ai ^ 1].to;
    }
    result.flow += push;
  }
  return result;
}

namespace {

// Best objective of the transport problem with some cells pinned.
// pinned(i,j) >= 0 fixes the cell; -1 leaves it free.
std::optional<double> pinned_optimum(const RealMatrix& profit, std::span<const int> supply,
                                     std::span<const int> demand, const CountMatrix& pinned,
                                     CountMatrix* plan_out) {
  const int rows = static_cast<int>(supply.size());
  const int cols = static_cast<int>(demand.size());
  std::vector<int> rest_supply(supply.begin(), supply.end());
  std::vector<int> rest_demand(demand.begin(), demand.end());
  double fixed_value = 0.0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (pinned(i, j) >= 0) {
        rest_supply[static_cast<std::size_t>(i)] -= pinned(i, j);
        rest_demand[static_cast<std::size_t>(j)] -= pinned(i, j);
        fixed_value += pinned(i, j) * profit(i, j);
      }
  for (int s : rest_supply)
    if (s < 0) return std::nullopt;
  for (int d : rest_demand)
    if (d < 0) return std::nullopt;

  const int source = rows + cols;
  const int sink = source + 1;
  MinCostFlow mcf(rows + cols + 2);
  CountMatrix arc_id(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), -1);
  for (int i = 0; i < rows; ++i) mcf.add_arc(source, i, rest_supply[static_cast<std::size_t>(i)], 0.0);
  for (int j = 0; j < cols; ++j) mcf.add_arc(rows + j, sink, rest_demand[static_cast<std::size_t>(j)], 0.0);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (pinned(i, j) < 0)
        arc_id(i, j) = mcf.add_arc(i, rows + j, std::numeric_limits<int>::max() / 4, -profit(i, j));

  const int total = std::accumulate(rest_supply.begin(), rest_supply.end(), 0);
  const auto res = mcf.solve(source, sink, total);
  if (res.flow != total) return std::nullopt;
  if (plan_out) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        (*plan_out)(i, j) = pinned(i, j) >= 0 ? pinned(i, j) : mcf.flow_on(arc_id(i, j));
  }
  return fixed_value - res.cost;
}

}  // namespace

TransportPlan solve_max_transport(const RealMatrix& profit, std::span<const int> supply,
                                  std::span<const int> demand) {
  if (profit.rows() != supply.size() || profit.cols() != demand.size())
    throw ValidationError("transport profit matrix does not match margins");
  for (int s : supply)
    if (s < 0) throw ValidationError("negative supply");
  for (int d : demand)
    if (d < 0) throw ValidationError("negative demand");
  if (std::accumulate(supply.begin(), supply.end(), 0) != std::accumulate(demand.begin(), demand.end(), 0))
    throw ValidationError("infeasible enforcement: report total differs from target total");

  const std::size_t rows = supply.size(), cols = demand.size();
  CountMatrix pinned(rows, cols, -1);
  const auto best = pinned_optimum(profit, supply, demand, pinned, nullptr);
  if (!best) throw ValidationError("transport problem infeasible");
  const double tol = 1e-10 * std::max(1.0, std::abs(*best));

  // Pin cells in row-major order to their smallest optimal value.
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const int cap = std::min(supply[i], demand[j]);
      for (int v = 0; v <= cap; ++v) {
        pinned(i, j) = v;
        const auto value = pinned_optimum(profit, supply, demand, pinned, nullptr);
        if (value && *value >= *best - tol) break;
        if (v == cap) throw ValidationError("transport tie-break failed to find an optimal plan");
      }
    }

  TransportPlan out{CountMatrix(rows, cols), 0.0};
  const auto value = pinned_optimum(profit, supply, demand, pinned, &out.plan);
  out.objective = *value;
  return out;
}

}  // namespace peerscore
