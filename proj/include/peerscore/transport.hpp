#pragma once

#include <optional>
#include <span>

#include "peerscore/types.hpp"

namespace peerscore {

/// Min-cost flow on a small dense graph by successive shortest paths
/// (Bellman-Ford on the residual graph, so negative arc costs are fine as
/// long as the initial graph has no negative cycle).
class MinCostFlow {
 public:
  explicit MinCostFlow(int num_nodes);

  /// Returns the arc index.
  int add_arc(int from, int to, int capacity, double cost);

  struct Result {
    int flow = 0;
    double cost = 0.0;
  };

  /// Pushes up to `max_flow` units from source to sink at minimum cost.
  Result solve(int source, int sink, int max_flow);

  int flow_on(int arc) const { return arcs_[static_cast<std::size_t>(2 * arc)].flow; }

 private:
  struct Arc {
    int to;
    int capacity;
    int flow;
    double cost;
  };
  int num_nodes_;
  std::vector<Arc> arcs_;  // arc 2k is forward, 2k+1 its residual twin
  std::vector<std::vector<int>> adjacency_;
};

struct TransportPlan {
  CountMatrix plan;
  double objective = 0.0;
};

/// Integer transportation problem
///   maximize  sum_ij x_ij * profit_ij
///   s.t.      row sums = supply, column sums = demand, x_ij >= 0 integer.
/// The constraint matrix is totally unimodular, so the flow solution is
/// integral. Among optimal plans the lexicographically smallest (row-major)
/// is returned. Throws ValidationError when supply and demand totals differ.
TransportPlan solve_max_transport(const RealMatrix& profit, std::span<const int> supply,
                                  std::span<const int> demand);

}  // namespace peerscore
