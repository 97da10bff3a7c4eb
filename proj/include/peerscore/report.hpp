#pragma once

#include <string>
#include <vector>

#include "peerscore/budget.hpp"
#include "peerscore/config.hpp"
#include "peerscore/dominance.hpp"
#include "peerscore/sensitivity.hpp"

namespace peerscore {

std::string tool_version();

/// Provenance block embedded in every output file: tool, version, command
/// and the full normalized config (which carries the seed).
Json provenance(const std::string& command, const Json& config);

/// Short, locale-independent number text (%.12g).
std::string fmt(double x);

/// CSV: two '#' provenance lines, then axis,mechanism,method,delta,stderr,seed.
std::string sweep_csv(const std::vector<SweepRow>& rows, const Json& prov);
std::string budget_csv(const BudgetTable& table, const Json& prov);

Json distribution_json(const ScoreDistribution& d);
Json dominance_json(const DominanceReport& r);
Json counterexample_json(const CounterexampleReport& r);

/// Pulls the provenance block back out of a CSV or JSON report.
Json extract_provenance(const std::string& text);

}  // namespace peerscore
