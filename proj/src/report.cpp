#include "peerscore/report.hpp"

#include <cstdio>
#include <sstream>

#ifndef PEERSCORE_VERSION
#define PEERSCORE_VERSION "0.0.0"
#endif

namespace peerscore {

std::string tool_version() { return PEERSCORE_VERSION; }

Json provenance(const std::string& command, const Json& config) {
  Json p;
  p["tool"] = "peerscore";
  p["version"] = tool_version();
  p["command"] = command;
  p["config"] = config;
  return p;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace {

std::string csv_header(const Json& prov) {
  return "# " + prov.at("tool").get<std::string>() + " " + prov.at("version").get<std::string>() + " " +
         prov.at("command").get<std::string>() + "\n# provenance: " + prov.dump() + "\n";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

Json count_matrix_json(const CountMatrix& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(m.row(i));
  return out;
}

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows, const Json& prov) {
  std::ostringstream out;
  out << csv_header(prov) << "axis,mechanism,method,delta,stderr,seed,note\n";
  for (const auto& r : rows) {
    out << fmt(r.axis) << ',' << csv_field(r.mechanism) << ',' << r.method << ',' << fmt(r.delta) << ','
        << (r.stderr_delta ? fmt(*r.stderr_delta) : "") << ',' << (r.seed ? std::to_string(*r.seed) : "") << ','
        << csv_field(r.note) << '\n';
  }
  return out.str();
}

std::string budget_csv(const BudgetTable& table, const Json& prov) {
  std::ostringstream out;
  out << csv_header(prov)
      << "mechanism,e,scheme,elicitable,a,b,c_thres,t,mean_score,std_score,gradient,gradient_stderr,sensitivity,"
         "expected_payment,total_payment,min_payment,individually_rational,note\n";
  for (const auto& row : table.rows) {
    const auto& f = row.fit;
    out << csv_field(f.mechanism) << ',' << fmt(f.e) << ',' << scheme_name(table.scheme) << ',' << f.elicitable << ','
        << fmt(f.scheme.a) << ',' << fmt(f.scheme.b) << ',' << fmt(f.scheme.c_thres) << ',' << fmt(f.scheme.t) << ','
        << fmt(f.mean_score) << ',' << fmt(f.std_score) << ',' << fmt(f.gradient) << ',' << fmt(f.gradient_stderr)
        << ',' << fmt(f.sensitivity) << ',' << fmt(f.expected_payment) << ',' << fmt(f.total_payment) << ','
        << fmt(f.min_payment) << ',' << f.individually_rational << ','
        << csv_field(row.error.empty() ? f.note : "error: " + row.error) << '\n';
  }
  for (std::size_t k = 0; k < table.efforts.size(); ++k) {
    const auto& s = table.spearman_by_effort[k];
    out << "# spearman(sensitivity,total_payment) e=" << fmt(table.efforts[k]) << ": " << (s ? fmt(*s) : "n/a")
        << '\n';
  }
  return out.str();
}

Json distribution_json(const ScoreDistribution& d) {
  return {{"support", d.support()}, {"probs", d.probs()}, {"mean", d.mean()}};
}

Json dominance_json(const DominanceReport& r) {
  Json out;
  out["mechanism"] = r.mechanism;
  out["n"] = r.n;
  out["certified"] = r.certified;
  out["searched_class"] = r.searched_class;
  out["candidates"] = r.candidates;
  if (r.witness) {
    const auto& w = *r.witness;
    Json wj;
    if (w.strategy) {
      wj["kind"] = "strategy";
      wj["strategy"] = matrix_to_json(w.strategy->matrix());
      wj["description"] = w.strategy->describe();
    } else if (w.manipulation) {
      wj["kind"] = "manipulation";
      wj["histogram"] = w.histogram;
      wj["manipulation"] = count_matrix_json(*w.manipulation);
    }
    wj["threshold"] = w.threshold;
    wj["first_threshold"] = w.first_threshold;
    wj["gap"] = w.gap;
    out["witness"] = wj;
  } else {
    out["witness"] = nullptr;
  }
  out["truthful"] = distribution_json(r.truthful);
  out["truthful_in_expectation"] = r.truthful_in_expectation;
  out["truthful_mean"] = r.truthful_mean;
  out["best_deviation_mean"] = r.best_deviation_mean;
  if (r.best_deviation) out["best_deviation"] = r.best_deviation->describe();
  return out;
}

Json counterexample_json(const CounterexampleReport& r) {
  Json out;
  out["target"] = r.target;
  out["structure"] = r.structure;
  out["dominance"] = dominance_json(r.dominance);
  Json values = Json::object();
  for (const auto& [k, v] : r.values) values[k] = v;
  out["values"] = values;
  return out;
}

Json extract_provenance(const std::string& text) {
  const std::string key = "# provenance: ";
  const auto pos = text.find(key);
  try {
    if (pos != std::string::npos) {
      const auto end = text.find('\n', pos);
      return Json::parse(text.substr(pos + key.size(), end - pos - key.size()));
    }
    const Json j = Json::parse(text);
    if (j.is_object() && j.contains("provenance")) return j.at("provenance");
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("unreadable report: ") + e.what());
  }
  throw ValidationError("report carries no provenance block");
}

}  // namespace peerscore
