#include "peerscore/config.hpp"

#include <fstream>
#include <sstream>

namespace peerscore {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad ") + what + ": " + e.what());
  }
}

std::vector<double> vector_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of numbers");
  return j.get<std::vector<double>>();
}

Variant parse_variant(const std::string& s) {
  if (s == "original") return Variant::original;
  if (s == "direct_rounded" || s == "direct-round") return Variant::direct_rounded;
  if (s == "partition_rounded" || s == "partition-round") return Variant::partition_rounded;
  if (s == "partition") return Variant::partition;
  throw ValidationError("unknown variant '" + s + "'");
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::original: return "original";
    case Variant::direct_rounded: return "direct_rounded";
    case Variant::partition_rounded: return "partition_rounded";
    case Variant::partition: return "partition";
  }
  return "original";
}

const char* rule_name(EnforcementRule r) {
  switch (r) {
    case EnforcementRule::binary_flip: return "binary";
    case EnforcementRule::minimal: return "minimal";
    case EnforcementRule::ip: return "ip";
  }
  return "binary";
}

}  // namespace

Json matrix_to_json(const RealMatrix& m) {
  Json out = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(m.row(i));
  return out;
}

RealMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ValidationError("expected a non-empty array of rows");
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const std::size_t cols = rows.front().size();
  RealMatrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ValidationError("ragged matrix");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = rows[i][k];
  }
  return m;
}

InfoStructure structure_from_json(const Json& j) {
  return guarded("structure", [&]() -> InfoStructure {
    if (j.is_string()) return preset(j.get<std::string>());
    if (!j.is_object()) throw ValidationError("structure must be a preset name or an object");
    if (j.contains("preset")) return preset(j.at("preset").get<std::string>());
    if (j.contains("joint")) return InfoStructure(matrix_from_json(j.at("joint")));
    if (j.contains("dawid_skene")) {
      const auto& d = j.at("dawid_skene");
      DawidSkeneModel model{vector_from_json(d.at("prior")), matrix_from_json(d.at("confusion"))};
      return joint_from_dawid_skene(model);
    }
    throw ValidationError("structure needs 'preset', 'joint' or 'dawid_skene'");
  });
}

Json structure_to_json(const InfoStructure& info) {
  Json out;
  if (const auto& m = info.source_model()) {
    out["dawid_skene"] = {{"prior", m->prior}, {"confusion", matrix_to_json(m->confusion)}};
  } else {
    out["joint"] = matrix_to_json(info.joint());
  }
  return out;
}

MechanismSpec mechanism_from_json(const Json& j) {
  return guarded("mechanism", [&]() -> MechanismSpec {
    if (j.is_string()) return parse_mechanism(j.get<std::string>());
    if (!j.is_object()) throw ValidationError("mechanism must be a name or an object");
    MechanismSpec spec = j.contains("name") ? parse_mechanism(j.at("name").get<std::string>())
                                            : parse_mechanism(j.at("family").get<std::string>());
    if (j.contains("variant")) spec.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("enforcement")) {
      const auto& e = j.at("enforcement");
      if (e.is_array()) {
        spec.enforcement = EnforcementMode::explicit_counts;
        spec.explicit_phi = e.get<std::vector<int>>();
      } else {
        const auto s = e.get<std::string>();
        if (s == "uniform") spec.enforcement = EnforcementMode::uniform;
        else if (s == "prior") spec.enforcement = EnforcementMode::prior;
        else if (s == "optimal") spec.enforcement = EnforcementMode::optimal;
        else throw ValidationError("unknown enforcement '" + s + "'");
      }
    }
    if (j.contains("rule")) {
      const auto s = j.at("rule").get<std::string>();
      if (s == "binary") spec.rule = EnforcementRule::binary_flip;
      else if (s == "minimal") spec.rule = EnforcementRule::minimal;
      else if (s == "ip") spec.rule = EnforcementRule::ip;
      else throw ValidationError("unknown enforcement rule '" + s + "'");
    }
    if (j.contains("prior")) spec.pts_prior = vector_from_json(j.at("prior"));
    if (j.contains("agreement")) {
      const auto rows = j.at("agreement").get<std::vector<std::vector<int>>>();
      CountMatrix t(rows.size(), rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw ValidationError("agreement table must be square");
        for (std::size_t b = 0; b < rows.size(); ++b) t(r, b) = rows[r][b];
      }
      spec.ca_agreement = t;
    }
    if (spec.family != Family::ea && (j.contains("enforcement") || j.contains("rule")))
      throw ValidationError("enforcement fields apply only to ea");
    return spec;
  });
}

Json mechanism_to_json(const MechanismSpec& spec) {
  if (spec.custom_planner) throw ValidationError("custom planners cannot be serialized");
  Json out;
  out["name"] = spec.name();
  out["variant"] = variant_name(spec.variant);
  if (spec.family == Family::ea) {
    switch (spec.enforcement) {
      case EnforcementMode::uniform: out["enforcement"] = "uniform"; break;
      case EnforcementMode::prior: out["enforcement"] = "prior"; break;
      case EnforcementMode::optimal: out["enforcement"] = "optimal"; break;
      case EnforcementMode::explicit_counts: out["enforcement"] = spec.explicit_phi; break;
    }
    out["rule"] = rule_name(spec.rule);
  }
  if (spec.pts_prior) out["prior"] = *spec.pts_prior;
  if (spec.ca_agreement) {
    Json t = Json::array();
    for (std::size_t r = 0; r < spec.ca_agreement->rows(); ++r) t.push_back(spec.ca_agreement->row(r));
    out["agreement"] = t;
  }
  return out;
}

CrowdConfig crowd_from_json(const Json& j) {
  return guarded("crowd", [&]() {
    CrowdConfig c;
    c.num_agents = j.value("num_agents", c.num_agents);
    c.num_tasks = j.value("num_tasks", c.num_tasks);
    c.tasks_per_agent = j.value("tasks_per_agent", c.tasks_per_agent);
    c.agents_per_task = j.value("agents_per_task", c.agents_per_task);
    c.validate();
    return c;
  });
}

Json crowd_to_json(const CrowdConfig& c) {
  return {{"num_agents", c.num_agents},
          {"num_tasks", c.num_tasks},
          {"tasks_per_agent", c.tasks_per_agent},
          {"agents_per_task", c.agents_per_task}};
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace peerscore
