#pragma once

#include <json.hpp>

#include "peerscore/budget.hpp"
#include "peerscore/mechanisms.hpp"
#include "peerscore/signal_model.hpp"

namespace peerscore {

using Json = nlohmann::ordered_json;

/// A preset name, {"preset": name}, {"joint": [[...]]} or
/// {"dawid_skene": {"prior": [...], "confusion": [[...]]}}.
InfoStructure structure_from_json(const Json& j);
Json structure_to_json(const InfoStructure& info);

/// A canonical name ("ea-uniform-minimal") or an object
/// {"family": "ea", "variant": ..., "enforcement": "uniform" | [ints],
///  "rule": "binary" | "minimal" | "ip", "prior": [...], "agreement": [[...]]}.
MechanismSpec mechanism_from_json(const Json& j);
Json mechanism_to_json(const MechanismSpec& spec);

CrowdConfig crowd_from_json(const Json& j);
Json crowd_to_json(const CrowdConfig& c);

Json matrix_to_json(const RealMatrix& m);
RealMatrix matrix_from_json(const Json& j);

/// Reads a JSON document from disk. Throws ValidationError.
Json load_json_file(const std::string& path);

}  // namespace peerscore
