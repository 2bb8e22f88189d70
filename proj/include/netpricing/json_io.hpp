#pragma once

#include <json.hpp>

#include "netpricing/efficiency.hpp"
#include "netpricing/verify.hpp"

namespace netpricing {

using json = nlohmann::json;

// Instance schema:
// {"mode":"graph"|"bundle", "nodes":[...],
//  "edges":[{"id","from","to","cost":{"kind",...}}],
//  "commodities":[{"source","sink","demand":{"kind",...}}],
//  "bundles":[["e1","e2"],...], "valuations":[{"set":[...],"value":v}],
//  "flags":["general-market","large-demand"]}
// Violations throw SchemaError naming the offending field path.
MarketInstance parse_instance(const json& j);
MarketInstance load_instance(const std::string& path);
json instance_to_json(const MarketInstance& inst);

json solution_to_json(const MarketInstance& inst, const EquilibriumSolution& sol);

struct ParsedSolution {
    PriceVector prices;
    std::vector<FlowSolution> flows;
    double magnitude = 0.0;
};
ParsedSolution parse_solution(const MarketInstance& inst, const json& j);

json report_to_json(const VerificationReport& rep);
json efficiency_to_json(const EfficiencyReport& rep);

// Deterministic serialization: sorted keys (nlohmann's object order) and
// shortest round-trip floats; used for every emitted artifact.
std::string canonical_dump(const json& j);

}  // namespace netpricing
