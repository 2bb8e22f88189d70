#pragma once

#include <map>

#include "netpricing/market.hpp"

namespace netpricing {

struct ScenarioInfo {
    std::string id;
    std::string summary;
    std::vector<std::string> params;  // accepted parameter names
};

struct ExpectedValue {
    std::string key;
    double value;
    std::string basis;  // how the number is obtained (closed form, derivation)
};

std::vector<ScenarioInfo> scenario_list();

// Builds a registered fixture. Unknown id -> StructureError; parameters
// outside their documented range -> SchemaError.
MarketInstance build_scenario(const std::string& id,
                              const std::map<std::string, double>& params = {});

// The fixture's expected-values table for those parameters (empty for
// under-specified fixtures such as the stub).
std::vector<ExpectedValue> scenario_expected(const std::string& id,
                                             const std::map<std::string, double>& params = {});

}  // namespace netpricing
