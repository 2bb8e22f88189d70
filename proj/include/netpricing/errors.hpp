#pragma once

#include <stdexcept>
#include <string>

namespace netpricing {

// Malformed instance data (bad JSON, dangling ids, invalid parameters).
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

// Structural preconditions violated (unreachable sink, empty bundle family, ...).
struct StructureError : std::runtime_error {
    explicit StructureError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical solver gave up or was asked for something infeasible.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// A special-regime equilibrium construction does not apply to the instance.
struct InapplicableError : std::runtime_error {
    explicit InapplicableError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace netpricing
