#pragma once

#include <map>

#include "netpricing/balance.hpp"
#include "netpricing/flow.hpp"

namespace netpricing {

// Edge id -> price. Every edge of the instance is priced, zero-flow edges at
// their marginal at zero.
using PriceVector = std::map<std::string, double>;

enum class EquilibriumKind { optimal_corner, interior_root, constructed_special };

struct EquilibriumSolution {
    PriceVector prices;
    FlowSolution flow;                 // single-commodity flow (commodity 0)
    std::vector<FlowSolution> flows;   // one per commodity when multi-commodity
    double magnitude = 0.0;
    std::vector<int> monopoly_set;
    int M = 0;
    double slack = 0.0;               // λ(x̃) − r(x̃)
    double condition_residual = 0.0;  // |λ(x̃) − r(x̃) − M·x̃·|λ'(x̃)||, interval-aware
    EquilibriumKind kind = EquilibriumKind::optimal_corner;
    double welfare = 0.0;
    bool unverified_theory = false;  // demand outside the supported class
    bool near_kink_boundary = false;
};

// The closed-form prices at a min-cost flow: monopoly edges carry the whole
// consumer surplus split M ways, everything else is priced at the (balanced)
// marginal, so every flow path prices to λ(x). With M = 0 the surplus term is
// skipped. Throws SolverError when λ(x) < r(x).
PriceVector pricing_rule(const MarketInstance& inst, int commodity, const FlowSolution& flow,
                         const DemandFunction& d, const std::vector<int>& monopoly_set,
                         double tol = 1e-9);

// Single-commodity equilibrium: optimal corner when the surplus at x* covers
// the monopoly markup, otherwise the largest root of
// λ(x) − r(x) = M·x·|λ'(x)| found by bracketed bisection.
EquilibriumSolution find_equilibrium(const MarketInstance& inst, double tol = 1e-9);

// Efficient equilibrium for capacity-only networks with power-elastic demand
// x^(-1/r); requires r > M. Unsaturated monopolies are priced λ(x*)/r and the
// rest of the surplus sits on saturated monopolies or on a saturated cut.
EquilibriumSolution capacitated_elastic_equilibrium(const MarketInstance& inst,
                                                    double tol = 1e-9);

// Efficient equilibrium for uniform demand; supports c_e(0) > 0 via the
// ascending route over path bundles.
EquilibriumSolution uniform_demand_equilibrium(const MarketInstance& inst, double tol = 1e-9);

// Multi-source single-sink constructions. Applies the first matching clause:
// series-parallel with no per-source monopolies and c_e(0) = 0; uniform
// demands with leaf sources; or caller-asserted large demand with strictly
// convex costs. Otherwise throws InapplicableError.
EquilibriumSolution multi_source_equilibrium(const MarketInstance& inst, double tol = 1e-9);

}  // namespace netpricing
