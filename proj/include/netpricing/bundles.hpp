#pragma once

#include "netpricing/equilibrium.hpp"

namespace netpricing {

struct BundleAllocation {
    std::vector<double> amounts;    // by bundle index
    std::vector<double> item_flow;  // by edge index
    double magnitude = 0.0;
    // Common marginal cost of the consumed bundles when min-cost.
    std::optional<double> certificate;
};

// Cheapest way to serve magnitude x through the bundle family: consumed
// bundles share a marginal cost and no bundle is cheaper at the margin.
BundleAllocation min_cost_allocation(const MarketInstance& market, double x, double tol = 1e-8);

struct AscendingStep {
    double delta = 0.0;        // uniform rise applied in this round
    std::vector<int> active;   // active monopolies before the rise
    std::vector<int> retired;  // items that became inactive after it
    int witness = -1;          // bundle index that tied (-1 on termination)
};

struct AscendingState {
    std::vector<double> prices;           // per item (edge index)
    std::vector<int> active;              // final active monopoly set
    std::vector<int> inactive;            // retirement order
    std::vector<int> witness_bundle;      // per inactive item, tight bundle excluding it
    double consumed_price = 0.0;          // common price of consumed bundles
    double gamma = 0.0;                   // total rise on the still-active monopolies
    std::vector<AscendingStep> steps;
};

// Algorithm: start every item at its marginal, then raise all active virtual
// monopolies uniformly. A monopoly retires the moment some bundle without it
// ties the consumed price; the process stops when that price reaches the
// target (λ at the allocated magnitude) or no active monopoly remains. Rise
// amounts are exact event-driven increments, not simulation steps.
AscendingState ascending_prices(const MarketInstance& market, const BundleAllocation& alloc,
                                double tol = 1e-9);

// Equilibrium over an explicit bundle family: the corner at the optimal
// magnitude when the ascended markup Γ(x*) covers x*·|λ'(x*)|, otherwise a
// bisected interior magnitude inside the active-monopoly region.
EquilibriumSolution bundle_equilibrium(const MarketInstance& market, double tol = 1e-9);

// Uniform buyers with a monotone combinatorial valuation table: allocate to
// maximize v(B) − cost, then ascend until buyer utility hits zero.
EquilibriumSolution combinatorial_uniform_equilibrium(const MarketInstance& market,
                                                      double tol = 1e-9);

// Reframes a graph instance as a bundle market whose bundles are the
// commodity's paths. Throws StructureError past max_paths.
MarketInstance to_bundle_market(const MarketInstance& graph, size_t max_paths = 10000);

}  // namespace netpricing
