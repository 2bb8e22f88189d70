#pragma once

#include <map>
#include <optional>

#include "netpricing/market.hpp"

namespace netpricing {

// Minimum-cost flow of a prescribed magnitude for one commodity. The returned
// decomposition satisfies the equal-marginal optimality condition: no flow
// path's removal marginal exceeds any path's insertion marginal by more than
// tol. Throws SolverError when x exceeds capacity or convergence fails.
FlowSolution min_cost_flow(const MarketInstance& inst, int commodity, double x,
                           double tol = 1e-8);

// Largest magnitude routable under the hard capacity bounds (infinite when no
// capacity constrains the commodity).
double max_magnitude(const MarketInstance& inst, int commodity);

// One-sided marginals of the min-cost curve R at the given solution:
// left = steepest flow-path marginal (the saving from withdrawing a unit),
// right = cheapest insertion marginal over all paths (+inf at capacity).
double curve_marginal_left(const MarketInstance& inst, const FlowSolution& sol);
double curve_marginal_right(const MarketInstance& inst, int commodity, const FlowSolution& sol);

// Total production cost of a flow.
double flow_cost(const MarketInstance& inst, const FlowSolution& sol);

// Cached view of the min-cost curve R(x) and its marginal r(x) for one
// commodity. Evaluations are memoized; repeated nearby queries reuse the last
// solution as a warm start. Not safe for concurrent mutation.
class MinCostCurve {
public:
    MinCostCurve(const MarketInstance& inst, int commodity, double tol = 1e-8);

    double R(double x);
    double r(double x);        // midpoint of the one-sided marginals
    double r_left(double x);
    double r_right(double x);
    const FlowSolution& solution(double x);
    double tolerance() const { return tol_; }

private:
    const MarketInstance& inst_;
    int commodity_;
    double tol_;
    std::map<double, FlowSolution> cache_;
    std::optional<FlowSolution> warm_;

    const FlowSolution& solve(double x);
};

struct OptimalMagnitude {
    double x_star = 0.0;
    FlowSolution flow;
};

// Welfare-maximizing magnitude: the crossing of λ with the marginal interval
// [r⁻, r⁺], or the population/capacity corner when λ stays above it.
OptimalMagnitude optimal_magnitude(const MarketInstance& inst, int commodity, MinCostCurve& curve);
OptimalMagnitude optimal_magnitude(const MarketInstance& inst, int commodity = 0,
                                   double tol = 1e-8);

// Welfare-maximizing joint flow for every commodity at once (costs depend on
// the total edge flow). Returns one decomposition per commodity. At the
// optimum each commodity's used paths share a common marginal that brackets
// λ_i(x_i), unless x_i sits at a population or capacity corner.
std::vector<FlowSolution> multi_commodity_optimum(const MarketInstance& inst, double tol = 1e-8);

}  // namespace netpricing
