#pragma once

#include "netpricing/flow.hpp"

namespace netpricing {

// Node potentials over the residual graph of a min-cost flow: forward arcs
// weighted by the working upper marginal k+, reverse arcs on flow edges by
// -k-. pi_plus[v] is the cheapest way to push an extra unit s->v, pi_minus[v]
// the largest saving from withdrawing a unit v->s. At the sink these coincide
// with the one-sided marginals of the min-cost curve.
struct PotentialState {
    std::vector<double> pi_minus;  // by node index
    std::vector<double> pi_plus;
    std::vector<double> k_minus;  // by edge index
    std::vector<double> k_plus;
    std::vector<char> in_S;  // nodes whose two potentials agree
};

PotentialState node_potentials(const MarketInstance& inst, int commodity,
                               const std::vector<double>& k_minus,
                               const std::vector<double>& k_plus,
                               const std::vector<double>& edge_flow, double tol = 1e-9);

// Convenience overload taking the marginals straight from a flow solution.
PotentialState node_potentials(const MarketInstance& inst, int commodity,
                               const FlowSolution& sol, double tol = 1e-9);

// Per-edge working costs c~ with c-(x_e) <= c~ <= c+(x_e) under which every
// flow path prices to exactly p_star and no unused path is cheaper. Zero-flow
// edges get their marginal at zero. Requires r-(x) <= p_star <= r+(x);
// otherwise throws SolverError.
std::vector<double> balance_prices(const MarketInstance& inst, int commodity,
                                   const FlowSolution& sol, double p_star, double tol = 1e-9);

}  // namespace netpricing
