#pragma once

#include "netpricing/equilibrium.hpp"

namespace netpricing {

struct CheckResult {
    bool pass = true;
    std::string witness;  // reproducible failure description, empty on pass
    double margin = 0.0;  // signed: how far past the tolerance the worst case is
};

struct VerificationReport {
    CheckResult buyer;
    CheckResult seller;
    CheckResult local_dominance;
    CheckResult properties;
    double tol = 1e-6;
    bool pass = false;  // conjunction of the four checks
};

// Buyers route only on cheapest paths and the cheapest price meets λ(x),
// with corner clauses at x = 0 and x = T. Works per commodity; bundle-mode
// instances use their bundle family as the path set.
CheckResult check_buyer_best_response(const MarketInstance& inst, const PriceVector& prices,
                                      const std::vector<FlowSolution>& flows, double tol = 1e-6);

// Unilateral price-deviation scan per edge: log-spaced grid plus analytic
// candidates (undercuts, first-order points); the induced demand gives the
// deviator every tie. Pass iff no deviation improves profit beyond tol.
CheckResult check_seller_stability(const MarketInstance& inst, const PriceVector& prices,
                                   const std::vector<FlowSolution>& flows, int grid = 1000,
                                   double tol = 1e-6);

// Shift eps of flow between every ordered pair of decomposition paths at
// fixed prices; no seller's profit may rise. Vacuous with fewer than 2 paths.
CheckResult check_local_dominance(const MarketInstance& inst, const PriceVector& prices,
                                  const std::vector<FlowSolution>& flows, double eps,
                                  double tol = 1e-6);

// Zero-flow edges priced at their marginal at zero; every price covers the
// edge's marginal cost.
CheckResult check_properties(const MarketInstance& inst, const PriceVector& prices,
                             const std::vector<FlowSolution>& flows, double tol = 1e-6);

VerificationReport check_all(const MarketInstance& inst, const PriceVector& prices,
                             const std::vector<FlowSolution>& flows, double tol = 1e-6,
                             int grid = 1000);

// Single-commodity conveniences.
VerificationReport check_all(const MarketInstance& inst, const PriceVector& prices,
                             const FlowSolution& flow, double tol = 1e-6, int grid = 1000);
VerificationReport check_all(const MarketInstance& inst, const EquilibriumSolution& sol,
                             double tol = 1e-6, int grid = 1000);

}  // namespace netpricing
