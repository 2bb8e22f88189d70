#include "netpricing/efficiency.hpp"

#include <cmath>

#include "netpricing/bundles.hpp"
#include "netpricing/errors.hpp"
#include "netpricing/scenarios.hpp"

namespace netpricing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double production_cost(const MarketInstance& inst, const std::vector<double>& xs) {
    double c = 0;
    for (size_t e = 0; e < inst.edges.size(); ++e) c += inst.edges[e].cost.value(xs[e]);
    return c;
}

// Optimal welfare of a bundle-mode instance: bisect λ against the removal
// marginal of the min-cost allocation.
double bundle_optimal_welfare(const MarketInstance& inst, double tol) {
    const DemandFunction& d = inst.commodities.at(0).demand;
    auto r_left = [&](double x) {
        if (x <= 0) return 0.0;
        BundleAllocation a = min_cost_allocation(inst, x, tol);
        double r = 0;
        for (size_t b = 0; b < a.amounts.size(); ++b) {
            if (a.amounts[b] <= 1e-13) continue;
            double m = 0;
            for (int e : inst.bundles[b]) m += inst.edges[e].cost.marginal_left(a.item_flow[e]);
            r = std::max(r, m);
        }
        return r;
    };
    double x = d.T;
    if (d.value(d.T) < r_left(d.T)) {
        double lo = 0, hi = d.T;
        for (int it = 0; it < 100; ++it) {
            double mid = 0.5 * (lo + hi);
            (d.value(mid) >= r_left(mid) ? lo : hi) = mid;
        }
        x = lo;
    }
    BundleAllocation a = min_cost_allocation(inst, x, tol);
    return d.cumulative_value(x) - production_cost(inst, a.item_flow);
}

}  // namespace

double welfare(const MarketInstance& inst, const FlowSolution& flow) {
    const DemandFunction& d = inst.commodities.at(0).demand;
    return d.cumulative_value(std::min(flow.magnitude, d.T)) - flow_cost(inst, flow);
}

double welfare(const MarketInstance& inst, const std::vector<FlowSolution>& flows) {
    std::vector<double> totals(inst.edges.size(), 0.0);
    double value = 0;
    for (size_t k = 0; k < flows.size(); ++k) {
        const DemandFunction& d = inst.commodities.at(k).demand;
        value += d.cumulative_value(std::min(flows[k].magnitude, d.T));
        for (size_t e = 0; e < totals.size(); ++e) totals[e] += flows[k].edge_flow[e];
    }
    return value - production_cost(inst, totals);
}

const char* bound_class_name(BoundClass cls) {
    switch (cls) {
        case BoundClass::uniform: return "uniform";
        case BoundClass::concave: return "concave";
        case BoundClass::mhr: return "mhr";
        case BoundClass::f_p: return "f_p";
        case BoundClass::f_ced: return "f_ced";
        case BoundClass::f_exp: return "f_exp";
        case BoundClass::xlp_monotone: return "xlp_monotone";
        case BoundClass::none: return "none";
    }
    return "none";
}

double theoretical_bound(BoundClass cls, int M, double alpha) {
    if (M < 0) throw SchemaError("monopoly count must be non-negative");
    if (M == 0) return 1.0;
    switch (cls) {
        case BoundClass::uniform:
            return 1.0;
        case BoundClass::concave:
            return 1.0 + M / 2.0;
        case BoundClass::mhr:
            return 1.0 + M;
        case BoundClass::f_p:
            if (alpha <= 0) throw SchemaError("bound needs alpha > 0");
            return std::pow(1.0 + M * alpha, 1.0 / alpha);
        case BoundClass::f_ced:
            if (alpha <= 0) throw SchemaError("bound needs alpha > 0");
            return 1.0 + M * alpha / (alpha + 1.0);
        case BoundClass::f_exp:
            if (alpha <= 0) throw SchemaError("bound needs alpha > 0");
            return std::exp((double)M / alpha);
        case BoundClass::xlp_monotone:
            if (M == 1) return kInf;
            return (double)M / (M - 1.0) * std::exp((double)M);
        case BoundClass::none:
            return kInf;
    }
    return kInf;
}

BoundClass bound_class_for(const DemandFunction& d) {
    switch (d.kind) {
        case DemandKind::uniform: return BoundClass::uniform;
        case DemandKind::affine: return BoundClass::concave;
        case DemandKind::poly_concave: return BoundClass::f_p;
        case DemandKind::ced: return BoundClass::f_ced;
        case DemandKind::exponential: return BoundClass::mhr;
        case DemandKind::log_inverse: return BoundClass::f_exp;
        case DemandKind::power_elastic: return BoundClass::none;
        case DemandKind::piecewise_linear: break;
    }
    DemandClassTags tags = d.classify();
    if (tags.uniform) return BoundClass::uniform;
    if (tags.concave) return BoundClass::concave;
    if (tags.mhr) return BoundClass::mhr;
    return BoundClass::none;
}

EfficiencyReport efficiency_ratio(const MarketInstance& inst, const EquilibriumSolution& eq,
                                  double tol) {
    EfficiencyReport rep;
    if (!eq.flows.empty()) {
        rep.welfare_eq = welfare(inst, eq.flows);
        rep.welfare_opt = welfare(inst, multi_commodity_optimum(inst, tol));
        rep.bound_class = BoundClass::none;
    } else if (inst.mode == MarketMode::bundle) {
        rep.welfare_eq = eq.welfare;
        rep.welfare_opt = bundle_optimal_welfare(inst, tol);
        rep.bound_class = bound_class_for(inst.commodities.at(0).demand);
    } else {
        rep.welfare_eq = welfare(inst, eq.flow);
        OptimalMagnitude opt = optimal_magnitude(inst, 0, tol);
        rep.welfare_opt = welfare(inst, opt.flow);
        rep.bound_class = bound_class_for(inst.commodities.at(0).demand);
    }
    if (rep.welfare_eq <= 0)
        throw SolverError("degenerate equilibrium: non-positive welfare");
    rep.eta = rep.welfare_opt / rep.welfare_eq;
    rep.M = eq.M;
    const DemandFunction& d = inst.commodities.at(0).demand;
    if (rep.bound_class == BoundClass::f_p || rep.bound_class == BoundClass::f_ced ||
        rep.bound_class == BoundClass::f_exp)
        rep.alpha = d.alpha;
    rep.bound = theoretical_bound(rep.bound_class, rep.M, rep.alpha);
    rep.bound_name = bound_class_name(rep.bound_class);
    if (rep.bound_class == BoundClass::xlp_monotone && rep.M >= 2)
        rep.secondary_bound = (double)rep.M / (rep.M - 1.0) * std::exp((double)rep.M - 1.0);
    rep.slackness = rep.bound - rep.eta;
    return rep;
}

std::vector<SweepRow> sweep(const std::string& scenario_id, int m_lo, int m_hi, double alpha,
                            double tol) {
    std::vector<SweepRow> rows;
    for (int M = m_lo; M <= m_hi; ++M) {
        SweepRow row;
        row.M = M;
        row.alpha = alpha;
        try {
            std::map<std::string, double> params{{"M", (double)M}};
            if (alpha > 0) params["alpha"] = alpha;
            if (scenario_id == "capacitated") params["r"] = M + 1.0;
            MarketInstance inst = build_scenario(scenario_id, params);
            EquilibriumSolution eq = scenario_id == "capacitated"
                                         ? capacitated_elastic_equilibrium(inst, tol)
                                         : find_equilibrium(inst, tol);
            OptimalMagnitude opt = optimal_magnitude(inst, 0, std::min(tol, 1e-9));
            EfficiencyReport rep = efficiency_ratio(inst, eq);
            row.x_star = opt.x_star;
            row.x_eq = eq.magnitude;
            row.welfare_opt = rep.welfare_opt;
            row.welfare_eq = rep.welfare_eq;
            row.eta = rep.eta;
            row.bound = rep.bound;
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace netpricing
