#include "netpricing/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netpricing/bundles.hpp"
#include "netpricing/errors.hpp"

namespace netpricing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lam_at(const DemandFunction& d, double x) { return d.value(std::min(x, d.T)); }

double welfare_of(const MarketInstance& inst, const DemandFunction& d, const FlowSolution& sol) {
    return d.cumulative_value(std::min(sol.magnitude, d.T)) - flow_cost(inst, sol);
}

// Balanced per-edge base costs making every flow path price to p_base, plus a
// uniform markup on the monopoly set.
PriceVector assemble_prices(const MarketInstance& inst, int commodity, const FlowSolution& flow,
                            double p_base, double p_bar, const std::vector<int>& monos,
                            double tol) {
    std::vector<double> base = balance_prices(inst, commodity, flow, p_base, std::max(tol, 1e-7));
    std::vector<char> is_mono(inst.edges.size(), 0);
    for (int m : monos) is_mono[m] = 1;
    PriceVector out;
    for (size_t e = 0; e < inst.edges.size(); ++e)
        out[inst.edges[e].id] = base[e] + (is_mono[e] ? p_bar : 0.0);
    return out;
}

}  // namespace

PriceVector pricing_rule(const MarketInstance& inst, int commodity, const FlowSolution& flow,
                         const DemandFunction& d, const std::vector<int>& monopoly_set,
                         double tol) {
    double lam = lam_at(d, flow.magnitude);
    double rl = curve_marginal_left(inst, flow);
    double rr = curve_marginal_right(inst, commodity, flow);
    double r_mid = std::isinf(rr) ? rl : 0.5 * (rl + rr);
    double scale = std::max(1.0, std::abs(lam));
    if (lam < r_mid - 100 * tol * scale)
        throw SolverError("negative slack: buyer value below the marginal cost");
    size_t M = monopoly_set.size();
    double p_bar = M > 0 ? (lam - r_mid) / (double)M : 0.0;
    double p_base = std::clamp(r_mid, rl, std::isinf(rr) ? r_mid : rr);
    return assemble_prices(inst, commodity, flow, p_base, p_bar, monopoly_set, tol);
}

EquilibriumSolution find_equilibrium(const MarketInstance& inst, double tol) {
    if (inst.mode != MarketMode::graph || !inst.single_commodity())
        throw StructureError("equilibrium search needs a single-commodity graph instance");
    const DemandFunction& d = inst.commodities[0].demand;
    DemandClassTags tags = d.classify();

    MinCostCurve curve(inst, 0, std::min(tol, 1e-9));
    OptimalMagnitude opt = optimal_magnitude(inst, 0, curve);
    double x_star = opt.x_star;
    if (x_star <= 0) throw SolverError("only the trivial (zero-trade) equilibrium exists");

    std::vector<int> monos = monopolies(inst, 0);
    int M = (int)monos.size();

    auto d_lo = [&](double x) {
        double a = std::abs(d.derivative(x, Side::left));
        double b = std::abs(d.derivative(x, Side::right));
        return std::min(a, b);
    };
    auto d_hi = [&](double x) {
        double a = std::abs(d.derivative(x, Side::left));
        double b = std::abs(d.derivative(x, Side::right));
        return std::max(a, b);
    };

    auto build = [&](double x, EquilibriumKind kind, double residual) {
        const FlowSolution& flow = curve.solution(x);
        double lam = lam_at(d, x);
        double rl = curve_marginal_left(inst, flow);
        double rr = curve_marginal_right(inst, 0, flow);
        double r_mid = std::isinf(rr) ? rl : 0.5 * (rl + rr);
        double p_bar = 0.0, p_base;
        if (M > 0) {
            p_bar = (lam - r_mid) / M;
            if (kind == EquilibriumKind::interior_root)
                p_bar = std::clamp(p_bar, x * d_lo(x), x * d_hi(x));
            p_base = lam - M * p_bar;
        } else {
            p_base = lam;
        }
        p_base = std::clamp(p_base, std::min(rl, p_base), std::isinf(rr) ? p_base : rr);
        p_base = std::max(p_base, 0.0);
        if (p_base < rl) p_base = rl;
        if (!std::isinf(rr) && p_base > rr) p_base = rr;

        EquilibriumSolution sol;
        sol.prices = assemble_prices(inst, 0, flow, p_base, p_bar, monos, tol);
        sol.flow = flow;
        sol.magnitude = x;
        sol.monopoly_set = monos;
        sol.M = M;
        sol.slack = lam - r_mid;
        sol.condition_residual = residual;
        sol.kind = kind;
        sol.welfare = welfare_of(inst, d, flow);
        sol.unverified_theory = !tags.mpe;
        return sol;
    };

    // corner: the whole surplus at the optimum covers the monopoly markup.
    // The comparison is relative to the terms themselves: both sides can be
    // far below any absolute tolerance (flat demand tails), and an absolute
    // slop would accept a corner every seller deviates from.
    {
        double lam = lam_at(d, x_star);
        double rl = curve.r_left(x_star);
        double need = M * x_star * d_lo(x_star);
        double cband = tol * std::max(std::abs(lam - rl), need);
        if (lam - rl >= need - cband)
            return build(x_star, EquilibriumKind::optimal_corner, 0.0);
    }

    // interior: bracket the root of λ - r = M·x·|λ'| on a geometric grid,
    // largest root first
    auto sign_of = [&](double x) {
        double lam = lam_at(d, x);
        double rl = curve.r_left(x);
        double rr = curve.r_right(x);
        double a_hi = lam - rl - M * x * d_lo(x);
        double a_lo = std::isinf(rr) ? -kInf : lam - rr - M * x * d_hi(x);
        double band = tol * std::max({lam, std::abs(rl), M * x * d_hi(x), 1e-300});
        if (a_lo > band) return +1;
        if (a_hi < -band) return -1;
        return 0;
    };

    double hi = x_star, lo = -1;
    for (int k = 1; k <= 64; ++k) {
        double xk = x_star * std::ldexp(1.0, -k);
        int f = sign_of(xk);
        if (f == 0) return build(xk, EquilibriumKind::interior_root, 0.0);
        if (f > 0) {
            lo = xk;
            break;
        }
        hi = xk;
    }
    if (lo < 0)
        throw SolverError(
            "no equilibrium magnitude: the monopoly condition has no root in (0, x*]");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        int f = sign_of(mid);
        if (f == 0) return build(mid, EquilibriumKind::interior_root, 0.0);
        (f > 0 ? lo : hi) = mid;
        if (hi - lo <= 1e-16 * x_star) break;
    }
    double x = 0.5 * (lo + hi);
    double lam = lam_at(d, x);
    double resid = std::abs(lam - curve.r(x) - M * x * d_lo(x));
    return build(x, EquilibriumKind::interior_root, resid);
}

EquilibriumSolution capacitated_elastic_equilibrium(const MarketInstance& inst, double tol) {
    if (!inst.single_commodity())
        throw StructureError("capacitated construction needs a single commodity");
    const DemandFunction& d = inst.commodities[0].demand;
    if (d.kind != DemandKind::power_elastic)
        throw InapplicableError("capacitated construction needs power-elastic demand");
    for (const Edge& e : inst.edges)
        if (e.cost.kind != CostKind::zero && e.cost.kind != CostKind::capacity)
            throw InapplicableError("capacitated construction needs free-up-to-capacity costs");

    std::vector<int> monos = monopolies(inst, 0);
    int M = (int)monos.size();
    if (d.r <= (double)M)
        throw InapplicableError("demand elasticity must exceed the monopoly count");

    double x_star = std::min(d.T, max_magnitude(inst, 0));
    FlowSolution flow = min_cost_flow(inst, 0, x_star, tol);
    double lam = d.value(std::min(x_star, d.T));

    std::vector<char> saturated(inst.edges.size(), 0);
    for (size_t e = 0; e < inst.edges.size(); ++e) {
        double cap = inst.edges[e].cost.capacity_limit();
        if (!std::isinf(cap) && flow.edge_flow[e] >= cap - 1e-9) saturated[e] = 1;
    }

    PriceVector prices;
    for (const Edge& e : inst.edges) prices[e.id] = 0.0;
    std::vector<int> sat_monos, unsat_monos;
    for (int m : monos) (saturated[m] ? sat_monos : unsat_monos).push_back(m);
    for (int m : unsat_monos) prices[inst.edges[m].id] = lam / d.r;
    double remaining = lam - (double)unsat_monos.size() * lam / d.r;
    if (!sat_monos.empty()) {
        for (int m : sat_monos) prices[inst.edges[m].id] = remaining / (double)sat_monos.size();
    } else if (remaining > tol) {
        // place the rest on a saturated cut: edges leaving the residual
        // reachable set of the source
        int s = inst.node_index(inst.commodities[0].source);
        std::vector<char> reach(inst.nodes.size(), 0);
        reach[s] = 1;
        bool grew = true;
        while (grew) {
            grew = false;
            for (size_t e = 0; e < inst.edges.size(); ++e) {
                int u = inst.node_index(inst.edges[e].from);
                int v = inst.node_index(inst.edges[e].to);
                if (reach[u] && !reach[v] && !saturated[e]) {
                    reach[v] = 1;
                    grew = true;
                }
                if (reach[v] && !reach[u] && flow.edge_flow[e] > 1e-12) {
                    reach[u] = 1;
                    grew = true;
                }
            }
        }
        for (size_t e = 0; e < inst.edges.size(); ++e) {
            int u = inst.node_index(inst.edges[e].from);
            int v = inst.node_index(inst.edges[e].to);
            if (reach[u] && !reach[v]) prices[inst.edges[e].id] += remaining;
        }
    }

    EquilibriumSolution sol;
    sol.prices = std::move(prices);
    sol.flow = std::move(flow);
    sol.magnitude = x_star;
    sol.monopoly_set = monos;
    sol.M = M;
    sol.slack = lam;
    sol.kind = EquilibriumKind::constructed_special;
    sol.welfare = welfare_of(inst, d, sol.flow);
    return sol;
}

EquilibriumSolution uniform_demand_equilibrium(const MarketInstance& inst, double tol) {
    if (!inst.single_commodity())
        throw StructureError("uniform construction needs a single commodity");
    const DemandFunction& d = inst.commodities[0].demand;
    if (d.kind != DemandKind::uniform)
        throw InapplicableError("construction needs uniform demand");

    bool zero_at_origin = true;
    for (const Edge& e : inst.edges)
        if (e.cost.marginal_at_zero() > 0) zero_at_origin = false;

    MinCostCurve curve(inst, 0, std::min(tol, 1e-9));
    OptimalMagnitude opt = optimal_magnitude(inst, 0, curve);
    double x_star = opt.x_star;
    if (x_star <= 0) throw SolverError("only the trivial (zero-trade) equilibrium exists");

    if (zero_at_origin) {
        std::vector<int> monos = monopolies(inst, 0);
        int M = (int)monos.size();
        const FlowSolution& flow = curve.solution(x_star);
        double lam = d.l0;
        double rl = curve_marginal_left(inst, flow);
        double rr = curve_marginal_right(inst, 0, flow);
        double r_mid = std::isinf(rr) ? rl : 0.5 * (rl + rr);
        double p_bar = M > 0 ? (lam - r_mid) / M : 0.0;
        double p_base = M > 0 ? lam - M * p_bar : std::clamp(lam, rl, std::isinf(rr) ? lam : rr);
        p_base = std::clamp(p_base, rl, std::isinf(rr) ? std::max(p_base, rl) : rr);

        EquilibriumSolution sol;
        sol.prices = assemble_prices(inst, 0, flow, p_base, p_bar, monos, tol);
        sol.flow = flow;
        sol.magnitude = x_star;
        sol.monopoly_set = monos;
        sol.M = M;
        sol.slack = lam - r_mid;
        sol.kind = EquilibriumKind::constructed_special;
        sol.welfare = welfare_of(inst, d, flow);
        return sol;
    }

    // c_e(0) > 0 somewhere: run the ascending route over the path bundles so
    // the raise lands on the virtual monopolies of the optimal allocation
    MarketInstance bm = to_bundle_market(inst);
    BundleAllocation alloc = min_cost_allocation(bm, x_star, std::min(tol, 1e-9));
    AscendingState ast = ascending_prices(bm, alloc, tol);

    EquilibriumSolution sol;
    for (size_t e = 0; e < inst.edges.size(); ++e) sol.prices[inst.edges[e].id] = ast.prices[e];
    sol.flow.edge_flow = alloc.item_flow;
    for (size_t b = 0; b < alloc.amounts.size(); ++b)
        if (alloc.amounts[b] > 1e-13) sol.flow.paths.push_back({bm.bundles[b], alloc.amounts[b]});
    sol.flow.magnitude = x_star;
    sol.flow.certificate = alloc.certificate;
    sol.magnitude = x_star;
    sol.monopoly_set = ast.active;
    for (int m : ast.inactive) sol.monopoly_set.push_back(m);
    std::sort(sol.monopoly_set.begin(), sol.monopoly_set.end());
    sol.M = (int)sol.monopoly_set.size();
    sol.slack = d.l0 - alloc.certificate.value_or(0.0);
    sol.kind = EquilibriumKind::constructed_special;
    sol.welfare = welfare_of(inst, d, sol.flow);
    return sol;
}

EquilibriumSolution multi_source_equilibrium(const MarketInstance& inst, double tol) {
    size_t K = inst.commodities.size();
    if (K == 0) throw StructureError("no commodities");
    for (size_t k = 1; k < K; ++k)
        if (inst.commodities[k].sink != inst.commodities[0].sink)
            throw StructureError("multi-source construction needs a single sink");

    std::vector<FlowSolution> flows = multi_commodity_optimum(inst, std::min(tol, 1e-9));
    std::vector<double> totals(inst.edges.size(), 0.0);
    for (auto& f : flows)
        for (size_t e = 0; e < totals.size(); ++e) totals[e] += f.edge_flow[e];

    bool all_uniform = true;
    for (auto& c : inst.commodities)
        if (c.demand.kind != DemandKind::uniform) all_uniform = false;
    bool zero_at_origin = true;
    for (const Edge& e : inst.edges)
        if (e.cost.marginal_at_zero() > 0) zero_at_origin = false;

    auto marginal_prices = [&]() {
        PriceVector p;
        for (size_t e = 0; e < inst.edges.size(); ++e)
            p[inst.edges[e].id] = totals[e] > 1e-13 ? inst.edges[e].cost.marginal(totals[e])
                                                    : inst.edges[e].cost.marginal_right(0.0);
        return p;
    };

    PriceVector prices;
    bool matched = false;

    // clause (a): series-parallel, no per-source monopolies, costs start at 0
    if (zero_at_origin && is_series_parallel(inst).series_parallel) {
        bool no_monos = true;
        for (size_t k = 0; k < K; ++k)
            if (!monopolies(inst, (int)k).empty()) no_monos = false;
        if (no_monos) {
            prices = marginal_prices();
            matched = true;
        }
    }

    // clause (b): uniform demands, every source a leaf with one private edge
    if (!matched && all_uniform) {
        bool leaves = true;
        std::vector<int> leaf_edge(K, -1);
        for (size_t k = 0; k < K && leaves; ++k) {
            int s = inst.node_index(inst.commodities[k].source);
            if (!inst.adjacency_in()[s].empty() || inst.adjacency_out()[s].size() != 1)
                leaves = false;
            else
                leaf_edge[k] = inst.adjacency_out()[s][0];
        }
        if (leaves) {
            prices = marginal_prices();
            for (size_t k = 0; k < K; ++k) {
                if (flows[k].magnitude <= 1e-13) continue;
                double base = 0;
                for (const FlowPath& p : flows[k].paths) {
                    if (p.amount <= 1e-13) continue;
                    double b = 0;
                    for (int e : p.edges) b += prices[inst.edges[e].id];
                    base = std::max(base, b);
                }
                double topup = inst.commodities[k].demand.l0 - base;
                if (topup > 0) prices[inst.edges[leaf_edge[k]].id] += topup;
            }
            matched = true;
        }
    }

    // clause (c): caller-asserted large demand, uniform buyers, strictly
    // convex costs
    if (!matched && inst.large_demand && all_uniform) {
        bool strictly_convex = true;
        for (const Edge& e : inst.edges)
            if (!(e.cost.kind == CostKind::power && e.cost.k > 1.0)) strictly_convex = false;
        if (strictly_convex) {
            prices = marginal_prices();
            matched = true;
        }
    }

    if (!matched)
        throw InapplicableError("instance matches no multi-source construction clause");

    EquilibriumSolution sol;
    sol.prices = std::move(prices);
    sol.flows = flows;
    sol.flow.edge_flow = totals;
    for (auto& f : flows)
        for (auto& p : f.paths) sol.flow.paths.push_back(p);
    double mag = 0;
    for (auto& f : flows) mag += f.magnitude;
    sol.flow.magnitude = mag;
    sol.magnitude = mag;
    sol.kind = EquilibriumKind::constructed_special;
    double cost = 0;
    for (size_t e = 0; e < inst.edges.size(); ++e) cost += inst.edges[e].cost.value(totals[e]);
    double value = 0;
    for (size_t k = 0; k < K; ++k) {
        const DemandFunction& dk = inst.commodities[k].demand;
        value += dk.cumulative_value(std::min(flows[k].magnitude, dk.T));
    }
    sol.welfare = value - cost;
    return sol;
}

}  // namespace netpricing
