#pragma once

// Random-instance generators for the property suites. Deterministic given the
// seed; instances are small DAGs with costs that vanish at zero flow so the
// solver's monopoly accounting matches the graph structure.

#include <random>

#include "netpricing/market.hpp"

namespace testgen {

using namespace netpricing;

inline CostFunction random_cost(std::mt19937& rng) {
    std::uniform_real_distribution<double> coeff(0.2, 2.0);
    std::uniform_real_distribution<double> expo(1.2, 3.0);
    std::uniform_int_distribution<int> kind(0, 2);
    switch (kind(rng)) {
        case 0: return CostFunction::zero();
        default: return CostFunction::power(coeff(rng), expo(rng));
    }
}

// Layered DAG with <= max_nodes nodes, one source s and one sink t. Every
// node lies on an s-t path.
inline MarketInstance random_dag(std::mt19937& rng, DemandFunction demand, int max_nodes = 8) {
    std::uniform_int_distribution<int> n_mid(0, max_nodes - 2);
    int mid = n_mid(rng);
    MarketInstance inst;
    inst.nodes.push_back("s");
    for (int i = 0; i < mid; ++i) inst.nodes.push_back("n" + std::to_string(i));
    inst.nodes.push_back("t");
    int n = (int)inst.nodes.size();

    int eid = 0;
    auto add_edge = [&](int u, int v) {
        Edge e;
        e.id = "e" + std::to_string(eid++);
        e.from = inst.nodes[u];
        e.to = inst.nodes[v];
        e.cost = random_cost(rng);
        inst.edges.push_back(e);
    };
    // spine guarantees connectivity, extra edges add parallel structure
    for (int i = 0; i + 1 < n; ++i) add_edge(i, i + 1);
    std::uniform_int_distribution<int> n_extra(0, 2 * n);
    std::uniform_int_distribution<int> pick(0, n - 1);
    int extra = n_extra(rng);
    for (int i = 0; i < extra; ++i) {
        int u = pick(rng), v = pick(rng);
        if (u >= v) continue;
        add_edge(u, v);
    }
    inst.commodities.push_back({"s", "t", std::move(demand)});
    inst.finalize();
    return inst;
}

// One demand per named efficiency class, with randomized parameters.
inline DemandFunction random_concave_demand(std::mt19937& rng) {
    std::uniform_real_distribution<double> a(0.5, 3.0), b(0.5, 2.0);
    return DemandFunction::make_affine(a(rng), b(rng));
}
inline DemandFunction random_mhr_demand(std::mt19937& rng) {
    std::uniform_real_distribution<double> scale(0.5, 3.0), rate(0.5, 2.0);
    return DemandFunction::make_exponential(scale(rng), rate(rng));
}
inline DemandFunction random_fp_demand(std::mt19937& rng, double* alpha_out = nullptr) {
    std::uniform_real_distribution<double> scale(0.5, 3.0), root(0.5, 2.0), alpha(1.0, 4.0);
    double a = alpha(rng);
    if (alpha_out) *alpha_out = a;
    return DemandFunction::make_poly_concave(scale(rng), root(rng), a);
}
inline DemandFunction random_fced_demand(std::mt19937& rng, double* alpha_out = nullptr) {
    std::uniform_real_distribution<double> scale(0.5, 3.0), root(0.5, 2.0), alpha(1.0, 4.0);
    double a = alpha(rng);
    if (alpha_out) *alpha_out = a;
    return DemandFunction::make_ced(scale(rng), root(rng), a);
}

// Piecewise-linear demand with convex-cost pwl edges, for the balancing and
// KKT suites.
inline CostFunction random_pwl_cost(std::mt19937& rng) {
    std::uniform_real_distribution<double> width(0.2, 1.0), slope_step(0.1, 1.0);
    std::uniform_int_distribution<int> n_seg(2, 4);
    int segs = n_seg(rng);
    std::vector<std::pair<double, double>> out;
    double x = 0.0, m = 0.0;
    for (int i = 0; i < segs; ++i) {
        out.emplace_back(x, m);
        x += width(rng);
        m += slope_step(rng);
    }
    return CostFunction::pwl_convex(std::move(out));
}

inline MarketInstance random_pwl_instance(std::mt19937& rng) {
    std::uniform_real_distribution<double> lam(2.0, 6.0), pop(1.0, 3.0);
    MarketInstance inst = random_dag(rng, DemandFunction::make_affine(lam(rng), 1.0), 6);
    for (Edge& e : inst.edges) e.cost = random_pwl_cost(rng);
    inst.finalize();
    return inst;
}

// Small random bundle market over <= 5 items with zero-at-origin costs.
inline MarketInstance random_bundle_market(std::mt19937& rng) {
    std::uniform_int_distribution<int> n_items(2, 5);
    int items = n_items(rng);
    MarketInstance inst;
    inst.nodes = {"s", "t"};
    for (int i = 0; i < items; ++i) {
        Edge e;
        e.id = "i" + std::to_string(i);
        e.from = "s";
        e.to = "t";
        e.cost = random_cost(rng);
        inst.edges.push_back(e);
    }
    inst.mode = MarketMode::bundle;
    std::uniform_int_distribution<int> n_bundles(1, 4);
    std::uniform_int_distribution<int> coin(0, 1);
    int nb = n_bundles(rng);
    for (int b = 0; b < nb; ++b) {
        std::vector<int> bundle;
        for (int i = 0; i < items; ++i)
            if (coin(rng)) bundle.push_back(i);
        if (bundle.empty()) bundle.push_back(b % items);
        inst.bundles.push_back(bundle);
    }
    std::uniform_real_distribution<double> a(1.0, 3.0), b(0.5, 1.5);
    inst.commodities.push_back({"s", "t", DemandFunction::make_affine(a(rng), b(rng))});
    inst.finalize();
    return inst;
}

}  // namespace testgen
