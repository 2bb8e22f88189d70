#include "netpricing/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "netpricing/errors.hpp"

namespace netpricing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Multi-source label correcting over the residual graph. `dist` carries the
// pinned starting values (+inf for unpinned nodes) and is relaxed in place.
// Reverse arcs exist only where the flow is positive. Throws on a negative
// cycle (the flow was not min-cost).
void relax_residual(const MarketInstance& inst, const std::vector<double>& k_minus,
                    const std::vector<double>& k_plus, const std::vector<double>& edge_flow,
                    std::vector<double>& dist, bool reversed) {
    size_t n = inst.nodes.size();
    double scale = 1.0;
    for (size_t e = 0; e < inst.edges.size(); ++e) {
        if (!std::isinf(k_plus[e])) scale = std::max(scale, std::abs(k_plus[e]));
        scale = std::max(scale, std::abs(k_minus[e]));
    }
    for (size_t round = 0; round <= n; ++round) {
        double gain = 0.0;
        for (size_t e = 0; e < inst.edges.size(); ++e) {
            int u = inst.node_index(inst.edges[e].from);
            int v = inst.node_index(inst.edges[e].to);
            if (reversed) std::swap(u, v);
            if (!std::isinf(k_plus[e]) && dist[u] + k_plus[e] < dist[v] - 1e-15) {
                gain = std::max(gain, dist[v] - dist[u] - k_plus[e]);
                dist[v] = dist[u] + k_plus[e];
            }
            if (edge_flow[e] > 1e-13 && dist[v] - k_minus[e] < dist[u] - 1e-15) {
                gain = std::max(gain, dist[u] - dist[v] + k_minus[e]);
                dist[u] = dist[v] - k_minus[e];
            }
        }
        if (gain == 0.0) return;
        // A flow converged to the solver tolerance can leave residual cycles of
        // matching (negligible) weight; only a materially negative cycle means
        // the flow is not min-cost.
        if (round == n && gain > 1e-6 * scale)
            throw StructureError("residual graph has a negative cycle; flow is not min-cost");
    }
}

}  // namespace

PotentialState node_potentials(const MarketInstance& inst, int commodity,
                               const std::vector<double>& k_minus,
                               const std::vector<double>& k_plus,
                               const std::vector<double>& edge_flow, double tol) {
    size_t n = inst.nodes.size();
    int s = inst.node_index(inst.commodities[commodity].source);

    PotentialState st;
    st.k_minus = k_minus;
    st.k_plus = k_plus;

    st.pi_plus.assign(n, kInf);
    st.pi_plus[s] = 0.0;
    relax_residual(inst, k_minus, k_plus, edge_flow, st.pi_plus, /*reversed=*/false);

    // pi_minus[v] = -(shortest v -> s), computed as distances from s with all
    // residual arcs reversed.
    std::vector<double> to_s(n, kInf);
    to_s[s] = 0.0;
    relax_residual(inst, k_minus, k_plus, edge_flow, to_s, /*reversed=*/true);
    st.pi_minus.assign(n, -kInf);
    for (size_t v = 0; v < n; ++v)
        if (!std::isinf(to_s[v])) st.pi_minus[v] = -to_s[v];

    st.in_S.assign(n, 0);
    for (size_t v = 0; v < n; ++v)
        if (std::isfinite(st.pi_minus[v]) && std::isfinite(st.pi_plus[v]) &&
            st.pi_plus[v] - st.pi_minus[v] <= tol)
            st.in_S[v] = 1;
    return st;
}

PotentialState node_potentials(const MarketInstance& inst, int commodity, const FlowSolution& sol,
                               double tol) {
    std::vector<double> km(inst.edges.size()), kp(inst.edges.size());
    for (size_t e = 0; e < inst.edges.size(); ++e) {
        km[e] = inst.edges[e].cost.marginal_left(sol.edge_flow[e]);
        double cap = inst.edges[e].cost.capacity_limit();
        kp[e] = sol.edge_flow[e] >= cap - 1e-13 ? kInf
                                                : inst.edges[e].cost.marginal_right(sol.edge_flow[e]);
    }
    return node_potentials(inst, commodity, km, kp, sol.edge_flow, tol);
}

std::vector<double> balance_prices(const MarketInstance& inst, int commodity,
                                   const FlowSolution& sol, double p_star, double tol) {
    size_t n = inst.nodes.size();
    int s = inst.node_index(inst.commodities[commodity].source);
    int t = inst.node_index(inst.commodities[commodity].sink);

    std::vector<double> km(inst.edges.size()), kp(inst.edges.size());
    for (size_t e = 0; e < inst.edges.size(); ++e) {
        km[e] = inst.edges[e].cost.marginal_left(sol.edge_flow[e]);
        double cap = inst.edges[e].cost.capacity_limit();
        kp[e] = sol.edge_flow[e] >= cap - 1e-13 ? kInf
                                                : inst.edges[e].cost.marginal_right(sol.edge_flow[e]);
    }

    // Potentials pinned at both endpoints: phi_s = 0, phi_t = p*. Relaxing the
    // residual arcs gives phi with k- <= phi_v - phi_u <= k+ on flow edges and
    // phi_v - phi_u <= c+(0) on idle ones, so differences along a flow path
    // telescope to exactly p*. The pins survive relaxation precisely when
    // r-(x) <= p* <= r+(x).
    std::vector<double> phi(n, kInf);
    phi[s] = 0.0;
    phi[t] = p_star;
    relax_residual(inst, km, kp, sol.edge_flow, phi, /*reversed=*/false);
    double slack = tol * std::max(1.0, std::abs(p_star));
    if (phi[s] < -slack || phi[t] < p_star - slack)
        throw SolverError("target path price lies outside the marginal interval of the flow");

    std::vector<double> out(inst.edges.size());
    for (size_t e = 0; e < inst.edges.size(); ++e) {
        if (sol.edge_flow[e] > 1e-13) {
            int u = inst.node_index(inst.edges[e].from);
            int v = inst.node_index(inst.edges[e].to);
            double c = phi[v] - phi[u];
            out[e] = std::clamp(c, km[e], std::isinf(kp[e]) ? c : kp[e]);
        } else {
            out[e] = inst.edges[e].cost.marginal_right(0.0);
        }
    }
    return out;
}

}  // namespace netpricing
