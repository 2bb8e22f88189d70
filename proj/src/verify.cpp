#include "netpricing/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "netpricing/errors.hpp"

namespace netpricing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<int>> routes_of(const MarketInstance& inst, int commodity) {
    if (inst.mode == MarketMode::bundle) return inst.bundles;
    return inst.enumerate_paths(commodity);
}

double edge_price(const MarketInstance& inst, const PriceVector& prices, int e) {
    auto it = prices.find(inst.edges[e].id);
    if (it == prices.end()) throw SchemaError("edge " + inst.edges[e].id + " is unpriced");
    return it->second;
}

double route_price(const MarketInstance& inst, const PriceVector& prices,
                   const std::vector<int>& route) {
    double p = 0;
    for (int e : route) p += edge_price(inst, prices, e);
    return p;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

CheckResult check_buyer_best_response(const MarketInstance& inst, const PriceVector& prices,
                                      const std::vector<FlowSolution>& flows, double tol) {
    CheckResult res;
    for (size_t k = 0; k < flows.size(); ++k) {
        const DemandFunction& d = inst.commodities[k].demand;
        double x = flows[k].magnitude;
        auto routes = routes_of(inst, (int)k);
        double minp = kInf;
        for (auto& r : routes) minp = std::min(minp, route_price(inst, prices, r));
        double scale = std::max(1.0, std::abs(minp));

        for (const FlowPath& p : flows[k].paths) {
            if (p.amount <= 1e-12) continue;
            double pp = route_price(inst, prices, p.edges);
            if (pp > minp + tol * scale) {
                res.pass = false;
                res.margin = std::min(res.margin, minp - pp);
                res.witness = "commodity " + std::to_string(k) + ": flow path priced " + fmt(pp) +
                              " above cheapest " + fmt(minp);
                return res;
            }
        }
        double lam_x = d.value(std::min(x, d.T));
        bool interior_ok = std::abs(lam_x - minp) <= tol * scale;
        bool upper_corner = x >= d.T - tol && minp <= lam_x + tol * scale;
        bool lower_corner = x <= tol && minp >= d.value(0.0) - tol * scale;
        if (!(interior_ok || upper_corner || lower_corner)) {
            res.pass = false;
            res.margin = -(std::abs(lam_x - minp));
            res.witness = "commodity " + std::to_string(k) + ": lambda(" + fmt(x) + ")=" +
                          fmt(lam_x) + " != cheapest price " + fmt(minp);
            return res;
        }
    }
    return res;
}

CheckResult check_seller_stability(const MarketInstance& inst, const PriceVector& prices,
                                   const std::vector<FlowSolution>& flows, int grid, double tol) {
    CheckResult res;
    size_t K = flows.size();
    std::vector<std::vector<std::vector<int>>> routes(K);
    for (size_t k = 0; k < K; ++k) routes[k] = routes_of(inst, (int)k);

    double lam0_max = 0;
    for (size_t k = 0; k < K; ++k)
        lam0_max = std::max(lam0_max, inst.commodities[k].demand.value(0.0));

    for (size_t e = 0; e < inst.edges.size(); ++e) {
        double pe = edge_price(inst, prices, (int)e);
        double xe = 0;
        for (auto& f : flows) xe += f.edge_flow[e];
        const CostFunction& C = inst.edges[e].cost;
        double profit = pe * xe - C.value(xe);
        double cap = C.capacity_limit();

        // cheapest route through e and avoiding e, per commodity, at the
        // candidate's base prices
        std::vector<double> min_in(K, kInf), min_out(K, kInf);
        bool touches = false;
        for (size_t k = 0; k < K; ++k) {
            for (auto& r : routes[k]) {
                double pp = route_price(inst, prices, r);
                bool has = std::find(r.begin(), r.end(), (int)e) != r.end();
                if (has) {
                    min_in[k] = std::min(min_in[k], pp);
                    touches = true;
                } else {
                    min_out[k] = std::min(min_out[k], pp);
                }
            }
        }
        if (!touches) continue;

        auto deviation_profit = [&](double pp) {
            double flow_e = 0;
            for (size_t k = 0; k < K; ++k) {
                if (std::isinf(min_in[k])) continue;
                double through = min_in[k] - pe + pp;
                double cheapest = std::min(min_out[k], through);
                if (cheapest < 0) cheapest = 0;  // prices are non-negative in candidates
                const DemandFunction& d = inst.commodities[k].demand;
                double xk = d.value(0.0) >= cheapest ? d.inverse(cheapest) : 0.0;
                // deviator-optimistic: any tie routes everything through e
                if (through <= cheapest + 1e-9 * std::max(1.0, cheapest)) flow_e += xk;
            }
            if (!std::isinf(cap)) flow_e = std::min(flow_e, cap);
            return pp * flow_e - C.value(flow_e);
        };

        std::vector<double> candidates;
        candidates.reserve(grid + 64 + 512 * K);
        double hi = 2 * lam0_max;
        double lo = std::max(1e-9, hi * 1e-9);
        for (int i = 0; i < grid; ++i)
            candidates.push_back(lo * std::pow(hi / lo, (double)i / (double)(grid - 1)));
        candidates.push_back(pe);
        candidates.push_back(C.marginal_right(xe));
        for (size_t k = 0; k < K; ++k) {
            if (std::isinf(min_in[k])) continue;
            if (!std::isinf(min_out[k])) {
                double tie = min_out[k] - (min_in[k] - pe);
                if (tie > 0) {
                    candidates.push_back(tie);
                    candidates.push_back(tie - 1e-9);
                }
            }
            const DemandFunction& d = inst.commodities[k].demand;
            for (int i = 1; i <= 512; ++i) {
                double xq = d.T * (double)i / 512.0;
                double pp = d.value(xq) - (min_in[k] - pe);
                if (pp > 0) candidates.push_back(pp);
            }
        }

        double best_dp = -kInf, best_pp = 0;
        for (double pp : candidates) {
            if (!(pp >= 0) || !std::isfinite(pp)) continue;
            double dp = deviation_profit(pp);
            if (dp > best_dp) {
                best_dp = dp;
                best_pp = pp;
            }
        }
        if (best_dp > profit + tol * std::max(1.0, std::abs(profit))) {
            res.pass = false;
            res.margin = profit - best_dp;
            res.witness = "edge " + inst.edges[e].id + ": deviation p'=" + fmt(best_pp) +
                          " earns " + fmt(best_dp) + " > " + fmt(profit);
            return res;
        }
    }
    return res;
}

CheckResult check_local_dominance(const MarketInstance& inst, const PriceVector& prices,
                                  const std::vector<FlowSolution>& flows, double eps,
                                  double tol) {
    CheckResult res;
    for (size_t k = 0; k < flows.size(); ++k) {
        const auto& paths = flows[k].paths;
        if (paths.size() < 2) continue;
        std::vector<double> base(inst.edges.size(), 0.0);
        for (auto& f : flows)
            for (size_t e = 0; e < inst.edges.size(); ++e) base[e] += f.edge_flow[e];
        for (size_t i = 0; i < paths.size(); ++i) {
            if (paths[i].amount < eps) continue;  // shift skipped
            for (size_t j = 0; j < paths.size(); ++j) {
                if (i == j) continue;
                std::vector<double> xs = base;
                for (int e : paths[i].edges) xs[e] -= eps;
                for (int e : paths[j].edges) xs[e] += eps;
                bool feasible = true;
                for (int e : paths[j].edges)
                    if (xs[e] > inst.edges[e].cost.capacity_limit() + 1e-12) feasible = false;
                if (!feasible) continue;
                for (size_t e = 0; e < inst.edges.size(); ++e) {
                    double pe = edge_price(inst, prices, (int)e);
                    double before = pe * base[e] - inst.edges[e].cost.value(base[e]);
                    double after = pe * xs[e] - inst.edges[e].cost.value(xs[e]);
                    if (after > before + tol * std::max(1.0, std::abs(before))) {
                        res.pass = false;
                        res.margin = before - after;
                        res.witness = "edge " + inst.edges[e].id + ": profit rises " +
                                      fmt(after - before) + " when " + fmt(eps) +
                                      " shifts between paths";
                        return res;
                    }
                }
            }
        }
    }
    return res;
}

CheckResult check_properties(const MarketInstance& inst, const PriceVector& prices,
                             const std::vector<FlowSolution>& flows, double tol) {
    CheckResult res;
    for (size_t e = 0; e < inst.edges.size(); ++e) {
        double pe = edge_price(inst, prices, (int)e);
        double xe = 0;
        for (auto& f : flows) xe += f.edge_flow[e];
        if (xe <= 1e-12) {
            double c0 = inst.edges[e].cost.marginal_right(0.0);
            if (std::abs(pe - c0) > tol * std::max(1.0, c0)) {
                res.pass = false;
                res.margin = -(std::abs(pe - c0));
                res.witness = "idle edge " + inst.edges[e].id + " priced " + fmt(pe) +
                              ", expected its marginal at zero " + fmt(c0);
                return res;
            }
        } else {
            double ce = inst.edges[e].cost.marginal_left(xe);
            if (pe < ce - tol * std::max(1.0, ce)) {
                res.pass = false;
                res.margin = pe - ce;
                res.witness = "edge " + inst.edges[e].id + " priced " + fmt(pe) +
                              " below its marginal cost " + fmt(ce);
                return res;
            }
        }
    }
    return res;
}

VerificationReport check_all(const MarketInstance& inst, const PriceVector& prices,
                             const std::vector<FlowSolution>& flows, double tol, int grid) {
    VerificationReport rep;
    rep.tol = tol;
    rep.buyer = check_buyer_best_response(inst, prices, flows, tol);
    rep.seller = check_seller_stability(inst, prices, flows, grid, tol);
    double mag = 0;
    for (auto& f : flows) mag = std::max(mag, f.magnitude);
    rep.local_dominance = check_local_dominance(inst, prices, flows, mag / 100.0, tol);
    rep.properties = check_properties(inst, prices, flows, tol);
    rep.pass = rep.buyer.pass && rep.seller.pass && rep.local_dominance.pass &&
               rep.properties.pass;
    return rep;
}

VerificationReport check_all(const MarketInstance& inst, const PriceVector& prices,
                             const FlowSolution& flow, double tol, int grid) {
    return check_all(inst, prices, std::vector<FlowSolution>{flow}, tol, grid);
}

VerificationReport check_all(const MarketInstance& inst, const EquilibriumSolution& sol,
                             double tol, int grid) {
    if (!sol.flows.empty()) return check_all(inst, sol.prices, sol.flows, tol, grid);
    return check_all(inst, sol.prices, sol.flow, tol, grid);
}

}  // namespace netpricing
