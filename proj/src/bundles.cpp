#include "netpricing/bundles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "netpricing/errors.hpp"

namespace netpricing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> sorted_items(const std::vector<int>& b) {
    std::vector<int> s = b;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

bool contains(const std::vector<int>& sorted, int item) {
    return std::binary_search(sorted.begin(), sorted.end(), item);
}

// Engine shared by allocation and price ascent. Bundles carry a per-unit
// buyer value; the plain price track uses the same value on every bundle.
struct BundleView {
    const MarketInstance& market;
    std::vector<std::vector<int>> items;  // sorted, deduplicated

    explicit BundleView(const MarketInstance& m, const std::vector<std::vector<int>>& fam)
        : market(m) {
        for (const auto& b : fam) items.push_back(sorted_items(b));
    }

    double insert_marginal(const std::vector<int>& b, const std::vector<double>& xs) const {
        double v = 0;
        for (int e : b) {
            double cap = market.edges[e].cost.capacity_limit();
            if (xs[e] >= cap - 1e-13) return kInf;
            v += market.edges[e].cost.marginal_right(xs[e]);
        }
        return v;
    }
    double remove_marginal(const std::vector<int>& b, const std::vector<double>& xs) const {
        double v = 0;
        for (int e : b) v += market.edges[e].cost.marginal_left(xs[e]);
        return v;
    }
    double headroom(const std::vector<int>& b, const std::vector<double>& xs) const {
        double h = kInf;
        for (int e : b) {
            double cap = market.edges[e].cost.capacity_limit();
            if (!std::isinf(cap)) h = std::min(h, cap - xs[e]);
        }
        return h;
    }
};

std::vector<double> item_flows(const BundleView& view, const std::vector<double>& amounts) {
    std::vector<double> xs(view.market.edges.size(), 0.0);
    for (size_t b = 0; b < amounts.size(); ++b)
        for (int e : view.items[b]) xs[e] += amounts[b];
    return xs;
}

// One equalization move between a consumed bundle and any cheaper one;
// returns the gap that was closed (0 when already balanced).
double rebalance_once(const BundleView& view, std::vector<double>& amounts, double tol) {
    auto xs = item_flows(view, amounts);
    double best_gap = 0;
    int bp = -1, bq = -1;
    for (size_t i = 0; i < amounts.size(); ++i) {
        if (amounts[i] <= 1e-13) continue;
        for (size_t j = 0; j < amounts.size(); ++j) {
            if (j == i) continue;
            double up = 0, down = 0;
            bool blocked = false;
            for (int e : view.items[i])
                if (!contains(view.items[j], e))
                    up += view.market.edges[e].cost.marginal_left(xs[e]);
            for (int e : view.items[j])
                if (!contains(view.items[i], e)) {
                    double cap = view.market.edges[e].cost.capacity_limit();
                    if (xs[e] >= cap - 1e-13) {
                        blocked = true;
                        break;
                    }
                    down += view.market.edges[e].cost.marginal_right(xs[e]);
                }
            if (blocked) continue;
            if (up - down > best_gap) {
                best_gap = up - down;
                bp = (int)i;
                bq = (int)j;
            }
        }
    }
    if (bp < 0 || best_gap <= tol) return 0.0;

    std::vector<int> only_p, only_q;
    for (int e : view.items[bp])
        if (!contains(view.items[bq], e)) only_p.push_back(e);
    for (int e : view.items[bq])
        if (!contains(view.items[bp], e)) only_q.push_back(e);
    double tmax = amounts[bp];
    for (int e : only_q) {
        double cap = view.market.edges[e].cost.capacity_limit();
        if (!std::isinf(cap)) tmax = std::min(tmax, cap - xs[e]);
    }
    if (tmax <= 0) return 0.0;
    auto phi = [&](double t) {
        double v = 0;
        for (int e : only_p) v += view.market.edges[e].cost.marginal_left(xs[e] - t);
        for (int e : only_q) v -= view.market.edges[e].cost.marginal_right(xs[e] + t);
        return v;
    };
    double t = tmax;
    if (phi(tmax) < 0) {
        double lo = 0, hi = tmax;
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            (phi(mid) > 0 ? lo : hi) = mid;
        }
        t = 0.5 * (lo + hi);
    }
    if (t <= 0) return 0.0;
    amounts[bp] -= t;
    amounts[bq] += t;
    if (amounts[bp] < 1e-14) {
        amounts[bq] += amounts[bp];
        amounts[bp] = 0;
    }
    return best_gap;
}

std::vector<int> active_monopolies(const BundleView& view, const std::vector<double>& amounts,
                                   double tol) {
    std::vector<int> common;
    bool first = true;
    for (size_t b = 0; b < amounts.size(); ++b) {
        if (amounts[b] <= tol) continue;
        if (first) {
            common = view.items[b];
            first = false;
        } else {
            std::vector<int> next;
            std::set_intersection(common.begin(), common.end(), view.items[b].begin(),
                                  view.items[b].end(), std::back_inserter(next));
            common = next;
        }
    }
    return first ? std::vector<int>{} : common;
}

// Event-driven uniform ascent. `values` is the per-unit buyer value of each
// bundle; the walk stops when the consumed bundles' utility reaches zero or
// the active set empties.
AscendingState ascend(const BundleView& view, const std::vector<double>& amounts,
                      const std::vector<double>& values, double tol) {
    size_t E = view.market.edges.size();
    AscendingState st;
    st.prices.assign(E, 0.0);
    auto xs0 = item_flows(view, amounts);
    for (size_t e = 0; e < E; ++e) {
        const CostFunction& c = view.market.edges[e].cost;
        st.prices[e] = xs0[e] > 1e-13 ? c.marginal(xs0[e]) : c.marginal_right(0.0);
    }
    auto bundle_price = [&](size_t b) {
        double p = 0;
        for (int e : view.items[b]) p += st.prices[e];
        return p;
    };
    auto utility = [&](size_t b) { return values[b] - bundle_price(b); };

    int consumed = -1;
    for (size_t b = 0; b < amounts.size(); ++b)
        if (amounts[b] > 1e-13) {
            consumed = (int)b;
            break;
        }
    if (consumed < 0) throw StructureError("ascending prices need a positive allocation");
    // a hair of negative utility is allocation roundoff, not a broken market
    double scale = std::max(1.0, std::abs(values[consumed]));
    if (utility(consumed) < -1e-6 * scale)
        throw SolverError("buyer value below marginal cost; cannot ascend");

    std::vector<int> MA = active_monopolies(view, amounts, 1e-13);
    std::vector<char> is_active(E, 0);
    for (int m : MA) is_active[m] = 1;

    auto retire_scan = [&](int witness_hint) {
        // any bundle without m whose utility already ties the consumed one
        bool changed = true;
        while (changed) {
            changed = false;
            double u = utility(consumed);
            for (size_t mi = 0; mi < MA.size(); ++mi) {
                int m = MA[mi];
                for (size_t b = 0; b < view.items.size(); ++b) {
                    if (contains(view.items[b], m)) continue;
                    if (utility(b) >= u - tol) {
                        st.inactive.push_back(m);
                        st.witness_bundle.push_back((int)b);
                        if (!st.steps.empty() && witness_hint >= 0)
                            st.steps.back().retired.push_back(m);
                        MA.erase(MA.begin() + mi);
                        is_active[m] = 0;
                        changed = true;
                        break;
                    }
                }
                if (changed) break;
            }
        }
    };
    retire_scan(-1);

    double gamma = 0.0;
    for (int round = 0; round < 4 * (int)(view.items.size() + E) + 8; ++round) {
        if (MA.empty()) break;
        double u = utility(consumed);
        if (u <= tol) break;
        double d_term = u / (double)MA.size();
        double d_tie = kInf;
        int tie_bundle = -1;
        for (size_t b = 0; b < view.items.size(); ++b) {
            int overlap = 0;
            for (int m : MA)
                if (contains(view.items[b], m)) ++overlap;
            if (overlap == (int)MA.size()) continue;
            double du = u - utility(b);  // >= 0 by the no-cheaper invariant
            double d = std::max(0.0, du) / (double)((int)MA.size() - overlap);
            if (d < d_tie - 1e-15 ||
                (d < d_tie + 1e-15 && (tie_bundle < 0 || view.items[b] < view.items[tie_bundle]))) {
                d_tie = d;
                tie_bundle = (int)b;
            }
        }
        double delta = std::min(d_term, d_tie);
        AscendingStep step;
        step.delta = delta;
        step.active = MA;
        step.witness = (d_tie <= d_term) ? tie_bundle : -1;
        st.steps.push_back(step);
        for (int m : MA) st.prices[m] += delta;
        gamma += delta;
        if (d_tie <= d_term) {
            retire_scan(tie_bundle);
        } else {
            break;
        }
    }
    st.active = MA;
    st.gamma = gamma;
    st.consumed_price = bundle_price(consumed);
    return st;
}

BundleAllocation allocate(const BundleView& view, double x, double tol) {
    if (view.items.empty()) throw StructureError("bundle family is empty");
    std::vector<double> amounts(view.items.size(), 0.0);
    double remaining = x;
    double chunk = x / 16.0;
    int guard = 0;
    while (remaining > 1e-15) {
        if (++guard > 1000000) throw SolverError("bundle augmentation cap exceeded");
        auto xs = item_flows(view, amounts);
        int best = -1;
        double bm = kInf;
        for (size_t b = 0; b < view.items.size(); ++b) {
            double m = view.insert_marginal(view.items[b], xs);
            if (m < bm) {
                bm = m;
                best = (int)b;
            }
        }
        if (best < 0 || std::isinf(bm))
            throw SolverError("requested magnitude exceeds bundle capacity");
        double t = std::min({chunk, remaining, view.headroom(view.items[best], xs)});
        if (t <= 1e-15) throw SolverError("requested magnitude exceeds bundle capacity");
        amounts[best] += t;
        remaining -= t;
    }
    for (int iter = 0; iter < 5000; ++iter)
        if (rebalance_once(view, amounts, tol) <= tol) break;

    BundleAllocation out;
    out.amounts = amounts;
    out.item_flow = item_flows(view, amounts);
    out.magnitude = x;
    double r_minus = 0, r_plus = kInf;
    for (size_t b = 0; b < amounts.size(); ++b) {
        if (amounts[b] > 1e-13)
            r_minus = std::max(r_minus, view.remove_marginal(view.items[b], out.item_flow));
        r_plus = std::min(r_plus, view.insert_marginal(view.items[b], out.item_flow));
    }
    out.certificate = std::isinf(r_plus) ? r_minus : 0.5 * (r_minus + r_plus);
    return out;
}

double removal_marginal_max(const BundleView& view, const BundleAllocation& alloc) {
    double r = 0;
    for (size_t b = 0; b < alloc.amounts.size(); ++b)
        if (alloc.amounts[b] > 1e-13)
            r = std::max(r, view.remove_marginal(view.items[b], alloc.item_flow));
    return r;
}

}  // namespace

BundleAllocation min_cost_allocation(const MarketInstance& market, double x, double tol) {
    BundleView view(market, market.bundles);
    if (x < 0) throw SolverError("allocation magnitude must be non-negative");
    if (x == 0) {
        if (market.bundles.empty()) throw StructureError("bundle family is empty");
        BundleAllocation out;
        out.amounts.assign(market.bundles.size(), 0.0);
        out.item_flow.assign(market.edges.size(), 0.0);
        out.magnitude = 0;
        return out;
    }
    return allocate(view, x, tol);
}

AscendingState ascending_prices(const MarketInstance& market, const BundleAllocation& alloc,
                                double tol) {
    BundleView view(market, market.bundles);
    const DemandFunction& d = market.commodities.at(0).demand;
    double lambda = d.value(std::min(alloc.magnitude, d.T));
    std::vector<double> values(view.items.size(), lambda);
    return ascend(view, alloc.amounts, values, tol);
}

MarketInstance to_bundle_market(const MarketInstance& graph, size_t max_paths) {
    MarketInstance bm = graph;
    bm.mode = MarketMode::bundle;
    bm.bundles = graph.enumerate_paths(0, max_paths);
    bm.finalize();
    return bm;
}

EquilibriumSolution bundle_equilibrium(const MarketInstance& market, double tol) {
    const MarketInstance& bm = market;
    BundleView view(bm, bm.bundles);
    const DemandFunction& d = bm.commodities.at(0).demand;
    DemandClassTags tags = d.classify();

    auto r_left_at = [&](double x) {
        if (x <= 0) return 0.0;
        return removal_marginal_max(view, allocate(view, x, tol));
    };

    // largest magnitude the caps allow, found greedily
    double xmax = d.T;
    {
        std::vector<double> amounts(view.items.size(), 0.0);
        bool capped = true;
        for (auto& b : view.items)
            if (std::isinf(view.headroom(b, item_flows(view, amounts)))) capped = false;
        if (capped) {
            double total = 0;
            for (int pass = 0; pass < 1000; ++pass) {
                auto xs = item_flows(view, amounts);
                int best = -1;
                double bh = 0;
                for (size_t b = 0; b < view.items.size(); ++b) {
                    double h = view.headroom(view.items[b], xs);
                    if (h > bh + 1e-13) {
                        bh = h;
                        best = (int)b;
                    }
                }
                if (best < 0) break;
                amounts[best] += bh;
                total += bh;
            }
            xmax = std::min(xmax, total);
        }
    }

    double x_star;
    {
        std::vector<double> xs0(bm.edges.size(), 0.0);
        double cheapest = kInf;
        for (auto& b : view.items) cheapest = std::min(cheapest, view.insert_marginal(b, xs0));
        if (d.value(0.0) <= cheapest)
            throw SolverError("no positive allocation is welfare-improving");
    }
    if (d.value(xmax) >= r_left_at(xmax) - 1e-12) {
        x_star = xmax;
    } else {
        double lo = 0, hi = xmax;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * xmax; ++it) {
            double mid = 0.5 * (lo + hi);
            (d.value(mid) >= r_left_at(mid) ? lo : hi) = mid;
        }
        x_star = lo;
    }

    auto solve_at = [&](double x) {
        BundleAllocation alloc = allocate(view, x, tol);
        AscendingState ast = ascending_prices(bm, alloc, tol);
        return std::pair<BundleAllocation, AscendingState>(std::move(alloc), std::move(ast));
    };
    auto gamma_at = [&](double x) { return solve_at(x).second.gamma; };

    auto build = [&](double x, EquilibriumKind kind, double residual) {
        auto [alloc, ast] = solve_at(x);
        EquilibriumSolution sol;
        for (size_t e = 0; e < bm.edges.size(); ++e) sol.prices[bm.edges[e].id] = ast.prices[e];
        sol.flow.edge_flow = alloc.item_flow;
        for (size_t b = 0; b < alloc.amounts.size(); ++b)
            if (alloc.amounts[b] > 1e-13) sol.flow.paths.push_back({view.items[b], alloc.amounts[b]});
        sol.flow.magnitude = x;
        sol.flow.certificate = alloc.certificate;
        sol.magnitude = x;
        sol.monopoly_set = ast.active;  // monopolies still standing after the ascent
        sol.M = (int)sol.monopoly_set.size();
        double r = alloc.certificate.value_or(0.0);
        sol.slack = d.value(std::min(x, d.T)) - r;
        sol.condition_residual = residual;
        sol.kind = kind;
        double cost = 0;
        for (size_t e = 0; e < bm.edges.size(); ++e)
            cost += bm.edges[e].cost.value(alloc.item_flow[e]);
        sol.welfare = d.cumulative_value(std::min(x, d.T)) - cost;
        sol.unverified_theory = !tags.mpe;
        return sol;
    };

    double g_star = gamma_at(x_star);
    double dl = x_star * std::abs(d.derivative(x_star, Side::left));
    if (g_star >= dl - tol) {
        return build(x_star, EquilibriumKind::optimal_corner, 0.0);
    }

    // infimum of the region where active virtual monopolies exist
    auto has_active = [&](double x) {
        BundleAllocation alloc = allocate(view, x, tol);
        AscendingState ast = ascending_prices(bm, alloc, tol);
        return !ast.active.empty() || ast.gamma > tol;
    };
    double x0 = 0;
    if (!has_active(x_star * 1e-9)) {
        double lo = x_star * 1e-9, hi = x_star;
        for (int it = 0; it < 120; ++it) {
            double mid = 0.5 * (lo + hi);
            (has_active(mid) ? hi : lo) = mid;
        }
        x0 = hi;
    }

    auto sign_of = [&](double x) {
        double g = gamma_at(x);
        double lo_d = x * std::abs(d.derivative(x, Side::left));
        double hi_d = x * std::abs(d.derivative(x, Side::right));
        if (lo_d > hi_d) std::swap(lo_d, hi_d);
        if (g > hi_d + tol) return +1;
        if (g < lo_d - tol) return -1;
        return 0;
    };

    double probe = std::max(x0 * (1 + 1e-9), x0 + 1e-12);
    int f0 = probe < x_star ? sign_of(probe) : -1;
    if (f0 < 0) {
        // the ascended markup never covers the buyer slope: the boundary
        // magnitude itself is the equilibrium candidate
        EquilibriumSolution sol = build(std::max(x0, probe), EquilibriumKind::interior_root,
                                        0.0);
        sol.near_kink_boundary = true;
        return sol;
    }
    if (f0 == 0) {
        EquilibriumSolution sol = build(probe, EquilibriumKind::interior_root, 0.0);
        sol.near_kink_boundary = probe - x0 <= 10 * tol;
        return sol;
    }
    double lo = probe, hi = x_star;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        int f = sign_of(mid);
        if (f == 0) {
            EquilibriumSolution sol = build(mid, EquilibriumKind::interior_root, 0.0);
            sol.near_kink_boundary = mid - x0 <= 10 * tol;
            return sol;
        }
        (f > 0 ? lo : hi) = mid;
        if (hi - lo <= 1e-15 * x_star) break;
    }
    double g = gamma_at(lo);
    double resid = std::abs(g - lo * std::abs(d.derivative(lo, Side::left)));
    EquilibriumSolution sol = build(lo, EquilibriumKind::interior_root, resid);
    sol.near_kink_boundary = lo - x0 <= 10 * tol;
    return sol;
}

EquilibriumSolution combinatorial_uniform_equilibrium(const MarketInstance& market, double tol) {
    const DemandFunction& d = market.commodities.at(0).demand;
    if (d.kind != DemandKind::uniform)
        throw InapplicableError("combinatorial construction needs uniform demand");
    if (market.valuations.empty()) throw StructureError("no valuation table");

    std::vector<std::vector<int>> family;
    std::vector<double> values;
    for (auto& [items, v] : market.valuations) {
        family.push_back(items);
        values.push_back(v);
    }
    BundleView view(market, family);

    // allocate to maximize sum(value) - cost, capped at the population
    std::vector<double> amounts(family.size(), 0.0);
    double total = 0;
    for (int pass = 0; pass < 100000; ++pass) {
        bool progress = false;
        auto xs = item_flows(view, amounts);
        // grow the best bundle while its marginal utility is positive
        if (total < d.T - 1e-15) {
            int best = -1;
            double bu = tol;
            for (size_t b = 0; b < family.size(); ++b) {
                double mu = values[b] - view.insert_marginal(view.items[b], xs);
                if (mu > bu) {
                    bu = mu;
                    best = (int)b;
                }
            }
            if (best >= 0) {
                double tcap = std::min(d.T - total, view.headroom(view.items[best], xs));
                auto psi = [&](double t) {
                    return values[best] - view.insert_marginal(view.items[best],
                                                               [&] {
                                                                   auto y = xs;
                                                                   for (int e : view.items[best])
                                                                       y[e] += t;
                                                                   return y;
                                                               }());
                };
                double t = tcap;
                if (t > 0 && psi(t) < 0) {
                    double lo2 = 0, hi2 = t;
                    for (int it = 0; it < 80; ++it) {
                        double mid = 0.5 * (lo2 + hi2);
                        (psi(mid) > 0 ? lo2 : hi2) = mid;
                    }
                    t = 0.5 * (lo2 + hi2);
                }
                if (t > 1e-14) {
                    amounts[best] += t;
                    total += t;
                    progress = true;
                }
            }
        }
        // shrink any consumed bundle whose marginal utility went negative
        xs = item_flows(view, amounts);
        for (size_t b = 0; b < family.size() && !progress; ++b) {
            if (amounts[b] <= 1e-13) continue;
            double mu = values[b] - view.remove_marginal(view.items[b], xs);
            if (mu < -tol) {
                double t = std::min(amounts[b], 1.0);
                auto psi = [&](double tt) {
                    auto y = xs;
                    for (int e : view.items[b]) y[e] -= tt;
                    return view.remove_marginal(view.items[b], y) - values[b];
                };
                if (psi(t) > 0) {
                    // whole bundle is unprofitable at the margin
                } else {
                    double lo2 = 0, hi2 = t;
                    for (int it = 0; it < 80; ++it) {
                        double mid = 0.5 * (lo2 + hi2);
                        (psi(mid) > 0 ? lo2 : hi2) = mid;
                    }
                    t = 0.5 * (lo2 + hi2);
                }
                if (t > 1e-14) {
                    amounts[b] -= t;
                    total -= t;
                    progress = true;
                }
            }
        }
        // utility-aware pairwise shift
        if (!progress) {
            xs = item_flows(view, amounts);
            for (size_t i = 0; i < family.size() && !progress; ++i) {
                if (amounts[i] <= 1e-13) continue;
                for (size_t j = 0; j < family.size() && !progress; ++j) {
                    if (j == i) continue;
                    double gain = values[j] - values[i];
                    bool blocked = false;
                    for (int e : view.items[i])
                        if (!contains(view.items[j], e))
                            gain += market.edges[e].cost.marginal_left(xs[e]);
                    for (int e : view.items[j])
                        if (!contains(view.items[i], e)) {
                            double cap = market.edges[e].cost.capacity_limit();
                            if (xs[e] >= cap - 1e-13) {
                                blocked = true;
                                break;
                            }
                            gain -= market.edges[e].cost.marginal_right(xs[e]);
                        }
                    if (blocked || gain <= tol) continue;
                    auto phi = [&](double t) {
                        double v = values[j] - values[i];
                        for (int e : view.items[i])
                            if (!contains(view.items[j], e))
                                v += market.edges[e].cost.marginal_left(xs[e] - t);
                        for (int e : view.items[j])
                            if (!contains(view.items[i], e))
                                v -= market.edges[e].cost.marginal_right(xs[e] + t);
                        return v;
                    };
                    double tmax = amounts[i];
                    for (int e : view.items[j])
                        if (!contains(view.items[i], e)) {
                            double cap = market.edges[e].cost.capacity_limit();
                            if (!std::isinf(cap)) tmax = std::min(tmax, cap - xs[e]);
                        }
                    double t = tmax;
                    if (t > 0 && phi(t) < 0) {
                        double lo2 = 0, hi2 = t;
                        for (int it = 0; it < 80; ++it) {
                            double mid = 0.5 * (lo2 + hi2);
                            (phi(mid) > 0 ? lo2 : hi2) = mid;
                        }
                        t = 0.5 * (lo2 + hi2);
                    }
                    if (t > 1e-14) {
                        amounts[i] -= t;
                        amounts[j] += t;
                        progress = true;
                    }
                }
            }
        }
        if (!progress) break;
    }
    if (total <= 1e-13) throw SolverError("no bundle is worth its cost");

    AscendingState ast = ascend(view, amounts, values, tol);

    EquilibriumSolution sol;
    for (size_t e = 0; e < market.edges.size(); ++e)
        sol.prices[market.edges[e].id] = ast.prices[e];
    auto xs = item_flows(view, amounts);
    sol.flow.edge_flow = xs;
    for (size_t b = 0; b < amounts.size(); ++b)
        if (amounts[b] > 1e-13) sol.flow.paths.push_back({view.items[b], amounts[b]});
    sol.flow.magnitude = total;
    sol.magnitude = total;
    sol.monopoly_set = active_monopolies(view, amounts, 1e-13);
    sol.M = (int)sol.monopoly_set.size();
    sol.kind = EquilibriumKind::constructed_special;
    double cost = 0;
    for (size_t e = 0; e < market.edges.size(); ++e)
        cost += market.edges[e].cost.value(xs[e]);
    double value = 0;
    for (size_t b = 0; b < amounts.size(); ++b) value += amounts[b] * values[b];
    sol.welfare = value - cost;
    return sol;
}

}  // namespace netpricing
