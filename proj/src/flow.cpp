#include "netpricing/flow.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "netpricing/errors.hpp"

namespace netpricing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PathFinder {
    const MarketInstance& inst;
    int s, t;

    PathFinder(const MarketInstance& i, int commodity)
        : inst(i),
          s(i.node_index(i.commodities[commodity].source)),
          t(i.node_index(i.commodities[commodity].sink)) {}

    // Shortest s->t path under per-edge lengths; edges with length == +inf are
    // unusable. Returns nullopt when t is unreachable. Lengths are
    // non-negative, so plain label correcting converges in <= |V| rounds.
    std::optional<std::vector<int>> shortest(const std::vector<double>& len) const {
        size_t n = inst.nodes.size();
        std::vector<double> dist(n, kInf);
        std::vector<int> via(n, -1);
        dist[s] = 0.0;
        for (size_t round = 0; round < n; ++round) {
            bool any = false;
            for (size_t ei = 0; ei < inst.edges.size(); ++ei) {
                if (std::isinf(len[ei])) continue;
                int u = inst.node_index(inst.edges[ei].from);
                int v = inst.node_index(inst.edges[ei].to);
                if (dist[u] + len[ei] < dist[v] - 1e-18) {
                    dist[v] = dist[u] + len[ei];
                    via[v] = (int)ei;
                    any = true;
                }
            }
            if (!any) break;
        }
        if (std::isinf(dist[t])) return std::nullopt;
        std::vector<int> path;
        for (int v = t; v != s;) {
            path.push_back(via[v]);
            v = inst.node_index(inst.edges[via[v]].from);
        }
        std::reverse(path.begin(), path.end());
        return path;
    }
};

std::vector<double> edge_flows_from_paths(const MarketInstance& inst,
                                          const std::vector<FlowPath>& paths) {
    std::vector<double> xs(inst.edges.size(), 0.0);
    for (const FlowPath& p : paths)
        for (int e : p.edges) xs[e] += p.amount;
    return xs;
}

bool same_path(const std::vector<int>& a, const std::vector<int>& b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

double path_marginal_left(const MarketInstance& inst, const std::vector<double>& xs,
                          const std::vector<int>& path) {
    double m = 0.0;
    for (int e : path) m += inst.edges[e].cost.marginal_left(xs[e]);
    return m;
}

// Lengths for insertion: right marginal, +inf at a saturated capacity.
std::vector<double> insertion_lengths(const MarketInstance& inst, const std::vector<double>& xs) {
    std::vector<double> len(inst.edges.size());
    for (size_t e = 0; e < inst.edges.size(); ++e) {
        double cap = inst.edges[e].cost.capacity_limit();
        len[e] = xs[e] >= cap - 1e-13 ? kInf : inst.edges[e].cost.marginal_right(xs[e]);
    }
    return len;
}

// Lengths for choosing an insertion route: the marginal a small probe mass
// ahead of the current flow. The right derivative alone ties at zero between
// a free edge and a power edge whose marginal blows up immediately (exponent
// below 2), and picking the latter stalls rebalancing with vanishing shifts.
// The probe separates them. Only route selection uses these; gaps and
// reported marginals stay exact.
std::vector<double> probe_lengths(const MarketInstance& inst, const std::vector<double>& xs,
                                  double h) {
    std::vector<double> len(inst.edges.size());
    for (size_t e = 0; e < inst.edges.size(); ++e) {
        const CostFunction& c = inst.edges[e].cost;
        double cap = c.capacity_limit();
        if (xs[e] >= cap - 1e-13) {
            len[e] = kInf;
            continue;
        }
        // Loaded edges keep their exact marginal; the probe only resolves the
        // tie at zero, and it must not cross the capacity.
        double p = std::max(xs[e], h);
        if (p >= cap - 1e-13) p = xs[e];
        len[e] = c.marginal_right(p);
    }
    return len;
}

// Piecewise-linear marginals jump at segment breaks, so the equalizing shift
// found by bisection can creep toward a kink without ever crossing it in
// floating point. Snapping the shift onto the exact break distance lets the
// flow land on the kink and the marginal switch segments.
double snap_to_breaks(const MarketInstance& inst, const std::vector<double>& xs,
                      const std::vector<int>& dec, const std::vector<int>& inc, double t,
                      double tmax) {
    double window = 1e-9 * std::max(1.0, tmax);
    double best = t, bd = window;
    auto consider = [&](double c) {
        if (c <= 0 || c > tmax) return;
        double d = std::abs(c - t);
        if (d <= bd) {
            bd = d;
            best = c;
        }
    };
    for (int e : dec)
        if (inst.edges[e].cost.kind == CostKind::pwl_convex)
            for (auto& [x1, s] : inst.edges[e].cost.segments) consider(xs[e] - x1);
    for (int e : inc)
        if (inst.edges[e].cost.kind == CostKind::pwl_convex)
            for (auto& [x1, s] : inst.edges[e].cost.segments) consider(x1 - xs[e]);
    return best;
}

struct Solver {
    const MarketInstance& inst;
    int commodity;
    double tol;
    PathFinder pf;
    std::vector<FlowPath> paths;

    Solver(const MarketInstance& i, int c, double tol_) : inst(i), commodity(c), tol(tol_), pf(i, c) {}

    double total() const {
        double s = 0;
        for (auto& p : paths) s += p.amount;
        return s;
    }

    void add_on(const std::vector<int>& route, double amt) {
        for (auto& p : paths)
            if (same_path(p.edges, route)) {
                p.amount += amt;
                return;
            }
        paths.push_back({route, amt});
    }

    double probe_h() const {
        double m = 0;
        for (auto& p : paths) m += p.amount;
        return 1e-9 * std::max(1.0, m);
    }

    void augment(double amount, double chunk) {
        double remaining = amount;
        size_t guard = 0;
        while (remaining > 1e-15) {
            if (++guard > 1000000) throw SolverError("augmentation iteration cap exceeded");
            auto xs = edge_flows_from_paths(inst, paths);
            auto len = probe_lengths(inst, xs, 1e-9 * std::max(1.0, amount));
            auto q = pf.shortest(len);
            if (!q) throw SolverError("requested magnitude exceeds network capacity");
            double room = remaining;
            for (int e : *q) {
                double cap = inst.edges[e].cost.capacity_limit();
                if (!std::isinf(cap)) room = std::min(room, cap - xs[e]);
            }
            double t = std::min(std::min(chunk, remaining), room);
            if (t <= 1e-15) throw SolverError("requested magnitude exceeds network capacity");
            add_on(*q, t);
            remaining -= t;
        }
    }

    void withdraw(double amount) {
        double remaining = amount;
        size_t guard = 0;
        while (remaining > 1e-15) {
            if (++guard > 1000000) throw SolverError("withdrawal iteration cap exceeded");
            auto xs = edge_flows_from_paths(inst, paths);
            // take from the path with the steepest removal marginal
            int best = -1;
            double bm = -kInf;
            for (size_t i = 0; i < paths.size(); ++i) {
                if (paths[i].amount <= 1e-15) continue;
                double m = path_marginal_left(inst, xs, paths[i].edges);
                if (m > bm) {
                    bm = m;
                    best = (int)i;
                }
            }
            if (best < 0) break;
            double t = std::min(remaining, paths[best].amount);
            paths[best].amount -= t;
            remaining -= t;
        }
        prune();
    }

    // Drops only truly negligible path amounts. Equalizing against a steep
    // cost (exponent just above 1) legitimately places slivers far below any
    // ordinary tolerance, and sweeping those up would undo the shift.
    void prune() {
        double residue = 0.0;
        size_t keep = 0;
        for (size_t i = 0; i < paths.size(); ++i) {
            if (paths[i].amount < 1e-250) {
                residue += paths[i].amount;
            } else {
                paths[keep++] = paths[i];
            }
        }
        paths.resize(keep);
        if (!paths.empty() && residue > 0) {
            auto it = std::max_element(paths.begin(), paths.end(),
                                       [](auto& a, auto& b) { return a.amount < b.amount; });
            it->amount += residue;
        }
    }

    // One equalization move; returns the best shift gap found before moving.
    double rebalance_step() {
        auto xs = edge_flows_from_paths(inst, paths);
        auto ins_len = insertion_lengths(inst, xs);
        auto sel_len = probe_lengths(inst, xs, probe_h());

        // The largest exact gap over all candidate moves decides convergence,
        // but the move applied is the one with the best estimated improvement
        // gap * t. A steep edge carrying a sliver equalizes in microscopic
        // shifts; ranking by gap alone lets such a move shadow a productive
        // shift between two well-loaded routes and the solver crawls.
        double best_gap = 0.0;
        double best_score = 0.0;
        int best_p = -1;
        double best_t = 0.0;
        std::vector<int> best_q;

        auto plan_shift = [&](size_t i, const std::vector<int>& q, double gap) {
            std::vector<char> in_q(inst.edges.size(), 0), in_p(inst.edges.size(), 0);
            for (int e : q) in_q[e] = 1;
            for (int e : paths[i].edges) in_p[e] = 1;
            std::vector<int> only_p, only_q;
            for (int e : paths[i].edges)
                if (!in_q[e]) only_p.push_back(e);
            for (int e : q)
                if (!in_p[e]) only_q.push_back(e);

            double tmax = paths[i].amount;
            for (int e : only_q) {
                double cap = inst.edges[e].cost.capacity_limit();
                if (!std::isinf(cap)) tmax = std::min(tmax, cap - xs[e]);
            }
            if (tmax <= 0) return;
            auto phi = [&](double t) {
                double v = 0;
                for (int e : only_p) v += inst.edges[e].cost.marginal_left(xs[e] - t);
                for (int e : only_q) v -= inst.edges[e].cost.marginal_right(xs[e] + t);
                return v;
            };
            double t;
            if (phi(tmax) >= 0) {
                t = tmax;
            } else {
                double lo = 0, hi = tmax;
                for (int it = 0; it < 80; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (phi(mid) > 0 ? lo : hi) = mid;
                }
                t = snap_to_breaks(inst, xs, only_p, only_q, 0.5 * (lo + hi), tmax);
            }
            if (t <= 0) return;
            double score = gap * t;
            if (best_p < 0 || score > best_score) {
                best_score = score;
                best_p = (int)i;
                best_q = q;
                best_t = t;
            }
        };

        for (size_t i = 0; i < paths.size(); ++i) {
            if (paths[i].amount <= 1e-13) continue;
            // Shift profitability from path P to route Q counts only the
            // symmetric difference, which is the same as shortest path under
            // lengths "left marginal on P's edges, right marginal elsewhere".
            // Try both the probed and the exact selection lengths: the probe
            // breaks ties at zero, but it also hides routes that are cheap
            // only for a sliver of flow through a steep unused edge, and
            // skipping those leaves the marginals inverted. The gap itself is
            // always exact.
            double up = path_marginal_left(inst, xs, paths[i].edges);
            std::vector<char> in_pi(inst.edges.size(), 0);
            for (int e : paths[i].edges) in_pi[e] = 1;
            auto consider = [&](const std::vector<double>& base) {
                std::vector<double> len = base;
                for (int e : paths[i].edges) len[e] = inst.edges[e].cost.marginal_left(xs[e]);
                auto q = pf.shortest(len);
                if (!q) return;
                double down = 0.0;
                for (int e : *q)
                    down += in_pi[e] ? inst.edges[e].cost.marginal_left(xs[e]) : ins_len[e];
                double gap = up - down;
                if (gap <= best_gap && gap <= tol) return;
                if (gap > best_gap) best_gap = gap;
                if (gap > tol) plan_shift(i, *q, gap);
            };
            consider(sel_len);
            consider(ins_len);
        }
        if (best_p < 0 || best_gap <= tol) return best_gap;
        paths[best_p].amount -= best_t;
        add_on(best_q, best_t);
        prune();
        return best_gap;
    }

    FlowSolution finish(double x) {
        auto xs = edge_flows_from_paths(inst, paths);
        auto ins_len = insertion_lengths(inst, xs);
        double r_minus = 0.0;
        for (auto& p : paths)
            if (p.amount > 1e-13)
                r_minus = std::max(r_minus, path_marginal_left(inst, xs, p.edges));
        double r_plus = kInf;
        auto q = pf.shortest(ins_len);
        if (q) {
            double d = 0;
            for (int e : *q) d += ins_len[e];
            r_plus = d;
        }
        FlowSolution sol;
        sol.edge_flow = xs;
        sol.paths = paths;
        // deterministic path order: lexicographic by edge-id sequence
        std::sort(sol.paths.begin(), sol.paths.end(), [&](const FlowPath& a, const FlowPath& b) {
            auto key = [&](const FlowPath& p) {
                std::vector<std::string> ids;
                for (int e : p.edges) ids.push_back(inst.edges[e].id);
                return ids;
            };
            return key(a) < key(b);
        });
        sol.magnitude = x;
        sol.certificate = std::isinf(r_plus) ? r_minus : 0.5 * (r_minus + r_plus);
        return sol;
    }
};

}  // namespace

double flow_cost(const MarketInstance& inst, const FlowSolution& sol) {
    double c = 0;
    for (size_t e = 0; e < inst.edges.size(); ++e) c += inst.edges[e].cost.value(sol.edge_flow[e]);
    return c;
}

double curve_marginal_left(const MarketInstance& inst, const FlowSolution& sol) {
    double m = 0.0;
    for (const FlowPath& p : sol.paths) {
        if (p.amount <= 1e-13) continue;
        double v = 0;
        for (int e : p.edges) v += inst.edges[e].cost.marginal_left(sol.edge_flow[e]);
        m = std::max(m, v);
    }
    return m;
}

double curve_marginal_right(const MarketInstance& inst, int commodity, const FlowSolution& sol) {
    PathFinder pf(inst, commodity);
    auto len = insertion_lengths(inst, sol.edge_flow);
    auto q = pf.shortest(len);
    if (!q) return kInf;
    double d = 0;
    for (int e : *q) d += len[e];
    return d;
}

FlowSolution min_cost_flow(const MarketInstance& inst, int commodity, double x, double tol) {
    if (x < 0) throw SolverError("flow magnitude must be non-negative");
    Solver s(inst, commodity, tol);
    if (x > 0) s.augment(x, x / 16.0);
    for (int iter = 0; iter < 100000; ++iter) {
        double g = s.rebalance_step();
        if (g <= tol) return s.finish(x);
    }
    double residual = s.rebalance_step();
    if (residual <= 10 * tol) return s.finish(x);
    throw SolverError("min-cost flow failed to converge; residual " + std::to_string(residual));
}

double max_magnitude(const MarketInstance& inst, int commodity) {
    // Standard augmenting paths on the capacitated residual graph; edges
    // without a capacity count as infinite.
    int s = inst.node_index(inst.commodities[commodity].source);
    int t = inst.node_index(inst.commodities[commodity].sink);
    size_t m = inst.edges.size();
    std::vector<double> flow(m, 0.0);
    double total = 0.0;
    for (int guard = 0; guard < 100000; ++guard) {
        // BFS over residual arcs
        std::vector<int> via(inst.nodes.size(), -2);  // edge index, +m for reverse
        via[s] = -1;
        std::deque<int> q{s};
        while (!q.empty() && via[t] == -2) {
            int u = q.front();
            q.pop_front();
            for (size_t e = 0; e < m; ++e) {
                int eu = inst.node_index(inst.edges[e].from);
                int ev = inst.node_index(inst.edges[e].to);
                double cap = inst.edges[e].cost.capacity_limit();
                if (eu == u && via[ev] == -2 && flow[e] < cap - 1e-13) {
                    via[ev] = (int)e;
                    q.push_back(ev);
                }
                if (ev == u && via[eu] == -2 && flow[e] > 1e-13) {
                    via[eu] = (int)(e + m);
                    q.push_back(eu);
                }
            }
        }
        if (via[t] == -2) return total;
        double bottleneck = kInf;
        for (int v = t; v != s;) {
            int tag = via[v];
            if (tag < (int)m) {
                double cap = inst.edges[tag].cost.capacity_limit();
                bottleneck = std::min(bottleneck, cap - flow[tag]);
                v = inst.node_index(inst.edges[tag].from);
            } else {
                bottleneck = std::min(bottleneck, flow[tag - m]);
                v = inst.node_index(inst.edges[tag - m].to);
            }
        }
        if (std::isinf(bottleneck)) return kInf;
        for (int v = t; v != s;) {
            int tag = via[v];
            if (tag < (int)m) {
                flow[tag] += bottleneck;
                v = inst.node_index(inst.edges[tag].from);
            } else {
                flow[tag - m] -= bottleneck;
                v = inst.node_index(inst.edges[tag - m].to);
            }
        }
        total += bottleneck;
    }
    throw SolverError("max-flow iteration cap exceeded");
}

MinCostCurve::MinCostCurve(const MarketInstance& inst, int commodity, double tol)
    : inst_(inst), commodity_(commodity), tol_(tol) {}

const FlowSolution& MinCostCurve::solve(double x) {
    auto it = cache_.find(x);
    if (it != cache_.end()) return it->second;
    FlowSolution sol;
    if (warm_ && warm_->magnitude > 0) {
        // warm start: reuse the previous decomposition, adjust the magnitude
        Solver s(inst_, commodity_, tol_);
        s.paths = warm_->paths;
        double have = s.total();
        bool ok = true;
        try {
            if (x > have + 1e-15)
                s.augment(x - have, std::max((x - have) / 4.0, 1e-12));
            else if (x < have - 1e-15)
                s.withdraw(have - x);
            for (int iter = 0; iter < 100000 && ok; ++iter)
                if (s.rebalance_step() <= tol_) {
                    sol = s.finish(x);
                    break;
                }
            if (sol.edge_flow.empty()) ok = false;
        } catch (const SolverError&) {
            ok = false;
        }
        if (!ok) sol = min_cost_flow(inst_, commodity_, x, tol_);
    } else {
        sol = min_cost_flow(inst_, commodity_, x, tol_);
    }
    warm_ = sol;
    auto [pos, fresh] = cache_.emplace(x, std::move(sol));
    return pos->second;
}

const FlowSolution& MinCostCurve::solution(double x) { return solve(x); }

double MinCostCurve::R(double x) { return flow_cost(inst_, solve(x)); }

double MinCostCurve::r_left(double x) { return curve_marginal_left(inst_, solve(x)); }

double MinCostCurve::r_right(double x) { return curve_marginal_right(inst_, commodity_, solve(x)); }

double MinCostCurve::r(double x) {
    double lo = r_left(x), hi = r_right(x);
    if (std::isinf(hi)) return lo;
    return 0.5 * (lo + hi);
}

OptimalMagnitude optimal_magnitude(const MarketInstance& inst, int commodity, MinCostCurve& curve) {
    const DemandFunction& d = inst.commodities[commodity].demand;
    double xmax = std::min(d.T, max_magnitude(inst, commodity));
    if (xmax <= 0) throw SolverError("no routable demand");
    if (d.value(0.0) <= curve.r_right(0.0) + 1e-15) {
        // the market clears at zero: welfare cannot increase from the start
        return {0.0, curve.solution(0.0)};
    }
    if (d.value(xmax) >= curve.r_left(xmax) - 1e-12) {
        return {xmax, curve.solution(xmax)};
    }
    double lo = 0.0, hi = xmax;
    for (int it = 0; it < 200; ++it) {
        if (hi - lo <= 1e-16 * xmax) break;
        double mid = 0.5 * (lo + hi);
        (d.value(mid) >= curve.r_left(mid) ? lo : hi) = mid;
    }
    return {lo, curve.solution(lo)};
}

OptimalMagnitude optimal_magnitude(const MarketInstance& inst, int commodity, double tol) {
    MinCostCurve curve(inst, commodity, tol);
    return optimal_magnitude(inst, commodity, curve);
}

std::vector<FlowSolution> multi_commodity_optimum(const MarketInstance& inst, double tol) {
    size_t K = inst.commodities.size();
    size_t E = inst.edges.size();
    std::vector<PathFinder> pf;
    pf.reserve(K);
    for (size_t k = 0; k < K; ++k) pf.emplace_back(inst, (int)k);
    std::vector<std::vector<FlowPath>> paths(K);

    auto totals = [&]() {
        std::vector<double> xs(E, 0.0);
        for (auto& pk : paths)
            for (auto& p : pk)
                for (int e : p.edges) xs[e] += p.amount;
        return xs;
    };
    auto magnitude = [&](size_t k) {
        double s = 0;
        for (auto& p : paths[k]) s += p.amount;
        return s;
    };
    auto add_on = [&](size_t k, const std::vector<int>& route, double amt) {
        for (auto& p : paths[k])
            if (same_path(p.edges, route)) {
                p.amount += amt;
                return;
            }
        paths[k].push_back({route, amt});
    };
    auto prune = [&](size_t k) {
        double residue = 0;
        size_t keep = 0;
        for (size_t i = 0; i < paths[k].size(); ++i) {
            if (paths[k][i].amount < 1e-14)
                residue += paths[k][i].amount;
            else
                paths[k][keep++] = paths[k][i];
        }
        paths[k].resize(keep);
        if (!paths[k].empty() && residue > 0) {
            std::max_element(paths[k].begin(), paths[k].end(),
                             [](auto& a, auto& b) { return a.amount < b.amount; })
                ->amount += residue;
        }
    };

    for (int pass = 0; pass < 20000; ++pass) {
        bool progress = false;
        for (size_t k = 0; k < K; ++k) {
            const DemandFunction& d = inst.commodities[k].demand;

            // grow while the buyer value exceeds the cheapest insertion
            double xk = magnitude(k);
            if (xk < d.T - 1e-15) {
                auto xs = totals();
                auto len = insertion_lengths(inst, xs);
                auto q = pf[k].shortest(probe_lengths(inst, xs, 1e-9 * std::max(1.0, d.T)));
                if (q) {
                    double down = 0;
                    for (int e : *q) down += len[e];
                    if (d.value(xk) > down + tol) {
                        double tcap = d.T - xk;
                        for (int e : *q) {
                            double cap = inst.edges[e].cost.capacity_limit();
                            if (!std::isinf(cap)) tcap = std::min(tcap, cap - xs[e]);
                        }
                        auto psi = [&](double t) {
                            double v = d.value(std::min(xk + t, d.T));
                            for (int e : *q) v -= inst.edges[e].cost.marginal_right(xs[e] + t);
                            return v;
                        };
                        double t = tcap;
                        if (psi(tcap) < 0) {
                            double lo = 0, hi = tcap;
                            for (int it = 0; it < 80; ++it) {
                                double mid = 0.5 * (lo + hi);
                                (psi(mid) > 0 ? lo : hi) = mid;
                            }
                            t = 0.5 * (lo + hi);
                        }
                        if (t > 1e-14) {
                            add_on(k, *q, t);
                            progress = true;
                        }
                    }
                }
            }

            // shrink while a used path's removal saving exceeds the value
            xk = magnitude(k);
            if (xk > 0) {
                auto xs = totals();
                int best = -1;
                double up = -kInf;
                for (size_t i = 0; i < paths[k].size(); ++i) {
                    if (paths[k][i].amount <= 1e-14) continue;
                    double m = path_marginal_left(inst, xs, paths[k][i].edges);
                    if (m > up) {
                        up = m;
                        best = (int)i;
                    }
                }
                if (best >= 0 && d.value(xk) < up - tol) {
                    auto& P = paths[k][best];
                    auto psi = [&](double t) {
                        double v = -d.value(xk - t);
                        for (int e : P.edges) v += inst.edges[e].cost.marginal_left(xs[e] - t);
                        return v;
                    };
                    double t = P.amount;
                    if (psi(t) < 0) {
                        double lo = 0, hi = t;
                        for (int it = 0; it < 80; ++it) {
                            double mid = 0.5 * (lo + hi);
                            (psi(mid) > 0 ? lo : hi) = mid;
                        }
                        t = 0.5 * (lo + hi);
                    }
                    if (t > 1e-14) {
                        P.amount -= t;
                        prune(k);
                        progress = true;
                    }
                }
            }

            // equalize path marginals within the commodity
            {
                auto xs = totals();
                auto ins_len = insertion_lengths(inst, xs);
                auto sel_len = probe_lengths(inst, xs, 1e-9 * std::max(1.0, d.T));
                double best_gap = 0;
                int best_p = -1;
                std::vector<int> best_q;
                for (size_t i = 0; i < paths[k].size(); ++i) {
                    if (paths[k][i].amount <= 1e-13) continue;
                    std::vector<double> len = sel_len;
                    for (int e : paths[k][i].edges)
                        len[e] = inst.edges[e].cost.marginal_left(xs[e]);
                    auto q = pf[k].shortest(len);
                    if (!q) continue;
                    double up = path_marginal_left(inst, xs, paths[k][i].edges);
                    std::vector<char> in_pi(E, 0);
                    for (int e : paths[k][i].edges) in_pi[e] = 1;
                    double down = 0;
                    for (int e : *q)
                        down += in_pi[e] ? inst.edges[e].cost.marginal_left(xs[e]) : ins_len[e];
                    if (up - down > best_gap) {
                        best_gap = up - down;
                        best_p = (int)i;
                        best_q = *q;
                    }
                }
                if (best_p >= 0 && best_gap > tol) {
                    std::vector<char> in_q(E, 0), in_p(E, 0);
                    for (int e : best_q) in_q[e] = 1;
                    for (int e : paths[k][best_p].edges) in_p[e] = 1;
                    std::vector<int> only_p, only_q;
                    for (int e : paths[k][best_p].edges)
                        if (!in_q[e]) only_p.push_back(e);
                    for (int e : best_q)
                        if (!in_p[e]) only_q.push_back(e);
                    double tmax = paths[k][best_p].amount;
                    for (int e : only_q) {
                        double cap = inst.edges[e].cost.capacity_limit();
                        if (!std::isinf(cap)) tmax = std::min(tmax, cap - xs[e]);
                    }
                    auto phi = [&](double t) {
                        double v = 0;
                        for (int e : only_p) v += inst.edges[e].cost.marginal_left(xs[e] - t);
                        for (int e : only_q) v -= inst.edges[e].cost.marginal_right(xs[e] + t);
                        return v;
                    };
                    if (tmax > 0) {
                        double t = tmax;
                        if (phi(tmax) < 0) {
                            double lo = 0, hi = tmax;
                            for (int it = 0; it < 80; ++it) {
                                double mid = 0.5 * (lo + hi);
                                (phi(mid) > 0 ? lo : hi) = mid;
                            }
                            t = snap_to_breaks(inst, xs, only_p, only_q, 0.5 * (lo + hi), tmax);
                        }
                        if (t > 1e-15) {
                            paths[k][best_p].amount -= t;
                            add_on(k, best_q, t);
                            prune(k);
                            progress = true;
                        }
                    }
                }
            }
        }
        if (!progress) {
            auto xs = totals();
            std::vector<FlowSolution> out(K);
            for (size_t k = 0; k < K; ++k) {
                FlowSolution& sol = out[k];
                sol.edge_flow.assign(E, 0.0);
                for (auto& p : paths[k])
                    for (int e : p.edges) sol.edge_flow[e] += p.amount;
                sol.paths = paths[k];
                sol.magnitude = magnitude(k);
                double r_minus = 0;
                for (auto& p : paths[k])
                    if (p.amount > 1e-13)
                        r_minus = std::max(r_minus, path_marginal_left(inst, xs, p.edges));
                auto len = insertion_lengths(inst, xs);
                auto q = pf[k].shortest(len);
                double r_plus = kInf;
                if (q) {
                    double dn = 0;
                    for (int e : *q) dn += len[e];
                    r_plus = dn;
                }
                sol.certificate = std::isinf(r_plus) ? r_minus : 0.5 * (r_minus + r_plus);
            }
            return out;
        }
    }
    throw SolverError("multi-commodity optimum failed to converge");
}

}  // namespace netpricing
