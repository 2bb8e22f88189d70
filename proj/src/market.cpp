#include "netpricing/market.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <set>

#include "netpricing/errors.hpp"

namespace netpricing {

CostFunction CostFunction::zero() { return CostFunction{}; }

CostFunction CostFunction::linear(double slope) {
    if (slope < 0) throw SchemaError("linear cost slope must be >= 0");
    CostFunction f;
    f.kind = CostKind::linear;
    f.a = slope;
    return f;
}

CostFunction CostFunction::power(double coeff, double exponent) {
    if (coeff < 0 || exponent < 1.0) throw SchemaError("power cost needs coeff >= 0, exponent >= 1");
    CostFunction f;
    f.kind = CostKind::power;
    f.c = coeff;
    f.k = exponent;
    return f;
}

CostFunction CostFunction::pwl_convex(std::vector<std::pair<double, double>> segments) {
    if (segments.empty() || segments.front().first != 0.0)
        throw SchemaError("pwl cost needs segments starting at x = 0");
    for (size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].second < 0) throw SchemaError("pwl cost slopes must be >= 0");
        if (i > 0 && segments[i].first <= segments[i - 1].first)
            throw SchemaError("pwl cost segment starts must increase");
        if (i > 0 && segments[i].second < segments[i - 1].second - 1e-15)
            throw SchemaError("pwl cost slopes must be non-decreasing (convexity)");
    }
    CostFunction f;
    f.kind = CostKind::pwl_convex;
    f.segments = std::move(segments);
    return f;
}

CostFunction CostFunction::capacity(double cap) {
    if (cap <= 0) throw SchemaError("capacity must be positive");
    CostFunction f;
    f.kind = CostKind::capacity;
    f.cap = cap;
    return f;
}

double CostFunction::value(double x) const {
    if (x < 0) x = 0;
    switch (kind) {
        case CostKind::zero:
            return 0.0;
        case CostKind::linear:
            return a * x;
        case CostKind::power:
            return c * std::pow(x, k);
        case CostKind::pwl_convex: {
            double acc = 0.0;
            for (size_t i = 0; i < segments.size(); ++i) {
                double x1 = segments[i].first;
                double x2 = (i + 1 < segments.size()) ? segments[i + 1].first
                                                      : std::numeric_limits<double>::infinity();
                if (x <= x1) break;
                acc += segments[i].second * (std::min(x, x2) - x1);
            }
            return acc;
        }
        case CostKind::capacity:
            return 0.0;  // flow routines enforce x <= cap as a hard bound
    }
    return 0.0;
}

double CostFunction::marginal_left(double x) const {
    if (x <= 0) return 0.0;
    switch (kind) {
        case CostKind::zero:
            return 0.0;
        case CostKind::linear:
            return a;
        case CostKind::power:
            return c * k * std::pow(x, k - 1.0);
        case CostKind::pwl_convex: {
            double slope = segments.front().second;
            for (auto& [x1, s] : segments)
                if (x > x1) slope = s;
            return slope;
        }
        case CostKind::capacity:
            return 0.0;
    }
    return 0.0;
}

double CostFunction::marginal_right(double x) const {
    if (x < 0) x = 0;
    switch (kind) {
        case CostKind::zero:
            return 0.0;
        case CostKind::linear:
            return a;
        case CostKind::power:
            return c * k * std::pow(x, k - 1.0);
        case CostKind::pwl_convex: {
            double slope = segments.front().second;
            for (auto& [x1, s] : segments)
                if (x >= x1) slope = s;
            return slope;
        }
        case CostKind::capacity:
            return x >= cap ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return 0.0;
}

double CostFunction::marginal(double x) const {
    double lo = marginal_left(x), hi = marginal_right(x);
    if (std::isinf(hi)) return lo;
    return 0.5 * (lo + hi);
}

void MarketInstance::finalize() {
    node_idx_.clear();
    edge_idx_.clear();
    for (size_t i = 0; i < nodes.size(); ++i) {
        if (!node_idx_.emplace(nodes[i], (int)i).second)
            throw StructureError("duplicate node id: " + nodes[i]);
    }
    adj_out_.assign(nodes.size(), {});
    adj_in_.assign(nodes.size(), {});
    for (size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        if (!edge_idx_.emplace(e.id, (int)i).second)
            throw StructureError("duplicate edge id: " + e.id);
        if (mode == MarketMode::graph) {
            auto u = node_idx_.find(e.from), v = node_idx_.find(e.to);
            if (u == node_idx_.end() || v == node_idx_.end())
                throw StructureError("edge " + e.id + " references an unknown node");
            if (u->second == v->second) throw StructureError("self loop on edge " + e.id);
            adj_out_[u->second].push_back((int)i);
            adj_in_[v->second].push_back((int)i);
        }
        if (!general_market && e.cost.marginal_at_zero() > 0 && e.cost.kind != CostKind::capacity)
            throw StructureError("edge " + e.id +
                                 " has nonzero marginal cost at 0; set the general-market flag");
    }
    if (mode == MarketMode::graph) {
        for (const Commodity& c : commodities) {
            int s = node_index(c.source), t = node_index(c.sink);
            // sink reachability from source
            std::vector<char> seen(nodes.size(), 0);
            std::deque<int> q{s};
            seen[s] = 1;
            while (!q.empty()) {
                int u = q.front();
                q.pop_front();
                for (int ei : adj_out_[u]) {
                    int v = node_index(edges[ei].to);
                    if (!seen[v]) {
                        seen[v] = 1;
                        q.push_back(v);
                    }
                }
            }
            if (!seen[t]) throw StructureError("sink " + c.sink + " unreachable from " + c.source);
        }
    } else {
        if (bundles.empty()) throw StructureError("bundle-mode instance has an empty bundle family");
        for (auto& b : bundles) {
            if (b.empty()) throw SchemaError("bundles must be non-empty");
            for (int e : b)
                if (e < 0 || e >= (int)edges.size()) throw SchemaError("bundle references unknown item");
        }
        // monotone valuation check (if a table is present)
        for (auto& [s1, v1] : valuations)
            for (auto& [s2, v2] : valuations) {
                if (std::includes(s2.begin(), s2.end(), s1.begin(), s1.end()) && v2 < v1 - 1e-12)
                    throw SchemaError("valuation table is not monotone under inclusion");
            }
    }
}

int MarketInstance::node_index(const std::string& id) const {
    auto it = node_idx_.find(id);
    if (it == node_idx_.end()) throw StructureError("unknown node id: " + id);
    return it->second;
}

int MarketInstance::edge_index(const std::string& id) const {
    auto it = edge_idx_.find(id);
    if (it == edge_idx_.end()) throw StructureError("unknown edge id: " + id);
    return it->second;
}

std::vector<std::vector<int>> MarketInstance::enumerate_paths(int commodity,
                                                              size_t max_paths) const {
    const Commodity& c = commodities.at(commodity);
    int s = node_index(c.source), t = node_index(c.sink);
    std::vector<std::vector<int>> result;
    std::vector<int> stack;
    std::vector<char> on_path(nodes.size(), 0);
    std::function<void(int)> dfs = [&](int u) {
        if (u == t) {
            result.push_back(stack);
            if (result.size() > max_paths)
                throw StructureError("path enumeration exceeded the cap of " +
                                     std::to_string(max_paths));
            return;
        }
        on_path[u] = 1;
        // lexicographic edge-id order for deterministic output
        std::vector<int> outs = adj_out_[u];
        std::sort(outs.begin(), outs.end(),
                  [&](int a, int b) { return edges[a].id < edges[b].id; });
        for (int ei : outs) {
            int v = node_index(edges[ei].to);
            if (on_path[v]) continue;
            stack.push_back(ei);
            dfs(v);
            stack.pop_back();
        }
        on_path[u] = 0;
    };
    dfs(s);
    return result;
}

std::vector<int> monopolies(const MarketInstance& inst, int commodity) {
    const Commodity& c = inst.commodities.at(commodity);
    int s = inst.node_index(c.source), t = inst.node_index(c.sink);
    auto reaches = [&](int skip_edge) {
        std::vector<char> seen(inst.nodes.size(), 0);
        std::deque<int> q{s};
        seen[s] = 1;
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            for (int ei : inst.adjacency_out()[u]) {
                if (ei == skip_edge) continue;
                int v = inst.node_index(inst.edges[ei].to);
                if (!seen[v]) {
                    seen[v] = 1;
                    q.push_back(v);
                }
            }
        }
        return (bool)seen[t];
    };
    if (!reaches(-1)) throw StructureError("sink unreachable from source");
    std::vector<int> out;
    for (int ei = 0; ei < (int)inst.edges.size(); ++ei)
        if (!reaches(ei)) out.push_back(ei);
    return out;
}

std::vector<int> virtual_monopolies(const MarketInstance&, const FlowSolution& flow,
                                    double tol) {
    if (flow.magnitude <= tol) throw StructureError("virtual monopolies need a positive allocation");
    std::vector<int> common;
    bool first = true;
    for (const FlowPath& p : flow.paths) {
        if (p.amount <= tol) continue;
        std::vector<int> es = p.edges;
        std::sort(es.begin(), es.end());
        if (first) {
            common = es;
            first = false;
        } else {
            std::vector<int> next;
            std::set_intersection(common.begin(), common.end(), es.begin(), es.end(),
                                  std::back_inserter(next));
            common = std::move(next);
        }
    }
    if (first) throw StructureError("virtual monopolies need a positive allocation");
    return common;
}

std::vector<int> virtual_monopolies(const MarketInstance& inst,
                                    const std::vector<double>& bundle_amounts, double tol) {
    std::vector<int> common;
    bool first = true;
    for (size_t bi = 0; bi < bundle_amounts.size(); ++bi) {
        if (bundle_amounts[bi] <= tol) continue;
        std::vector<int> es = inst.bundles.at(bi);
        std::sort(es.begin(), es.end());
        if (first) {
            common = es;
            first = false;
        } else {
            std::vector<int> next;
            std::set_intersection(common.begin(), common.end(), es.begin(), es.end(),
                                  std::back_inserter(next));
            common = std::move(next);
        }
    }
    if (first) throw StructureError("virtual monopolies need a positive allocation");
    return common;
}

SeriesParallelResult is_series_parallel(const MarketInstance& inst) {
    if (inst.mode != MarketMode::graph) throw StructureError("series-parallel test needs graph mode");
    std::set<std::string> sinks;
    for (auto& c : inst.commodities) sinks.insert(c.sink);
    if (sinks.size() != 1)
        throw StructureError("series-parallel test supports a single sink only");
    const std::string sink = *sinks.begin();

    // Work on a multigraph of (from, to) pairs with a super-source.
    struct WEdge {
        int from, to;
        std::string label;
    };
    std::map<std::string, int> ni;
    auto idx = [&](const std::string& n) {
        auto [it, fresh] = ni.emplace(n, (int)ni.size());
        return it->second;
    };
    std::vector<WEdge> es;
    for (const Edge& e : inst.edges) es.push_back({idx(e.from), idx(e.to), e.id});
    int super = idx("__super_source__");
    std::set<std::string> sources;
    for (auto& c : inst.commodities) sources.insert(c.source);
    for (auto& s : sources) es.push_back({super, idx(s), "super->" + s});
    int tn = idx(sink);

    SeriesParallelResult res;
    bool changed = true;
    while (changed) {
        changed = false;
        // parallel reduction: two edges with identical endpoints merge
        for (size_t i = 0; i < es.size() && !changed; ++i)
            for (size_t j = i + 1; j < es.size() && !changed; ++j)
                if (es[i].from == es[j].from && es[i].to == es[j].to) {
                    res.trace.push_back("parallel(" + es[i].label + "," + es[j].label + ")");
                    es[i].label = "[" + es[i].label + "|" + es[j].label + "]";
                    es.erase(es.begin() + j);
                    changed = true;
                }
        if (changed) continue;
        // series reduction: internal node with exactly one in and one out edge
        std::map<int, std::pair<int, int>> deg;  // node -> (in, out)
        for (auto& e : es) {
            deg[e.from].second++;
            deg[e.to].first++;
        }
        for (auto& [v, d] : deg) {
            if (v == super || v == tn) continue;
            if (d.first == 1 && d.second == 1) {
                int in = -1, out = -1;
                for (size_t i = 0; i < es.size(); ++i) {
                    if (es[i].to == v) in = (int)i;
                    if (es[i].from == v) out = (int)i;
                }
                if (es[in].from == es[out].to) continue;  // would create a self loop
                res.trace.push_back("series(" + es[in].label + "," + es[out].label + ")");
                es[in].label = "[" + es[in].label + ";" + es[out].label + "]";
                es[in].to = es[out].to;
                es.erase(es.begin() + out);
                changed = true;
                break;
            }
        }
    }
    res.series_parallel = (es.size() == 1 && es[0].from == super && es[0].to == tn);
    return res;
}

}  // namespace netpricing
