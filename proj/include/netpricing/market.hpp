#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netpricing/demand.hpp"

namespace netpricing {

enum class CostKind { zero, linear, power, pwl_convex, capacity };

// Per-edge production cost C(x): non-decreasing, convex, C(0) = 0. The
// capacity kind is the limiting case "free up to cap, impossible beyond";
// flow routines treat cap as a hard bound instead of evaluating infinity.
class CostFunction {
public:
    CostKind kind = CostKind::zero;
    double a = 0.0;    // linear slope
    double c = 0.0;    // power coefficient
    double k = 1.0;    // power exponent, >= 1
    double cap = std::numeric_limits<double>::infinity();
    // pwl_convex: (x_start, slope) segments, x_start[0] == 0, slopes
    // non-decreasing.
    std::vector<std::pair<double, double>> segments;

    static CostFunction zero();
    static CostFunction linear(double slope);
    static CostFunction power(double coeff, double exponent);
    static CostFunction pwl_convex(std::vector<std::pair<double, double>> segments);
    static CostFunction capacity(double cap);

    double value(double x) const;
    double marginal(double x) const;  // midpoint of the one-sided marginals
    double marginal_left(double x) const;
    double marginal_right(double x) const;
    double capacity_limit() const { return kind == CostKind::capacity ? cap : std::numeric_limits<double>::infinity(); }
    // Marginal at zero; nonzero values require the general-market flag.
    double marginal_at_zero() const { return marginal_right(0.0); }
    bool is_smooth() const { return kind != CostKind::pwl_convex && kind != CostKind::capacity; }
};

struct Edge {
    std::string id;
    std::string from;
    std::string to;
    CostFunction cost;
};

struct Commodity {
    std::string source;
    std::string sink;
    DemandFunction demand;
};

enum class MarketMode { graph, bundle };

// One flow path and how much is routed on it. Edges are indices into
// MarketInstance::edges.
struct FlowPath {
    std::vector<int> edges;
    double amount = 0.0;
};

struct FlowSolution {
    std::vector<double> edge_flow;  // by edge index
    std::vector<FlowPath> paths;
    double magnitude = 0.0;
    // Common marginal of the flow paths when the solution is min-cost.
    std::optional<double> certificate;

    double flow_on(int edge) const { return edge_flow[edge]; }
};

class MarketInstance {
public:
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    std::vector<Commodity> commodities;
    MarketMode mode = MarketMode::graph;
    bool general_market = false;  // allows c_e(0) > 0
    // Caller-asserted "buyers demand far more than the network will carry";
    // enables one multi-source construction. Never inferred.
    bool large_demand = false;

    // Bundle mode: items are the edges; bundles are lists of edge indices.
    std::vector<std::vector<int>> bundles;
    // Optional monotone valuation table (bundle of edge indices -> value).
    std::vector<std::pair<std::vector<int>, double>> valuations;

    void finalize();  // builds indices, validates

    int node_index(const std::string& id) const;
    int edge_index(const std::string& id) const;
    const std::vector<int>& out_edges(int node) const { return adj_out_[node]; }
    const std::vector<std::vector<int>>& adjacency_out() const { return adj_out_; }
    const std::vector<std::vector<int>>& adjacency_in() const { return adj_in_; }

    bool single_commodity() const { return commodities.size() == 1; }

    // All simple source->sink paths of one commodity, as edge-index lists,
    // in lexicographic edge order. Throws StructureError past max_paths.
    std::vector<std::vector<int>> enumerate_paths(int commodity, size_t max_paths = 10000) const;

private:
    std::map<std::string, int> node_idx_;
    std::map<std::string, int> edge_idx_;
    std::vector<std::vector<int>> adj_out_, adj_in_;
};

// Edges whose removal disconnects the commodity's source from its sink.
std::vector<int> monopolies(const MarketInstance& inst, int commodity);

// Items contained in every positively-allocated path of the flow.
std::vector<int> virtual_monopolies(const MarketInstance& inst, const FlowSolution& flow,
                                    double tol = 1e-12);
// Bundle-mode variant over a bundle -> amount allocation.
std::vector<int> virtual_monopolies(const MarketInstance& inst,
                                    const std::vector<double>& bundle_amounts,
                                    double tol = 1e-12);

struct SeriesParallelResult {
    bool series_parallel = false;
    std::vector<std::string> trace;  // reduction steps in order
};

// Adds a super-source over all commodity sources, then applies iterated
// series/parallel reductions; true iff the graph collapses to a single edge.
SeriesParallelResult is_series_parallel(const MarketInstance& inst);

}  // namespace netpricing
