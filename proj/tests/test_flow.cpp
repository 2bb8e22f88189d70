#include <doctest.h>

#include <cmath>
#include <random>

#include "gen.hpp"
#include "netpricing/errors.hpp"
#include "netpricing/flow.hpp"

using namespace netpricing;

namespace {

MarketInstance two_parallel() {
    MarketInstance inst;
    inst.nodes = {"s", "t"};
    inst.edges = {
        {"e1", "s", "t", CostFunction::power(1.0, 2.0)},
        {"e2", "s", "t", CostFunction::power(2.0, 2.0)},
    };
    inst.commodities.push_back({"s", "t", DemandFunction::make_affine(2.0, 1.0)});
    inst.finalize();
    return inst;
}

MarketInstance single_edge(CostFunction c, DemandFunction d) {
    MarketInstance inst;
    inst.nodes = {"s", "t"};
    inst.edges = {{"e1", "s", "t", std::move(c)}};
    inst.commodities.push_back({"s", "t", std::move(d)});
    inst.finalize();
    return inst;
}

}  // namespace

TEST_CASE("min-cost split across two quadratic edges") {
    MarketInstance inst = two_parallel();
    FlowSolution sol = min_cost_flow(inst, 0, 1.0);
    // marginals equalize: 2 x1 = 4 x2 with x1 + x2 = 1
    CHECK(sol.edge_flow[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
    CHECK(sol.edge_flow[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
    CHECK(sol.magnitude == doctest::Approx(1.0));
    CHECK(flow_cost(inst, sol) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    REQUIRE(sol.certificate.has_value());
    CHECK(*sol.certificate == doctest::Approx(4.0 / 3.0).epsilon(1e-6));
    double total = 0;
    for (const FlowPath& p : sol.paths) total += p.amount;
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("min-cost curve on a single edge") {
    MarketInstance inst = single_edge(CostFunction::power(1.0, 2.0),
                                      DemandFunction::make_affine(1.0, 1.0));
    MinCostCurve curve(inst, 0);
    CHECK(curve.R(0.5) == doctest::Approx(0.25));
    CHECK(curve.r(0.5) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(curve.r_left(0.7) == doctest::Approx(1.4).epsilon(1e-6));
    CHECK(curve.R(0.0) == doctest::Approx(0.0));
}

TEST_CASE("capacity bounds the routable magnitude") {
    // series caps: the tighter one binds
    MarketInstance series;
    series.nodes = {"s", "m", "t"};
    series.edges = {
        {"e1", "s", "m", CostFunction::capacity(2.0)},
        {"e2", "m", "t", CostFunction::capacity(1.5)},
    };
    series.commodities.push_back({"s", "t", DemandFunction::make_uniform(1.0, 5.0)});
    series.finalize();
    CHECK(max_magnitude(series, 0) == doctest::Approx(1.5));
    CHECK_THROWS_AS(min_cost_flow(series, 0, 1.6), SolverError);
    FlowSolution at_cap = min_cost_flow(series, 0, 1.5);
    CHECK(at_cap.magnitude == doctest::Approx(1.5));

    // parallel caps add
    MarketInstance par;
    par.nodes = {"s", "t"};
    par.edges = {
        {"e1", "s", "t", CostFunction::capacity(1.0)},
        {"e2", "s", "t", CostFunction::capacity(2.0)},
    };
    par.commodities.push_back({"s", "t", DemandFunction::make_uniform(1.0, 5.0)});
    par.finalize();
    CHECK(max_magnitude(par, 0) == doctest::Approx(3.0));

    // uncapped network routes anything
    CHECK(std::isinf(max_magnitude(two_parallel(), 0)));
}

TEST_CASE("optimal magnitude: interior, population corner, capacity corner") {
    // interior: 1 - x = 2x at x = 1/3
    MarketInstance interior = single_edge(CostFunction::power(1.0, 2.0),
                                          DemandFunction::make_affine(1.0, 1.0));
    OptimalMagnitude o1 = optimal_magnitude(interior);
    CHECK(o1.x_star == doctest::Approx(1.0 / 3.0).epsilon(1e-7));

    // free edge: serve the whole population
    MarketInstance corner = single_edge(CostFunction::zero(),
                                        DemandFunction::make_affine(1.0, 1.0));
    CHECK(optimal_magnitude(corner).x_star == doctest::Approx(1.0));

    // capacity binds before demand runs out
    MarketInstance capped = single_edge(CostFunction::capacity(0.5),
                                        DemandFunction::make_affine(1.0, 1.0));
    CHECK(optimal_magnitude(capped).x_star == doctest::Approx(0.5));

    // cost too steep to serve anyone
    MarketInstance dead;
    dead.nodes = {"s", "t"};
    dead.edges = {{"e1", "s", "t", CostFunction::pwl_convex({{0.0, 5.0}})}};
    dead.commodities.push_back({"s", "t", DemandFunction::make_affine(1.0, 1.0)});
    dead.general_market = true;
    dead.finalize();
    CHECK(optimal_magnitude(dead).x_star == doctest::Approx(0.0));
}

TEST_CASE("decomposition paths share a common marginal") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        MarketInstance inst = testgen::random_dag(rng, testgen::random_concave_demand(rng));
        double x = 0.3 + 0.1 * (trial % 5);
        FlowSolution sol = min_cost_flow(inst, 0, x);
        double lo = curve_marginal_left(inst, sol);
        double hi = curve_marginal_right(inst, 0, sol);
        CHECK(lo <= hi + 1e-6);
        double total = 0;
        for (const FlowPath& p : sol.paths) total += p.amount;
        CHECK(total == doctest::Approx(x).epsilon(1e-9));
        // edge flows match the decomposition
        std::vector<double> ef(inst.edges.size(), 0.0);
        for (const FlowPath& p : sol.paths)
            for (int e : p.edges) ef[e] += p.amount;
        for (size_t e = 0; e < ef.size(); ++e)
            CHECK(ef[e] == doctest::Approx(sol.edge_flow[e]).epsilon(1e-9));
    }
}

TEST_CASE("min-cost curve is convex with monotone marginals") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 8; ++trial) {
        MarketInstance inst = testgen::random_dag(rng, testgen::random_concave_demand(rng));
        MinCostCurve curve(inst, 0);
        double span = inst.commodities[0].demand.T;
        std::vector<double> R(33), r(33);
        for (int i = 0; i <= 32; ++i) {
            double x = span * i / 32.0;
            R[i] = curve.R(x);
            r[i] = curve.r(x);
        }
        for (int i = 1; i < 32; ++i) {
            CHECK(R[i + 1] - R[i] >= R[i] - R[i - 1] - 1e-7);  // convexity
            CHECK(r[i + 1] >= r[i] - 1e-7);                    // monotone marginal
        }
        // finite differences agree with the reported marginal
        double h = span / 512.0;
        for (int i = 4; i <= 28; i += 8) {
            double x = span * i / 32.0;
            double fd = (curve.R(x + h) - curve.R(x - h)) / (2 * h);
            CHECK(fd == doctest::Approx(curve.r(x)).epsilon(2e-3));
        }
    }
}

TEST_CASE("joint optimum for two sources") {
    MarketInstance inst;
    inst.nodes = {"s1", "s2", "i1", "t"};
    inst.edges = {
        {"e1", "s1", "t", CostFunction::power(1.0, 2.0)},
        {"e2", "i1", "t", CostFunction::linear(1.0)},
        {"e3", "s2", "t", CostFunction::power(1.0, 2.0)},
        {"e4", "s1", "i1", CostFunction::zero()},
        {"e5", "s2", "i1", CostFunction::power(0.5, 2.0)},
    };
    inst.commodities.push_back({"s1", "t", DemandFunction::make_affine(1.0, 1.0)});
    inst.commodities.push_back({"s2", "t", DemandFunction::make_affine(4.0, 1.0)});
    inst.general_market = true;
    inst.finalize();

    auto flows = multi_commodity_optimum(inst);
    REQUIRE(flows.size() == 2);
    // first source: marginal 2x meets 1 - x at 1/3, the shared linear edge is
    // too expensive for it
    CHECK(flows[0].magnitude == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    CHECK(flows[0].edge_flow[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    // second source splits 2 units evenly between its direct edge and the
    // linear edge, both at marginal 2
    CHECK(flows[1].magnitude == doctest::Approx(2.0).epsilon(1e-5));
    CHECK(flows[1].edge_flow[2] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(flows[1].edge_flow[4] == doctest::Approx(1.0).epsilon(1e-4));
}
