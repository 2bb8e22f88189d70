#include <doctest.h>

#include <random>

#include "gen.hpp"
#include "netpricing/balance.hpp"
#include "netpricing/errors.hpp"

using namespace netpricing;

namespace {

double path_price(const MarketInstance& inst, const std::vector<int>& path,
                  const std::vector<double>& prices) {
    double s = 0;
    for (int e : path) s += prices[e];
    (void)inst;
    return s;
}

}  // namespace

TEST_CASE("node potentials on a two-edge path") {
    MarketInstance inst;
    inst.nodes = {"s", "m", "t"};
    inst.edges = {
        {"e1", "s", "m", CostFunction::power(0.5, 2.0)},
        {"e2", "m", "t", CostFunction::power(1.0, 2.0)},
    };
    inst.commodities.push_back({"s", "t", DemandFunction::make_affine(4.0, 1.0)});
    inst.finalize();

    // smooth marginals at flow 1: edge marginals are 1 and 2
    std::vector<double> km = {1.0, 2.0}, kp = {1.0, 2.0}, flow = {1.0, 1.0};
    PotentialState st = node_potentials(inst, 0, km, kp, flow);
    int t = inst.node_index("t");
    CHECK(st.pi_plus[t] == doctest::Approx(3.0));
    CHECK(st.pi_minus[t] == doctest::Approx(3.0));
    CHECK(st.in_S[t]);
}

TEST_CASE("node potentials at a shared kink") {
    MarketInstance inst;
    inst.nodes = {"s", "t"};
    inst.edges = {
        {"e1", "s", "t", CostFunction::pwl_convex({{0.0, 0.0}, {1.0, 1.0}})},
        {"e2", "s", "t", CostFunction::pwl_convex({{0.0, 0.0}, {1.0, 1.0}})},
    };
    inst.commodities.push_back({"s", "t", DemandFunction::make_affine(4.0, 1.0)});
    inst.finalize();

    std::vector<double> km = {0.0, 0.0}, kp = {1.0, 1.0}, flow = {1.0, 1.0};
    PotentialState st = node_potentials(inst, 0, km, kp, flow);
    int t = inst.node_index("t");
    CHECK(st.pi_minus[t] == doctest::Approx(0.0));
    CHECK(st.pi_plus[t] == doctest::Approx(1.0));
    CHECK(!st.in_S[t]);
}

TEST_CASE("sink potentials match the curve marginals") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        MarketInstance inst = testgen::random_pwl_instance(rng);
        double x = 0.4 + 0.2 * (trial % 3);
        FlowSolution sol = min_cost_flow(inst, 0, x);
        PotentialState st = node_potentials(inst, 0, sol);
        int t = inst.node_index(inst.commodities[0].sink);
        CHECK(st.pi_minus[t] == doctest::Approx(curve_marginal_left(inst, sol)).epsilon(1e-6));
        CHECK(st.pi_plus[t] ==
              doctest::Approx(curve_marginal_right(inst, 0, sol)).epsilon(1e-6));
        CHECK(st.pi_minus[t] <= st.pi_plus[t] + 1e-9);
    }
}

TEST_CASE("balancing two parallel kinked edges") {
    MarketInstance inst;
    inst.nodes = {"s", "t"};
    inst.edges = {
        {"e1", "s", "t", CostFunction::pwl_convex({{0.0, 0.0}, {1.0, 1.0}})},
        {"e2", "s", "t", CostFunction::pwl_convex({{0.0, 0.0}, {1.0, 1.0}})},
    };
    inst.commodities.push_back({"s", "t", DemandFunction::make_affine(4.0, 1.0)});
    inst.finalize();

    FlowSolution sol;
    sol.edge_flow = {1.0, 1.0};
    sol.paths = {{{0}, 1.0}, {{1}, 1.0}};
    sol.magnitude = 2.0;
    auto c = balance_prices(inst, 0, sol, 0.5);
    CHECK(c[0] == doctest::Approx(0.5));
    CHECK(c[1] == doctest::Approx(0.5));
}

TEST_CASE("balancing a series of kinked edges") {
    MarketInstance inst;
    inst.nodes = {"s", "m", "t"};
    inst.edges = {
        {"e1", "s", "m", CostFunction::pwl_convex({{0.0, 0.0}, {1.0, 1.0}})},
        {"e2", "m", "t", CostFunction::zero()},
    };
    inst.commodities.push_back({"s", "t", DemandFunction::make_affine(4.0, 1.0)});
    inst.finalize();

    FlowSolution sol;
    sol.edge_flow = {1.0, 1.0};
    sol.paths = {{{0, 1}, 1.0}};
    sol.magnitude = 1.0;
    // first edge sits at its kink with interval [0, 1], second is smooth at 0
    auto c = balance_prices(inst, 0, sol, 0.7);
    CHECK(c[0] == doctest::Approx(0.7));
    CHECK(c[1] == doctest::Approx(0.0));

    // targets outside [r-, r+] are rejected
    CHECK_THROWS_AS(balance_prices(inst, 0, sol, 1.5), SolverError);
    CHECK_THROWS_AS(balance_prices(inst, 0, sol, -0.1), SolverError);
}

TEST_CASE("smooth instances balance to the plain marginals") {
    MarketInstance inst;
    inst.nodes = {"s", "t"};
    inst.edges = {
        {"e1", "s", "t", CostFunction::power(1.0, 2.0)},
        {"e2", "s", "t", CostFunction::power(2.0, 2.0)},
    };
    inst.commodities.push_back({"s", "t", DemandFunction::make_affine(2.0, 1.0)});
    inst.finalize();
    FlowSolution sol = min_cost_flow(inst, 0, 1.0);
    double r = curve_marginal_left(inst, sol);
    auto c = balance_prices(inst, 0, sol, r);
    CHECK(c[0] == doctest::Approx(2.0 * sol.edge_flow[0]).epsilon(1e-5));
    CHECK(c[1] == doctest::Approx(4.0 * sol.edge_flow[1]).epsilon(1e-5));
}

TEST_CASE("balanced working costs satisfy the contract on random instances") {
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 15; ++trial) {
        MarketInstance inst = testgen::random_pwl_instance(rng);
        double x = 0.5 + u(rng);
        FlowSolution sol = min_cost_flow(inst, 0, x);
        double lo = curve_marginal_left(inst, sol);
        double hi = curve_marginal_right(inst, 0, sol);
        double p_star = lo + u(rng) * (hi - lo);
        auto c = balance_prices(inst, 0, sol, p_star);

        for (size_t e = 0; e < inst.edges.size(); ++e) {
            double xe = sol.edge_flow[e];
            if (xe > 1e-12) {
                CHECK(c[e] >= inst.edges[e].cost.marginal_left(xe) - 1e-8);
                CHECK(c[e] <= inst.edges[e].cost.marginal_right(xe) + 1e-8);
            } else {
                CHECK(c[e] == doctest::Approx(inst.edges[e].cost.marginal_at_zero()));
            }
        }
        for (const FlowPath& p : sol.paths)
            CHECK(path_price(inst, p.edges, c) == doctest::Approx(p_star).epsilon(1e-7));
        for (const auto& path : inst.enumerate_paths(0))
            CHECK(path_price(inst, path, c) >= p_star - 1e-7);
    }
}
