#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "netpricing/bundles.hpp"
#include "netpricing/errors.hpp"

using namespace netpricing;

namespace {

MarketInstance items_market(std::vector<CostFunction> costs,
                            std::vector<std::vector<int>> bundles, DemandFunction d,
                            bool general = false) {
    MarketInstance inst;
    inst.nodes = {"s", "t"};
    char name = 'a';
    for (auto& c : costs) {
        inst.edges.push_back({std::string(1, name++), "s", "t", std::move(c)});
    }
    inst.mode = MarketMode::bundle;
    inst.bundles = std::move(bundles);
    inst.commodities.push_back({"s", "t", std::move(d)});
    inst.general_market = general;
    inst.finalize();
    return inst;
}

}  // namespace

TEST_CASE("min-cost allocation equalizes bundle marginals") {
    // symmetric quadratic items
    MarketInstance sym = items_market({CostFunction::power(1.0, 2.0), CostFunction::power(1.0, 2.0)},
                                      {{0}, {1}}, DemandFunction::make_affine(2.0, 1.0));
    BundleAllocation a = min_cost_allocation(sym, 1.0);
    CHECK(a.amounts[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(a.amounts[1] == doctest::Approx(0.5).epsilon(1e-6));
    REQUIRE(a.certificate.has_value());
    CHECK(*a.certificate == doctest::Approx(1.0).epsilon(1e-5));

    // asymmetric: 2 x1 = 4 x2
    MarketInstance asym = items_market({CostFunction::power(1.0, 2.0), CostFunction::power(2.0, 2.0)},
                                       {{0}, {1}}, DemandFunction::make_affine(2.0, 1.0));
    BundleAllocation b = min_cost_allocation(asym, 1.0);
    CHECK(b.amounts[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-5));
    CHECK(b.amounts[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-5));

    // one bundle spanning two items
    MarketInstance joint = items_market({CostFunction::power(1.0, 2.0), CostFunction::zero()},
                                        {{0, 1}}, DemandFunction::make_affine(2.0, 1.0));
    BundleAllocation c = min_cost_allocation(joint, 1.0);
    CHECK(c.amounts[0] == doctest::Approx(1.0));
    CHECK(c.item_flow[0] == doctest::Approx(1.0));
    CHECK(c.item_flow[1] == doctest::Approx(1.0));
}

TEST_CASE("ascending prices on a single free bundle") {
    MarketInstance inst = items_market({CostFunction::zero(), CostFunction::zero()},
                                       {{0, 1}}, DemandFunction::make_uniform(1.0, 1.0));
    BundleAllocation a = min_cost_allocation(inst, 0.5);
    AscendingState st = ascending_prices(inst, a);
    // both items are monopolies and split the value evenly
    CHECK(st.prices[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(st.prices[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(st.consumed_price == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(st.inactive.empty());
}

TEST_CASE("ascending prices retire a monopoly at a tie") {
    MarketInstance inst = items_market(
        {CostFunction::zero(), CostFunction::zero(), CostFunction::linear(0.3)},
        {{0, 1}, {0, 2}}, DemandFunction::make_uniform(1.0, 1.0), /*general=*/true);
    BundleAllocation a = min_cost_allocation(inst, 0.5);
    CHECK(a.amounts[0] == doctest::Approx(0.5));  // the free bundle wins
    AscendingState st = ascending_prices(inst, a);
    // a and b rise together until {a,c} ties at 0.3, then b retires and a
    // takes the rest of the value
    CHECK(st.prices[0] == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(st.prices[1] == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(st.prices[2] == doctest::Approx(0.3).epsilon(1e-9));
    REQUIRE(st.inactive.size() == 1);
    CHECK(st.inactive[0] == 1);
    CHECK(st.witness_bundle[0] == 1);
    CHECK(st.consumed_price == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(st.gamma == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("bundle equilibrium matches the single-good answer") {
    MarketInstance inst = items_market({CostFunction::power(1.0, 2.0)}, {{0}},
                                       DemandFunction::make_affine(1.0, 1.0));
    EquilibriumSolution sol = bundle_equilibrium(inst);
    CHECK(sol.magnitude == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(sol.prices.at("a") == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(sol.kind == EquilibriumKind::interior_root);
}

TEST_CASE("shared item collects the markup") {
    MarketInstance inst = items_market(
        {CostFunction::zero(), CostFunction::zero(), CostFunction::zero()},
        {{0, 1}, {0, 2}}, DemandFunction::make_affine(1.0, 1.0));
    EquilibriumSolution sol = bundle_equilibrium(inst);
    CHECK(sol.magnitude == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(sol.prices.at("a") == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(sol.prices.at("b") == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sol.prices.at("c") == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sol.monopoly_set == std::vector<int>{0});
}

TEST_CASE("graph instances convert to bundle markets") {
    MarketInstance graph;
    graph.nodes = {"s", "m", "t"};
    graph.edges = {
        {"e1", "s", "m", CostFunction::zero()},
        {"e2", "m", "t", CostFunction::power(1.0, 2.0)},
        {"e3", "s", "t", CostFunction::power(1.0, 2.0)},
    };
    graph.commodities.push_back({"s", "t", DemandFunction::make_affine(2.0, 1.0)});
    graph.finalize();
    MarketInstance bm = to_bundle_market(graph);
    CHECK(bm.mode == MarketMode::bundle);
    REQUIRE(bm.bundles.size() == 2);
    CHECK(bm.bundles[0] == std::vector<int>{0, 1});
    CHECK(bm.bundles[1] == std::vector<int>{2});

    // the two routes agree on the equilibrium
    EquilibriumSolution ge = find_equilibrium(graph);
    EquilibriumSolution be = bundle_equilibrium(bm);
    CHECK(be.magnitude == doctest::Approx(ge.magnitude).epsilon(1e-5));
    for (const Edge& e : graph.edges)
        CHECK(be.prices.at(e.id) == doctest::Approx(ge.prices.at(e.id)).epsilon(1e-4));
}

TEST_CASE("combinatorial table: additive values sell everything") {
    MarketInstance inst = items_market({CostFunction::zero(), CostFunction::zero()},
                                       {{0}, {1}, {0, 1}},
                                       DemandFunction::make_uniform(2.0, 1.0));
    inst.valuations = {{{0}, 1.0}, {{1}, 1.0}, {{0, 1}, 2.0}};
    inst.finalize();
    EquilibriumSolution sol = combinatorial_uniform_equilibrium(inst);
    CHECK(sol.magnitude == doctest::Approx(1.0));
    CHECK(sol.prices.at("a") + sol.prices.at("b") == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sol.welfare == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("combinatorial table: costly item limits the allocation") {
    MarketInstance inst = items_market({CostFunction::power(1.0, 2.0), CostFunction::zero()},
                                       {{0}, {0, 1}},
                                       DemandFunction::make_uniform(1.0, 1.0));
    inst.valuations = {{{0}, 1.0}, {{0, 1}, 1.0}};
    inst.finalize();
    EquilibriumSolution sol = combinatorial_uniform_equilibrium(inst);
    // value 1 meets marginal 2x at one half
    CHECK(sol.magnitude == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(sol.prices.at("a") == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.prices.at("b") == doctest::Approx(0.0).epsilon(1e-9));

    MarketInstance wrong = items_market({CostFunction::zero()}, {{0}},
                                        DemandFunction::make_affine(1.0, 1.0));
    wrong.valuations = {{{0}, 1.0}};
    wrong.finalize();
    CHECK_THROWS_AS(combinatorial_uniform_equilibrium(wrong), InapplicableError);
}

TEST_CASE("ascending invariants hold on random bundle markets") {
    std::mt19937 rng(71);
    for (int trial = 0; trial < 25; ++trial) {
        MarketInstance inst = testgen::random_bundle_market(rng);
        const DemandFunction& d = inst.commodities[0].demand;
        double x = 0.3 * d.T + 0.4 * d.T * (trial % 3) / 2.0;
        BundleAllocation alloc = min_cost_allocation(inst, x);
        // shrink until the buyers' value covers the marginal cost
        for (int k = 0; k < 60 && d.value(std::min(x, d.T)) < alloc.certificate.value_or(0.0);
             ++k) {
            x /= 2;
            alloc = min_cost_allocation(inst, x);
        }
        double target = d.value(std::min(x, d.T));
        AscendingState st = ascending_prices(inst, alloc);

        // prices never fall below the marginal, the consumed price never
        // exceeds the target, and deltas are non-negative
        for (size_t e = 0; e < inst.edges.size(); ++e)
            CHECK(st.prices[e] >= inst.edges[e].cost.marginal_left(alloc.item_flow[e]) - 1e-9);
        CHECK(st.consumed_price <= target + 1e-7);
        for (const AscendingStep& s : st.steps) CHECK(s.delta >= -1e-12);

        // no bundle ends up cheaper in utility terms than the consumed ones
        double u_star = 0;
        bool seen = false;
        for (size_t b = 0; b < inst.bundles.size(); ++b) {
            double p = 0;
            for (int e : inst.bundles[b]) p += st.prices[e];
            double u = target - p;
            if (alloc.amounts[b] > 1e-9) {
                if (!seen) {
                    u_star = u;
                    seen = true;
                } else {
                    CHECK(std::abs(u - u_star) <= 1e-5);
                }
            }
        }
        for (size_t b = 0; b < inst.bundles.size(); ++b) {
            double p = 0;
            for (int e : inst.bundles[b]) p += st.prices[e];
            CHECK(target - p <= u_star + 1e-6);
        }
    }
}
