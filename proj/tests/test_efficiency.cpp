#include <doctest.h>

#include <cmath>

#include "netpricing/efficiency.hpp"
#include "netpricing/scenarios.hpp"

using namespace netpricing;

TEST_CASE("bound formulas") {
    CHECK(theoretical_bound(BoundClass::uniform, 5) == doctest::Approx(1.0));
    CHECK(theoretical_bound(BoundClass::concave, 3) == doctest::Approx(2.5));
    CHECK(theoretical_bound(BoundClass::mhr, 2) == doctest::Approx(3.0));
    CHECK(theoretical_bound(BoundClass::f_p, 3, 3.0) ==
          doctest::Approx(std::pow(10.0, 1.0 / 3.0)));
    CHECK(theoretical_bound(BoundClass::f_ced, 1, 10.0 / 7.0) ==
          doctest::Approx(1.0 + 10.0 / 17.0));
    CHECK(theoretical_bound(BoundClass::f_exp, 2, 2.0) == doctest::Approx(std::exp(1.0)));
    CHECK(std::isinf(theoretical_bound(BoundClass::xlp_monotone, 1)));
    CHECK(theoretical_bound(BoundClass::xlp_monotone, 2) ==
          doctest::Approx(2.0 * std::exp(2.0)));
    CHECK(std::isinf(theoretical_bound(BoundClass::none, 1)));
    // no monopolies, no loss
    CHECK(theoretical_bound(BoundClass::mhr, 0) == doctest::Approx(1.0));
    CHECK(theoretical_bound(BoundClass::f_p, 0, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("bound class from the demand kind") {
    CHECK(bound_class_for(DemandFunction::make_uniform(1, 1)) == BoundClass::uniform);
    CHECK(bound_class_for(DemandFunction::make_affine(1, 1)) == BoundClass::concave);
    CHECK(bound_class_for(DemandFunction::make_exponential(1, 1)) == BoundClass::mhr);
    CHECK(bound_class_for(DemandFunction::make_poly_concave(1, 1, 2)) == BoundClass::f_p);
    CHECK(bound_class_for(DemandFunction::make_ced(1, 1, 2)) == BoundClass::f_ced);
    CHECK(bound_class_for(DemandFunction::make_log_inverse(1, 2)) == BoundClass::f_exp);
    CHECK(bound_class_for(DemandFunction::make_power_elastic(1, 2, 1)) == BoundClass::none);
    // sampled pwl tags fall back on the class chain
    auto pwl = DemandFunction::make_piecewise_linear({{0, 2}, {1, 1}, {2, 0}});
    CHECK(bound_class_for(pwl) == BoundClass::concave);
}

TEST_CASE("welfare is value minus cost") {
    MarketInstance inst = build_scenario("single-good");
    FlowSolution f;
    f.edge_flow = {0.25};
    f.paths = {{{0}, 0.25}};
    f.magnitude = 0.25;
    // integral of 1-x on [0,1/4] minus (1/4)^2
    CHECK(welfare(inst, f) == doctest::Approx(0.25 - 0.03125 - 0.0625));
}

TEST_CASE("the single-good ratio is 16/15") {
    MarketInstance inst = build_scenario("single-good");
    EquilibriumSolution sol = find_equilibrium(inst);
    EfficiencyReport rep = efficiency_ratio(inst, sol);
    CHECK(rep.eta == doctest::Approx(16.0 / 15.0).epsilon(1e-5));
    CHECK(rep.bound_class == BoundClass::concave);
    CHECK(rep.M == 1);
    CHECK(rep.bound == doctest::Approx(1.5));
    CHECK(rep.slackness == doctest::Approx(1.5 - 16.0 / 15.0).epsilon(1e-4));
}

TEST_CASE("uniform demand loses nothing") {
    MarketInstance inst;
    inst.nodes = {"s", "t"};
    inst.edges = {{"e1", "s", "t", CostFunction::power(0.25, 2.0)}};
    inst.commodities.push_back({"s", "t", DemandFunction::make_uniform(1.0, 3.0)});
    inst.finalize();
    EquilibriumSolution sol = uniform_demand_equilibrium(inst);
    EfficiencyReport rep = efficiency_ratio(inst, sol);
    CHECK(rep.eta == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.bound == doctest::Approx(1.0));
}

TEST_CASE("sweep over the tight concave family") {
    auto rows = sweep("concave-tight", 1, 4);
    REQUIRE(rows.size() == 4);
    for (const SweepRow& r : rows) {
        CHECK(r.error.empty());
        CHECK(r.eta == doctest::Approx(1.0 + r.M / 2.0).epsilon(1e-6));
        CHECK(r.bound == doctest::Approx(1.0 + r.M / 2.0).epsilon(1e-9));
        CHECK(r.x_eq == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(r.x_star == doctest::Approx(r.M + 1.0).epsilon(1e-5));
    }
}
