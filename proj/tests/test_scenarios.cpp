#include <doctest.h>

#include <set>

#include "netpricing/errors.hpp"
#include "netpricing/scenarios.hpp"

using namespace netpricing;

namespace {

double expected(const std::vector<ExpectedValue>& table, const std::string& key) {
    for (const auto& e : table)
        if (e.key == key) return e.value;
    FAIL("missing expected value ", key);
    return 0;
}

}  // namespace

TEST_CASE("registry lists unique fixture ids") {
    auto list = scenario_list();
    CHECK(list.size() >= 11);
    std::set<std::string> ids;
    for (const auto& s : list) {
        CHECK(ids.insert(s.id).second);
        CHECK(!s.summary.empty());
    }
    CHECK(ids.count("single-good"));
    CHECK(ids.count("no-equilibrium"));
}

TEST_CASE("unknown ids and bad parameters are rejected") {
    CHECK_THROWS_AS(build_scenario("nope"), StructureError);
    CHECK_THROWS_AS(build_scenario("concave-tight", {{"M", 0.0}}), SchemaError);
    CHECK_THROWS_AS(build_scenario("capacitated", {{"M", 2.0}, {"r", 2.0}}), SchemaError);
    CHECK_THROWS_AS(build_scenario("unbounded", {{"r", 2.0}}), SchemaError);
}

TEST_CASE("every fixture builds") {
    for (const auto& s : scenario_list()) {
        std::map<std::string, double> params;
        for (const std::string& p : s.params) {
            if (p == "M") params["M"] = 2;
            if (p == "r") params["r"] = 3;
            if (p == "alpha") params["alpha"] = 2;
            if (p == "x_star") params["x_star"] = 10;
        }
        MarketInstance inst = build_scenario(s.id, params);
        CHECK(!inst.edges.empty());
        CHECK(!inst.commodities.empty());
    }
}

TEST_CASE("single-good expectations") {
    auto table = scenario_expected("single-good");
    CHECK(expected(table, "x_eq") == doctest::Approx(0.25));
    CHECK(expected(table, "price") == doctest::Approx(0.75));
    CHECK(expected(table, "profit") == doctest::Approx(0.125));
    CHECK(expected(table, "eta") == doctest::Approx(16.0 / 15.0));
}

TEST_CASE("concave-tight expectations scale with M") {
    auto table = scenario_expected("concave-tight", {{"M", 3.0}});
    CHECK(expected(table, "price") == doctest::Approx(2.0 + 1.0 / 3.0));
    CHECK(expected(table, "x_star") == doctest::Approx(4.0));
    CHECK(expected(table, "eta") == doctest::Approx(2.5));
}

TEST_CASE("two-source fixture shape") {
    MarketInstance inst = build_scenario("two-source-inefficient");
    CHECK(inst.edges.size() == 5);
    CHECK(inst.commodities.size() == 2);
    auto table = scenario_expected("two-source-inefficient");
    CHECK(expected(table, "x1_opt") == doctest::Approx(1.0 / 3.0));
    CHECK(expected(table, "x2_opt") == doctest::Approx(2.0));
    CHECK(expected(table, "deviation_price") == doctest::Approx(0.75));
    CHECK(expected(table, "deviation_profit") == doctest::Approx(0.125));
}

TEST_CASE("no-equilibrium fixture shape") {
    MarketInstance inst = build_scenario("no-equilibrium");
    CHECK(inst.edges.size() == 3);
    CHECK(inst.commodities.size() == 2);
    CHECK(inst.general_market);
    for (const Commodity& c : inst.commodities)
        CHECK(c.demand.kind == DemandKind::uniform);
}

TEST_CASE("the under-specified fixture has no expectations") {
    CHECK(scenario_expected("parallel-noncompetitive").empty());
}
