#include "netpricing/scenarios.hpp"

#include <cmath>

#include "netpricing/errors.hpp"

namespace netpricing {

namespace {

double param(const std::map<std::string, double>& params, const std::string& key, double dflt) {
    auto it = params.find(key);
    return it == params.end() ? dflt : it->second;
}

int int_param(const std::map<std::string, double>& params, const std::string& key, int dflt,
              int lo, int hi) {
    double v = param(params, key, (double)dflt);
    int m = (int)std::lround(v);
    if (m != v || m < lo || m > hi)
        throw SchemaError("parameter " + key + " must be an integer in [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
    return m;
}

// A path s -> n1 -> ... -> t with the given per-edge cost.
MarketInstance path_instance(int M, const CostFunction& cost, DemandFunction d,
                             bool general_market = false) {
    MarketInstance inst;
    inst.general_market = general_market;
    inst.nodes.push_back("s");
    for (int i = 1; i < M; ++i) inst.nodes.push_back("n" + std::to_string(i));
    inst.nodes.push_back("t");
    for (int i = 0; i < M; ++i) {
        Edge e;
        e.id = "e" + std::to_string(i + 1);
        e.from = inst.nodes[i];
        e.to = inst.nodes[i + 1];
        e.cost = cost;
        inst.edges.push_back(e);
    }
    inst.commodities.push_back({"s", "t", std::move(d)});
    inst.finalize();
    return inst;
}

}  // namespace

std::vector<ScenarioInfo> scenario_list() {
    return {
        {"single-good", "one seller, quadratic cost, affine demand 1-x", {}},
        {"concave-tight", "M-link path meeting the concave efficiency bound exactly", {"M"}},
        {"mhr-tight",
         "M-link path with a cost spike at x_star and truncated exponential demand",
         {"M", "x_star"}},
        {"two-source-inefficient", "two sources sharing a middle link; optimum is unstable", {}},
        {"no-equilibrium", "two uniform-demand sources with no stable prices", {}},
        {"unbounded", "two cheap links under power-elastic demand x^(-1/r)", {"r"}},
        {"capacitated", "M unit-capacity links, power-elastic demand, r > M", {"M", "r"}},
        {"f_p", "M free links, polynomial-concave demand 1-x^alpha", {"M", "alpha"}},
        {"f_ced", "M free links, constant-elasticity demand (1-x)^alpha", {"M", "alpha"}},
        {"f_exp", "M free links, log-inverse demand (ln(1/x))^(1/alpha)", {"M", "alpha"}},
        {"parallel-noncompetitive",
         "two parallel sellers that still extract surplus (under-specified stub)",
         {}},
    };
}

MarketInstance build_scenario(const std::string& id,
                              const std::map<std::string, double>& params) {
    if (id == "single-good") {
        return path_instance(1, CostFunction::power(1.0, 2.0), DemandFunction::make_affine(1, 1));
    }
    if (id == "concave-tight") {
        int M = int_param(params, "M", 4, 1, 64);
        // flat at 2M+1 up to x=1, then slope -2 down to zero
        DemandFunction d = DemandFunction::make_piecewise_linear(
            {{0.0, 2.0 * M + 1.0}, {1.0, 2.0 * M + 1.0}, {1.0 + (2.0 * M + 1.0) / 2.0, 0.0}});
        return path_instance(M, CostFunction::linear(1.0 / M), std::move(d),
                             /*general_market=*/true);
    }
    if (id == "mhr-tight") {
        int M = int_param(params, "M", 4, 1, 64);
        double x_star = param(params, "x_star", 50.0);
        if (x_star <= 1.0) throw SchemaError("parameter x_star must exceed 1");
        DemandFunction d = DemandFunction::make_exponential(1.0, 1.0, 1.0 / M, x_star + 5.0);
        MarketInstance inst = path_instance(M, CostFunction::zero(), std::move(d));
        // production becomes prohibitively expensive past x_star
        inst.edges[0].cost = CostFunction::pwl_convex({{0.0, 0.0}, {x_star, 10.0}});
        inst.finalize();
        return inst;
    }
    if (id == "two-source-inefficient") {
        MarketInstance inst;
        inst.general_market = true;
        inst.nodes = {"s1", "s2", "i1", "t"};
        inst.edges = {
            {"e1", "s1", "t", CostFunction::power(1.0, 2.0)},
            {"e2", "i1", "t", CostFunction::linear(1.0)},
            {"e3", "s2", "t", CostFunction::power(1.0, 2.0)},
            {"e4", "s1", "i1", CostFunction::zero()},
            {"e5", "s2", "i1", CostFunction::power(0.5, 2.0)},
        };
        inst.commodities.push_back({"s1", "t", DemandFunction::make_affine(1, 1)});
        inst.commodities.push_back({"s2", "t", DemandFunction::make_affine(4, 1)});
        inst.finalize();
        return inst;
    }
    if (id == "no-equilibrium") {
        MarketInstance inst;
        inst.general_market = true;
        inst.nodes = {"s1", "s2", "t"};
        inst.edges = {
            {"e1", "s1", "t", CostFunction::linear(3.0)},
            {"e2", "s1", "s2", CostFunction::zero()},
            {"e3", "s2", "t", CostFunction::linear(2.0)},
        };
        inst.commodities.push_back({"s1", "t", DemandFunction::make_uniform(100.0, 1.0)});
        inst.commodities.push_back({"s2", "t", DemandFunction::make_uniform(25.0, 1.0)});
        inst.finalize();
        return inst;
    }
    if (id == "unbounded") {
        double r = param(params, "r", 2.05);
        if (r <= 2.0) throw SchemaError("parameter r must exceed the two monopolies");
        DemandFunction d = DemandFunction::make_power_elastic(1.0, r, 2000.0, 1e-6);
        return path_instance(2, CostFunction::linear(0.01), std::move(d),
                             /*general_market=*/true);
    }
    if (id == "capacitated") {
        int M = int_param(params, "M", 1, 1, 64);
        double r = param(params, "r", M + 1.0);
        if (r <= (double)M) throw SchemaError("parameter r must exceed M");
        DemandFunction d = DemandFunction::make_power_elastic(1.0, r, 2.0, 1e-6);
        return path_instance(M, CostFunction::capacity(1.0), std::move(d));
    }
    if (id == "f_p") {
        int M = int_param(params, "M", 2, 1, 64);
        double alpha = param(params, "alpha", 2.0);
        if (alpha < 1.0) throw SchemaError("parameter alpha must be >= 1");
        return path_instance(M, CostFunction::zero(),
                             DemandFunction::make_poly_concave(1.0, 1.0, alpha));
    }
    if (id == "f_ced") {
        int M = int_param(params, "M", 2, 1, 64);
        double alpha = param(params, "alpha", 2.0);
        if (alpha < 1.0) throw SchemaError("parameter alpha must be >= 1");
        return path_instance(M, CostFunction::zero(), DemandFunction::make_ced(1.0, 1.0, alpha));
    }
    if (id == "f_exp") {
        int M = int_param(params, "M", 2, 1, 64);
        double alpha = param(params, "alpha", 2.0);
        if (alpha < 1.0) throw SchemaError("parameter alpha must be >= 1");
        return path_instance(M, CostFunction::zero(),
                             DemandFunction::make_log_inverse(1.0, alpha));
    }
    if (id == "parallel-noncompetitive") {
        // stub: shape only, no expected values are recorded for it
        MarketInstance inst;
        inst.nodes = {"s", "t"};
        inst.edges = {
            {"e1", "s", "t", CostFunction::power(1.0, 2.0)},
            {"e2", "s", "t", CostFunction::power(1.0, 2.0)},
        };
        inst.commodities.push_back({"s", "t", DemandFunction::make_affine(1, 1)});
        inst.finalize();
        return inst;
    }
    throw StructureError("unknown scenario id: " + id);
}

std::vector<ExpectedValue> scenario_expected(const std::string& id,
                                             const std::map<std::string, double>& params) {
    if (id == "single-good") {
        return {
            {"x_eq", 0.25, "closed form: root of 1-x = x + 2x"},
            {"price", 0.75, "closed form: lambda(1/4)"},
            {"profit", 0.125, "closed form: 3/4*1/4 - 1/16"},
            {"x_star", 1.0 / 3.0, "closed form: root of 1-x = 2x"},
            {"welfare_opt", 1.0 / 6.0, "closed form: integral of 1-3x on [0,1/3]"},
            {"welfare_eq", 5.0 / 32.0, "closed form: integral of 1-3x on [0,1/4]"},
            {"eta", 16.0 / 15.0, "ratio of the two closed forms"},
        };
    }
    if (id == "concave-tight") {
        double M = param(params, "M", 4);
        return {
            {"x_eq", 1.0, "kink of the demand curve"},
            {"price", 2.0 + 1.0 / M, "closed form: 1/M + (2M+1-1)/M"},
            {"x_star", M + 1.0, "closed form: crossing of demand slope -2 with r=1"},
            {"welfare_opt", 2.0 * M + M * M, "closed form: surplus triangle plus plateau"},
            {"welfare_eq", 2.0 * M, "closed form: (2M+1) - 1"},
            {"eta", 1.0 + M / 2.0, "ratio of the two closed forms"},
        };
    }
    if (id == "mhr-tight") {
        double M = param(params, "M", 4);
        return {
            {"x_eq", 1.0 / M, "end of the flat demand segment"},
            {"eta_limit", 1.0 + M, "limit of the welfare ratio as x_star grows"},
        };
    }
    if (id == "two-source-inefficient") {
        return {
            {"x1_opt", 1.0 / 3.0, "closed form: 1-x = 2x on the direct link"},
            {"x2_opt", 2.0, "closed form: split 1/1 across the two s2 routes"},
            {"deviation_price", 0.75, "closed form: best response of the first seller"},
            {"deviation_profit", 0.125, "closed form: 3/4*1/4 - 1/16"},
        };
    }
    if (id == "capacitated") {
        return {
            {"eta", 1.0, "construction is efficient by design"},
        };
    }
    if (id == "no-equilibrium" || id == "unbounded" || id == "parallel-noncompetitive" ||
        id == "f_p" || id == "f_ced" || id == "f_exp") {
        return {};
    }
    throw StructureError("unknown scenario id: " + id);
}

}  // namespace netpricing
