#include "netpricing/json_io.hpp"

#include <fstream>

#include "netpricing/errors.hpp"

namespace netpricing {

namespace {

double num_at(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw SchemaError(path + "." + key + ": missing");
    if (!j[key].is_number()) throw SchemaError(path + "." + key + ": expected a number");
    double v = j[key].get<double>();
    if (!std::isfinite(v)) throw SchemaError(path + "." + key + ": must be finite");
    return v;
}

double num_or(const json& j, const std::string& key, double dflt, const std::string& path) {
    if (!j.contains(key)) return dflt;
    return num_at(j, key, path);
}

std::string str_at(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key) || !j[key].is_string())
        throw SchemaError(path + "." + key + ": expected a string");
    return j[key].get<std::string>();
}

CostFunction parse_cost(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected a cost object");
    std::string kind = str_at(j, "kind", path);
    if (kind == "zero") return CostFunction::zero();
    if (kind == "linear") return CostFunction::linear(num_at(j, "slope", path));
    if (kind == "power")
        return CostFunction::power(num_at(j, "coeff", path), num_at(j, "exponent", path));
    if (kind == "capacity") return CostFunction::capacity(num_at(j, "cap", path));
    if (kind == "pwl") {
        if (!j.contains("segments") || !j["segments"].is_array())
            throw SchemaError(path + ".segments: expected an array of [x, slope] pairs");
        std::vector<std::pair<double, double>> segs;
        for (auto& s : j["segments"]) {
            if (!s.is_array() || s.size() != 2)
                throw SchemaError(path + ".segments: each entry must be [x, slope]");
            segs.emplace_back(s[0].get<double>(), s[1].get<double>());
        }
        return CostFunction::pwl_convex(std::move(segs));
    }
    throw SchemaError(path + ".kind: unknown cost kind '" + kind + "'");
}

json cost_to_json(const CostFunction& c) {
    json j;
    switch (c.kind) {
        case CostKind::zero: j["kind"] = "zero"; break;
        case CostKind::linear:
            j["kind"] = "linear";
            j["slope"] = c.a;
            break;
        case CostKind::power:
            j["kind"] = "power";
            j["coeff"] = c.c;
            j["exponent"] = c.k;
            break;
        case CostKind::capacity:
            j["kind"] = "capacity";
            j["cap"] = c.cap;
            break;
        case CostKind::pwl_convex: {
            j["kind"] = "pwl";
            json segs = json::array();
            for (auto& [x, m] : c.segments) segs.push_back(json::array({x, m}));
            j["segments"] = segs;
            break;
        }
    }
    return j;
}

DemandFunction parse_demand(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected a demand object");
    std::string kind = str_at(j, "kind", path);
    if (kind == "uniform")
        return DemandFunction::make_uniform(num_at(j, "value", path),
                                            num_at(j, "population", path));
    if (kind == "affine")
        return DemandFunction::make_affine(num_at(j, "intercept", path),
                                           num_at(j, "slope", path));
    if (kind == "poly_concave")
        return DemandFunction::make_poly_concave(num_at(j, "scale", path),
                                                 num_at(j, "root", path),
                                                 num_at(j, "alpha", path));
    if (kind == "ced")
        return DemandFunction::make_ced(num_at(j, "scale", path), num_at(j, "root", path),
                                        num_at(j, "alpha", path));
    if (kind == "exponential")
        return DemandFunction::make_exponential(num_at(j, "scale", path),
                                                num_at(j, "rate", path),
                                                num_or(j, "x_trunc", -1.0, path),
                                                num_or(j, "population", -1.0, path));
    if (kind == "power_elastic")
        return DemandFunction::make_power_elastic(num_at(j, "scale", path), num_at(j, "r", path),
                                                  num_at(j, "population", path),
                                                  num_or(j, "eps", -1.0, path));
    if (kind == "log_inverse")
        return DemandFunction::make_log_inverse(num_at(j, "scale", path),
                                                num_at(j, "alpha", path));
    if (kind == "pwl") {
        if (!j.contains("knots") || !j["knots"].is_array())
            throw SchemaError(path + ".knots: expected an array of [x, value] pairs");
        std::vector<std::pair<double, double>> knots;
        for (auto& s : j["knots"]) {
            if (!s.is_array() || s.size() != 2)
                throw SchemaError(path + ".knots: each entry must be [x, value]");
            knots.emplace_back(s[0].get<double>(), s[1].get<double>());
        }
        return DemandFunction::make_piecewise_linear(std::move(knots));
    }
    throw SchemaError(path + ".kind: unknown demand kind '" + kind + "'");
}

json demand_to_json(const DemandFunction& d) {
    json j;
    switch (d.kind) {
        case DemandKind::uniform:
            j["kind"] = "uniform";
            j["value"] = d.l0;
            j["population"] = d.T;
            break;
        case DemandKind::affine:
            j["kind"] = "affine";
            j["intercept"] = d.a;
            j["slope"] = d.b;
            break;
        case DemandKind::poly_concave:
            j["kind"] = "poly_concave";
            j["scale"] = d.l0;
            j["root"] = d.a;
            j["alpha"] = d.alpha;
            break;
        case DemandKind::ced:
            j["kind"] = "ced";
            j["scale"] = d.l0;
            j["root"] = d.a;
            j["alpha"] = d.alpha;
            break;
        case DemandKind::exponential:
            j["kind"] = "exponential";
            j["scale"] = d.l0;
            j["rate"] = d.k;
            if (d.x_trunc >= 0) j["x_trunc"] = d.x_trunc;
            j["population"] = d.T;
            break;
        case DemandKind::power_elastic:
            j["kind"] = "power_elastic";
            j["scale"] = d.a;
            j["r"] = d.r;
            j["population"] = d.T;
            j["eps"] = d.eps;
            break;
        case DemandKind::log_inverse:
            j["kind"] = "log_inverse";
            j["scale"] = d.a;
            j["alpha"] = d.alpha;
            break;
        case DemandKind::piecewise_linear: {
            j["kind"] = "pwl";
            json knots = json::array();
            for (auto& [x, v] : d.breaks) knots.push_back(json::array({x, v}));
            j["knots"] = knots;
            break;
        }
    }
    return j;
}

}  // namespace

MarketInstance parse_instance(const json& j) {
    if (!j.is_object()) throw SchemaError("instance: expected a JSON object");
    MarketInstance inst;
    std::string mode = j.contains("mode") ? str_at(j, "mode", "instance") : "graph";
    if (mode == "graph")
        inst.mode = MarketMode::graph;
    else if (mode == "bundle")
        inst.mode = MarketMode::bundle;
    else
        throw SchemaError("instance.mode: expected 'graph' or 'bundle'");

    if (!j.contains("nodes") || !j["nodes"].is_array())
        throw SchemaError("instance.nodes: expected an array of ids");
    for (auto& n : j["nodes"]) {
        if (!n.is_string()) throw SchemaError("instance.nodes: ids must be strings");
        inst.nodes.push_back(n.get<std::string>());
    }

    if (!j.contains("edges") || !j["edges"].is_array())
        throw SchemaError("instance.edges: expected an array");
    for (size_t i = 0; i < j["edges"].size(); ++i) {
        const json& je = j["edges"][i];
        std::string path = "instance.edges[" + std::to_string(i) + "]";
        Edge e;
        e.id = str_at(je, "id", path);
        e.from = str_at(je, "from", path);
        e.to = str_at(je, "to", path);
        if (!je.contains("cost")) throw SchemaError(path + ".cost: missing");
        e.cost = parse_cost(je["cost"], path + ".cost");
        inst.edges.push_back(std::move(e));
    }

    if (!j.contains("commodities") || !j["commodities"].is_array() || j["commodities"].empty())
        throw SchemaError("instance.commodities: expected a non-empty array");
    for (size_t i = 0; i < j["commodities"].size(); ++i) {
        const json& jc = j["commodities"][i];
        std::string path = "instance.commodities[" + std::to_string(i) + "]";
        Commodity c;
        c.source = str_at(jc, "source", path);
        c.sink = str_at(jc, "sink", path);
        if (!jc.contains("demand")) throw SchemaError(path + ".demand: missing");
        c.demand = parse_demand(jc["demand"], path + ".demand");
        inst.commodities.push_back(std::move(c));
    }

    auto edge_ref = [&](const json& v, const std::string& path) {
        if (!v.is_string()) throw SchemaError(path + ": edge refs must be strings");
        std::string id = v.get<std::string>();
        for (size_t e = 0; e < inst.edges.size(); ++e)
            if (inst.edges[e].id == id) return (int)e;
        throw SchemaError(path + ": unknown edge id '" + id + "'");
    };
    if (j.contains("bundles")) {
        if (!j["bundles"].is_array()) throw SchemaError("instance.bundles: expected an array");
        for (size_t b = 0; b < j["bundles"].size(); ++b) {
            std::string path = "instance.bundles[" + std::to_string(b) + "]";
            if (!j["bundles"][b].is_array()) throw SchemaError(path + ": expected an array");
            std::vector<int> items;
            for (auto& v : j["bundles"][b]) items.push_back(edge_ref(v, path));
            inst.bundles.push_back(std::move(items));
        }
    }
    if (j.contains("valuations")) {
        if (!j["valuations"].is_array())
            throw SchemaError("instance.valuations: expected an array");
        for (size_t v = 0; v < j["valuations"].size(); ++v) {
            std::string path = "instance.valuations[" + std::to_string(v) + "]";
            const json& jv = j["valuations"][v];
            if (!jv.is_object() || !jv.contains("set") || !jv["set"].is_array())
                throw SchemaError(path + ": expected {set, value}");
            std::vector<int> items;
            for (auto& s : jv["set"]) items.push_back(edge_ref(s, path + ".set"));
            inst.valuations.emplace_back(std::move(items), num_at(jv, "value", path));
        }
    }
    if (j.contains("flags")) {
        if (!j["flags"].is_array()) throw SchemaError("instance.flags: expected an array");
        for (auto& f : j["flags"]) {
            std::string flag = f.is_string() ? f.get<std::string>() : "";
            if (flag == "general-market")
                inst.general_market = true;
            else if (flag == "large-demand")
                inst.large_demand = true;
            else
                throw SchemaError("instance.flags: unknown flag '" + flag + "'");
        }
    }
    try {
        inst.finalize();
    } catch (const SchemaError&) {
        throw;
    } catch (const StructureError& ex) {
        throw SchemaError(std::string("instance: ") + ex.what());
    }
    return inst;
}

MarketInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open instance file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw SchemaError(path + ": invalid JSON: " + ex.what());
    }
    return parse_instance(j);
}

json instance_to_json(const MarketInstance& inst) {
    json j;
    j["mode"] = inst.mode == MarketMode::bundle ? "bundle" : "graph";
    j["nodes"] = inst.nodes;
    json edges = json::array();
    for (const Edge& e : inst.edges)
        edges.push_back({{"id", e.id}, {"from", e.from}, {"to", e.to},
                         {"cost", cost_to_json(e.cost)}});
    j["edges"] = edges;
    json comms = json::array();
    for (const Commodity& c : inst.commodities)
        comms.push_back({{"source", c.source}, {"sink", c.sink},
                         {"demand", demand_to_json(c.demand)}});
    j["commodities"] = comms;
    if (!inst.bundles.empty()) {
        json bs = json::array();
        for (auto& b : inst.bundles) {
            json ids = json::array();
            for (int e : b) ids.push_back(inst.edges[e].id);
            bs.push_back(ids);
        }
        j["bundles"] = bs;
    }
    if (!inst.valuations.empty()) {
        json vs = json::array();
        for (auto& [items, value] : inst.valuations) {
            json ids = json::array();
            for (int e : items) ids.push_back(inst.edges[e].id);
            vs.push_back({{"set", ids}, {"value", value}});
        }
        j["valuations"] = vs;
    }
    json flags = json::array();
    if (inst.general_market) flags.push_back("general-market");
    if (inst.large_demand) flags.push_back("large-demand");
    if (!flags.empty()) j["flags"] = flags;
    return j;
}

namespace {

json flow_to_json(const MarketInstance& inst, const FlowSolution& f) {
    json paths = json::array();
    for (const FlowPath& p : f.paths) {
        json ids = json::array();
        for (int e : p.edges) ids.push_back(inst.edges[e].id);
        paths.push_back({{"edges", ids}, {"amount", p.amount}});
    }
    return json{{"paths", paths}};
}

}  // namespace

json solution_to_json(const MarketInstance& inst, const EquilibriumSolution& sol) {
    json j;
    json prices;
    for (auto& [id, p] : sol.prices) prices[id] = p;
    j["prices"] = prices;
    j["flow"] = flow_to_json(inst, sol.flow);
    if (!sol.flows.empty()) {
        json fs = json::array();
        for (auto& f : sol.flows) fs.push_back(flow_to_json(inst, f));
        j["flows"] = fs;
    }
    j["x"] = sol.magnitude;
    json diag;
    diag["kind"] = sol.kind == EquilibriumKind::optimal_corner    ? "optimal-corner"
                   : sol.kind == EquilibriumKind::interior_root   ? "interior-root"
                                                                  : "constructed-special";
    diag["M"] = sol.M;
    json monos = json::array();
    for (int m : sol.monopoly_set) monos.push_back(inst.edges[m].id);
    diag["monopolies"] = monos;
    diag["slack"] = sol.slack;
    diag["condition_residual"] = sol.condition_residual;
    diag["welfare"] = sol.welfare;
    if (sol.unverified_theory) diag["unverified_theory"] = true;
    if (sol.near_kink_boundary) diag["near_kink_boundary"] = true;
    j["diagnostics"] = diag;
    return j;
}

ParsedSolution parse_solution(const MarketInstance& inst, const json& j) {
    if (!j.is_object() || !j.contains("prices") || !j["prices"].is_object())
        throw SchemaError("solution.prices: expected an object");
    ParsedSolution out;
    for (auto& [id, v] : j["prices"].items()) {
        if (!v.is_number()) throw SchemaError("solution.prices." + id + ": expected a number");
        out.prices[id] = v.get<double>();
    }
    auto parse_flow = [&](const json& jf, const std::string& path) {
        FlowSolution f;
        f.edge_flow.assign(inst.edges.size(), 0.0);
        if (!jf.is_object() || !jf.contains("paths") || !jf["paths"].is_array())
            throw SchemaError(path + ".paths: expected an array");
        for (auto& jp : jf["paths"]) {
            FlowPath p;
            if (!jp.contains("edges") || !jp["edges"].is_array())
                throw SchemaError(path + ".paths: entries need an 'edges' array");
            for (auto& id : jp["edges"]) {
                if (!id.is_string()) throw SchemaError(path + ".paths: edge ids must be strings");
                p.edges.push_back(inst.edge_index(id.get<std::string>()));
            }
            p.amount = num_at(jp, "amount", path + ".paths");
            for (int e : p.edges) f.edge_flow[e] += p.amount;
            f.magnitude += p.amount;
            f.paths.push_back(std::move(p));
        }
        return f;
    };
    if (j.contains("flows")) {
        if (!j["flows"].is_array()) throw SchemaError("solution.flows: expected an array");
        for (size_t k = 0; k < j["flows"].size(); ++k)
            out.flows.push_back(parse_flow(j["flows"][k],
                                           "solution.flows[" + std::to_string(k) + "]"));
    } else if (j.contains("flow")) {
        out.flows.push_back(parse_flow(j["flow"], "solution.flow"));
    } else {
        throw SchemaError("solution.flow: missing");
    }
    out.magnitude = num_or(j, "x", out.flows.empty() ? 0.0 : out.flows[0].magnitude, "solution");
    return out;
}

json report_to_json(const VerificationReport& rep) {
    auto check = [](const CheckResult& c) {
        json j;
        j["pass"] = c.pass;
        if (!c.witness.empty()) j["witness"] = c.witness;
        if (!c.pass) j["margin"] = c.margin;
        return j;
    };
    json j;
    j["buyer_best_response"] = check(rep.buyer);
    j["seller_stability"] = check(rep.seller);
    j["local_dominance"] = check(rep.local_dominance);
    j["properties"] = check(rep.properties);
    j["tol"] = rep.tol;
    j["pass"] = rep.pass;
    return j;
}

json efficiency_to_json(const EfficiencyReport& rep) {
    json j;
    j["welfare_opt"] = rep.welfare_opt;
    j["welfare_eq"] = rep.welfare_eq;
    j["eta"] = rep.eta;
    j["class"] = rep.bound_name;
    j["M"] = rep.M;
    if (rep.alpha > 0) j["alpha"] = rep.alpha;
    if (std::isfinite(rep.bound))
        j["bound"] = rep.bound;
    else
        j["bound"] = "unbounded";
    if (std::isfinite(rep.secondary_bound)) j["secondary_bound"] = rep.secondary_bound;
    j["slack"] = rep.slackness;
    return j;
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace netpricing
