#include "netpricing/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "netpricing/bundles.hpp"
#include "netpricing/errors.hpp"
#include "netpricing/json_io.hpp"
#include "netpricing/scenarios.hpp"

namespace netpricing {

namespace {

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw SchemaError("cannot open output file: " + out_path);
        out << text;
    }
}

// Picks the solver matching the instance shape.
EquilibriumSolution solve_instance(const MarketInstance& inst, double tol) {
    if (inst.mode == MarketMode::bundle) {
        if (!inst.valuations.empty()) return combinatorial_uniform_equilibrium(inst, tol);
        return bundle_equilibrium(inst, tol);
    }
    if (inst.commodities.size() > 1) return multi_source_equilibrium(inst, tol);
    const DemandFunction& d = inst.commodities.at(0).demand;
    if (d.kind == DemandKind::uniform) return uniform_demand_equilibrium(inst, tol);
    bool capacity_only = true;
    for (const Edge& e : inst.edges)
        if (e.cost.kind != CostKind::zero && e.cost.kind != CostKind::capacity)
            capacity_only = false;
    if (capacity_only && d.kind == DemandKind::power_elastic) {
        try {
            return capacitated_elastic_equilibrium(inst, tol);
        } catch (const InapplicableError&) {
        }
    }
    return find_equilibrium(inst, tol);
}

std::map<std::string, double> parse_params(const std::vector<std::string>& kvs) {
    std::map<std::string, double> params;
    for (const std::string& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw SchemaError("--param expects k=v, got: " + kv);
        try {
            params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
            throw SchemaError("--param " + kv + ": value is not a number");
        }
    }
    return params;
}

std::string csv_num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
    CLI::App app{"Network pricing game solver and verifier"};
    app.require_subcommand(1);

    std::string file, out_path, solution_path, scenario_id, m_range;
    double tol = 1e-9, eps = -1.0, alpha = 0.0;
    int grid = 1000;
    std::vector<std::string> param_kvs;

    auto* solve = app.add_subcommand("solve", "compute an equilibrium");
    solve->add_option("file", file)->required();
    solve->add_option("--tol", tol);
    solve->add_option("--out", out_path);

    auto* optimum = app.add_subcommand("optimum", "welfare-maximizing magnitude and flow");
    optimum->add_option("file", file)->required();
    optimum->add_option("--tol", tol);
    optimum->add_option("--out", out_path);

    auto* verify = app.add_subcommand("verify", "check a candidate solution");
    verify->add_option("file", file)->required();
    verify->add_option("--solution", solution_path)->required();
    verify->add_option("--grid", grid);
    verify->add_option("--eps", eps);
    verify->add_option("--tol", tol);
    verify->add_option("--out", out_path);

    auto* efficiency = app.add_subcommand("efficiency", "solve and report the welfare ratio");
    efficiency->add_option("file", file)->required();
    efficiency->add_option("--tol", tol);
    efficiency->add_option("--out", out_path);

    auto* sweep_cmd = app.add_subcommand("sweep", "per-M scenario table");
    sweep_cmd->add_option("--scenario", scenario_id)->required();
    sweep_cmd->add_option("--m", m_range)->required();
    sweep_cmd->add_option("--alpha", alpha);
    sweep_cmd->add_option("--out", out_path);

    auto* scenario = app.add_subcommand("scenario", "fixture registry");
    auto* sc_list = scenario->add_subcommand("list", "list registered fixtures");
    auto* sc_emit = scenario->add_subcommand("emit", "emit a fixture as instance JSON");
    sc_emit->add_option("id", scenario_id)->required();
    sc_emit->add_option("--param", param_kvs);
    sc_emit->add_option("--out", out_path);
    scenario->require_subcommand(1);

    auto* classify = app.add_subcommand("classify", "demand class tags of an instance");
    classify->add_option("file", file)->required();
    classify->add_option("--out", out_path);

    try {
        try {
            std::vector<std::string> rev(args.rbegin(), args.rend());
            app.parse(rev);
        } catch (const CLI::ParseError& e) {
            std::ostringstream os;
            int code = app.exit(e, os, os);
            std::cerr << os.str();
            return code == 0 ? 0 : 2;
        }

        if (solve->parsed()) {
            MarketInstance inst = load_instance(file);
            EquilibriumSolution sol = solve_instance(inst, tol);
            emit(out_path, canonical_dump(solution_to_json(inst, sol)));
            return 0;
        }
        if (optimum->parsed()) {
            MarketInstance inst = load_instance(file);
            json j;
            if (inst.commodities.size() > 1) {
                auto flows = multi_commodity_optimum(inst, tol);
                json fs = json::array();
                double total = 0;
                for (auto& f : flows) {
                    json paths = json::array();
                    for (auto& p : f.paths) {
                        json ids = json::array();
                        for (int e : p.edges) ids.push_back(inst.edges[e].id);
                        paths.push_back({{"edges", ids}, {"amount", p.amount}});
                    }
                    fs.push_back({{"paths", paths}, {"x", f.magnitude}});
                    total += f.magnitude;
                }
                j["flows"] = fs;
                j["x"] = total;
                j["welfare"] = welfare(inst, flows);
            } else {
                OptimalMagnitude opt = optimal_magnitude(inst, 0, tol);
                json paths = json::array();
                for (auto& p : opt.flow.paths) {
                    json ids = json::array();
                    for (int e : p.edges) ids.push_back(inst.edges[e].id);
                    paths.push_back({{"edges", ids}, {"amount", p.amount}});
                }
                j["flow"] = {{"paths", paths}};
                j["x"] = opt.x_star;
                j["welfare"] = welfare(inst, opt.flow);
            }
            emit(out_path, canonical_dump(j));
            return 0;
        }
        if (verify->parsed()) {
            MarketInstance inst = load_instance(file);
            std::ifstream in(solution_path);
            if (!in) throw SchemaError("cannot open solution file: " + solution_path);
            json js;
            try {
                in >> js;
            } catch (const json::exception& ex) {
                throw SchemaError(solution_path + ": invalid JSON: " + ex.what());
            }
            ParsedSolution sol = parse_solution(inst, js);
            VerificationReport rep;
            rep.tol = tol > 0 ? tol : 1e-6;
            double vt = tol != 1e-9 ? tol : 1e-6;
            rep = check_all(inst, sol.prices, sol.flows, vt, grid);
            if (eps > 0)
                rep.local_dominance = check_local_dominance(inst, sol.prices, sol.flows, eps, vt);
            rep.pass = rep.buyer.pass && rep.seller.pass && rep.local_dominance.pass &&
                       rep.properties.pass;
            emit(out_path, canonical_dump(report_to_json(rep)));
            return rep.pass ? 0 : 1;
        }
        if (efficiency->parsed()) {
            MarketInstance inst = load_instance(file);
            EquilibriumSolution sol = solve_instance(inst, tol);
            EfficiencyReport rep = efficiency_ratio(inst, sol);
            emit(out_path, canonical_dump(efficiency_to_json(rep)));
            return 0;
        }
        if (sweep_cmd->parsed()) {
            auto dots = m_range.find("..");
            if (dots == std::string::npos)
                throw SchemaError("--m expects a range like 1..8");
            int m_lo, m_hi;
            try {
                m_lo = std::stoi(m_range.substr(0, dots));
                m_hi = std::stoi(m_range.substr(dots + 2));
            } catch (const std::exception&) {
                throw SchemaError("--m expects a range like 1..8");
            }
            auto rows = sweep(scenario_id, m_lo, m_hi, alpha, tol);
            std::ostringstream csv;
            csv << "scenario,M,alpha,x_star,x_eq,welfare_opt,welfare_eq,eta,bound,slack\n";
            for (const SweepRow& r : rows) {
                if (!r.error.empty()) {
                    csv << scenario_id << "," << r.M << ",,,,,,,,error: " << r.error << "\n";
                    continue;
                }
                csv << scenario_id << "," << r.M << "," << csv_num(r.alpha) << ","
                    << csv_num(r.x_star) << "," << csv_num(r.x_eq) << ","
                    << csv_num(r.welfare_opt) << "," << csv_num(r.welfare_eq) << ","
                    << csv_num(r.eta) << "," << csv_num(r.bound) << ","
                    << csv_num(r.bound - r.eta) << "\n";
            }
            emit(out_path, csv.str());
            return 0;
        }
        if (sc_list->parsed()) {
            json j = json::array();
            for (const ScenarioInfo& s : scenario_list())
                j.push_back({{"id", s.id}, {"summary", s.summary}, {"params", s.params}});
            emit(out_path, canonical_dump(j));
            return 0;
        }
        if (sc_emit->parsed()) {
            MarketInstance inst = build_scenario(scenario_id, parse_params(param_kvs));
            emit(out_path, canonical_dump(instance_to_json(inst)));
            return 0;
        }
        if (classify->parsed()) {
            MarketInstance inst = load_instance(file);
            json j = json::array();
            for (const Commodity& c : inst.commodities) {
                DemandClassTags t = c.demand.classify();
                j.push_back({{"kind", c.demand.kind_name()},
                             {"uniform", t.uniform},
                             {"concave", t.concave},
                             {"mhr", t.mhr},
                             {"mpe", t.mpe},
                             {"numeric", t.numeric}});
            }
            emit(out_path, canonical_dump(j));
            return 0;
        }
        return 2;
    } catch (const SchemaError& ex) {
        std::cerr << "schema error: " << ex.what() << "\n";
        return 2;
    } catch (const StructureError& ex) {
        std::cerr << "schema error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "solver error: " << ex.what() << "\n";
        return 3;
    }
}

}  // namespace netpricing
