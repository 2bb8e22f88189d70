#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "netpricing/cli.hpp"
#include "netpricing/json_io.hpp"

using namespace netpricing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / ("netprice_test_" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

}  // namespace

TEST_CASE("cli round trip on the single-seller fixture") {
    TempDir tmp;
    std::string inst = tmp.path("inst.json");
    std::string sol = tmp.path("sol.json");

    CHECK(cli_run({"scenario", "list"}) == 0);
    CHECK(cli_run({"scenario", "emit", "single-good", "--out", inst}) == 0);

    CHECK(cli_run({"solve", inst, "--out", sol}) == 0);
    json js = read_json(sol);
    CHECK(js["x"].get<double>() == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(js["prices"]["e1"].get<double>() == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(js["diagnostics"]["M"].get<int>() == 1);

    CHECK(cli_run({"verify", inst, "--solution", sol}) == 0);

    // the welfare-optimal candidate is rejected by the seller check
    json bad;
    bad["prices"]["e1"] = 2.0 / 3.0;
    json path;
    path["edges"] = json::array({"e1"});
    path["amount"] = 1.0 / 3.0;
    bad["flow"]["paths"] = json::array({path});
    bad["x"] = 1.0 / 3.0;
    std::string badf = tmp.path("bad.json");
    std::ofstream(badf) << bad.dump();
    std::string rep = tmp.path("rep.json");
    CHECK(cli_run({"verify", inst, "--solution", badf, "--out", rep}) == 1);
    json jr = read_json(rep);
    CHECK(jr["pass"].get<bool>() == false);
    CHECK(jr["seller_stability"]["pass"].get<bool>() == false);
}

TEST_CASE("cli optimum, efficiency, classify, sweep") {
    TempDir tmp;
    std::string inst = tmp.path("inst.json");
    REQUIRE(cli_run({"scenario", "emit", "single-good", "--out", inst}) == 0);

    std::string opt = tmp.path("opt.json");
    CHECK(cli_run({"optimum", inst, "--out", opt}) == 0);
    CHECK(read_json(opt)["x"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-6));

    std::string eff = tmp.path("eff.json");
    CHECK(cli_run({"efficiency", inst, "--out", eff}) == 0);
    CHECK(read_json(eff)["eta"].get<double>() == doctest::Approx(16.0 / 15.0).epsilon(1e-5));

    std::string cls = tmp.path("cls.json");
    CHECK(cli_run({"classify", inst, "--out", cls}) == 0);
    json jc = read_json(cls);
    CHECK(jc[0]["concave"].get<bool>());

    std::string csv = tmp.path("sweep.csv");
    CHECK(cli_run({"sweep", "--scenario", "concave-tight", "--m", "1..3", "--out", csv}) == 0);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "scenario,M,alpha,x_star,x_eq,welfare_opt,welfare_eq,eta,bound,slack");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 3);
}

TEST_CASE("cli error codes") {
    TempDir tmp;
    CHECK(cli_run({"solve", tmp.path("missing.json")}) == 2);

    std::string broken = tmp.path("broken.json");
    std::ofstream(broken) << "{not json";
    CHECK(cli_run({"solve", broken}) == 2);

    std::string noscheme = tmp.path("noscheme.json");
    std::ofstream(noscheme) << "{\"nodes\": 3}";
    CHECK(cli_run({"solve", noscheme}) == 2);

    CHECK(cli_run({"frobnicate"}) == 2);
    CHECK(cli_run({"scenario", "emit", "nope"}) == 2);
    CHECK(cli_run({"sweep", "--scenario", "concave-tight", "--m", "bogus"}) == 2);
}
