#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "ncentre/cli.hpp"
#include "ncentre/config_io.hpp"

using namespace ncentre;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args)
{
    args.insert(args.begin(), "nctool");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("nctool_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write(const fs::path& path, const std::string& text)
{
    std::ofstream(path) << text;
    return path.string();
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& path)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

const char* triangle_json = R"({"dim": 2, "centres": [[0, 0], [1, 0], [0.5, 0.8660254037844386]],
 "strengths": [1, 1, 1], "gevrey": {"C": 1, "g": 2}})";
const char* kepler_json = R"({"dim": 2, "centres": [[0, 0]], "strengths": [1]})";

} // namespace

TEST_CASE("config parsing")
{
    const auto a = parse_run_config(triangle_json);
    CHECK(a.centres.size() == 3);
    CHECK(a.gevrey.c_const == 1.0);
    CHECK(a.hash.size() == 16);
    // Whitespace and key order do not change the hash.
    const auto b = parse_run_config(R"({"strengths":[1,1,1],"gevrey":{"g":2,"C":1},"dim":2,
        "centres":[[0,0],[1,0],[0.5,0.8660254037844386]]})");
    CHECK(a.hash == b.hash);
    CHECK(parse_run_config(kepler_json).hash != a.hash);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");

    try {
        parse_run_config("{\"dim\": 2,\n\"centres\": [[0,0]\n\"strengths\": [1]}", "x.json");
        FAIL("no error");
    } catch (const FormatError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("x.json:3") == 0);
    }
    try {
        parse_run_config(R"({"dim": 2, "centres": [[0,0],[1,0]], "strengths": [1, 0]})");
        FAIL("no error");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "strengths[1]");
    }
    CHECK_THROWS_AS(parse_run_config(R"({"dim": 2, "centres": [[0,0]], "strengths": [1], "colour": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"dim": 2, "centres": [[0,0]], "strengths": [1], "gevrey": {"g": 1}})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"dim": 2, "centres": [[0,0]], "strengths": ["one"]})"), ConfigError);
}

TEST_CASE("exit codes for bad input")
{
    const auto dir = scratch("errors");
    const auto bad = write(dir / "bad.json", R"({"dim": 2, "centres": [[0,0],[1,0]], "strengths": [1, 0]})");
    auto r = run({"simulate", "--config", bad, "--q", "1,0", "--p", "0,1", "--out", (dir / "o").string()});
    CHECK(r.code == exit_data);
    CHECK(r.err.find("strengths[1]") != std::string::npos);

    r = run({"simulate", "--config", (dir / "missing.json").string(), "--q", "1,0", "--p", "0,1"});
    CHECK(r.code == exit_data);
    CHECK(run({"simulate"}).code == exit_usage);
    CHECK(run({"frobnicate"}).code == exit_usage);
    CHECK(run({}).code == exit_usage);
    const auto one = write(dir / "one.json", kepler_json);
    CHECK(run({"simulate", "--config", one, "--q", "1,0,0", "--p", "0,1", "--out", (dir / "o").string()}).code ==
          exit_usage);
    CHECK(run({"plotdata", "--input", one, "--kind", "tau", "--out", (dir / "o").string()}).code == exit_data);
    CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("simulate: circular Kepler orbit and a triangle beam")
{
    const auto dir = scratch("simulate");
    const auto one = write(dir / "one.json", kepler_json);
    const double period = 2 * std::numbers::pi;
    auto r = run({"simulate", "--config", one, "--q", "1,0", "--p", "0,1", "--budget-time", "6.283185307179586",
                  "--out", (dir / "circ").string()});
    REQUIRE(r.code == exit_ok);
    const auto rows = csv_rows(dir / "circ" / "trajectory.csv");
    REQUIRE(rows.size() > 10);
    CHECK(rows[0] == std::vector<std::string>{"t", "q1", "q2", "p1", "p2", "H"});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::abs(std::stod(rows[i][5]) + 0.5) < 1e-9);
    CHECK(std::stod(rows.back()[0]) == doctest::Approx(period).epsilon(1e-12));
    CHECK(std::hypot(std::stod(rows.back()[1]) - 1.0, std::stod(rows.back()[2])) < 1e-9);
    CHECK(fs::exists(dir / "circ" / "trajectory.csv.manifest.json"));
    CHECK(fs::exists(dir / "circ" / "events.jsonl.manifest.json"));

    const auto tri = write(dir / "tri.json", triangle_json);
    r = run({"simulate", "--config", tri, "--energy", "10", "--angles", "0.3", "--impact", "0.1", "--out",
             (dir / "beam").string()});
    REQUIRE(r.code == exit_ok);
    std::istringstream ev(slurp(dir / "beam" / "events.jsonl"));
    std::string line, last;
    bool approach = false;
    while (std::getline(ev, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("t"));
        CHECK(j.contains("dist"));
        if (j["kind"] == "close_approach") {
            approach = true;
            CHECK(j["k"].get<int>() >= 1);
            CHECK(j["k"].get<int>() <= 3);
        }
        last = j["kind"];
    }
    CHECK(approach);
    CHECK(last == "sphere_exit");

    const auto m = nlohmann::json::parse(slurp(dir / "beam" / "events.jsonl.manifest.json"));
    CHECK(m["command"] == "simulate");
    CHECK(m["config_hash"] == parse_run_config(triangle_json).hash);
    CHECK(m["seed"] == 0);
    CHECK(m.contains("version"));
    CHECK(m.contains("wall_time"));
    CHECK(m["params"]["energy"] == 10.0);
}

TEST_CASE("scatter: Kepler grid, determinism across runs and thread counts")
{
    const auto dir = scratch("scatter");
    const auto one = write(dir / "one.json", kepler_json);
    auto r = run({"scatter", "--config", one, "--energy", "2", "--angle-min", "0.4", "--impact-min", "0.2",
                  "--impact-max", "2", "--impact-count", "12", "--out", (dir / "k").string()});
    REQUIRE(r.code == exit_ok);
    const auto rows = csv_rows(dir / "k" / "scatter.csv");
    REQUIRE(rows.size() == 13);
    CHECK(rows[0] == std::vector<std::string>{"energy", "angle", "impact", "class", "pm1", "pm2", "pp1", "pp2",
                                              "tau", "tau_resid", "itinerary"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i][3] == "scattering");
        CHECK(std::abs(std::stod(rows[i][8])) < 1e-8);
    }

    const auto tri = write(dir / "tri.json", triangle_json);
    auto scan = [&](const std::string& sub, const std::string& jobs) {
        const auto out = (dir / sub).string();
        REQUIRE(run({"scatter", "--config", tri, "--energy", "10", "--angle-min", "2.2", "--impact-count", "24",
                     "--jobs", jobs, "--seed", "7", "--out", out})
                    .code == exit_ok);
        return slurp(fs::path(out) / "scatter.csv");
    };
    const auto a = scan("a", "1");
    CHECK(a == scan("b", "1"));
    CHECK(a == scan("c", "3"));
    const auto m = nlohmann::json::parse(slurp(dir / "a" / "scatter.csv.manifest.json"));
    CHECK(m["seed"] == 7);

    REQUIRE(run({"plotdata", "--input", (dir / "a" / "scatter.csv").string(), "--kind", "tau", "--out",
                 (dir / "a").string()})
                .code == exit_ok);
    const auto tau = slurp(dir / "a" / "scatter.tau.dat");
    CHECK(tau.rfind("# impact tau\n", 0) == 0);
    REQUIRE(run({"plotdata", "--input", (dir / "a" / "scatter.csv").string(), "--kind", "angle", "--out",
                 (dir / "a").string()})
                .code == exit_ok);
    CHECK(fs::exists(dir / "a" / "scatter.angle.dat"));
}

TEST_CASE("verify-integrals: Kepler passes, starved budgets are undetermined")
{
    const auto dir = scratch("verify");
    const auto one = write(dir / "one.json", kepler_json);
    auto r = run({"verify-integrals", "--config", one, "--energy", "2", "--samples", "4", "--out",
                  (dir / "k").string()});
    CHECK(r.code == exit_ok);
    const auto rep = nlohmann::json::parse(slurp(dir / "k" / "verify.json"));
    CHECK(rep["determined"] == 4);
    CHECK(rep["checks"].size() == 3);
    for (const auto& c : rep["checks"]) CHECK(c["passed"] == true);

    const auto tri = write(dir / "tri.json", triangle_json);
    r = run({"verify-integrals", "--config", tri, "--energy", "10", "--samples", "4", "--budget-time", "0.5",
             "--out", (dir / "starved").string()});
    CHECK(r.code == exit_undetermined);

    auto again = [&](const std::string& sub) {
        REQUIRE(run({"verify-integrals", "--config", tri, "--samples", "3", "--seed", "11", "--out",
                     (dir / sub).string()})
                    .code != exit_usage);
        return slurp(dir / sub / "verify.json");
    };
    CHECK(again("x") == again("y"));
}

TEST_CASE("entropy: two centres stay flat")
{
    const auto dir = scratch("entropy");
    const auto pair = write(dir / "pair.json", R"({"dim": 2, "centres": [[-0.5, 0], [0.5, 0]], "strengths": [1, 1]})");
    REQUIRE(run({"entropy", "--config", pair, "--max-samples", "800", "--directions", "2", "--grid", "40", "--out",
                 (dir / "p").string()})
                .code == exit_ok);
    const auto text = slurp(dir / "p" / "census.csv");
    REQUIRE(text.rfind("# ", 0) == 0);
    const auto meta = nlohmann::json::parse(text.substr(2, text.find('\n') - 2));
    CHECK(meta["slope"] == 0.0);
    const auto rows = csv_rows(dir / "p" / "census.csv");
    CHECK(rows[0] == std::vector<std::string>{"L", "count", "bound"});
    REQUIRE(rows.size() == 9);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(std::stoi(rows[i][1]) <= 2);
        CHECK(std::stod(rows[i][2]) == 2.0);
    }
    REQUIRE(run({"plotdata", "--input", (dir / "p" / "census.csv").string(), "--kind", "census", "--out",
                 (dir / "p").string()})
                .code == exit_ok);
    CHECK(slurp(dir / "p" / "census.census.dat").rfind("# L log_count\n1 ", 0) == 0);
}
