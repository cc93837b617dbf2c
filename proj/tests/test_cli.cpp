#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "puzzlekit/report.hpp"
#include "support.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace puzzlekit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const cplx kRabbit(-0.12256116687665, 0.74486176661974);

RunConfig config_for(cplx c) {
    RunConfig config;
    config.c = c;
    return config;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(PUZZLEKIT_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("puzzlekit_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("portrait report") {
    const Report r = cmd_portrait(config_for(-1));
    CHECK(r.exit_code == kExitOk);
    CHECK(r.doc["schema"] == kReportSchema);
    CHECK(r.doc["portrait"]["q"] == 2);
    CHECK(r.doc["portrait"]["angles"] == json::array({"1/3", "2/3"}));
    CHECK(r.doc["config"]["c"] == json::array({-1.0, 0.0}));

    const Report rabbit = cmd_portrait(config_for(kRabbit));
    std::vector<std::string> expected;
    const auto cycles = testing::brute_force_cycles(2, 3, 1);
    for (const Angle& a : cycles.front()) expected.push_back(a.str());
    CHECK(rabbit.doc["portrait"]["angles"] == json(expected));

    const Report inside = cmd_portrait(config_for(0.1));
    CHECK(inside.exit_code == kExitDomainError);
    CHECK(inside.doc["error"]["kind"] == "InMainComponent");
}

TEST_CASE("portrait SVG is well-formed") {
    RunConfig config = config_for(kRabbit);
    config.svg = true;
    const Report r = cmd_portrait(config);
    REQUIRE_FALSE(r.svgs.empty());
    for (const auto& [name, body] : r.svgs) {
        CHECK(name.ends_with(".svg"));
        CHECK(testing::well_formed_xml(body));
        CHECK(body.find("<svg") != std::string::npos);
        CHECK(body.find("<path") != std::string::npos);
    }
}

TEST_CASE("puzzle piece counts follow the pullback") {
    for (cplx c : {cplx(-1, 0), kRabbit, cplx(testing::kFibonacci, 0)}) {
        RunConfig config = config_for(c);
        config.depth = 5;
        config.svg = true;
        const Report r = cmd_puzzle(config);
        REQUIRE(r.exit_code == kExitOk);
        const json& levels = r.doc["levels"];
        REQUIRE(levels.size() == 6);
        CHECK(levels[0]["count"] == r.doc["portrait"]["q"]);

        const Portrait portrait = Portrait::from_angles(2, [&] {
            std::vector<Angle> angles;
            for (const auto& a : r.doc["portrait"]["angles"]) angles.push_back(Angle::parse(a.get<std::string>()));
            return angles;
        }());
        const Angle theta = Angle::parse(r.doc["combinatorics"]["value_angle"].get<std::string>());
        std::vector<Label> level = level0(portrait);
        for (std::size_t n = 0; n < levels.size(); ++n) {
            CHECK(levels[n]["depth"] == n);
            CHECK(levels[n]["count"] == level.size());
            CHECK(levels[n]["symbolic_count"] == level.size());
            level = pullback_labels(2, level, theta);
        }
        for (const auto& [name, body] : r.svgs) CHECK(testing::well_formed_xml(body));
    }
}

TEST_CASE("reruns are byte-identical") {
    RunConfig config = config_for(testing::kFibonacci);
    config.depth = 6;
    config.svg = true;
    const Report a = cmd_puzzle(config);
    const Report b = cmd_puzzle(config);
    CHECK(a.dump() == b.dump());
    CHECK(a.svgs == b.svgs);
    CHECK(a.dump().back() == '\n');

    config.depth = 40;
    config.levels = 3;
    CHECK(cmd_nest(config).dump() == cmd_nest(config).dump());
}

TEST_CASE("nest report") {
    RunConfig config = config_for(testing::kFibonacci);
    config.seed_angle = testing::kneading_angle(2);
    config.levels = 4;
    const Report r = cmd_nest(config);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.doc["checked"] == true);
    CHECK(r.doc["violation"].is_null());
    const json& entries = r.doc["nest"]["entries"];
    REQUIRE(entries.size() == 4);
    int previous = -1;
    for (const auto& e : entries) {
        const int q = e["Q"]["depth"], p = e["P"]["depth"];
        CHECK(q > previous);
        CHECK(p > q);
        CHECK(p - q == e["first_return"]);
        previous = p;
    }
    // Same labels from an independent run with the angle inferred from geometry.
    RunConfig inferred = config_for(testing::kFibonacci);
    inferred.depth = 60;
    inferred.levels = 3;
    const Report g = cmd_nest(inferred);
    REQUIRE(g.doc["nest"]["entries"].size() >= 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(g.doc["nest"]["entries"][i]["Q"] == entries[i]["Q"]);
        CHECK(g.doc["nest"]["entries"][i]["P"] == entries[i]["P"]);
    }
}

TEST_CASE("compare") {
    RunConfig a = config_for(testing::kFibonacci);
    a.depth = 20;
    a.grid = 64;
    const Report same = cmd_compare(a, a);
    CHECK(same.exit_code == kExitOk);
    CHECK(same.doc["comparison"]["full_agreement"] == true);
    CHECK(same.doc["comparison"]["agreement_depth"] == 20);
    CHECK(same.doc["moduli_floors"][0] == same.doc["moduli_floors"][1]);

    RunConfig other = a;
    other.c = kRabbit;
    const Report wakes = cmd_compare(a, other);
    CHECK(wakes.doc["comparison"]["full_agreement"] == false);
    CHECK(wakes.doc["comparison"]["agreement_depth"] == -1);
    CHECK(wakes.doc["comparison"]["first_divergence"]["depth"] == 0);

    RunConfig near = a;
    near.c = cplx(testing::kFibonacci, 1e-6);
    const Report close = cmd_compare(a, near);
    CHECK(close.doc["comparison"]["agreement_depth"].get<int>() >= 5);
    CHECK(close.dump() == cmd_compare(a, near).dump());
}

TEST_CASE("config validation") {
    RunConfig config = config_for(-1);
    config.height = 0;
    CHECK_THROWS_AS(config.validate(), Error);
    config = config_for(-1);
    config.orbit_budget = 0;
    CHECK_THROWS_AS(config.validate(), Error);
    CHECK(parse_complex("-1,0.5") == cplx(-1, 0.5));
    CHECK(parse_complex("0.25") == cplx(0.25, 0));
    CHECK_THROWS_AS(parse_complex("1,2,3"), Error);
}

TEST_CASE("command-line binary") {
    const fs::path dir = scratch_dir("portrait");
    CHECK(run_cli("portrait --degree 2 --c -1,0 --svg --out " + dir.string()) == 0);
    const json doc = json::parse(slurp(dir / "report.json"));
    CHECK(doc["portrait"]["angles"] == json::array({"1/3", "2/3"}));
    bool saw_svg = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".svg") continue;
        saw_svg = true;
        CHECK(testing::well_formed_xml(slurp(entry.path())));
    }
    CHECK(saw_svg);

    CHECK(run_cli("portrait --c 0.1,0") == kExitDomainError);
    CHECK(run_cli("portrait --c not-a-number") == kExitDomainError);
    CHECK(run_cli("portrait --c -1,0 --height -2") == kExitDomainError);
    CHECK(run_cli("nest --c -1.8705286321646449 --depth 40 --levels 3") == kExitOk);
    CHECK(run_cli("verify --c -1.8705286321646449 --depth 60 --levels 3 --grid 64") == kExitOk);
    fs::remove_all(dir);
}
