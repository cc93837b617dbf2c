#include "puzzlekit/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace puzzlekit;

namespace {

struct RawOptions {
    unsigned degree = 2;
    std::string c = "0,0";
    std::string seed;
    unsigned depth = 12;
    unsigned levels = 4;
    unsigned long orbit = 100000;
    double height = 1.0;
    int grid = 256;
    unsigned q_max = 10;
    std::string out;
    bool svg = false;
};

void add_common(CLI::App* cmd, RawOptions& o) {
    cmd->add_option("--degree", o.degree, "degree d of z^d + c")->capture_default_str();
    cmd->add_option("--c", o.c, "parameter as re,im")->capture_default_str();
    cmd->add_option("--depth", o.depth, "puzzle depth (inference depth for nest/verify)")->capture_default_str();
    cmd->add_option("--levels", o.levels, "favorite nest levels")->capture_default_str();
    cmd->add_option("--orbit-budget", o.orbit, "critical orbit iterates")->capture_default_str();
    cmd->add_option("--height", o.height, "depth-0 equipotential height")->capture_default_str();
    cmd->add_option("--grid", o.grid, "finest modulus grid")->capture_default_str();
    cmd->add_option("--q-max", o.q_max, "largest alpha portrait size tried")->capture_default_str();
    cmd->add_option("--seed-angle", o.seed, "external angle num/den of the critical value (skips inference)");
    cmd->add_option("--out", o.out, "output directory for report.json and SVG files");
    cmd->add_flag("--svg", o.svg, "write SVG drawings");
}

RunConfig to_config(const RawOptions& o) {
    RunConfig cfg;
    cfg.degree = o.degree;
    cfg.c = parse_complex(o.c);
    cfg.depth = o.depth;
    cfg.levels = o.levels;
    cfg.orbit_budget = o.orbit;
    cfg.height = o.height;
    cfg.grid = o.grid;
    cfg.q_max = o.q_max;
    if (!o.seed.empty()) cfg.seed_angle = Angle::parse(o.seed);
    cfg.out_dir = o.out;
    cfg.svg = o.svg;
    if (const char* env = std::getenv("PUZZLEKIT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) cfg.threads = static_cast<unsigned>(n);
    }
    return cfg;
}

int emit(const Report& report, const RunConfig& cfg) {
    const std::string json = report.dump();
    if (cfg.out_dir.empty()) {
        std::cout << json;
        for (const auto& [name, text] : report.svgs) {
            std::ofstream(name) << text;
        }
    } else {
        std::filesystem::create_directories(cfg.out_dir);
        const std::filesystem::path dir(cfg.out_dir);
        std::ofstream(dir / "report.json") << json;
        for (const auto& [name, text] : report.svgs) std::ofstream(dir / name) << text;
    }
    if (report.doc.contains("error")) std::cerr << report.doc["error"]["message"].get<std::string>() << "\n";
    return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Yoccoz puzzles, favorite nests and annulus moduli for z^d + c"};
    app.require_subcommand(1);
    RawOptions opt, opt_b;
    std::string c2, seed2;

    auto* portrait = app.add_subcommand("portrait", "rays landing at the dividing fixed point");
    auto* puzzle = app.add_subcommand("puzzle", "puzzle pieces up to --depth");
    auto* nest = app.add_subcommand("nest", "favorite nest");
    auto* compare = app.add_subcommand("compare", "combinatorics of two parameters side by side");
    auto* verify = app.add_subcommand("verify", "children lemma, lemma Y and the moduli profile along the nest");
    for (auto* cmd : {portrait, puzzle, nest, compare, verify}) add_common(cmd, opt);
    compare->add_option("--c2", c2, "second parameter as re,im")->required();
    compare->add_option("--seed-angle2", seed2, "value angle of the second parameter");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitDomainError;
    }

    RunConfig cfg;
    try {
        cfg = to_config(opt);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kExitDomainError;
    }
    if (*portrait) return emit(cmd_portrait(cfg), cfg);
    if (*puzzle) return emit(cmd_puzzle(cfg), cfg);
    if (*nest) return emit(cmd_nest(cfg), cfg);
    if (*verify) return emit(cmd_verify(cfg), cfg);
    RunConfig cfg_b = cfg;
    try {
        cfg_b.c = parse_complex(c2);
        cfg_b.seed_angle.reset();
        if (!seed2.empty()) cfg_b.seed_angle = Angle::parse(seed2);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return kExitDomainError;
    }
    return emit(cmd_compare(cfg, cfg_b), cfg);
}
