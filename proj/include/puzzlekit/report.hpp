#pragma once

#include "puzzlekit/modulus.hpp"
#include "puzzlekit/nest.hpp"
#include "puzzlekit/puzzle.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace puzzlekit {

inline constexpr const char* kReportSchema = "puzzlekit-report/1";

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitTheoremFailure = 1, kExitDomainError = 2, kExitInconclusive = 3 };

struct RunConfig {
    unsigned degree = 2;
    cplx c{0, 0};
    unsigned depth = 12;               // puzzle depth, or the inference depth for nests
    unsigned levels = 4;               // favorite-nest length asked for
    unsigned long orbit_budget = 100000;
    double height = 1.0;
    int grid = 256;
    unsigned q_max = 10;
    std::optional<Angle> seed_angle;   // symbolic value angle, skips inference
    std::string out_dir;               // empty: JSON on stdout, no files
    bool svg = false;
    unsigned threads = 1;

    /// Throws InvalidArgument on non-positive budgets or h <= 0.
    void validate() const;
    NestBudget nest_budget() const;
};

/// Parses "re,im" (or a bare real number).
cplx parse_complex(const std::string& text);

struct Report {
    nlohmann::json doc;
    std::map<std::string, std::string> svgs;  // file name -> contents
    int exit_code = kExitOk;

    /// Canonical serialization: sorted keys, two-space indent, trailing newline.
    std::string dump() const;
    void add_warning(const std::string& op, const Error& e, const nlohmann::json& budget);
    void add_warning(const std::string& op, ErrorKind kind, const std::string& message, const nlohmann::json& budget);
};

/// Rounded to 12 significant digits so that reruns serialize identically.
double rounded(double x);
nlohmann::json to_json(cplx z);
nlohmann::json to_json(const Label& label);
nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const NestRecord& nest);
nlohmann::json to_json(const ModulusEstimate& est);
nlohmann::json to_json(const ModuliProfile& profile);
nlohmann::json to_json(const VerificationRow& row);

/// Everything one parameter needs: portrait, combinatorics (seeded or inferred), geometry.
struct Pipeline {
    Parameter param;
    PuzzleSetup setup;
    Combinatorics comb;
    Puzzle puzzle;
    bool inferred = false;

    static Pipeline build(const RunConfig& config);
};

/// Exit code for a library error: 3 when inconclusive, 2 otherwise.
int exit_code_for(const Error& e);

Report cmd_portrait(const RunConfig& config);
Report cmd_puzzle(const RunConfig& config);
Report cmd_nest(const RunConfig& config);
Report cmd_compare(const RunConfig& a, const RunConfig& b);
Report cmd_verify(const RunConfig& config);

/// A filled region or an open path for SVG output.
struct SvgShape {
    Polyline points;
    bool closed = true;
    unsigned depth = 0;  // selects the fill color
    std::string title;
};

/// Pieces as filled regions at 40% opacity colored by depth, open paths as strokes.
std::string render_svg(const std::vector<SvgShape>& shapes, const std::vector<cplx>& marks = {});

/// Runs fn(0..n-1) on up to `threads` workers.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace puzzlekit
