#include "puzzlekit/report.hpp"

#include "puzzlekit/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace puzzlekit {

using nlohmann::json;

void RunConfig::validate() const {
    if (degree < 2) throw Error(ErrorKind::InvalidArgument, "degree must be at least 2");
    if (depth == 0 || levels == 0 || orbit_budget == 0 || q_max == 0)
        throw Error(ErrorKind::InvalidArgument, "budgets must be positive");
    if (grid < 16) throw Error(ErrorKind::InvalidArgument, "grid must be at least 16");
    if (!(height > 0) || !std::isfinite(height)) throw Error(ErrorKind::InvalidArgument, "height must be positive");
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw Error(ErrorKind::InvalidArgument, "c must be finite");
}

NestBudget RunConfig::nest_budget() const {
    NestBudget b;
    b.orbit = orbit_budget;
    return b;
}

cplx parse_complex(const std::string& text) {
    const auto comma = text.find(',');
    try {
        std::size_t used = 0;
        if (comma == std::string::npos) {
            const double re = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return {re, 0};
        }
        const std::string a = text.substr(0, comma), b = text.substr(comma + 1);
        const double re = std::stod(a, &used);
        if (used != a.size()) throw std::invalid_argument(text);
        const double im = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(text);
        return {re, im};
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::InvalidArgument, "expected a complex number re,im but got '" + text + "'");
    }
}

double rounded(double x) {
    if (!std::isfinite(x) || x == 0) return x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

json to_json(cplx z) { return json::array({rounded(z.real()), rounded(z.imag())}); }

json to_json(const Label& label) {
    json arcs = json::array();
    for (const Arc& a : label.arcs) arcs.push_back({a.start.str(), a.end.str()});
    return {{"depth", label.depth}, {"arcs", arcs}};
}

json to_json(const RunConfig& config) {
    json j = {{"degree", config.degree},
              {"c", to_json(config.c)},
              {"depth", config.depth},
              {"levels", config.levels},
              {"orbit_budget", config.orbit_budget},
              {"height", rounded(config.height)},
              {"grid", config.grid},
              {"q_max", config.q_max}};
    j["seed_angle"] = config.seed_angle ? json(config.seed_angle->str()) : json(nullptr);
    return j;
}

json to_json(const NestRecord& nest) {
    json entries = json::array();
    for (const NestEntry& e : nest.entries) {
        json j = {{"Q", to_json(e.q)}, {"P", to_json(e.p)}, {"first_return", e.first_return}};
        j["central_return"] = e.central ? json(*e.central) : json(nullptr);
        if (e.has_favorite) {
            j["favorite"] = {{"k", e.k}, {"l", e.l}, {"time", e.favorite_time}};
        } else {
            j["favorite"] = nullptr;
        }
        entries.push_back(j);
    }
    json j = {{"q", nest.q_period}, {"seed_l", nest.seed_l}, {"entries", entries}};
    if (nest.stop_kind) {
        j["stopped"] = {{"kind", std::string(to_string(*nest.stop_kind))}, {"reason", nest.stop_reason}};
    } else {
        j["stopped"] = nullptr;
    }
    return j;
}

json to_json(const ModulusEstimate& est) {
    json values = json::array();
    for (double v : est.grid_values) values.push_back(rounded(v));
    return {{"value", rounded(est.value)},
            {"grid_sizes", est.grid_sizes},
            {"grid_values", values},
            {"richardson_error", rounded(est.richardson_error)},
            {"order", rounded(est.order)},
            {"converged", est.converged}};
}

json to_json(const ModuliProfile& profile) {
    json levels = json::array();
    for (std::size_t n = 0; n < profile.levels.size(); ++n) {
        json j = profile.levels[n] ? to_json(*profile.levels[n]) : json(nullptr);
        levels.push_back({{"level", n}, {"modulus", j}, {"error", profile.errors[n].empty() ? json(nullptr) : json(profile.errors[n])}});
    }
    json j = {{"levels", levels}, {"n0", profile.n0}};
    j["floor"] = profile.floor ? json(rounded(*profile.floor)) : json(nullptr);
    return j;
}

json to_json(const VerificationRow& row) {
    return {{"check", row.check},
            {"labels", row.labels},
            {"hypothesis_met", row.hypothesis_met},
            {"lhs", rounded(row.lhs)},
            {"rhs", rounded(row.rhs)},
            {"margin", rounded(row.margin)},
            {"passed", row.passed},
            {"note", row.note}};
}

std::string Report::dump() const { return doc.dump(2) + "\n"; }

void Report::add_warning(const std::string& op, const Error& e, const json& budget) {
    doc["warnings"].push_back({{"op", op}, {"kind", std::string(to_string(e.kind()))}, {"message", e.what()}, {"budget", budget}});
}

void Report::add_warning(const std::string& op, ErrorKind kind, const std::string& message, const json& budget) {
    doc["warnings"].push_back({{"op", op}, {"kind", std::string(to_string(kind))}, {"message", message}, {"budget", budget}});
}

int exit_code_for(const Error& e) { return e.inconclusive() ? kExitInconclusive : kExitDomainError; }

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

PuzzleConfig puzzle_config(const RunConfig& config) {
    PuzzleConfig pc;
    pc.height = config.height;
    return pc;
}

Combinatorics make_combinatorics(const Parameter& p, const PuzzleSetup& setup, const RunConfig& config, bool& inferred) {
    if (config.seed_angle) {
        inferred = false;
        return Combinatorics(setup.portrait, *config.seed_angle);
    }
    inferred = true;
    auto [theta, valid] = infer_value_angle(p, setup.portrait, setup.alpha.location, config.depth, puzzle_config(config));
    return Combinatorics(setup.portrait, theta, valid);
}

json portrait_json(const PuzzleSetup& s) {
    json angles = json::array();
    for (const Angle& a : s.portrait.angles) angles.push_back(a.str());
    json sectors = json::array();
    for (const Arc& a : s.portrait.sectors()) sectors.push_back({a.start.str(), a.end.str()});
    return {{"q", s.portrait.size()},
            {"rotation", {s.portrait.rotation_p, s.portrait.rotation_q}},
            {"angles", angles},
            {"sectors", sectors},
            {"characteristic_sector", s.portrait.characteristic_sector()},
            {"alpha", to_json(s.alpha.location)},
            {"multiplier", to_json(s.alpha.multiplier)}};
}

json combinatorics_json(const Pipeline& pl, unsigned depth) {
    const Combinatorics& comb = pl.comb;
    json j = {{"value_angle", comb.value_angle().str()}, {"inferred", pl.inferred}};
    j["valid_depth"] = comb.valid_depth() == Combinatorics::kUnbounded ? json(nullptr) : json(comb.valid_depth());
    const unsigned n = std::min(depth, comb.valid_depth());
    json critical = json::array();
    try {
        for (unsigned k = 0; k <= n; ++k) critical.push_back(to_json(comb.critical_label(k)));
    } catch (const Error&) {
        // Recorded up to the first undefined depth.
    }
    j["critical_labels"] = critical;
    const int bad = comb.first_undefined_depth(n);
    j["first_undefined_depth"] = bad >= 0 ? json(bad) : json(nullptr);
    return j;
}

json budget_json(const RunConfig& config) {
    return {{"depth", config.depth}, {"orbit", config.orbit_budget}, {"grid", config.grid}, {"levels", config.levels}};
}

Report start_report(const std::string& command, const RunConfig& config) {
    Report r;
    r.doc["schema"] = kReportSchema;
    r.doc["command"] = command;
    r.doc["config"] = to_json(config);
    r.doc["warnings"] = json::array();
    return r;
}

void record_error(Report& r, const Error& e) {
    r.doc["error"] = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
    r.exit_code = exit_code_for(e);
}

template <class Fn>
Report guarded(const std::string& command, const RunConfig& config, Fn&& body) {
    Report r = start_report(command, config);
    try {
        config.validate();
        body(r);
    } catch (const Error& e) {
        record_error(r, e);
    }
    return r;
}

std::vector<SvgShape> ray_shapes(const Puzzle& puzzle, const std::vector<Angle>& angles) {
    std::vector<SvgShape> out;
    for (const Angle& a : angles) {
        SvgShape s;
        s.points = puzzle.ray(a).points;
        s.points.push_back(puzzle.landing(a));
        s.closed = false;
        s.title = "ray " + a.str();
        out.push_back(std::move(s));
    }
    return out;
}

SvgShape piece_shape(const Puzzle& puzzle, const Label& label) {
    const auto piece = puzzle.piece(label);
    return {piece->boundary, true, label.depth, label.key()};
}

NestRecord build_nest(const Pipeline& pl, const RunConfig& config, Report& r) {
    NestRecord nest = favorite_nest(pl.comb, config.levels, config.nest_budget());
    if (nest.stop_kind) {
        r.add_warning("favorite_nest", *nest.stop_kind, nest.stop_reason, budget_json(config));
    }
    return nest;
}

}  // namespace

Pipeline Pipeline::build(const RunConfig& config) {
    config.validate();
    const Parameter p(config.degree, config.c);
    PuzzleSetup setup = detect_portrait(p, config.q_max);
    bool inferred = false;
    Combinatorics comb = make_combinatorics(p, setup, config, inferred);
    Puzzle puzzle(p, comb, setup.alpha.location, puzzle_config(config));
    return Pipeline{p, std::move(setup), comb, std::move(puzzle), inferred};
}

Report cmd_portrait(const RunConfig& config) {
    return guarded("portrait", config, [&](Report& r) {
        const Parameter p(config.degree, config.c);
        const PuzzleSetup setup = detect_portrait(p, config.q_max);
        r.doc["portrait"] = portrait_json(setup);
        if (!config.svg) return;
        // Rays only depend on the portrait, so any value angle in the characteristic arc will do.
        const Combinatorics comb(setup.portrait, setup.portrait.characteristic_arc().midpoint(), 0);
        const Puzzle puzzle(p, comb, setup.alpha.location, puzzle_config(config));
        std::vector<SvgShape> shapes = ray_shapes(puzzle, setup.portrait.angles);
        shapes.push_back({equipotential(p, config.height, 720), false, 0, "equipotential"});
        r.svgs["portrait.svg"] = render_svg(shapes, {setup.alpha.location});
    });
}

Report cmd_puzzle(const RunConfig& config) {
    return guarded("puzzle", config, [&](Report& r) {
        const Pipeline pl = Pipeline::build(config);
        r.doc["portrait"] = portrait_json(pl.setup);
        r.doc["combinatorics"] = combinatorics_json(pl, config.depth);
        const unsigned n = std::min(config.depth, pl.comb.valid_depth());
        const std::vector<PuzzleLevel> levels = refine_to_depth(pl.puzzle, n);
        json out = json::array();
        for (const PuzzleLevel& level : levels) {
            json labels = json::array();
            for (const PuzzlePiece& piece : level.pieces) labels.push_back(piece.label.key());
            json j = {{"depth", level.depth}, {"count", level.pieces.size()}, {"labels", labels}};
            if (level.depth <= pl.comb.full_level_depth())
                j["symbolic_count"] = pl.comb.level(level.depth).size();
            out.push_back(j);
        }
        r.doc["levels"] = out;
        if (!config.svg) return;
        std::vector<SvgShape> shapes;
        for (const PuzzleLevel& level : levels) {
            if (level.depth > 6) break;
            for (const PuzzlePiece& piece : level.pieces) shapes.push_back({piece.boundary, true, piece.depth, piece.label.key()});
        }
        for (unsigned k = 7; k <= n; ++k) shapes.push_back(piece_shape(pl.puzzle, pl.comb.critical_label(k)));
        r.svgs["puzzle.svg"] = render_svg(shapes, {pl.setup.alpha.location, cplx(0, 0), pl.param.c});
    });
}

Report cmd_nest(const RunConfig& config) {
    return guarded("nest", config, [&](Report& r) {
        const Pipeline pl = Pipeline::build(config);
        r.doc["portrait"] = portrait_json(pl.setup);
        r.doc["combinatorics"] = combinatorics_json(pl, std::min(config.depth, 20u));
        const NestRecord nest = build_nest(pl, config, r);
        r.doc["nest"] = to_json(nest);
        const auto violation = check_nest(pl.comb, nest, config.nest_budget());
        r.doc["checked"] = !violation.has_value();
        r.doc["violation"] = violation ? json(*violation) : json(nullptr);
        if (violation) r.exit_code = kExitTheoremFailure;
        else if (nest.entries.empty() && nest.stop_kind) r.exit_code = exit_code_for(Error(*nest.stop_kind, ""));
        if (!config.svg || nest.entries.empty()) return;
        std::vector<SvgShape> shapes;
        for (const Label& l : nest.chain()) shapes.push_back(piece_shape(pl.puzzle, l));
        r.svgs["nest.svg"] = render_svg(shapes, {cplx(0, 0)});
    });
}

Report cmd_compare(const RunConfig& a, const RunConfig& b) {
    Report r = start_report("compare", a);
    r.doc["config_b"] = to_json(b);
    try {
        a.validate();
        b.validate();
        std::optional<Pipeline> pa, pb;
        parallel_for(2, a.threads, [&](std::size_t i) {
            if (i == 0) pa.emplace(Pipeline::build(a));
            else pb.emplace(Pipeline::build(b));
        });
        r.doc["portrait_a"] = portrait_json(pa->setup);
        r.doc["portrait_b"] = portrait_json(pb->setup);
        const unsigned limit = std::min({a.depth, b.depth, pa->comb.valid_depth(), pb->comb.valid_depth()});
        const int agree = agreement_depth(pa->comb, pb->comb, limit);
        json cmp = {{"computed_depth", limit}, {"agreement_depth", agree}, {"full_agreement", agree == static_cast<int>(limit)}};
        if (agree < static_cast<int>(limit)) {
            const unsigned k = static_cast<unsigned>(agree + 1);
            json div = {{"depth", k}};
            if (pa->setup.portrait == pb->setup.portrait) {
                div["critical_a"] = to_json(pa->comb.critical_label(k));
                div["critical_b"] = to_json(pb->comb.critical_label(k));
                div["value_a"] = to_json(pa->comb.value_label(k));
                div["value_b"] = to_json(pb->comb.value_label(k));
            } else {
                div["reason"] = "different alpha portraits";
            }
            cmp["first_divergence"] = div;
        } else {
            cmp["first_divergence"] = nullptr;
        }
        r.doc["comparison"] = cmp;

        // Moduli floors side by side; each side may fail on its own.
        json floors = json::array();
        for (const auto* side : {&*pa, &*pb}) {
            const RunConfig& cfg = side == &*pa ? a : b;
            json f = nullptr;
            try {
                const NestRecord nest = build_nest(*side, cfg, r);
                const ModuliProfile profile = nest_moduli_profile(side->puzzle, nest, cfg.grid);
                f = profile.floor ? json(rounded(*profile.floor)) : json(nullptr);
            } catch (const Error& e) {
                r.add_warning("nest_moduli_profile", e, budget_json(cfg));
            }
            floors.push_back(f);
        }
        r.doc["moduli_floors"] = floors;
    } catch (const Error& e) {
        record_error(r, e);
    }
    return r;
}

Report cmd_verify(const RunConfig& config) {
    return guarded("verify", config, [&](Report& r) {
        const Pipeline pl = Pipeline::build(config);
        r.doc["portrait"] = portrait_json(pl.setup);
        const NestRecord nest = build_nest(pl, config, r);
        r.doc["nest"] = to_json(nest);
        const NestBudget nb = config.nest_budget();
        ModulusBudget mb;
        mb.grid_n = config.grid;

        struct Task {
            std::string op;
            std::function<VerificationRow()> run;
        };
        std::vector<Task> tasks;
        const auto& E = nest.entries;
        for (std::size_t i = 0; i < E.size(); ++i) {
            tasks.push_back({"verify_children_lemma", [&, i] { return verify_children_lemma(pl.puzzle, E[i].q, E[i].p, mb, nb); }});
            if (i + 1 < E.size()) {
                tasks.push_back({"verify_children_lemma", [&, i] { return verify_children_lemma(pl.puzzle, E[i].q, E[i + 1].q, mb, nb); }});
                tasks.push_back({"verify_lemma_Y", [&, i] {
                                     return verify_lemma_Y(pl.puzzle, E[i].q, E[i].p, E[i + 1].q, E[i + 1].p, E[i].q, mb, nb);
                                 }});
                if (i > 0) {
                    tasks.push_back({"verify_lemma_Y", [&, i] {
                                         return verify_lemma_Y(pl.puzzle, E[i].q, E[i].p, E[i + 1].q, E[i + 1].p, E[i - 1].q, mb, nb);
                                     }});
                }
            }
        }
        std::vector<std::optional<VerificationRow>> rows(tasks.size());
        std::vector<std::optional<Error>> errors(tasks.size());
        parallel_for(tasks.size(), config.threads, [&](std::size_t i) {
            try {
                rows[i] = tasks[i].run();
            } catch (const Error& e) {
                errors[i] = e;
            }
        });
        json out = json::array();
        bool failed = false;
        std::size_t evaluated = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (errors[i]) {
                r.add_warning(tasks[i].op, *errors[i], budget_json(config));
                continue;
            }
            out.push_back(to_json(*rows[i]));
            if (rows[i]->hypothesis_met) {
                ++evaluated;
                failed = failed || !rows[i]->passed;
            }
        }
        r.doc["verification"] = out;

        const ModuliProfile profile = nest_moduli_profile(pl.puzzle, nest, config.grid, 0);
        json prof = to_json(profile);
        // Decay diagnostic: floor over levels >= 2 against the level-2 value.
        if (profile.levels.size() > 2 && profile.levels[2]) {
            double later = profile.levels[2]->value;
            for (std::size_t n = 2; n < profile.levels.size(); ++n) {
                if (profile.levels[n]) later = std::min(later, profile.levels[n]->value);
            }
            prof["floor_from_level2_ratio"] = rounded(later / profile.levels[2]->value);
        }
        r.doc["moduli_profile"] = prof;
        if (failed) r.exit_code = kExitTheoremFailure;
        else if (evaluated == 0) r.exit_code = kExitInconclusive;
    });
}

std::string render_svg(const std::vector<SvgShape>& shapes, const std::vector<cplx>& marks) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    auto grow = [&](cplx z) {
        x0 = std::min(x0, z.real());
        x1 = std::max(x1, z.real());
        y0 = std::min(y0, z.imag());
        y1 = std::max(y1, z.imag());
    };
    for (const auto& s : shapes)
        for (cplx z : s.points) grow(z);
    for (cplx z : marks) grow(z);
    if (x0 > x1) x0 = y0 = -1, x1 = y1 = 1;
    const double size = 800, pad = 10;
    const double scale = (size - 2 * pad) / std::max({x1 - x0, y1 - y0, 1e-300});
    auto px = [&](cplx z) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f,%.3f", pad + (z.real() - x0) * scale, pad + (y1 - z.imag()) * scale);
        return std::string(buf);
    };
    auto escape = [](const std::string& s) {
        std::string out;
        for (char ch : s) {
            switch (ch) {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                case '"': out += "&quot;"; break;
                default: out += ch;
            }
        }
        return out;
    };
    std::ostringstream svg;
    const double width = pad * 2 + (x1 - x0) * scale, height = pad * 2 + (y1 - y0) * scale;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << std::lround(width) << "\" height=\"" << std::lround(height)
        << "\" viewBox=\"0 0 " << std::lround(width) << " " << std::lround(height) << "\">\n";
    for (const auto& s : shapes) {
        if (s.points.empty()) continue;
        svg << "<path d=\"M" << px(s.points[0]);
        for (std::size_t i = 1; i < s.points.size(); ++i) svg << " L" << px(s.points[i]);
        if (s.closed) {
            const int hue = static_cast<int>((s.depth * 47) % 360);
            svg << " Z\" fill=\"hsl(" << hue << ",70%,55%)\" fill-opacity=\"0.4\" stroke=\"#222\" stroke-width=\"0.4\">";
        } else {
            svg << "\" fill=\"none\" stroke=\"#c03\" stroke-width=\"0.8\">";
        }
        svg << "<title>" << escape(s.title) << "</title></path>\n";
    }
    for (cplx z : marks) {
        const std::string p = px(z);
        const auto comma = p.find(',');
        svg << "<circle cx=\"" << p.substr(0, comma) << "\" cy=\"" << p.substr(comma + 1) << "\" r=\"2.5\" fill=\"black\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace puzzlekit
