#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "puzzlekit/error.hpp"
#include "puzzlekit/puzzle.hpp"
#include "support.hpp"

#include <set>

using namespace puzzlekit;

namespace {

struct Fixture {
    Parameter param;
    PuzzleSetup setup;
    Puzzle puzzle;
};

Fixture make_fixture(double c, unsigned depth) {
    const Parameter p(2, c);
    PuzzleSetup s = detect_portrait(p, 10);
    auto [theta, valid] = infer_value_angle(p, s.portrait, s.alpha.location, depth);
    Puzzle puzzle(p, Combinatorics(s.portrait, theta, valid), s.alpha.location);
    return {p, s, puzzle};
}

const Fixture& fibonacci() {
    static const Fixture f = make_fixture(testing::kFibonacci, 30);
    return f;
}

const Fixture& basilica() {
    static const Fixture f = make_fixture(-1, 2);
    return f;
}

}  // namespace

TEST_CASE("depth-0 pieces of the basilica") {
    const Fixture& f = basilica();
    CHECK(f.setup.portrait.angles == std::vector<Angle>{Angle(1, 3), Angle(2, 3)});
    const PuzzleLevel level = build_level0(f.puzzle);
    REQUIRE(level.pieces.size() == 2);
    for (const PuzzlePiece& piece : level.pieces) {
        CHECK(is_simple_closed(piece.boundary));
        CHECK(signed_area(piece.boundary) > 0);
        if (piece.label.contains(Angle(1, 2))) {
            CHECK(piece.contains(f.param.c));
            CHECK_FALSE(piece.contains_critical_point);
        } else {
            CHECK(piece.contains(0.0));
            CHECK(piece.contains_critical_point);
        }
    }
}

TEST_CASE("depth-1 refinement of the basilica") {
    const Fixture& f = basilica();
    const auto levels = refine_to_depth(f.puzzle, 1);
    REQUIRE(levels.size() == 2);
    CHECK(levels[1].pieces.size() == 3);
    std::set<std::string> angles;
    for (const PuzzlePiece& piece : levels[1].pieces) {
        for (const Angle& a : piece.label.boundary_angles()) angles.insert(a.str());
    }
    CHECK(angles == std::set<std::string>{"1/6", "1/3", "2/3", "5/6"});
    std::set<std::string> symbolic;
    for (const Label& l : f.puzzle.combinatorics().level(1)) symbolic.insert(l.key());
    std::set<std::string> geometric;
    for (const PuzzlePiece& piece : levels[1].pieces) geometric.insert(piece.label.key());
    CHECK(symbolic == geometric);
}

TEST_CASE("depth-0 piece count equals the portrait size") {
    for (cplx c : {cplx(-1, 0), cplx(-0.12256116687665, 0.74486176661974), cplx(0.28227139076691, 0.53006061757852),
                   cplx(testing::kFibonacci, 0)}) {
        const Parameter p(2, c);
        const PuzzleSetup s = detect_portrait(p, 10);
        const Puzzle puzzle(p, Combinatorics(s.portrait, s.portrait.characteristic_arc().midpoint(), 0), s.alpha.location);
        CHECK(build_level0(puzzle).pieces.size() == s.portrait.size());
    }
}

TEST_CASE("inferred value angle agrees with kneading theory") {
    for (auto [c, gap] : std::vector<std::pair<double, unsigned>>{{testing::kFibonacci, 2}, {testing::kGap3, 3}}) {
        const Fixture f = make_fixture(c, 30);
        const Combinatorics& inferred = f.puzzle.combinatorics();
        CHECK(inferred.valid_depth() == 30);
        const Combinatorics oracle(f.setup.portrait, testing::kneading_angle(gap));
        CHECK(agreement_depth(inferred, oracle, 30) == 30);
    }
}

TEST_CASE("locate agrees with the symbolic labels") {
    const Fixture& f = fibonacci();
    const Combinatorics& comb = f.puzzle.combinatorics();
    const auto chain0 = f.puzzle.locate_chain(0.0, 15);
    const auto chain_c = f.puzzle.locate_chain(f.param.c, 15);
    for (unsigned n = 0; n <= 15; ++n) {
        CHECK(chain0[n] == comb.critical_label(n));
        CHECK(chain_c[n] == comb.value_label(n));
    }
    try {
        f.puzzle.locate(f.setup.alpha.location, 3);
        FAIL("alpha is on every boundary");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OnBoundary);
    }
    try {
        f.puzzle.locate(cplx(50, 0), 2);
        FAIL("far outside the truncation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OutsideTruncation);
    }
}

TEST_CASE("full levels: nesting, equivariance and the critical piece") {
    const Fixture& f = fibonacci();
    const Combinatorics& comb = f.puzzle.combinatorics();
    const auto levels = refine_to_depth(f.puzzle, 6);
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const auto& pieces = levels[k].pieces;
        if (k <= comb.full_level_depth()) CHECK(pieces.size() == comb.level(static_cast<unsigned>(k)).size());
        if (k > 0) CHECK(pieces.size() >= levels[k - 1].pieces.size());
        int critical = 0;
        for (const PuzzlePiece& piece : pieces) critical += piece.contains(0.0) ? 1 : 0;
        CHECK(critical == 1);
        if (k == 0) continue;
        for (const PuzzlePiece& piece : pieces) {
            int parents = 0;
            for (const PuzzlePiece& parent : levels[k - 1].pieces) parents += nested_in(f.puzzle, piece.label, parent.label) ? 1 : 0;
            CHECK(parents == 1);
            const Label image = f.puzzle.locate(apply_map(f.param, interior_point(piece.boundary)), piece.depth - 1);
            CHECK(equivariance_defect(f.puzzle, piece.label) < 5 * f.puzzle.piece(image)->max_segment);
        }
    }
}

TEST_CASE("the critical piece maps onto the value piece") {
    const Fixture& f = fibonacci();
    const Combinatorics& comb = f.puzzle.combinatorics();
    for (unsigned k = 0; k < 15; ++k) {
        const auto Y = f.puzzle.piece(comb.critical_label(k + 1));
        CHECK(Y->contains(0.0));
        CHECK(f.puzzle.locate(apply_map(f.param, 0.0), k) == comb.value_label(k));
        const auto V = f.puzzle.piece(comb.value_label(k));
        CHECK(directed_hausdorff(std::vector<cplx>{apply_map(f.param, Y->boundary.front())}, {V->boundary}, true) <
              5 * V->max_segment);
    }
}

TEST_CASE("first return of the critical orbit matches a direct scan") {
    // Brute force: iterate 0 and locate each point at depth 5.
    const Fixture& f = fibonacci();
    const Combinatorics& comb = f.puzzle.combinatorics();
    const Label Y5 = comb.critical_label(5);
    cplx z = 0;
    unsigned long t = 0;
    for (unsigned long j = 1; j <= 200; ++j) {
        z = apply_map(f.param, z);
        if (f.puzzle.locate(z, 5) == Y5) {
            t = j;
            break;
        }
    }
    REQUIRE(t > 0);
    unsigned long symbolic = 0;
    for (unsigned long j = 1; j <= 200 && symbolic == 0; ++j) symbolic = comb.orbit_in(j, Y5) ? j : 0;
    CHECK(symbolic == t);
}

TEST_CASE("boundaries are simple and counter-clockwise") {
    const Fixture& f = fibonacci();
    const Combinatorics& comb = f.puzzle.combinatorics();
    for (unsigned k : {8u, 12u, 20u, 29u}) {
        for (const Label& l : {comb.critical_label(k), comb.value_label(k)}) {
            const auto piece = f.puzzle.piece(l);
            CHECK(is_simple_closed(piece->boundary));
            CHECK(signed_area(piece->boundary) > 0);
            CHECK(piece->depth == k);
            CHECK(piece->potential == doctest::Approx(f.puzzle.height_at(k)));
        }
        CHECK(nested_in(f.puzzle, comb.critical_label(k), comb.critical_label(k - 1)));
    }
}
