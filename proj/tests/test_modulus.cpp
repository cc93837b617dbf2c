#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "puzzlekit/error.hpp"
#include "puzzlekit/modulus.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace puzzlekit;

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

Polyline circle(cplx center, double r, int n = 400) {
    Polyline out;
    for (int k = 0; k < n; ++k) out.push_back(center + std::polar(r, kTwoPi * k / n));
    return out;
}

Polyline square(cplx center, double side, int per_side = 100) {
    Polyline out;
    const double h = side / 2;
    const cplx corners[4] = {{h, -h}, {h, h}, {-h, h}, {-h, -h}};
    for (int s = 0; s < 4; ++s) {
        for (int k = 0; k < per_side; ++k) {
            out.push_back(center + corners[s] + (corners[(s + 1) % 4] - corners[s]) * (double(k) / per_side));
        }
    }
    return out;
}

Polyline wobbly(double r, double amp, int lobes, int n = 600) {
    Polyline out;
    for (int k = 0; k < n; ++k) {
        const double phi = kTwoPi * k / n;
        out.push_back(std::polar(r + amp * std::cos(lobes * phi), phi));
    }
    return out;
}

AnnulusSpec annulus(Polyline outer, Polyline inner) { return {std::move(outer), std::move(inner), "outer", "inner"}; }

AnnulusSpec transformed(const AnnulusSpec& a, cplx scale, cplx shift) {
    AnnulusSpec out = a;
    for (cplx& z : out.outer) z = scale * z + shift;
    for (cplx& z : out.inner) z = scale * z + shift;
    return out;
}

struct FibonacciPuzzle {
    Parameter param{2, testing::kFibonacci};
    PuzzleSetup setup = detect_portrait(param, 10);
    Puzzle puzzle = make();

    Puzzle make() const {
        auto [theta, valid] = infer_value_angle(param, setup.portrait, setup.alpha.location, 60);
        return Puzzle(param, Combinatorics(setup.portrait, theta, valid), setup.alpha.location);
    }
};

const FibonacciPuzzle& fibonacci() {
    static const FibonacciPuzzle f;
    return f;
}

}  // namespace

TEST_CASE("round annuli") {
    CHECK(modulus(annulus(circle(0, 2), circle(0, 1))).value == doctest::Approx(std::log(2.0) / kTwoPi).epsilon(0.02));
    CHECK(modulus(annulus(circle(0, std::exp(kTwoPi), 2000), circle(0, 1))).value == doctest::Approx(1.0).epsilon(0.02));
    for (double l : {0.5, 1.0, 2.0, 3.0}) {
        const ModulusEstimate est = modulus(annulus(circle(0, std::exp(l), 800), circle(0, 1)));
        CHECK(est.value == doctest::Approx(l / kTwoPi).epsilon(0.02));
        CHECK(est.grid_sizes.size() >= 2);
        CHECK(est.grid_values.size() == est.grid_sizes.size());
        CHECK(est.richardson_error >= 0);
    }
}

TEST_CASE("eccentric annulus matches the closed form") {
    // Outer |z| = R, inner |z - a| = r: modulus = acosh((R^2 + r^2 - a^2) / (2 R r)) / (2 pi).
    for (auto [R, r, a] : std::vector<std::tuple<double, double, double>>{{4, 1, 1.5}, {3, 0.5, 1.8}, {5, 2, 1}}) {
        const double exact = std::acosh((R * R + r * r - a * a) / (2 * R * r)) / kTwoPi;
        CHECK(modulus(annulus(circle(0, R, 800), circle(a, r))).value == doctest::Approx(exact).epsilon(0.02));
    }
}

TEST_CASE("square frame against a finer extrapolated solve") {
    const AnnulusSpec frame = annulus(square(0, 4), square(0, 1));
    const ModulusEstimate coarse = modulus(frame, 256);
    const ModulusEstimate fine = modulus(frame, 1024);
    CHECK(coarse.value == doctest::Approx(fine.value).epsilon(0.02));
    CHECK(fine.value > std::log(4.0 / std::sqrt(2.0)) / kTwoPi);  // contains the round annulus between them
    CHECK(fine.value < std::log(4.0 * std::sqrt(2.0)) / kTwoPi);
}

TEST_CASE("translation and scaling do not change the modulus") {
    const AnnulusSpec a = annulus(wobbly(3, 0.6, 5), circle(0.2, 0.8));
    const double base = modulus(a).value;
    for (auto [scale, shift] : std::vector<std::pair<cplx, cplx>>{{1, {5, -3}}, {0.01, 0}, {{0, 7}, {-1, 1}}}) {
        CHECK(modulus(transformed(a, scale, shift)).value == doctest::Approx(base).epsilon(0.01));
    }
}

TEST_CASE("monotonicity and superadditivity") {
    const Polyline inner = circle(0, 1);
    const double big = modulus(annulus(circle(0, 4), inner)).value;
    const double small = modulus(annulus(square(0, 5), inner)).value;
    CHECK(small <= big * 1.02);

    const Polyline middle = wobbly(2.5, 0.5, 3);
    const double whole = modulus(annulus(circle(0, 8), inner)).value;
    const double a1 = modulus(annulus(middle, inner)).value;
    const double a2 = modulus(annulus(circle(0, 8), middle)).value;
    CHECK(whole >= (a1 + a2) * 0.97);
    // A wobbly separating curve makes the inequality strict.
    CHECK(whole > a1 + a2);
}

TEST_CASE("invalid and degenerate annuli") {
    try {
        modulus(annulus(circle(0, 1), circle(0, 2)));
        FAIL("inner curve outside");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateAnnulus);
    }
    Polyline bowtie{{-1, -1}, {1, 1}, {1, -1}, {-1, 1}};
    try {
        validate_annulus(annulus(circle(0, 3), bowtie));
        FAIL("self-intersecting inner curve");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidArgument);
    }
    try {
        modulus_on_grid(annulus(circle(0, 1), circle(0, 1 - 1e-7)), 128);
        FAIL("curves within one cell");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateAnnulus);
    }
}

TEST_CASE("m of a piece is a running minimum over return domains") {
    const FibonacciPuzzle& f = fibonacci();
    const Combinatorics& comb = f.puzzle.combinatorics();
    const Label Q = comb.critical_label(8);
    const ChildRecord P = first_child(comb, Q, {}, false);
    const double central = modulus(piece_annulus(f.puzzle, Q, P.child), 256).value;

    const PieceModulus m = m_of_piece(f.puzzle, Q, {256, 512, 400, 4});
    REQUIRE(!m.measured.empty());
    CHECK(m.measured.front().first == P.child);
    CHECK(m.estimate.value <= central * (1 + 1e-9));
    double running = m.measured.front().second;
    for (const auto& [D, value] : m.measured) {
        running = std::min(running, value);
        CHECK(D.refines(Q));
        CHECK(D.depth > Q.depth);
        CHECK(value >= m.estimate.value);
    }
    CHECK(running == m.estimate.value);
    CHECK(m.visited_components >= m.measured_components);
    CHECK(m.note.find("upper bound") != std::string::npos);

    // More samples and more measured domains can only lower the value, and barely do.
    const PieceModulus wide = m_of_piece(f.puzzle, Q, {256, 4096, 400, 8});
    CHECK(wide.estimate.value <= m.estimate.value * (1 + 1e-9));
    CHECK(wide.estimate.value == doctest::Approx(m.estimate.value).epsilon(0.01));
}

TEST_CASE("children lemma and Lemma Y rows on the Fibonacci nest") {
    const FibonacciPuzzle& f = fibonacci();
    const Combinatorics& comb = f.puzzle.combinatorics();
    const NestRecord nest = favorite_nest(comb, 3);
    REQUIRE(nest.entries.size() >= 3);
    const ModulusBudget budget{128, 512, 400, 3};
    for (std::size_t i = 0; i < 2; ++i) {
        const NestEntry& e = nest.entries[i];
        const VerificationRow row = verify_children_lemma(f.puzzle, e.q, nest.entries[i + 1].q, budget);
        CHECK(row.hypothesis_met);
        CHECK(row.rhs > 0);
        CHECK(row.passed);
        CHECK(row.lhs >= row.rhs * (1 - kVerificationSlack));
    }
    const NestEntry& a = nest.entries[1];
    const NestEntry& b = nest.entries[2];
    const VerificationRow y = verify_lemma_Y(f.puzzle, a.q, a.p, b.q, b.p, a.q, budget);
    CHECK(y.hypothesis_met);
    CHECK(y.passed);
    CHECK(y.margin == doctest::Approx((y.lhs - y.rhs) / y.rhs));
    // V = Q^0 has its first child outside Q^1, so the lemma does not apply.
    const VerificationRow gated = verify_lemma_Y(f.puzzle, a.q, a.p, b.q, b.p, nest.entries[0].q, budget);
    CHECK_FALSE(gated.hypothesis_met);
    CHECK(gated.note.find("HypothesisNotMet") != std::string::npos);
}

TEST_CASE("moduli profile of the Fibonacci nest is positive") {
    const FibonacciPuzzle& f = fibonacci();
    const NestRecord nest = favorite_nest(f.puzzle.combinatorics(), 3);
    const ModuliProfile profile = nest_moduli_profile(f.puzzle, nest, 128);
    REQUIRE(profile.levels.size() == nest.entries.size());
    for (std::size_t n = 0; n < profile.levels.size(); ++n) {
        REQUIRE(profile.levels[n].has_value());
        CHECK(profile.levels[n]->value > 0);
        CHECK(profile.errors[n].empty());
    }
    REQUIRE(profile.floor.has_value());
    CHECK(*profile.floor > 0);
    double lowest = profile.levels[0]->value;
    for (const auto& level : profile.levels) lowest = std::min(lowest, level->value);
    CHECK(*profile.floor == lowest);
}
