#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "puzzlekit/angle_engine.hpp"
#include "puzzlekit/error.hpp"
#include "support.hpp"

#include <random>
#include <set>

using namespace puzzlekit;
using testing::basilica_portrait;

namespace {

Angle random_angle(std::mt19937_64& rng, unsigned bits = 40) {
    const mpz_class den = mpz_class(1) << bits;
    mpz_class num = static_cast<unsigned long>(rng() >> (64 - bits));
    // Odd multiplier in the denominator keeps these off every dyadic boundary angle.
    return Angle(num * 3 + 1, den * 3);
}

}  // namespace

TEST_CASE("times_d examples") {
    CHECK(times_d(2, Angle(1, 3)) == Angle(2, 3));
    CHECK(times_d(2, Angle(2, 3)) == Angle(1, 3));
    CHECK(times_d(3, Angle(1, 4)) == Angle(3, 4));
    CHECK(Angle(5, 3) == Angle(2, 3));
    CHECK(Angle::parse("7/14") == Angle(1, 2));
    CHECK_THROWS_AS(Angle::parse("1/0"), Error);
}

TEST_CASE("preimages are exactly the d points (t + k)/d") {
    std::mt19937_64 rng(7);
    for (unsigned d : {2u, 3u, 5u}) {
        for (int trial = 0; trial < 50; ++trial) {
            const Angle t = random_angle(rng);
            const auto pre = t.preimages(d);
            REQUIRE(pre.size() == d);
            std::set<std::string> distinct;
            for (unsigned k = 0; k < d; ++k) {
                CHECK(pre[k].times(d) == t);
                CHECK(pre[k] == t.preimage(d, k));
                distinct.insert(pre[k].str());
                // Reduced: gcd(num, den) = 1.
                CHECK(gcd(pre[k].num(), pre[k].den()) == 1);
            }
            CHECK(distinct.size() == d);
            CHECK(std::is_sorted(pre.begin(), pre.end()));
        }
    }
}

TEST_CASE("enumerate_portraits matches brute-force cycle scan") {
    CHECK(enumerate_portraits(2, 2, 1).size() == 1);
    CHECK(enumerate_portraits(2, 2, 1)[0].angles == std::vector<Angle>{Angle(1, 3), Angle(2, 3)});
    for (auto [q, p] : std::vector<std::pair<unsigned, unsigned>>{{2, 1}, {3, 1}, {3, 2}, {4, 1}, {4, 3}, {5, 2}, {7, 3}}) {
        const auto found = enumerate_portraits(2, q, p);
        const auto oracle = testing::brute_force_cycles(2, q, p);
        REQUIRE(found.size() == oracle.size());
        for (std::size_t i = 0; i < found.size(); ++i) CHECK(found[i].angles == oracle[i]);
    }
    const auto third = enumerate_portraits(2, 3, 1);
    REQUIRE(third.size() == 1);
    CHECK(third[0].angles == std::vector<Angle>{Angle(1, 7), Angle(2, 7), Angle(4, 7)});
    const auto two_thirds = enumerate_portraits(2, 3, 2);
    REQUIRE(two_thirds.size() == 1);
    CHECK(two_thirds[0].angles == std::vector<Angle>{Angle(3, 7), Angle(5, 7), Angle(6, 7)});
}

TEST_CASE("portrait angle sets are invariant under multiplication by d") {
    for (unsigned d : {2u, 3u}) {
        for (unsigned q = 2; q <= 5; ++q) {
            for (unsigned p = 1; p < q; ++p) {
                if (std::gcd(p, q) != 1) continue;
                for (const Portrait& portrait : enumerate_portraits(d, q, p)) {
                    std::set<std::string> a, b;
                    for (const Angle& t : portrait.angles) {
                        a.insert(t.str());
                        b.insert(t.times(d).str());
                    }
                    CHECK(a == b);
                    CHECK(portrait.size() == q);
                    CHECK(portrait.rotation_p == p);
                }
            }
        }
    }
}

TEST_CASE("sector_index examples") {
    const Portrait basilica = basilica_portrait();
    const auto& s = basilica.sectors();
    REQUIRE(s.size() == 2);
    // The sector through 0 is the critical one.
    CHECK(s[sector_index(basilica, Angle(0, 1))] == Arc{Angle(2, 3), Angle(1, 3)});
    CHECK(sector_index(basilica, Angle(0, 1)) == 0);
    CHECK(s[sector_index(basilica, Angle(1, 2))] == Arc{Angle(1, 3), Angle(2, 3)});
    CHECK_THROWS_AS(sector_index(basilica, Angle(1, 3)), Error);

    const Portrait rabbit = Portrait::from_angles(2, {Angle(1, 7), Angle(2, 7), Angle(4, 7)});
    CHECK(rabbit.sectors()[sector_index(rabbit, Angle(3, 7))] == Arc{Angle(2, 7), Angle(4, 7)});
    // Critical sector: its preimage set is invariant under t -> t + 1/d.
    const Arc& critical = rabbit.sectors()[0];
    CHECK(critical.length() > mpq_class(1, 2));
}

TEST_CASE("depth-1 pullback of the basilica portrait") {
    const Portrait basilica = basilica_portrait();
    const auto level0_labels = level0(basilica);
    CHECK(level0_labels.size() == 2);
    const auto level1 = pullback_labels(2, level0_labels, Angle(1, 2));
    CHECK(level1.size() == 3);
    std::set<std::string> boundary;
    for (const Label& l : level1) {
        for (const Angle& a : l.boundary_angles()) boundary.insert(a.str());
    }
    // Preimages of 1/3 are 1/6, 2/3; of 2/3 they are 1/3, 5/6.
    CHECK(boundary == std::set<std::string>{"1/6", "1/3", "2/3", "5/6"});
}

TEST_CASE("level refinement and forward equivariance") {
    const Angle theta = testing::kneading_angle(2);
    for (const Portrait& portrait : {basilica_portrait()}) {
        Combinatorics comb(portrait, theta);
        CHECK(comb.level(0).size() == portrait.size());
        std::size_t previous = 0;
        for (unsigned n = 0; n + 1 <= 6; ++n) {
            const auto parent = comb.level(n);
            const auto child = comb.level(n + 1);
            CHECK(child.size() >= parent.size());
            CHECK(parent.size() >= previous);
            previous = parent.size();
            for (const Label& c : child) {
                for (const Arc& arc : c.arcs) {
                    int owners = 0;
                    for (const Label& p : parent) {
                        for (const Arc& pa : p.arcs) owners += pa.covers(arc) ? 1 : 0;
                    }
                    CHECK(owners == 1);
                    // The image arc is an arc of a depth-n label (up to merging at shared ends).
                    const Arc image{arc.start.times(2), arc.end.times(2)};
                    bool inside = false;
                    for (const Label& p : parent) inside = inside || std::any_of(p.arcs.begin(), p.arcs.end(), [&](const Arc& pa) { return pa.covers(image) || image.covers(pa); });
                    CHECK(inside);
                }
            }
        }
    }
}

TEST_CASE("critical value labels") {
    const Portrait basilica = basilica_portrait();
    const auto labels = critical_value_labels(basilica, Angle(1, 2), 0);
    REQUIRE(labels.size() == 1);
    CHECK(labels[0].arcs == std::vector<Arc>{Arc{Angle(1, 3), Angle(2, 3)}});
    CHECK_THROWS_AS(critical_value_labels(basilica, Angle(1, 3), 0), Error);
    try {
        critical_value_labels(basilica, Angle(1, 3), 0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CombinatoricsUndefined);
    }
}

TEST_CASE("critical value labels follow the sector itinerary") {
    // Angles sharing a depth-k label share their first k+1 sector symbols.
    const Angle theta = testing::kneading_angle(2);
    const Combinatorics comb(basilica_portrait(), theta);
    const unsigned n = 30;
    const auto labels = critical_value_labels(basilica_portrait(), theta, n);
    REQUIRE(labels.size() == n + 1);
    const auto itinerary = comb.itinerary(theta, n + 1);
    for (unsigned k = 0; k <= n; ++k) {
        CHECK(labels[k].contains(theta));
        CHECK(labels[k] == comb.value_label(k));
        if (k > 0) CHECK(labels[k].refines(labels[k - 1]));
        // Every angle in the label has the same first k+1 sector symbols.
        for (const Arc& arc : labels[k].arcs) {
            const Angle mid = arc.midpoint();
            if (comb.portrait().contains(mid)) continue;
            CHECK(comb.itinerary(mid, k + 1) == std::vector<std::size_t>(itinerary.begin(), itinerary.begin() + k + 1));
        }
    }
}

TEST_CASE("same combinatorics") {
    const Angle theta = testing::kneading_angle(2);
    const Combinatorics a(basilica_portrait(), theta);
    CHECK(same_combinatorics(a, a, 25));
    CHECK(agreement_depth(a, a, 25) == 25);
    const Combinatorics rabbit(Portrait::from_angles(2, {Angle(1, 7), Angle(2, 7), Angle(4, 7)}), Angle(9, 56));
    CHECK_FALSE(same_combinatorics(a, rabbit, 0));
    CHECK(agreement_depth(a, rabbit, 10) == -1);
    // Angles that agree to many binary digits share combinatorics to a matching depth.
    mpq_class shifted = mpq_class(theta.num(), theta.den()) + mpq_class(1, mpz_class(1) << 40);
    shifted.canonicalize();
    const Angle near(shifted.get_num(), shifted.get_den());
    const int agree = agreement_depth(a, Combinatorics(basilica_portrait(), near), 60);
    CHECK(agree >= 20);
    CHECK(agree < 60);
    // Valid depth is enforced.
    const Combinatorics shallow(basilica_portrait(), theta, 5);
    CHECK_THROWS_AS(shallow.value_label(6), Error);
}

TEST_CASE("degree 3 pullback counts") {
    const auto portraits = enumerate_portraits(3, 2, 1);
    REQUIRE_FALSE(portraits.empty());
    const Portrait& portrait = portraits.front();
    const Arc& characteristic = portrait.characteristic_arc();
    const Combinatorics comb(portrait, characteristic.midpoint());
    CHECK(comb.level(0).size() == 2);
    // Off the critical value piece a label splits into d pieces.
    std::size_t expected = 0;
    for (const Label& l : comb.level(0)) expected += l.contains(comb.value_angle()) ? 1 : 3;
    CHECK(comb.level(1).size() == expected);
}
