#pragma once

#include "puzzlekit/angle.hpp"
#include "puzzlekit/angle_engine.hpp"
#include "puzzlekit/puzzle.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace testing {

using namespace puzzlekit;

// Real parameters whose kneading maps are Q(k) = max(k - gap, 0). They were found by
// bisection on the real line against the kneading sequence; gap 2 is the Fibonacci map.
inline constexpr double kFibonacci = -1.8705286321646449;
inline constexpr double kGap3 = -1.9695530971121511;
inline constexpr double kGap4 = -1.9925196612905338;

// Kneading symbols e_1 e_2 ... of the map with kneading map Q(k) = max(k - gap, 0),
// where e_k = '1' iff f^k(0) < 0. Built from cutting times S_k = S_{k-1} + S_{Q(k)}.
inline std::string kneading_sequence(unsigned gap, std::size_t n) {
    std::string e = "1";
    std::vector<std::size_t> cut{1};
    for (unsigned k = 1; e.size() < n; ++k) {
        const std::size_t q = k > gap ? k - gap : 0;
        std::string block = e.substr(0, cut[q]);
        block.back() = block.back() == '0' ? '1' : '0';
        e += block;
        cut.push_back(cut.back() + cut[q]);
    }
    return e.substr(0, n);
}

// External angle of the critical value of a real quadratic map with the given kneading
// symbols, read off from the binary expansion: the angle of c lies in (1/4, 1/2) and
// each step picks the half of the preimage pair on the side of the real axis.
inline Angle real_value_angle(const std::string& e) {
    mpq_class u(1, 4);
    for (auto it = e.rbegin(); it != e.rend(); ++it) {
        if (*it == '1') u = (1 - u) / 2;
        else u = u / 2;
    }
    u.canonicalize();
    return Angle(u.get_num(), u.get_den());
}

inline Angle kneading_angle(unsigned gap, std::size_t symbols = 400) {
    return real_value_angle(kneading_sequence(gap, symbols));
}

inline Portrait basilica_portrait() { return Portrait::from_angles(2, {Angle(1, 3), Angle(2, 3)}); }

// Brute-force cycles of t -> d t on the fractions k/(d^q - 1) with rotation number p/q.
inline std::vector<std::vector<Angle>> brute_force_cycles(unsigned d, unsigned q, unsigned p) {
    long den = 1;
    for (unsigned i = 0; i < q; ++i) den *= d;
    den -= 1;
    std::vector<std::vector<Angle>> out;
    for (long k = 0; k < den; ++k) {
        std::vector<long> orbit{k};
        long x = k;
        for (unsigned i = 1; i < q; ++i) {
            x = (x * d) % den;
            orbit.push_back(x);
        }
        if ((orbit.back() * d) % den != k) continue;
        bool exact_period = true;
        for (unsigned i = 1; i < q; ++i) exact_period = exact_period && orbit[i] != k;
        if (!exact_period) continue;
        std::vector<long> sorted = orbit;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.front() != k) continue;  // one representative per cycle
        // Rotation by p/q: the image of the i-th smallest is the (i+p)-th smallest.
        bool rotation = true;
        for (unsigned i = 0; i < q; ++i) {
            const long img = (sorted[i] * d) % den;
            rotation = rotation && img == sorted[(i + p) % q];
        }
        if (!rotation) continue;
        std::vector<Angle> cycle;
        for (long v : sorted) cycle.emplace_back(v, den);
        out.push_back(cycle);
    }
    return out;
}

// Minimal XML well-formedness: balanced tags, quoted attributes, a single root.
inline bool well_formed_xml(const std::string& s) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    int roots = 0;
    while (i < s.size()) {
        if (s[i] != '<') {
            ++i;
            continue;
        }
        if (s.compare(i, 2, "<?") == 0) {
            const auto end = s.find("?>", i);
            if (end == std::string::npos) return false;
            i = end + 2;
            continue;
        }
        const auto end = s.find('>', i);
        if (end == std::string::npos) return false;
        std::string tag = s.substr(i + 1, end - i - 1);
        i = end + 1;
        if (!tag.empty() && tag[0] == '/') {
            if (stack.empty() || stack.back() != tag.substr(1)) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = !tag.empty() && tag.back() == '/';
        if (self_closing) tag.pop_back();
        std::size_t n = 0;
        while (n < tag.size() && !std::isspace(static_cast<unsigned char>(tag[n]))) ++n;
        const std::string name = tag.substr(0, n);
        if (name.empty()) return false;
        if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
        if (stack.empty()) ++roots;
        if (!self_closing) stack.push_back(name);
    }
    return stack.empty() && roots == 1;
}

}  // namespace testing
