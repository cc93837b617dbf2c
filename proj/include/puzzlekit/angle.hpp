#pragma once

#include <gmpxx.h>

#include <compare>
#include <string>
#include <vector>

namespace puzzlekit {

/// Exact rational angle in [0, 1), always reduced.
class Angle {
public:
    Angle() : num_(0), den_(1) {}
    Angle(const mpz_class& num, const mpz_class& den);
    Angle(long num, long den) : Angle(mpz_class(num), mpz_class(den)) {}

    /// Parses "num/den" (or "0"). Throws Error(InvalidArgument).
    static Angle parse(const std::string& text);
    /// Dyadic approximation round(x * 2^bits) / 2^bits of x mod 1.
    static Angle from_double(double x, int bits = 52);

    const mpz_class& num() const { return num_; }
    const mpz_class& den() const { return den_; }

    double to_double() const;
    std::string str() const;

    /// d * t mod 1.
    Angle times(unsigned long d) const;
    /// d^n * t mod 1.
    Angle times_pow(unsigned long d, unsigned long n) const;
    /// (t + k) / d.
    Angle preimage(unsigned long d, unsigned long k) const;
    /// All d preimages, ascending.
    std::vector<Angle> preimages(unsigned long d) const;

    /// Signed difference (b - a) mod 1 in [0, 1) as a double.
    friend double ccw_distance(const Angle& a, const Angle& b);

    friend bool operator==(const Angle& a, const Angle& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Angle& a, const Angle& b);

private:
    mpz_class num_;
    mpz_class den_;
};

/// t ↦ d·t mod 1.
inline Angle times_d(unsigned long d, const Angle& t) { return t.times(d); }

/// Open counter-clockwise arc from `start` to `end` on R/Z; end < start means it wraps through 0.
struct Arc {
    Angle start;
    Angle end;

    bool contains(const Angle& t) const;
    /// Arc length in [0, 1).
    mpq_class length() const;
    /// Exact midpoint of the arc.
    Angle midpoint() const;
    /// Whether `other` lies inside the closure of this arc.
    bool covers(const Arc& other) const;

    friend bool operator==(const Arc&, const Arc&) = default;
};

/// True iff t lies in the open ccw arc (a, b).
bool in_open_arc(const Angle& a, const Angle& b, const Angle& t);

}  // namespace puzzlekit
