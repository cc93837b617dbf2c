#include "puzzlekit/angle.hpp"

#include "puzzlekit/error.hpp"

#include <cmath>

namespace puzzlekit {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::RayLost: return "RayLost";
        case ErrorKind::NotLanded: return "NotLanded";
        case ErrorKind::RootFindingFailed: return "RootFindingFailed";
        case ErrorKind::InMainComponent: return "InMainComponent";
        case ErrorKind::PortraitNotFound: return "PortraitNotFound";
        case ErrorKind::PortraitNotUnicritical: return "PortraitNotUnicritical";
        case ErrorKind::OnRay: return "OnRay";
        case ErrorKind::CombinatoricsUndefined: return "CombinatoricsUndefined";
        case ErrorKind::DepthUnavailable: return "DepthUnavailable";
        case ErrorKind::LabelMismatch: return "LabelMismatch";
        case ErrorKind::OnBoundary: return "OnBoundary";
        case ErrorKind::OutsideTruncation: return "OutsideTruncation";
        case ErrorKind::BudgetExhausted: return "BudgetExhausted";
        case ErrorKind::NeverEscapes: return "NeverEscapes";
        case ErrorKind::NotRecurrent: return "NotRecurrent";
        case ErrorKind::DegenerateAnnulus: return "DegenerateAnnulus";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::HypothesisNotMet: return "HypothesisNotMet";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Angle::Angle(const mpz_class& num, const mpz_class& den) {
    if (sgn(den) <= 0) throw Error(ErrorKind::InvalidArgument, "angle denominator must be positive");
    mpz_class r;
    mpz_fdiv_r(r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    mpz_class g = gcd(r, den);
    if (r == 0) {
        num_ = 0;
        den_ = 1;
    } else {
        num_ = r / g;
        den_ = den / g;
    }
}

Angle Angle::parse(const std::string& text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Angle(mpz_class(text), mpz_class(1));
        return Angle(mpz_class(text.substr(0, slash)), mpz_class(text.substr(slash + 1)));
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::InvalidArgument, "cannot parse angle '" + text + "'");
    }
}

Angle Angle::from_double(double x, int bits) {
    x -= std::floor(x);
    mpz_class den = 1;
    den <<= bits;
    mpf_class scaled(x, 128);
    scaled *= mpf_class(den, 128);
    mpz_class num(scaled + 0.5);
    return Angle(num, den);
}

double Angle::to_double() const {
    mpq_class q(num_, den_);
    return q.get_d();
}

std::string Angle::str() const { return num_.get_str() + "/" + den_.get_str(); }

Angle Angle::times(unsigned long d) const { return Angle(num_ * d, den_); }

Angle Angle::times_pow(unsigned long d, unsigned long n) const {
    mpz_class m;
    mpz_ui_pow_ui(m.get_mpz_t(), d, n);
    mpz_class r;
    mpz_class prod = num_ * m;
    mpz_fdiv_r(r.get_mpz_t(), prod.get_mpz_t(), den_.get_mpz_t());
    return Angle(r, den_);
}

Angle Angle::preimage(unsigned long d, unsigned long k) const {
    return Angle(num_ + den_ * k, den_ * d);
}

std::vector<Angle> Angle::preimages(unsigned long d) const {
    std::vector<Angle> out;
    out.reserve(d);
    for (unsigned long k = 0; k < d; ++k) out.push_back(preimage(d, k));
    return out;
}

double ccw_distance(const Angle& a, const Angle& b) {
    mpq_class diff = mpq_class(b.num_, b.den_) - mpq_class(a.num_, a.den_);
    diff.canonicalize();
    if (sgn(diff) < 0) diff += 1;
    return diff.get_d();
}

std::strong_ordering operator<=>(const Angle& a, const Angle& b) {
    int c = cmp(a.num_ * b.den_, b.num_ * a.den_);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

bool in_open_arc(const Angle& a, const Angle& b, const Angle& t) {
    if (a < b) return a < t && t < b;
    if (a == b) return t != a;  // full circle minus one point
    return t > a || t < b;
}

bool Arc::contains(const Angle& t) const { return in_open_arc(start, end, t); }

mpq_class Arc::length() const {
    mpq_class s(start.num(), start.den());
    mpq_class e(end.num(), end.den());
    mpq_class len = e - s;
    if (sgn(len) <= 0) len += 1;
    return len;
}

Angle Arc::midpoint() const {
    mpq_class s(start.num(), start.den());
    mpq_class m = s + length() / 2;
    m.canonicalize();
    return Angle(m.get_num(), m.get_den());
}

bool Arc::covers(const Arc& other) const {
    mpq_class s(start.num(), start.den());
    mpq_class os(other.start.num(), other.start.den());
    mpq_class off = os - s;
    if (sgn(off) < 0) off += 1;
    return off + other.length() <= length();
}

}  // namespace puzzlekit
