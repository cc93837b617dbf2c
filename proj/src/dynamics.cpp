#include "puzzlekit/dynamics.hpp"

#include "puzzlekit/angle_engine.hpp"
#include "puzzlekit/error.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <limits>
#include <numeric>

namespace puzzlekit {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
// Newton targets sit at potential d^n g in [kNewtonLevel, d * kNewtonLevel).
constexpr double kNewtonLevel = 10.0;
// Above this potential the Böttcher coordinate is the identity to double precision.
constexpr double kTopPotential = 12.0;

cplx ipow(cplx z, unsigned d) {
    cplx r = 1;
    for (unsigned i = 0; i < d; ++i) r *= z;
    return r;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

unsigned newton_depth(unsigned d, double g) {
    if (g >= kNewtonLevel) return 0;
    return static_cast<unsigned>(std::ceil(std::log(kNewtonLevel / g) / std::log(static_cast<double>(d)) - 1e-12));
}

// Newton evaluations run in extended precision: near a slowly expanding critical
// orbit the rounding of f^n in double swamps pieces of size 1e-10.
using xreal = long double;
using xcplx = std::complex<long double>;

// log f^n(z) and its z-derivative divided by f^n(z), with an escape shortcut
// once |f^k(z)| is huge so that the iteration never overflows.
struct LogImage {
    xcplx log_w;   // real part exact, imaginary part only meaningful mod 2π
    xcplx dlog_w;  // (f^n)'(z) / f^n(z)
};

xcplx xpow(xcplx z, unsigned d) {
    xcplx r = 1;
    for (unsigned i = 0; i < d; ++i) r *= z;
    return r;
}

LogImage log_image(const Parameter& p, unsigned long n, xcplx z) {
    const unsigned d = p.degree;
    const xcplx c(p.c.real(), p.c.imag());
    xcplx w = z, dw = 1;
    for (unsigned long k = 0; k < n; ++k) {
        if (std::norm(w) > 1e120L) {
            const xreal scale = std::pow(static_cast<xreal>(d), static_cast<xreal>(n - k));
            const xcplx lw = std::log(w);
            return {xcplx(scale * lw.real(), std::fmod(scale * lw.imag(), static_cast<xreal>(kTwoPi))), scale * dw / w};
        }
        dw = static_cast<xreal>(d) * xpow(w, d - 1) * dw;
        w = xpow(w, d) + c;
    }
    return {std::log(w), dw / w};
}

xreal wrap_pi_x(xreal x) {
    const xreal pi = std::numbers::pi_v<xreal>;
    x = std::fmod(x + pi, 2 * pi);
    if (x < 0) x += 2 * pi;
    return x - pi;
}

// Newton on log f^n(z) = level + 2πi phase.
std::optional<cplx> newton_log(const Parameter& p, unsigned long n, double level, double phase, cplx z0) {
    constexpr xreal eps = std::numeric_limits<xreal>::epsilon();
    const xreal two_pi = 2 * std::numbers::pi_v<xreal>;
    auto residual = [&](xcplx x, xcplx& jac) {
        const LogImage li = log_image(p, n, x);
        jac = li.dlog_w;
        return xcplx(li.log_w.real() - level, wrap_pi_x(li.log_w.imag() - two_pi * phase));
    };
    auto done = [](xcplx z) { return std::optional<cplx>(cplx(static_cast<double>(z.real()), static_cast<double>(z.imag()))); };
    xcplx z(z0.real(), z0.imag());
    xcplx jac;
    xcplx f = residual(z, jac);
    for (int it = 0; it < 60; ++it) {
        const xreal noise = 64 * eps * std::abs(jac) * (1 + std::abs(z)) + 1e-15L;
        if (std::abs(f) < noise) return done(z);
        if (!std::isfinite(std::abs(jac)) || jac == xcplx(0)) return std::nullopt;
        const xcplx step = f / jac;
        xreal lambda = 1;
        bool improved = false;
        for (int damp = 0; damp < 12; ++damp) {
            const xcplx trial = z - lambda * step;
            xcplx tj;
            const xcplx tf = residual(trial, tj);
            if (std::isfinite(std::abs(tf)) && std::abs(tf) < std::abs(f)) {
                z = trial;
                f = tf;
                jac = tj;
                improved = true;
                break;
            }
            lambda /= 2;
        }
        if (!improved) {
            // Stagnation at the noise floor counts as convergence.
            if (std::abs(step) < 1e3 * eps * (1 + std::abs(z)) || std::abs(f) < 1e3 * noise) return done(z);
            return std::nullopt;
        }
        if (std::abs(lambda * step) < 4 * eps * (1 + std::abs(z))) return done(z);
    }
    return std::abs(f) < 1e-6L ? done(z) : std::nullopt;
}

// Follows one external ray downward in potential by Newton continuation.
class RayMarcher {
public:
    RayMarcher(const Parameter& p, const Angle& t) : p_(p), angle_(t), g_(kTopPotential) {
        z_ = std::exp(cplx(g_, kTwoPi * t.to_double()));
        n_cached_ = 0;
        phase_ = t.to_double();
    }

    double potential() const { return g_; }
    cplx point() const { return z_; }

    // Moves to potential g_target < g_. Subdivides failing steps.
    void step_to(double g_target) {
        if (!try_step(g_target, 0))
            throw Error(ErrorKind::RayLost, "ray " + angle_.str() + " lost near potential " + format_double(g_));
    }

private:
    double phase_for(unsigned n) {
        if (n != n_cached_) {
            phase_ = angle_.times_pow(p_.degree, n).to_double();
            n_cached_ = n;
        }
        return phase_;
    }

    bool try_step(double g_target, int depth) {
        const unsigned n = newton_depth(p_.degree, g_target);
        const double level = std::pow(static_cast<double>(p_.degree), static_cast<double>(n)) * g_target;
        const double dlog = std::log(g_ / g_target);
        // Linear predictor along the ray in log-potential.
        cplx guess = z_;
        if (have_velocity_) guess = z_ + velocity_ * dlog;
        auto sol = newton_log(p_, n, level, phase_for(n), guess);
        if (!sol && have_velocity_) sol = newton_log(p_, n, level, phase_for(n), z_);
        bool ok = sol.has_value();
        if (ok && have_velocity_) {
            const double moved = std::abs(*sol - z_);
            const double expected = std::abs(velocity_) * dlog;
            ok = moved <= 4 * expected + 1e-12 * (1 + std::abs(z_));
        }
        if (ok) {
            velocity_ = (*sol - z_) / dlog;
            have_velocity_ = true;
            z_ = *sol;
            g_ = g_target;
            return true;
        }
        if (depth >= 8) return false;
        const double mid = std::sqrt(g_ * g_target);
        return try_step(mid, depth + 1) && try_step(g_target, depth + 1);
    }

    Parameter p_;
    Angle angle_;
    double g_;
    cplx z_;
    cplx velocity_{0, 0};
    bool have_velocity_ = false;
    unsigned n_cached_;
    double phase_;
};

}  // namespace

Parameter::Parameter(unsigned d, cplx c_) : degree(d), c(c_) {
    if (d < 2) throw Error(ErrorKind::InvalidArgument, "degree must be >= 2");
}

cplx apply_map(const Parameter& p, cplx z) { return ipow(z, p.degree) + p.c; }

cplx iterate(const Parameter& p, cplx z, unsigned long n) {
    for (unsigned long k = 0; k < n; ++k) z = apply_map(p, z);
    return z;
}

double min_escape_radius(const Parameter& p) {
    return std::max(2.0, std::pow(std::abs(p.c), 1.0 / (p.degree - 1)) + 1.0);
}

double green(const Parameter& p, cplx z, int max_iter, double escape_radius) {
    if (!(escape_radius > min_escape_radius(p)))
        throw Error(ErrorKind::InvalidArgument, "escape radius too small for this parameter");
    const double d = p.degree;
    for (int n = 0; n <= max_iter; ++n) {
        const double r = std::abs(z);
        if (r > escape_radius) {
            const double scale = std::pow(d, -static_cast<double>(n));
            const double tail = std::log(std::abs(1.0 + p.c / ipow(z, p.degree))) / d;
            return scale * (std::log(r) + tail);
        }
        z = apply_map(p, z);
    }
    return 0.0;
}

RayTrace trace_ray(const Parameter& p, const Angle& t, double h_start, double h_stop, const RayOptions& opts) {
    if (!(h_start > h_stop && h_stop > 0))
        throw Error(ErrorKind::InvalidArgument, "need h_start > h_stop > 0");
    const int S = std::max(1, opts.steps_per_halving);
    RayTrace out;
    out.angle = t;
    RayMarcher m(p, t);
    // Descend to h_start.
    if (h_start < m.potential()) {
        const int k = static_cast<int>(std::ceil(S * std::log2(m.potential() / h_start)));
        const double g0 = m.potential();
        for (int i = 1; i <= k; ++i) m.step_to(g0 * std::pow(h_start / g0, static_cast<double>(i) / k));
    }
    out.points.push_back(m.point());
    out.potentials.push_back(h_start);
    const double ratio =
        (opts.potential_ratio > 0 && opts.potential_ratio < 1) ? opts.potential_ratio : std::pow(2.0, -1.0 / S);
    double g = h_start;
    // Best (smallest) three-point spread so far; at the precision floor points
    // drift along the Julia set instead of converging, so a long stall means
    // the closest approach has been reached.
    double best_spread = std::numeric_limits<double>::infinity();
    std::size_t best_end = 0;
    auto aitken = [](cplx a, cplx b, cplx c, double spread) {
        const cplx d1 = b - a, d2 = c - b;
        if (d2 - d1 != cplx(0)) {
            const cplx candidate = c - d2 * d2 / (d2 - d1);
            if (std::abs(candidate - c) < 100 * spread) return candidate;
        }
        return c;
    };
    for (long j = 1; g > h_stop; ++j) {
        g = std::max(h_start * std::pow(ratio, static_cast<double>(j)), h_stop);
        m.step_to(g);
        out.points.push_back(m.point());
        out.potentials.push_back(g);
        const std::size_t n = out.points.size();
        if (n < 3) continue;
        const cplx a = out.points[n - 3], b = out.points[n - 2], c = out.points[n - 1];
        const double spread = std::max({std::abs(a - b), std::abs(b - c), std::abs(a - c)});
        const double scale = opts.relative_landing ? std::abs(c - out.points.front()) : opts.landing_scale;
        const double floor = opts.relative_landing ? 64 * 2.2e-16 * (1 + std::abs(c)) : 0.0;
        if (spread < std::max(opts.landing_tol * scale, floor)) {
            out.landed = true;
            // Points converge geometrically into a repelling landing point:
            // Aitken extrapolation of the last three recovers the limit.
            out.landing_point = aitken(a, b, c, spread);
            if (opts.stop_when_landed) break;
            continue;
        }
        out.landed = false;
        out.landing_point.reset();
        if (spread < best_spread) {
            best_spread = spread;
            best_end = n;
        } else if (opts.relative_landing && n > best_end + 3 * static_cast<std::size_t>(S) &&
                   best_spread < 1e-3 * scale) {
            out.points.resize(best_end);
            out.potentials.resize(best_end);
            const std::size_t e = best_end;
            out.landed = true;
            out.landing_point = aitken(out.points[e - 3], out.points[e - 2], out.points[e - 1], best_spread);
            break;
        }
    }
    return out;
}

cplx landing_point(const RayTrace& trace) {
    if (!trace.landed || !trace.landing_point)
        throw Error(ErrorKind::NotLanded, "ray " + trace.angle.str() + " did not land by potential " +
                                              std::to_string(trace.potentials.back()));
    return *trace.landing_point;
}

cplx ray_point(const Parameter& p, const Angle& t, double h, int steps_per_halving) {
    RayOptions opts;
    opts.steps_per_halving = steps_per_halving;
    if (h >= kTopPotential) return std::exp(cplx(h, kTwoPi * t.to_double()));
    RayMarcher m(p, t);
    const int k = std::max(1, static_cast<int>(std::ceil(steps_per_halving * std::log2(m.potential() / h))));
    const double g0 = m.potential();
    for (int i = 1; i <= k; ++i) m.step_to(g0 * std::pow(h / g0, static_cast<double>(i) / k));
    return m.point();
}

std::optional<cplx> bottcher_newton(const Parameter& p, const Angle& t, double h, cplx guess) {
    const unsigned n = newton_depth(p.degree, h);
    const double level = std::pow(static_cast<double>(p.degree), static_cast<double>(n)) * h;
    return newton_log(p, n, level, t.times_pow(p.degree, n).to_double(), guess);
}

Polyline equipotential(const Parameter& p, double h, int n_points) {
    if (!(h > 0)) throw Error(ErrorKind::InvalidArgument, "equipotential height must be positive");
    Polyline out;
    for (int k = 0; k < n_points; ++k) out.push_back(ray_point(p, Angle(k, n_points), h));
    return out;
}

Polyline equipotential_arc(const Parameter& p, const Angle& a, const Angle& b, double h, cplx start,
                           double max_step) {
    const unsigned d = p.degree;
    const unsigned n = newton_depth(d, h);
    const double dn = std::pow(static_cast<double>(d), static_cast<double>(n));
    const double level = dn * h;
    const double base_phase = a.times_pow(d, n).to_double();
    const double length = [&] {
        double l = ccw_distance(a, b);
        return l == 0 ? 1.0 : l;
    }();
    const double max_dtheta = 0.25 / (kTwoPi * dn);
    Polyline out{start};
    double theta = 0;
    double dtheta = std::min(length / 4, max_dtheta);
    cplx z = start;
    int guard = 0;
    while (theta < length) {
        if (++guard > 5000000) throw Error(ErrorKind::RayLost, "equipotential continuation does not progress");
        const double next = std::min(theta + dtheta, length);
        const double phase = base_phase + dn * next;
        auto sol = newton_log(p, n, level, phase - std::floor(phase), z);
        if (!sol || std::abs(*sol - z) > max_step) {
            dtheta /= 2;
            if (dtheta < length * 1e-12) throw Error(ErrorKind::RayLost, "equipotential continuation stalled");
            continue;
        }
        z = *sol;
        theta = next;
        out.push_back(z);
        if (std::abs(out.back() - out[out.size() - 2]) < max_step / 4) dtheta = std::min(dtheta * 1.5, max_dtheta);
    }
    return out;
}

std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs) {
    std::vector<cplx> a = coeffs;
    while (a.size() > 1 && a.back() == cplx(0)) a.pop_back();
    const std::size_t deg = a.size() - 1;
    if (deg == 0) return {};
    for (auto& x : a) x /= coeffs[deg];
    double bound = 0;
    for (std::size_t i = 0; i < deg; ++i) bound = std::max(bound, std::abs(a[i]));
    bound += 1;
    auto eval = [&](cplx z, cplx& dp) {
        cplx v = a[deg];
        dp = 0;
        for (std::size_t i = deg; i-- > 0;) {
            dp = dp * z + v;
            v = v * z + a[i];
        }
        return v;
    };
    std::vector<cplx> z(deg);
    for (std::size_t k = 0; k < deg; ++k)
        z[k] = 0.7 * bound * std::exp(cplx(0, kTwoPi * (k + 0.25) / static_cast<double>(deg)));
    for (int it = 0; it < 500; ++it) {
        double worst = 0;
        for (std::size_t k = 0; k < deg; ++k) {
            cplx dp;
            const cplx v = eval(z[k], dp);
            if (v == cplx(0)) continue;
            const cplx ratio = v / dp;
            cplx sum = 0;
            for (std::size_t j = 0; j < deg; ++j)
                if (j != k) sum += 1.0 / (z[k] - z[j]);
            const cplx step = ratio / (1.0 - ratio * sum);
            z[k] -= step;
            worst = std::max(worst, std::abs(step) / (1 + std::abs(z[k])));
        }
        if (worst < 1e-15) break;
    }
    for (auto& r : z) {
        for (int it = 0; it < 3; ++it) {
            cplx dp;
            const cplx v = eval(r, dp);
            if (dp != cplx(0)) r -= v / dp;
        }
    }
    return z;
}

std::vector<FixedPointInfo> fixed_points(const Parameter& p) {
    std::vector<cplx> coeffs(p.degree + 1, 0);
    coeffs[0] = p.c;
    coeffs[1] = -1;
    coeffs[p.degree] += 1;
    std::vector<FixedPointInfo> out;
    for (const cplx z : polynomial_roots(coeffs)) {
        const double residual = std::abs(apply_map(p, z) - z);
        if (residual > 1e-10 * (1 + std::pow(std::abs(z), p.degree)))
            throw Error(ErrorKind::RootFindingFailed, "fixed point residual " + std::to_string(residual));
        FixedPointInfo info;
        info.location = z;
        info.multiplier = static_cast<double>(p.degree) * ipow(z, p.degree - 1);
        out.push_back(info);
    }
    std::sort(out.begin(), out.end(), [](const FixedPointInfo& x, const FixedPointInfo& y) {
        if (x.location.real() != y.location.real()) return x.location.real() < y.location.real();
        return x.location.imag() < y.location.imag();
    });
    return out;
}

std::optional<cplx> solve_preimage(const Parameter& p, unsigned long n, cplx target, cplx guess) {
    cplx z = guess;
    for (int it = 0; it < 100; ++it) {
        cplx w = z, dw = 1;
        for (unsigned long k = 0; k < n; ++k) {
            dw = static_cast<double>(p.degree) * ipow(w, p.degree - 1) * dw;
            w = ipow(w, p.degree) + p.c;
        }
        if (!std::isfinite(std::abs(w)) || dw == cplx(0)) return std::nullopt;
        const cplx step = (w - target) / dw;
        z -= step;
        if (std::abs(step) < 1e-15 * (1 + std::abs(z))) return z;
    }
    return std::nullopt;
}

std::optional<cplx> solve_periodic(const Parameter& p, unsigned long n, cplx guess) {
    cplx z = guess;
    for (int it = 0; it < 100; ++it) {
        cplx w = z, dw = 1;
        for (unsigned long k = 0; k < n; ++k) {
            dw = static_cast<double>(p.degree) * ipow(w, p.degree - 1) * dw;
            w = ipow(w, p.degree) + p.c;
        }
        if (!std::isfinite(std::abs(w)) || dw == cplx(1)) return std::nullopt;
        const cplx step = (w - z) / (dw - 1.0);
        z -= step;
        if (std::abs(step) < 1e-15 * (1 + std::abs(z))) return z;
    }
    return std::nullopt;
}

FixedPointInfo classify_alpha(const Parameter& p, unsigned q_max) {
    auto fps = fixed_points(p);
    for (const auto& f : fps) {
        if (!f.repelling())
            throw Error(ErrorKind::InMainComponent,
                        "fixed point with |multiplier| = " + std::to_string(std::abs(f.multiplier)) +
                            " <= 1; puzzle combinatorics undefined");
    }
    double separation = 1e300;
    for (std::size_t i = 0; i < fps.size(); ++i)
        for (std::size_t j = i + 1; j < fps.size(); ++j)
            separation = std::min(separation, std::abs(fps[i].location - fps[j].location));

    // Index of the fixed point the ray of angle t lands on, if any.
    auto lands_at = [&](const Angle& t, unsigned period) -> std::optional<std::size_t> {
        RayOptions opts;
        RayTrace tr;
        try {
            tr = trace_ray(p, t, 1.0, 1e-16, opts);
        } catch (const Error&) {
            return std::nullopt;
        }
        const cplx deep = tr.points.back();
        auto x = solve_periodic(p, period, deep);
        if (!x) return std::nullopt;
        for (std::size_t i = 0; i < fps.size(); ++i) {
            if (std::abs(*x - fps[i].location) < 1e-8 * (1 + std::abs(*x)) &&
                std::abs(deep - fps[i].location) < 0.5 * separation)
                return i;
        }
        return std::nullopt;
    };

    for (unsigned q = 2; q <= q_max; ++q) {
        for (unsigned pr = 1; pr < q; ++pr) {
            if (std::gcd(pr, q) != 1) continue;
            for (const auto& portrait : enumerate_portraits(p.degree, q, pr)) {
                const auto first = lands_at(portrait.angles[0], q);
                if (!first) continue;
                bool all = true;
                for (std::size_t k = 1; k < portrait.angles.size() && all; ++k) {
                    const auto other = lands_at(portrait.angles[k], q);
                    all = other && *other == *first;
                }
                if (!all) continue;
                FixedPointInfo alpha = fps[*first];
                alpha.kind = FixedPointKind::Alpha;
                alpha.landing_angles = portrait.angles;
                return alpha;
            }
        }
    }
    throw Error(ErrorKind::PortraitNotFound,
                "no cycle of period <= " + std::to_string(q_max) + " lands at a fixed point");
}

}  // namespace puzzlekit
