#pragma once

#include "puzzlekit/angle.hpp"
#include "puzzlekit/polyline.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace puzzlekit {

/// f_c(z) = z^d + c.
struct Parameter {
    unsigned degree = 2;
    cplx c{0, 0};

    Parameter() = default;
    Parameter(unsigned d, cplx c_);
};

cplx apply_map(const Parameter& p, cplx z);
/// f^n(z).
cplx iterate(const Parameter& p, cplx z, unsigned long n);

/// Green's function d^-n log|f^n(z)| at first escape past `escape_radius`, with one
/// tail correction term. Returns 0 if the orbit stays bounded for max_iter steps.
double green(const Parameter& p, cplx z, int max_iter = 10000, double escape_radius = 1e3);

/// Smallest admissible escape radius for `green`.
double min_escape_radius(const Parameter& p);

enum class FixedPointKind { Alpha, Beta, Other };

struct FixedPointInfo {
    cplx location;
    cplx multiplier;
    FixedPointKind kind = FixedPointKind::Other;
    std::vector<Angle> landing_angles;

    bool repelling() const { return std::abs(multiplier) > 1.0; }
};

struct RayTrace {
    Angle angle;
    std::vector<cplx> points;       // ordered by decreasing potential
    std::vector<double> potentials; // strictly decreasing
    bool landed = false;
    std::optional<cplx> landing_point;
};

struct RayOptions {
    int steps_per_halving = 8;
    double landing_tol = 1e-7;
    /// Stop once the landing test passes (otherwise trace all the way to h_stop).
    bool stop_when_landed = true;
    /// If in (0, 1), successive potentials are h_start * ratio^j instead of halving steps.
    double potential_ratio = 0;
    /// Landing test spread is landing_tol * landing_scale.
    double landing_scale = 1;
    /// Measure the spread against the distance travelled from h_start instead,
    /// for short rays deep inside the Julia set.
    bool relative_landing = false;
};

/// External ray of angle t from potential h_start down to h_stop.
/// Throws RayLost when the Newton corrector cannot follow the ray.
RayTrace trace_ray(const Parameter& p, const Angle& t, double h_start, double h_stop,
                   const RayOptions& opts = {});
/// Throws NotLanded unless the trace landed.
cplx landing_point(const RayTrace& trace);

/// Point of the ray of angle t at potential h (traced from high potential).
cplx ray_point(const Parameter& p, const Angle& t, double h, int steps_per_halving = 8);

/// Newton refinement of a point on {G = h} at angle t from a nearby guess.
/// Returns nullopt if the iteration does not converge.
std::optional<cplx> bottcher_newton(const Parameter& p, const Angle& t, double h, cplx guess);

/// All d roots of z^d + c - z, multiplier d z^(d-1), kind Other.
std::vector<FixedPointInfo> fixed_points(const Parameter& p);

/// The dividing fixed point and the cycle of rays landing on it.
FixedPointInfo classify_alpha(const Parameter& p, unsigned q_max = 10);

/// Samples of {G = h} at n_points equispaced angles (closed, counter-clockwise).
Polyline equipotential(const Parameter& p, double h, int n_points);

/// Points of {G = h} from angle a counter-clockwise to angle b, by Newton
/// continuation from `start` (which must be the point at angle a), spacing <= max_step.
/// The final point corresponds to angle b.
Polyline equipotential_arc(const Parameter& p, const Angle& a, const Angle& b, double h, cplx start,
                           double max_step);

/// Simultaneous (Aberth) roots of a polynomial with coefficients low-to-high degree.
std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs);

/// Newton solve of f^n(z) = target from `guess`; nullopt if it fails.
std::optional<cplx> solve_preimage(const Parameter& p, unsigned long n, cplx target, cplx guess);
/// Newton solve of f^n(z) = z (periodic point) from `guess`.
std::optional<cplx> solve_periodic(const Parameter& p, unsigned long n, cplx guess);

}  // namespace puzzlekit
