#pragma once

#include <complex>
#include <span>
#include <vector>

namespace puzzlekit {

using cplx = std::complex<double>;
/// Open or closed chain of points; closed curves do not repeat the first point.
using Polyline = std::vector<cplx>;

/// Winding number of a closed polyline around z.
int winding_number(std::span<const cplx> closed, cplx z);
inline bool encloses(std::span<const cplx> closed, cplx z) { return winding_number(closed, z) != 0; }

double distance_to_segment(cplx a, cplx b, cplx z);
/// Distance from z to a polyline (closed adds the closing segment).
double distance_to_polyline(std::span<const cplx> poly, cplx z, bool closed);

/// No two non-adjacent segments of the closed curve intersect.
bool is_simple_closed(std::span<const cplx> closed);

/// max over points of `from` of the distance to the polyline set `to`.
double directed_hausdorff(std::span<const cplx> from, const std::vector<Polyline>& to, bool closed);

double signed_area(std::span<const cplx> closed);
double diameter_bound(std::span<const cplx> poly);
/// A point strictly inside a closed curve (centroid when it works, otherwise a scan).
cplx interior_point(std::span<const cplx> closed);

/// Inserts points so that no segment exceeds max_step.
Polyline densify(std::span<const cplx> poly, double max_step, bool closed);

}  // namespace puzzlekit
