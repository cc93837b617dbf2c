#include "puzzlekit/polyline.hpp"

#include "puzzlekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace puzzlekit {

namespace {

double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

bool segments_intersect(cplx p1, cplx p2, cplx q1, cplx q2) {
    const double d1 = cross(p2 - p1, q1 - p1);
    const double d2 = cross(p2 - p1, q2 - p1);
    const double d3 = cross(q2 - q1, p1 - q1);
    const double d4 = cross(q2 - q1, p2 - q1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
           d4 != 0;
}

}  // namespace

int winding_number(std::span<const cplx> closed, cplx z) {
    int wn = 0;
    const std::size_t n = closed.size();
    for (std::size_t i = 0; i < n; ++i) {
        const cplx a = closed[i];
        const cplx b = closed[(i + 1) % n];
        if (a.imag() <= z.imag()) {
            if (b.imag() > z.imag() && cross(b - a, z - a) > 0) ++wn;
        } else if (b.imag() <= z.imag() && cross(b - a, z - a) < 0) {
            --wn;
        }
    }
    return wn;
}

double distance_to_segment(cplx a, cplx b, cplx z) {
    const cplx ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0) return std::abs(z - a);
    double s = ((z - a) * std::conj(ab)).real() / len2;
    s = std::clamp(s, 0.0, 1.0);
    return std::abs(z - (a + s * ab));
}

double distance_to_polyline(std::span<const cplx> poly, cplx z, bool closed) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size();
    if (n == 1) return std::abs(z - poly[0]);
    const std::size_t segs = closed ? n : n - 1;
    for (std::size_t i = 0; i < segs; ++i) best = std::min(best, distance_to_segment(poly[i], poly[(i + 1) % n], z));
    return best;
}

bool is_simple_closed(std::span<const cplx> closed) {
    const std::size_t n = closed.size();
    if (n < 3) return false;
    // Bucket segments on a uniform grid so the test stays near-linear.
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto p : closed) {
        xmin = std::min(xmin, p.real());
        xmax = std::max(xmax, p.real());
        ymin = std::min(ymin, p.imag());
        ymax = std::max(ymax, p.imag());
    }
    const int cells = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n))));
    const double w = std::max(xmax - xmin, 1e-300) / cells;
    const double h = std::max(ymax - ymin, 1e-300) / cells;
    std::vector<std::vector<std::size_t>> grid(static_cast<std::size_t>(cells) * cells);
    auto cell = [&](double v, double lo, double step) {
        return std::clamp(static_cast<int>((v - lo) / step), 0, cells - 1);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const cplx a = closed[i], b = closed[(i + 1) % n];
        const int x0 = cell(std::min(a.real(), b.real()), xmin, w), x1 = cell(std::max(a.real(), b.real()), xmin, w);
        const int y0 = cell(std::min(a.imag(), b.imag()), ymin, h), y1 = cell(std::max(a.imag(), b.imag()), ymin, h);
        for (int x = x0; x <= x1; ++x)
            for (int y = y0; y <= y1; ++y) grid[static_cast<std::size_t>(y) * cells + x].push_back(i);
    }
    for (const auto& bucket : grid) {
        for (std::size_t u = 0; u < bucket.size(); ++u) {
            for (std::size_t v = u + 1; v < bucket.size(); ++v) {
                const std::size_t i = bucket[u], j = bucket[v];
                const std::size_t gap = (i > j) ? i - j : j - i;
                if (gap <= 1 || gap == n - 1) continue;
                if (segments_intersect(closed[i], closed[(i + 1) % n], closed[j], closed[(j + 1) % n])) return false;
            }
        }
    }
    return true;
}

double directed_hausdorff(std::span<const cplx> from, const std::vector<Polyline>& to, bool closed) {
    double worst = 0;
    for (auto z : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& poly : to) best = std::min(best, distance_to_polyline(poly, z, closed));
        worst = std::max(worst, best);
    }
    return worst;
}

double signed_area(std::span<const cplx> closed) {
    double a = 0;
    const std::size_t n = closed.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(closed[i], closed[(i + 1) % n]);
    return a / 2;
}

double diameter_bound(std::span<const cplx> poly) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto p : poly) {
        xmin = std::min(xmin, p.real());
        xmax = std::max(xmax, p.real());
        ymin = std::min(ymin, p.imag());
        ymax = std::max(ymax, p.imag());
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

cplx interior_point(std::span<const cplx> closed) {
    cplx centroid = 0;
    const double a = signed_area(closed);
    const std::size_t n = closed.size();
    if (a != 0) {
        for (std::size_t i = 0; i < n; ++i) {
            const cplx p = closed[i], q = closed[(i + 1) % n];
            centroid += (p + q) * cross(p, q);
        }
        centroid /= 6 * a;
        if (encloses(closed, centroid)) return centroid;
    }
    // Scan horizontal lines; take the midpoint of the widest interior chord.
    double ymin = 1e300, ymax = -1e300;
    for (auto p : closed) {
        ymin = std::min(ymin, p.imag());
        ymax = std::max(ymax, p.imag());
    }
    cplx best = closed.front();
    double best_width = -1;
    for (int k = 1; k < 64; ++k) {
        const double y = ymin + (ymax - ymin) * k / 64.0;
        std::vector<double> xs;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx p = closed[i], q = closed[(i + 1) % n];
            if ((p.imag() <= y) != (q.imag() <= y)) {
                const double s = (y - p.imag()) / (q.imag() - p.imag());
                xs.push_back(p.real() + s * (q.real() - p.real()));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const cplx mid((xs[i] + xs[i + 1]) / 2, y);
            if (xs[i + 1] - xs[i] > best_width && encloses(closed, mid)) {
                best_width = xs[i + 1] - xs[i];
                best = mid;
            }
        }
    }
    if (best_width < 0) throw Error(ErrorKind::InvalidArgument, "curve has no interior");
    return best;
}

Polyline densify(std::span<const cplx> poly, double max_step, bool closed) {
    Polyline out;
    const std::size_t n = poly.size();
    const std::size_t segs = closed ? n : (n ? n - 1 : 0);
    for (std::size_t i = 0; i < segs; ++i) {
        const cplx a = poly[i], b = poly[(i + 1) % n];
        const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / max_step)));
        for (int k = 0; k < pieces; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
    }
    if (!closed && n) out.push_back(poly.back());
    return out;
}

}  // namespace puzzlekit
