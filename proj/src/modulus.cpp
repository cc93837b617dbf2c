#include "puzzlekit/modulus.hpp"

#include "puzzlekit/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace puzzlekit {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kMinCut = 1e-2;  // smallest cut fraction kept in the stencil

// Point well inside the curve: the best of a coarse scan by distance to the boundary.
cplx deep_interior_point(const Polyline& curve) {
    cplx best = interior_point(curve);
    double best_d = distance_to_polyline(curve, best, true);
    double x0 = curve[0].real(), x1 = x0, y0 = curve[0].imag(), y1 = y0;
    for (cplx z : curve) {
        x0 = std::min(x0, z.real());
        x1 = std::max(x1, z.real());
        y0 = std::min(y0, z.imag());
        y1 = std::max(y1, z.imag());
    }
    constexpr int n = 24;
    for (int i = 1; i < n; ++i) {
        for (int j = 1; j < n; ++j) {
            const cplx z(x0 + (x1 - x0) * i / n, y0 + (y1 - y0) * j / n);
            if (!encloses(curve, z)) continue;
            const double d = distance_to_polyline(curve, z, true);
            if (d > best_d) {
                best_d = d;
                best = z;
            }
        }
    }
    return best;
}

// A closed curve around the center, seen in log-polar coordinates (s = log r, phi).
// Records where it crosses each grid column phi = j h and each row s = s0 + i h.
struct CurveCrossings {
    std::vector<std::vector<double>> column;  // s values per column
    std::vector<std::vector<double>> row;     // phi values in [0, 2π) per row
};

CurveCrossings crossings(const Polyline& curve, cplx center, double s0, double h, int n_phi, int n_s) {
    // Edges must be short against the local log-polar cell for linear interpolation in (s, phi).
    Polyline pts;
    for (std::size_t k = 0; k < curve.size(); ++k) {
        const cplx a = curve[k], b = curve[(k + 1) % curve.size()];
        const double r = std::min(std::abs(a - center), std::abs(b - center));
        const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / (0.25 * h * r))));
        for (int i = 0; i < pieces; ++i) pts.push_back(a + (b - a) * (static_cast<double>(i) / pieces));
    }
    // Unwrap from the vertex farthest from a grid column, so that the closing edge
    // (where round-off in the accumulated angle lands) cannot gain or lose a crossing.
    std::size_t start = 0;
    double best = -1;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double u = std::arg(pts[k] - center) / h;
        const double off = std::abs(u - std::round(u));
        if (off > best) {
            best = off;
            start = k;
        }
    }
    std::rotate(pts.begin(), pts.begin() + static_cast<long>(start), pts.end());
    std::vector<double> s(pts.size()), phi(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
        s[k] = std::log(std::abs(pts[k] - center));
        if (k == 0) {
            phi[k] = std::arg(pts[k] - center);
        } else {
            phi[k] = phi[k - 1] + std::arg((pts[k] - center) / (pts[k - 1] - center));
        }
    }
    const double total = phi.back() + std::arg((pts[0] - center) / (pts.back() - center)) - phi[0];
    if (std::abs(std::abs(total) - kTwoPi) > 1e-6)
        throw Error(ErrorKind::InvalidArgument, "curve does not wind once around the annulus center");
    CurveCrossings out;
    out.column.resize(n_phi);
    out.row.resize(n_s);
    // Work in grid units, computed once per vertex, so that an edge ending on a grid
    // line and the edge starting there agree on who owns the crossing.
    const std::size_t n = pts.size();
    std::vector<double> u(n + 1), v(n + 1);
    for (std::size_t k = 0; k < n; ++k) {
        u[k] = phi[k] / h;
        v[k] = (s[k] - s0) / h;
    }
    u[n] = (phi.back() + std::arg((pts[0] - center) / (pts.back() - center))) / h;
    v[n] = v[0];
    for (std::size_t k = 0; k < n; ++k) {
        const double ua = u[k], ub = u[k + 1], va = v[k], vb = v[k + 1];
        if (ua != ub) {
            const double lo = std::min(ua, ub), hi = std::max(ua, ub);
            for (long m = static_cast<long>(std::ceil(lo)); m < hi; ++m) {
                const double t = (m - ua) / (ub - ua);
                const long j = ((m % n_phi) + n_phi) % n_phi;
                out.column[j].push_back(s0 + (va + t * (vb - va)) * h);
            }
        }
        if (va != vb) {
            const double lo = std::min(va, vb), hi = std::max(va, vb);
            for (long i = static_cast<long>(std::ceil(lo)); i < hi; ++i) {
                if (i < 0 || i >= n_s) continue;
                const double t = (i - va) / (vb - va);
                double p = std::fmod((ua + t * (ub - ua)) * h, kTwoPi);
                if (p < 0) p += kTwoPi;
                out.row[i].push_back(p);
            }
        }
    }
    for (auto& c : out.column) std::sort(c.begin(), c.end());
    for (auto& r : out.row) std::sort(r.begin(), r.end());
    return out;
}

// Cut fraction along a grid line from x toward x + dir*h, given sorted crossing
// coordinates; `period` > 0 wraps (for phi).
double cut_fraction(const std::vector<double>& list, double x, int dir, double h, double period) {
    double best = 1.0;
    for (double c : list) {
        double delta = (c - x) * dir;
        if (period > 0) {
            delta = std::fmod(delta, period);
            if (delta < 0) delta += period;
        }
        if (delta >= 0 && delta <= h) best = std::min(best, delta / h);
    }
    return std::max(best, kMinCut);
}

}  // namespace

void validate_annulus(const AnnulusSpec& a) {
    if (a.outer.size() < 3 || a.inner.size() < 3) throw Error(ErrorKind::InvalidArgument, "annulus curves need >= 3 points");
    if (!is_simple_closed(a.outer)) throw Error(ErrorKind::InvalidArgument, "outer curve " + a.outer_label + " is not simple");
    if (!is_simple_closed(a.inner)) throw Error(ErrorKind::InvalidArgument, "inner curve " + a.inner_label + " is not simple");
    for (cplx z : a.inner) {
        if (!encloses(a.outer, z)) throw Error(ErrorKind::DegenerateAnnulus, "inner curve leaves the outer curve");
    }
}

double modulus_on_grid(const AnnulusSpec& a, int n_phi) {
    if (n_phi < 8) throw Error(ErrorKind::InvalidArgument, "grid too coarse");
    const cplx center = deep_interior_point(a.inner);
    const double h = kTwoPi / n_phi;
    double r_min = std::numeric_limits<double>::infinity(), r_max = 0;
    for (cplx z : a.inner) r_min = std::min(r_min, std::abs(z - center));
    for (cplx z : a.outer) r_max = std::max(r_max, std::abs(z - center));
    const double s0 = std::log(r_min) - 2 * h;
    const int n_s = static_cast<int>(std::ceil((std::log(r_max) + 2 * h - s0) / h)) + 1;
    const CurveCrossings in = crossings(a.inner, center, s0, h, n_phi, n_s);
    const CurveCrossings out = crossings(a.outer, center, s0, h, n_phi, n_s);

    // Node classes: 0 inside inner, 1 outside outer, 2 unknown.
    const std::size_t n_nodes = static_cast<std::size_t>(n_s) * n_phi;
    std::vector<unsigned char> cls(n_nodes);
    auto node = [&](int i, int j) { return static_cast<std::size_t>(i) * n_phi + j; };
    for (int j = 0; j < n_phi; ++j) {
        const auto& ci = in.column[j];
        const auto& co = out.column[j];
        for (int i = 0; i < n_s; ++i) {
            const double s = s0 + i * h;
            const auto above_in = ci.end() - std::upper_bound(ci.begin(), ci.end(), s);
            const auto above_out = co.end() - std::upper_bound(co.begin(), co.end(), s);
            const bool inside_inner = above_in % 2 == 1;
            const bool inside_outer = above_out % 2 == 1;
            if (inside_inner && !inside_outer) throw Error(ErrorKind::DegenerateAnnulus, "curves cross");
            cls[node(i, j)] = inside_inner ? 0 : (inside_outer ? 2 : 1);
        }
    }
    std::vector<long> index(n_nodes, -1);
    std::size_t n_unknown = 0;
    for (std::size_t k = 0; k < n_nodes; ++k) {
        if (cls[k] == 2) index[k] = static_cast<long>(n_unknown++);
    }
    if (n_unknown == 0) throw Error(ErrorKind::DegenerateAnnulus, "no grid node between the curves");

    // Stencil: up to 4 unknown neighbours with unit weight, Dirichlet cuts with weight 1/theta.
    std::vector<std::array<long, 4>> nbr(n_unknown);
    std::vector<double> diag(n_unknown, 0.0), rhs(n_unknown, 0.0);
    for (int i = 0; i < n_s; ++i) {
        for (int j = 0; j < n_phi; ++j) {
            const std::size_t k = node(i, j);
            if (cls[k] == 2) continue;
            // A Dirichlet node of one kind next to the other kind: the curves touch within a cell.
            const int js[2] = {(j + 1) % n_phi, j};
            const int is[2] = {i, i + 1};
            for (int e = 0; e < 2; ++e) {
                if (is[e] >= n_s) continue;
                const std::size_t k2 = node(is[e], js[e]);
                if (cls[k2] != 2 && cls[k2] != cls[k])
                    throw Error(ErrorKind::DegenerateAnnulus, "inner and outer curves within one grid cell");
            }
        }
    }
    for (int i = 0; i < n_s; ++i) {
        const double s = s0 + i * h;
        for (int j = 0; j < n_phi; ++j) {
            const std::size_t k = node(i, j);
            if (cls[k] != 2) continue;
            const long me = index[k];
            const double phi = j * h;
            struct Dir {
                int di, dj;
            };
            const Dir dirs[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (int e = 0; e < 4; ++e) {
                const int i2 = i + dirs[e].di;
                const int j2 = ((j + dirs[e].dj) % n_phi + n_phi) % n_phi;
                nbr[me][e] = -1;
                if (i2 < 0 || i2 >= n_s) throw Error(ErrorKind::InvalidArgument, "grid does not cover the annulus");
                const std::size_t k2 = node(i2, j2);
                if (cls[k2] == 2) {
                    nbr[me][e] = index[k2];
                    diag[me] += 1;
                    continue;
                }
                const CurveCrossings& c = cls[k2] == 0 ? in : out;
                const double theta = dirs[e].di != 0 ? cut_fraction(c.column[j], s, dirs[e].di, h, 0)
                                                     : cut_fraction(c.row[i], phi, dirs[e].dj, h, kTwoPi);
                diag[me] += 1 / theta;
                rhs[me] += (cls[k2] == 1 ? 1.0 : 0.0) / theta;
            }
        }
    }

    // Jacobi-preconditioned conjugate gradient, matrix free.
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t p = 0; p < n_unknown; ++p) {
            double v = diag[p] * x[p];
            for (long q : nbr[p]) {
                if (q >= 0) v -= x[q];
            }
            y[p] = v;
        }
    };
    std::vector<double> u(n_unknown), r(n_unknown), z(n_unknown), dir(n_unknown), Ad(n_unknown);
    // Start from the radial interpolation between the curves' extreme radii.
    for (int i = 0; i < n_s; ++i) {
        for (int j = 0; j < n_phi; ++j) {
            const long p = index[node(i, j)];
            if (p >= 0) u[p] = std::clamp(static_cast<double>(i) / (n_s - 1), 0.0, 1.0);
        }
    }
    apply(u, Ad);
    double bnorm = 0;
    for (std::size_t p = 0; p < n_unknown; ++p) {
        r[p] = rhs[p] - Ad[p];
        bnorm += rhs[p] * rhs[p];
    }
    bnorm = std::sqrt(bnorm);
    auto precondition = [&] {
        for (std::size_t p = 0; p < n_unknown; ++p) z[p] = r[p] / diag[p];
    };
    precondition();
    dir = z;
    double rz = 0;
    for (std::size_t p = 0; p < n_unknown; ++p) rz += r[p] * z[p];
    const std::size_t max_iter = 20 * static_cast<std::size_t>(n_s + n_phi) + 2000;
    bool converged = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
        double rnorm = 0;
        for (double v : r) rnorm += v * v;
        if (std::sqrt(rnorm) <= 1e-10 * bnorm) {
            converged = true;
            break;
        }
        apply(dir, Ad);
        double dAd = 0;
        for (std::size_t p = 0; p < n_unknown; ++p) dAd += dir[p] * Ad[p];
        const double alpha = rz / dAd;
        for (std::size_t p = 0; p < n_unknown; ++p) {
            u[p] += alpha * dir[p];
            r[p] -= alpha * Ad[p];
        }
        precondition();
        double rz_new = 0;
        for (std::size_t p = 0; p < n_unknown; ++p) rz_new += r[p] * z[p];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t p = 0; p < n_unknown; ++p) dir[p] = z[p] + beta * dir[p];
    }
    if (!converged) throw Error(ErrorKind::NonConvergence, "conjugate gradient did not reach 1e-10 residual");

    // Dirichlet energy: unit-weight edges between unknowns (counted once), cut edges with 1/theta.
    double energy = 0;
    for (std::size_t p = 0; p < n_unknown; ++p) {
        double cut_weight = diag[p];
        for (long q : nbr[p]) {
            if (q < 0) continue;
            cut_weight -= 1;
            if (q > static_cast<long>(p)) energy += (u[p] - u[q]) * (u[p] - u[q]);
        }
        // Remaining weight splits between the two boundary values; rhs holds the part at value 1.
        const double w1 = rhs[p];
        const double w0 = cut_weight - w1;
        energy += w0 * u[p] * u[p] + w1 * (1 - u[p]) * (1 - u[p]);
    }
    if (!(energy > 0)) throw Error(ErrorKind::DegenerateAnnulus, "zero Dirichlet energy");
    return 1 / energy;
}

ModulusEstimate modulus(const AnnulusSpec& a, int grid_n) {
    validate_annulus(a);
    ModulusEstimate est;
    for (int n : {grid_n / 4, grid_n / 2, grid_n}) {
        est.grid_sizes.push_back(n);
        est.grid_values.push_back(modulus_on_grid(a, n));
    }
    const double m1 = est.grid_values[0], m2 = est.grid_values[1], m3 = est.grid_values[2];
    const double d1 = m2 - m1, d2 = m3 - m2;
    est.value = m3;
    if (d2 != 0 && d1 != 0 && d1 / d2 > 1) {
        est.order = std::log2(d1 / d2);
        const double p = std::clamp(est.order, 0.5, 4.0);
        est.value = m3 + d2 / (std::pow(2.0, p) - 1);
    } else {
        // No clean geometric convergence: keep the finest value, error from the last step.
        est.value = m3;
    }
    est.richardson_error = std::max(std::abs(est.value - m3), est.order == 0 ? std::abs(d2) : 0.0);
    est.converged = est.richardson_error <= 0.02 * est.value;
    return est;
}

AnnulusSpec piece_annulus(const Puzzle& puzzle, const Label& outer, const Label& inner) {
    AnnulusSpec a;
    a.outer = puzzle.piece(outer)->boundary;
    a.inner = puzzle.piece(inner)->boundary;
    a.outer_label = outer.key();
    a.inner_label = inner.key();
    return a;
}

namespace {

// Return-domain components of Q, shortest return time first. A component D with
// f^t : D -> Q has arcs (J + k)/d^t for arcs J of Q, so the candidates inside an arc I
// of Q are enumerated directly; a generic angle of each candidate then decides whether
// t is its first return and which depth-(n+t) label it belongs to.
struct ReturnScan {
    std::map<std::string, Label> components;
    std::size_t candidates = 0;
    std::size_t too_deep = 0;
    bool exhausted = false;  // stopped by the candidate budget rather than max_time
};

Angle generic_angle(const mpq_class& start, const mpq_class& length) {
    const mpz_class prime = (mpz_class(1) << 127) - 1;
    const mpz_class u = prime * 381966 / 1000000;
    mpq_class t = start + length * mpq_class(u, prime);
    t.canonicalize();
    return Angle(t.get_num(), t.get_den());
}

ReturnScan scan_returns(const Combinatorics& comb, const Label& Q, const ModulusBudget& budget) {
    const unsigned d = comb.degree();
    ReturnScan scan;
    mpz_class scale = 1;
    for (unsigned long t = 1; t <= budget.max_time; ++t) {
        scale *= d;
        if (Q.depth + t > comb.valid_depth()) {
            scan.too_deep = 1;
            break;
        }
        for (const Arc& I : Q.arcs) {
            const mpq_class x(I.start.num(), I.start.den());
            const mpq_class L = I.length();
            for (const Arc& J : Q.arcs) {
                const mpq_class js(J.start.num(), J.start.den());
                const mpq_class len = J.length() / scale;
                if (len > L) continue;
                // Smallest k with (js + k)/scale >= x.
                mpq_class lower = x * scale - js;
                mpz_class k;
                mpz_cdiv_q(k.get_mpz_t(), lower.get_num_mpz_t(), lower.get_den_mpz_t());
                for (;; ++k) {
                    const mpq_class start = (js + k) / scale;
                    if (start - x + len > L) break;
                    if (++scan.candidates > budget.samples) {
                        scan.exhausted = true;
                        return scan;
                    }
                    const Angle theta = generic_angle(start, len);
                    Angle image = theta;
                    bool earlier = false;
                    for (unsigned long j = 1; j < t && !earlier; ++j) {
                        image = image.times(d);
                        earlier = Q.contains(image);
                    }
                    if (earlier) continue;
                    try {
                        Label D = comb.label_containing(theta, static_cast<unsigned>(Q.depth + t));
                        scan.components.emplace(D.key(), std::move(D));
                    } catch (const Error& e) {
                        if (e.kind() != ErrorKind::DepthUnavailable && e.kind() != ErrorKind::CombinatoricsUndefined) throw;
                        ++scan.too_deep;
                    }
                }
            }
        }
    }
    return scan;
}

double relative_margin(double lhs, double rhs) { return rhs > 0 ? (lhs - rhs) / rhs : 0.0; }

}  // namespace

PieceModulus m_of_piece(const Puzzle& puzzle, const Label& Q, const ModulusBudget& budget) {
    const Combinatorics& comb = puzzle.combinatorics();
    PieceModulus result;

    ReturnScan scan = scan_returns(comb, Q, budget);
    auto& components = scan.components;
    // The central component always competes.
    const Label first = first_child(comb, Q, {}, false).child;
    components.emplace(first.key(), first);
    result.visited_components = components.size();

    std::vector<Label> order;
    for (auto& [key, label] : components) {
        if (key != first.key()) order.push_back(label);
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const Label& a, const Label& b) { return a.measure() > b.measure(); });
    if (order.size() > budget.measured) order.resize(budget.measured);
    order.insert(order.begin(), first);

    bool have = false;
    bool touching = false;
    for (const Label& D : order) {
        ModulusEstimate est;
        try {
            est = modulus(piece_annulus(puzzle, Q, D), budget.grid_n);
        } catch (const Error& e) {
            // A component reaching the boundary of Q bounds a degenerate annulus.
            if (e.kind() != ErrorKind::DegenerateAnnulus) throw;
            est.converged = true;
            touching = true;
        }
        result.measured.emplace_back(D, est.value);
        if (!have || est.value < result.estimate.value) {
            result.estimate = est;
            result.argmin = D;
            have = true;
        }
    }
    result.measured_components = result.measured.size();
    result.note = "upper bound for m(Q): minimum over " + std::to_string(result.measured_components) + " of " +
                  std::to_string(result.visited_components) + " visited return domains";
    if (touching) result.note += "; a return domain touches the boundary (modulus 0)";
    if (scan.exhausted) result.note += "; BudgetExhausted after " + std::to_string(budget.samples) + " candidates";
    if (scan.too_deep > 0) result.note += "; scan stopped at the valid depth";
    return result;
}

VerificationRow verify_children_lemma(const Puzzle& puzzle, const Label& V, const Label& child,
                                      const ModulusBudget& budget, const NestBudget& nest_budget) {
    const Combinatorics& comb = puzzle.combinatorics();
    VerificationRow row;
    row.check = "children";
    const Label U = first_child(comb, V, nest_budget, false).child;
    row.labels = {V.key(), U.key(), child.key()};
    const ModulusEstimate outer = modulus(piece_annulus(puzzle, V, U), budget.grid_n);
    const PieceModulus inner = m_of_piece(puzzle, child, budget);
    row.lhs = inner.estimate.value;
    row.rhs = outer.value / comb.degree();
    row.margin = relative_margin(row.lhs, row.rhs);
    row.passed = row.lhs >= row.rhs * (1 - kVerificationSlack);
    row.note = inner.note;
    return row;
}

VerificationRow verify_lemma_Y(const Puzzle& puzzle, const Label& Q, const Label& P, const Label& Qp,
                               const Label& Pp, const Label& V, const ModulusBudget& budget,
                               const NestBudget& nest_budget) {
    const Combinatorics& comb = puzzle.combinatorics();
    VerificationRow row;
    row.check = "lemma_Y";
    row.labels = {Q.key(), P.key(), Qp.key(), Pp.key(), V.key()};
    std::string unmet;
    if (!(Pp.refines(Qp) && Qp.refines(P) && P.refines(Q) && Q.refines(V))) unmet = "pieces are not nested";
    if (unmet.empty() && !(first_child(comb, Q, nest_budget, false).child == P)) unmet = "P is not the first child of Q";
    if (unmet.empty() && !(first_child(comb, Qp, nest_budget, false).child == Pp))
        unmet = "P' is not the first child of Q'";
    if (unmet.empty() && !(favorite_child(comb, Q, nest_budget).child == Qp)) unmet = "Q' is not the favorite child of Q";
    if (unmet.empty() && !first_child(comb, V, nest_budget, false).child.refines(Q))
        unmet = "the first child of V is not inside Q";
    if (!unmet.empty()) {
        row.hypothesis_met = false;
        row.note = "HypothesisNotMet: " + unmet;
        return row;
    }
    const ModulusEstimate lhs = modulus(piece_annulus(puzzle, Qp, Pp), budget.grid_n);
    const PieceModulus mv = m_of_piece(puzzle, V, budget);
    const double d = comb.degree();
    row.lhs = lhs.value;
    row.rhs = mv.estimate.value / (d * d);
    row.margin = relative_margin(row.lhs, row.rhs);
    row.passed = row.lhs >= row.rhs * (1 - kVerificationSlack);
    row.note = mv.note;
    return row;
}

ModuliProfile nest_moduli_profile(const Puzzle& puzzle, const NestRecord& nest, int grid_n, unsigned n0) {
    ModuliProfile profile;
    profile.n0 = n0;
    for (std::size_t n = 0; n < nest.entries.size(); ++n) {
        const NestEntry& e = nest.entries[n];
        try {
            profile.levels.push_back(modulus(piece_annulus(puzzle, e.q, e.p), grid_n));
            profile.errors.emplace_back();
            const double v = profile.levels.back()->value;
            if (n >= n0 && (!profile.floor || v < *profile.floor)) profile.floor = v;
        } catch (const Error& err) {
            profile.levels.emplace_back();
            profile.errors.emplace_back(err.what());
        }
    }
    return profile;
}

}  // namespace puzzlekit
