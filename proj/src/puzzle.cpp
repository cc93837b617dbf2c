#include "puzzlekit/puzzle.hpp"

#include "puzzlekit/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace puzzlekit {

struct Puzzle::Cache {
    std::mutex mutex;
    std::map<Angle, std::shared_ptr<const RayTrace>> rays;
    std::map<Angle, cplx> landings;
    std::map<std::string, std::shared_ptr<const PuzzlePiece>> pieces;
};

namespace {

// Generic angle inside an arc: never a boundary angle of any depth, since its
// reduced denominator carries the Mersenne prime 2^61 - 1.
Angle generic_point(const Arc& arc) {
    const mpz_class prime = (mpz_class(1) << 61) - 1;
    const mpz_class u = prime * 381966 / 1000000;
    mpq_class s(arc.start.num(), arc.start.den());
    mpq_class t = s + arc.length() * mpq_class(u, prime);
    t.canonicalize();
    return Angle(t.get_num(), t.get_den());
}

const Arc& longest_arc(const Label& l) {
    return *std::max_element(l.arcs.begin(), l.arcs.end(),
                             [](const Arc& a, const Arc& b) { return a.length() < b.length(); });
}

void append_unique(Polyline& out, cplx z) {
    if (out.empty() || out.back() != z) out.push_back(z);
}

}  // namespace

Puzzle::Puzzle(Parameter param, Combinatorics comb, cplx alpha, PuzzleConfig config)
    : param_(param), comb_(std::move(comb)), alpha_(alpha), config_(config), cache_(std::make_shared<Cache>()) {
    if (!(config_.height > 0)) throw Error(ErrorKind::InvalidArgument, "equipotential height must be positive");
}

Puzzle Puzzle::with_combinatorics(Combinatorics comb) const {
    Puzzle out(param_, std::move(comb), alpha_, config_);
    out.cache_ = cache_;
    return out;
}

double Puzzle::height_at(unsigned depth) const {
    return config_.height * std::pow(static_cast<double>(param_.degree), -static_cast<double>(depth));
}

unsigned Puzzle::boundary_depth(const Angle& t) const {
    Angle a = t;
    // A boundary angle has denominator (d^q - 1) d^k, so it lands in the portrait within
    // log_d(den) steps.
    const std::size_t bound = mpz_sizeinbase(t.den().get_mpz_t(), 2) + 2;
    for (std::size_t k = 0; k <= bound; ++k) {
        if (comb_.portrait().contains(a)) return static_cast<unsigned>(k);
        a = a.times(param_.degree);
    }
    throw Error(ErrorKind::InvalidArgument, "angle " + t.str() + " is not a puzzle boundary angle");
}

const RayTrace& Puzzle::ray(const Angle& t) const {
    {
        std::lock_guard lock(cache_->mutex);
        auto it = cache_->rays.find(t);
        if (it != cache_->rays.end()) return *it->second;
    }
    const unsigned k = boundary_depth(t);
    RayOptions opts;
    opts.steps_per_halving = config_.steps_per_d_fold;
    opts.potential_ratio = std::pow(static_cast<double>(param_.degree), -1.0 / config_.steps_per_d_fold);
    opts.landing_tol = config_.landing_tol;
    opts.relative_landing = true;
    auto trace = std::make_shared<RayTrace>(trace_ray(param_, t, height_at(k), config_.potential_floor, opts));
    // Landing point: the preimage of alpha reached by Newton from the extrapolated limit.
    const cplx guess = trace->landing_point.value_or(trace->points.back());
    cplx land = guess;
    if (k == 0) {
        land = alpha_;
    } else if (auto x = solve_preimage(param_, k, alpha_, guess)) {
        // Preimages of alpha are dense near the Julia set: accept only a root close on the ray's scale.
        if (std::abs(*x - guess) < 1e-2 * std::abs(trace->points.front() - guess)) land = *x;
    }
    std::lock_guard lock(cache_->mutex);
    cache_->landings[t] = land;
    auto [it, inserted] = cache_->rays.emplace(t, trace);
    return *it->second;
}

cplx Puzzle::landing(const Angle& t) const {
    ray(t);
    std::lock_guard lock(cache_->mutex);
    return cache_->landings.at(t);
}

std::shared_ptr<const PuzzlePiece> Puzzle::piece(const Label& label) const {
    const std::string key = label.key();
    {
        std::lock_guard lock(cache_->mutex);
        auto it = cache_->pieces.find(key);
        if (it != cache_->pieces.end()) return it->second;
    }
    const unsigned m = label.depth;
    const double g = height_at(m);
    const unsigned d = param_.degree;

    // Point of ray t at the piece's equipotential, plus the index of that sample.
    auto ray_at_height = [&](const Angle& t) -> std::pair<cplx, std::size_t> {
        const RayTrace& tr = ray(t);
        const unsigned k = boundary_depth(t);
        const std::size_t j = static_cast<std::size_t>(m - k) * config_.steps_per_d_fold;
        if (j < tr.points.size()) return {tr.points[j], j};
        auto z = bottcher_newton(param_, t, g, tr.points.back());
        return {z.value_or(tr.points.back()), tr.points.size()};
    };

    auto out = std::make_shared<PuzzlePiece>();
    out->label = label;
    out->depth = m;
    out->potential = g;
    const std::size_t n_arcs = label.arcs.size();
    for (std::size_t i = 0; i < n_arcs; ++i) {
        const Arc& arc = label.arcs[i];
        const Arc& next = label.arcs[(i + 1) % n_arcs];
        const auto [pa, ja] = ray_at_height(arc.start);
        const auto [pb, jb] = ray_at_height(arc.end);
        const cplx la = landing(arc.start);
        const cplx lb = landing(arc.end);
        const double scale = std::max({std::abs(pa - la), std::abs(pb - lb), std::abs(pa - pb), 1e-300});
        // Below ~1e-13 the geometry is at the double-precision floor and only the combinatorics matter.
        const double noise = 1e-13 * (1 + std::abs(pb));
        Polyline eq = equipotential_arc(param_, arc.start, arc.end, g, pa, std::max(config_.arc_step * scale, noise));
        if (std::abs(eq.back() - pb) > std::max(1e-4 * scale, noise))
            throw Error(ErrorKind::LabelMismatch, "equipotential arc of " + label.key() + " missed ray " +
                                                      arc.end.str());
        for (std::size_t k = 0; k + 1 < eq.size(); ++k) append_unique(out->boundary, eq[k]);
        // Down ray `arc.end` to its landing point.
        const RayTrace& rb = ray(arc.end);
        append_unique(out->boundary, pb);
        for (std::size_t k = jb + 1; k < rb.points.size(); ++k) append_unique(out->boundary, rb.points[k]);
        append_unique(out->boundary, lb);
        // Up ray `next.start` from the same landing point.
        const cplx ln = landing(next.start);
        if (std::abs(ln - lb) > 1e-6 * std::max(scale, 1e-12) + 1e-12)
            throw Error(ErrorKind::LabelMismatch, "rays " + arc.end.str() + " and " + next.start.str() +
                                                      " do not co-land (label " + label.key() + ")");
        const RayTrace& rn = ray(next.start);
        const auto [pn, jn] = ray_at_height(next.start);
        for (std::size_t k = rn.points.size(); k-- > jn + 1;) append_unique(out->boundary, rn.points[k]);
        append_unique(out->boundary, pn);
    }
    if (out->boundary.size() > 1 && out->boundary.front() == out->boundary.back()) out->boundary.pop_back();
    for (std::size_t i = 0; i < out->boundary.size(); ++i)
        out->max_segment = std::max(out->max_segment,
                                    std::abs(out->boundary[(i + 1) % out->boundary.size()] - out->boundary[i]));
    out->contains_critical_point = encloses(out->boundary, cplx(0));
    (void)d;
    std::lock_guard lock(cache_->mutex);
    auto [it, inserted] = cache_->pieces.emplace(key, out);
    return it->second;
}

std::vector<Angle> Puzzle::child_boundary_angles(const Label& parent) const {
    const unsigned d = param_.degree;
    mpz_class N;
    mpz_ui_pow_ui(N.get_mpz_t(), d, parent.depth + 1);
    std::vector<Angle> out;
    auto scan = [&](const mpq_class& lo, const mpq_class& hi) {
        for (const Angle& pi : comb_.portrait().angles) {
            const mpq_class pq(pi.num(), pi.den());
            mpq_class a = lo * N - pq;
            mpq_class b = hi * N - pq;
            a.canonicalize();
            b.canonicalize();
            mpz_class jmin, jmax;
            mpz_fdiv_q(jmin.get_mpz_t(), a.get_num_mpz_t(), a.get_den_mpz_t());
            jmin += 1;
            mpz_cdiv_q(jmax.get_mpz_t(), b.get_num_mpz_t(), b.get_den_mpz_t());
            jmax -= 1;
            for (mpz_class j = jmin; j <= jmax; ++j) {
                mpq_class s = (pq + j) / N;
                s.canonicalize();
                out.emplace_back(s.get_num(), s.get_den());
            }
        }
    };
    for (const Arc& arc : parent.arcs) {
        out.push_back(arc.start);
        out.push_back(arc.end);
        const mpq_class s(arc.start.num(), arc.start.den());
        const mpq_class e(arc.end.num(), arc.end.den());
        if (arc.start < arc.end) {
            scan(s, e);
        } else {
            scan(s, mpq_class(1));
            scan(mpq_class(0), e);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Label> Puzzle::children(const Label& parent) const {
    const auto angles = child_boundary_angles(parent);
    std::vector<Label> out;
    std::set<std::string> seen;
    for (const Arc& arc : parent.arcs) {
        // Boundary angles inside this arc, in counter-clockwise order from its start.
        std::vector<Angle> inside{arc.start};
        std::vector<Angle> tail;
        for (const Angle& a : angles) {
            if (!arc.contains(a)) continue;
            if (arc.start < a) inside.push_back(a);
            else tail.push_back(a);
        }
        inside.insert(inside.end(), tail.begin(), tail.end());
        inside.push_back(arc.end);
        for (std::size_t i = 0; i + 1 < inside.size(); ++i) {
            const Angle mid = Arc{inside[i], inside[i + 1]}.midpoint();
            Label child = comb_.label_containing(mid, parent.depth + 1);
            if (seen.insert(child.key()).second) out.push_back(std::move(child));
        }
    }
    return out;
}

std::vector<Label> Puzzle::locate_chain(cplx z, unsigned depth) const {
    const double gz = green(param_, z);
    if (gz >= height_at(depth))
        throw Error(ErrorKind::OutsideTruncation, "point has potential " + std::to_string(gz) +
                                                      " above the depth-" + std::to_string(depth) + " equipotential");
    std::vector<Label> candidates = level0(comb_.portrait());
    std::vector<Label> chain;
    for (unsigned k = 0; k <= depth; ++k) {
        const Label* found = nullptr;
        for (const Label& cand : candidates) {
            auto pc = piece(cand);
            const double dist = distance_to_polyline(pc->boundary, z, true);
            if (dist < config_.boundary_tol * pc->diameter())
                throw Error(ErrorKind::OnBoundary, "point within tolerance of " + cand.key());
            if (pc->contains(z)) {
                found = &cand;
                break;
            }
        }
        if (!found)
            throw Error(ErrorKind::LabelMismatch, "no depth-" + std::to_string(k) + " piece contains the point");
        chain.push_back(*found);
        if (k < depth) candidates = children(chain.back());
    }
    return chain;
}

Label Puzzle::locate(cplx z, unsigned depth) const { return locate_chain(z, depth).back(); }

PuzzleSetup detect_portrait(const Parameter& p, unsigned q_max) {
    PuzzleSetup out;
    out.alpha = classify_alpha(p, q_max);
    out.portrait = Portrait::from_angles(p.degree, out.alpha.landing_angles);
    return out;
}

PuzzleLevel build_level0(const Puzzle& puzzle) {
    PuzzleLevel level;
    level.depth = 0;
    for (const Label& l : level0(puzzle.combinatorics().portrait())) level.pieces.push_back(*puzzle.piece(l));
    return level;
}

std::vector<PuzzleLevel> refine_to_depth(const Puzzle& puzzle, unsigned n) {
    const Combinatorics& comb = puzzle.combinatorics();
    const int bad = comb.first_undefined_depth(n);
    if (bad >= 0)
        throw Error(ErrorKind::CombinatoricsUndefined, "combinatorics undefined at depth " + std::to_string(bad));
    std::vector<PuzzleLevel> out{build_level0(puzzle)};
    std::vector<Label> labels = level0(comb.portrait());
    for (unsigned k = 1; k <= n; ++k) {
        std::vector<Label> next;
        for (const Label& l : labels) {
            for (auto& c : puzzle.children(l)) next.push_back(std::move(c));
        }
        if (next.size() > puzzle.config().max_level_pieces)
            throw Error(ErrorKind::BudgetExhausted, "depth-" + std::to_string(k) + " level has " +
                                                        std::to_string(next.size()) + " pieces");
        PuzzleLevel level;
        level.depth = k;
        const Label critical = comb.critical_label(k);
        for (const Label& l : next) {
            PuzzlePiece pc = *puzzle.piece(l);
            if (pc.contains_critical_point != (l == critical))
                throw Error(ErrorKind::LabelMismatch, "critical piece disagreement at depth " + std::to_string(k));
            level.pieces.push_back(std::move(pc));
        }
        labels = std::move(next);
        out.push_back(std::move(level));
    }
    return out;
}

std::pair<Angle, unsigned> infer_value_angle(const Parameter& p, const Portrait& portrait, cplx alpha,
                                             unsigned max_depth, const PuzzleConfig& config) {
    Label value{0, {portrait.characteristic_arc()}};
    Angle theta = generic_point(value.arcs.front());
    Puzzle puzzle(p, Combinatorics(portrait, theta, 0), alpha, config);
    const double gc = green(p, p.c);
    if (gc >= config.height)
        throw Error(ErrorKind::OutsideTruncation, "critical value above the depth-0 equipotential");
    if (!puzzle.piece(value)->contains(p.c))
        throw Error(ErrorKind::LabelMismatch, "critical value outside the characteristic sector");
    unsigned depth = 0;
    for (unsigned k = 1; k <= max_depth; ++k) {
        if (gc >= puzzle.height_at(k)) break;
        puzzle = puzzle.with_combinatorics(Combinatorics(portrait, theta, k));
        const Label* found = nullptr;
        const auto kids = puzzle.children(value);
        for (const Label& kid : kids) {
            auto pc = puzzle.piece(kid);
            if (distance_to_polyline(pc->boundary, p.c, true) < config.boundary_tol * pc->diameter()) {
                found = nullptr;
                break;
            }
            if (pc->contains(p.c)) found = &kid;
        }
        if (!found) break;
        value = *found;
        theta = generic_point(longest_arc(value));
        depth = k;
    }
    return {theta, depth};
}

double equivariance_defect(const Puzzle& puzzle, const Label& child) {
    if (child.depth == 0) throw Error(ErrorKind::InvalidArgument, "depth-0 pieces have no image piece");
    const unsigned d = puzzle.parameter().degree;
    const Label image = puzzle.combinatorics().label_containing(child.arcs.front().midpoint().times(d), child.depth - 1);
    auto src = puzzle.piece(child);
    auto dst = puzzle.piece(image);
    Polyline mapped;
    mapped.reserve(src->boundary.size());
    for (cplx z : src->boundary) mapped.push_back(apply_map(puzzle.parameter(), z));
    return directed_hausdorff(mapped, {dst->boundary}, true);
}

bool nested_in(const Puzzle& puzzle, const Label& child, const Label& parent) {
    auto c = puzzle.piece(child);
    auto p = puzzle.piece(parent);
    const double tol = 1e-6 * p->diameter() + 2 * p->max_segment;
    for (cplx z : c->boundary) {
        if (!p->contains(z) && distance_to_polyline(p->boundary, z, true) > tol) return false;
    }
    return true;
}

}  // namespace puzzlekit
