#include "puzzlekit/angle_engine.hpp"

#include "puzzlekit/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace puzzlekit {

// ---------------------------------------------------------------------------
// Portrait

Portrait Portrait::from_angles(unsigned degree, std::vector<Angle> angles) {
    if (degree < 2) throw Error(ErrorKind::InvalidArgument, "degree must be >= 2");
    std::sort(angles.begin(), angles.end());
    angles.erase(std::unique(angles.begin(), angles.end()), angles.end());
    const std::size_t q = angles.size();
    if (q < 2) throw Error(ErrorKind::InvalidArgument, "portrait needs at least two angles");

    auto index_of = [&](const Angle& t) -> std::size_t {
        auto it = std::lower_bound(angles.begin(), angles.end(), t);
        if (it == angles.end() || *it != t)
            throw Error(ErrorKind::InvalidArgument, "angle set is not invariant under t -> d t");
        return static_cast<std::size_t>(it - angles.begin());
    };
    const std::size_t p = index_of(angles[0].times(degree));
    for (std::size_t i = 0; i < q; ++i) {
        if (index_of(angles[i].times(degree)) != (i + p) % q)
            throw Error(ErrorKind::InvalidArgument, "cycle does not act as a rotation");
    }
    if (p == 0 || std::gcd(p, q) != 1)
        throw Error(ErrorKind::InvalidArgument, "portrait angles must form a single cycle");

    Portrait out;
    out.degree = degree;
    out.angles = std::move(angles);
    out.rotation_p = static_cast<unsigned>(p);
    out.rotation_q = static_cast<unsigned>(q);

    std::vector<Arc> arcs;
    for (std::size_t i = 0; i < q; ++i) arcs.push_back({out.angles[i], out.angles[(i + 1) % q]});
    const mpq_class threshold(degree - 1, degree);
    std::size_t critical = q;
    for (std::size_t i = 0; i < q; ++i) {
        if (arcs[i].length() > threshold) critical = i;
    }
    if (critical == q)
        throw Error(ErrorKind::PortraitNotUnicritical,
                    "no sector wraps d-1 times; cycle is not realized by z^d + c");
    for (std::size_t i = 0; i < q; ++i) out.sectors_.push_back(arcs[(critical + i) % q]);
    const Angle image = out.sectors_[0].start.times(degree);
    for (std::size_t i = 0; i < q; ++i) {
        if (out.sectors_[i].start == image) out.characteristic_ = i;
    }
    return out;
}

bool Portrait::contains(const Angle& t) const {
    return std::binary_search(angles.begin(), angles.end(), t);
}

std::vector<Portrait> enumerate_portraits(unsigned d, unsigned q, unsigned p) {
    if (q < 2 || std::gcd(p, q) != 1 || p == 0 || p >= q)
        throw Error(ErrorKind::InvalidArgument, "need 0 < p < q, gcd(p, q) = 1");
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), d, q);
    den -= 1;
    std::vector<Portrait> out;
    std::set<mpz_class> seen;
    for (mpz_class k = 1; k < den; ++k) {
        if (seen.count(k)) continue;
        std::vector<mpz_class> orbit{k};
        mpz_class x = k;
        for (unsigned j = 1; j <= q; ++j) {
            x = (x * d) % den;
            if (x == k) break;
            orbit.push_back(x);
        }
        for (const auto& o : orbit) seen.insert(o);
        if (orbit.size() != q) continue;
        std::vector<Angle> angles;
        for (const auto& o : orbit) angles.emplace_back(o, den);
        std::sort(angles.begin(), angles.end());
        const Angle image = angles[0].times(d);
        const auto it = std::find(angles.begin(), angles.end(), image);
        if (static_cast<unsigned>(it - angles.begin()) != p) continue;
        try {
            out.push_back(Portrait::from_angles(d, angles));
        } catch (const Error&) {
            // not a rotation, or not realizable by a unicritical map
        }
    }
    return out;
}

std::size_t sector_index(const Portrait& portrait, const Angle& t) {
    if (portrait.contains(t)) throw Error(ErrorKind::OnRay, "angle " + t.str() + " is a portrait angle");
    const auto& s = portrait.sectors();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].contains(t)) return i;
    }
    throw Error(ErrorKind::OnRay, "angle " + t.str() + " not in any sector");
}

// ---------------------------------------------------------------------------
// Label

std::vector<Angle> Label::boundary_angles() const {
    std::vector<Angle> out;
    for (const auto& a : arcs) {
        out.push_back(a.start);
        out.push_back(a.end);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool Label::contains(const Angle& t) const {
    return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.contains(t); });
}

bool Label::refines(const Label& parent) const {
    return std::all_of(arcs.begin(), arcs.end(), [&](const Arc& a) {
        return std::any_of(parent.arcs.begin(), parent.arcs.end(),
                           [&](const Arc& p) { return p.covers(a); });
    });
}

double Label::measure() const {
    mpq_class total = 0;
    for (const auto& a : arcs) total += a.length();
    return total.get_d();
}

std::string Label::key() const {
    std::string s = std::to_string(depth) + ":";
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        if (i) s += ",";
        s += "(" + arcs[i].start.str() + " " + arcs[i].end.str() + ")";
    }
    return s;
}

std::vector<Label> level0(const Portrait& portrait) {
    std::vector<Label> out;
    for (const auto& arc : portrait.sectors()) out.push_back(Label{0, {arc}});
    return out;
}

namespace {

void sort_arcs(std::vector<Arc>& arcs) {
    std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) { return a.start < b.start; });
}

// Index k in [0, d) of the critical-partition sector ((v+k)/d, (v+k+1)/d) containing t.
unsigned partition_sector(unsigned d, const Angle& value_angle, const Angle& t) {
    mpq_class off = mpq_class(t.num(), t.den()) * d - mpq_class(value_angle.num(), value_angle.den());
    off.canonicalize();
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), off.get_num_mpz_t(), off.get_den_mpz_t());
    mpz_class k;
    mpz_fdiv_r_ui(k.get_mpz_t(), fl.get_mpz_t(), d);
    return static_cast<unsigned>(k.get_ui());
}

}  // namespace

std::vector<Label> pullback_label(unsigned d, const Label& label, bool holds_value,
                                  const Angle& value_angle) {
    std::vector<std::vector<Arc>> groups(holds_value ? 1 : d);
    for (const auto& arc : label.arcs) {
        const mpq_class len = arc.length();
        for (unsigned j = 0; j < d; ++j) {
            Angle s = arc.start.preimage(d, j);
            mpq_class e = mpq_class(s.num(), s.den()) + len / d;
            e.canonicalize();
            Arc pre{s, Angle(e.get_num(), e.get_den())};
            const unsigned g = holds_value ? 0 : partition_sector(d, value_angle, pre.midpoint());
            groups[g].push_back(std::move(pre));
        }
    }
    std::vector<Label> out;
    for (auto& g : groups) {
        if (g.empty()) continue;
        sort_arcs(g);
        out.push_back(Label{label.depth + 1, std::move(g)});
    }
    return out;
}

std::vector<Label> pullback_labels(unsigned d, const std::vector<Label>& level,
                                   const Angle& value_angle) {
    std::vector<Label> out;
    for (const auto& l : level) {
        auto pre = pullback_label(d, l, l.contains(value_angle), value_angle);
        for (auto& p : pre) out.push_back(std::move(p));
    }
    std::sort(out.begin(), out.end(),
              [](const Label& a, const Label& b) { return a.sector_id() < b.sector_id(); });
    return out;
}

std::vector<Label> critical_value_labels(const Portrait& portrait, const Angle& value_angle,
                                         unsigned n) {
    Combinatorics comb(portrait, value_angle);
    std::vector<Label> out;
    for (unsigned k = 0; k <= n; ++k) out.push_back(comb.value_label(k));
    return out;
}

// ---------------------------------------------------------------------------
// Combinatorics

struct Combinatorics::Cache {
    std::mutex mutex;
    std::map<std::pair<unsigned, Angle>, Label> containing;
    std::vector<Angle> orbit;          // orbit[i] = d^i * value_angle
    std::vector<bool> orbit_on_ray;    // orbit[i] is a portrait angle
    std::vector<std::vector<Label>> levels;

    void extend_orbit(const Portrait& p, std::size_t upto) {
        while (orbit.size() <= upto) {
            orbit.push_back(orbit.back().times(p.degree));
            orbit_on_ray.push_back(p.contains(orbit.back()));
        }
    }
};

Combinatorics::Combinatorics(Portrait portrait, Angle value_angle, unsigned valid_depth,
                             unsigned full_level_depth)
    : portrait_(std::move(portrait)),
      value_angle_(std::move(value_angle)),
      valid_depth_(valid_depth),
      full_level_depth_(full_level_depth),
      cache_(std::make_shared<Cache>()) {
    cache_->orbit.push_back(value_angle_);
    cache_->orbit_on_ray.push_back(portrait_.contains(value_angle_));
}

int Combinatorics::first_undefined_depth(unsigned n) const {
    std::lock_guard lock(cache_->mutex);
    cache_->extend_orbit(portrait_, n);
    for (unsigned i = 0; i + 1 <= n; ++i) {
        if (cache_->orbit_on_ray[i]) return static_cast<int>(i + 1);
    }
    return -1;
}

void Combinatorics::require_depth(unsigned depth) const {
    if (depth > valid_depth_)
        throw Error(ErrorKind::DepthUnavailable, "depth " + std::to_string(depth) +
                                                     " beyond valid depth " +
                                                     std::to_string(valid_depth_));
    const int bad = first_undefined_depth(depth);
    if (bad >= 0)
        throw Error(ErrorKind::CombinatoricsUndefined,
                    "critical orbit f^" + std::to_string(bad) + "(0) lies on an alpha ray");
}

bool Combinatorics::is_value_label(const Label& l) const { return l.contains(value_angle_); }

Label Combinatorics::label_containing(const Angle& t, unsigned depth) const {
    require_depth(depth);
    const unsigned d = portrait_.degree;
    std::vector<Angle> chain{t};
    for (unsigned j = 0; j < depth; ++j) chain.push_back(chain.back().times(d));
    for (const auto& a : chain) {
        if (portrait_.contains(a)) throw Error(ErrorKind::OnRay, "angle " + t.str() + " is a boundary angle");
    }
    // Find the deepest cached ancestor.
    std::optional<Label> current;
    unsigned j = depth;
    {
        std::lock_guard lock(cache_->mutex);
        for (unsigned i = 0; i <= depth; ++i) {
            auto it = cache_->containing.find({depth - i, chain[i]});
            if (it != cache_->containing.end()) {
                current = it->second;
                j = i;
                break;
            }
        }
    }
    if (!current) {
        current = Label{0, {portrait_.sectors()[sector_index(portrait_, chain[depth])]}};
        j = depth;
    }
    std::vector<std::pair<std::pair<unsigned, Angle>, Label>> fresh;
    while (j > 0) {
        --j;
        const bool holds = is_value_label(*current);
        auto pre = pullback_label(d, *current, holds, value_angle_);
        auto it = std::find_if(pre.begin(), pre.end(), [&](const Label& l) { return l.contains(chain[j]); });
        if (it == pre.end()) throw Error(ErrorKind::LabelMismatch, "pullback lost angle " + chain[j].str());
        current = *it;
        fresh.push_back({{depth - j, chain[j]}, *current});
    }
    {
        std::lock_guard lock(cache_->mutex);
        for (auto& f : fresh) cache_->containing.emplace(std::move(f.first), std::move(f.second));
    }
    return *current;
}

Label Combinatorics::value_label(unsigned depth) const {
    require_depth(depth);
    if (first_undefined_depth(depth + 1) >= 0)
        throw Error(ErrorKind::CombinatoricsUndefined,
                    "critical value lies on a depth-" + std::to_string(depth) + " boundary ray");
    return label_containing(value_angle_, depth);
}

Label Combinatorics::critical_label(unsigned depth) const {
    if (depth == 0) return Label{0, {portrait_.sectors()[0]}};
    const Label v = value_label(depth - 1);
    return pullback_label(portrait_.degree, v, true, value_angle_).front();
}

Angle Combinatorics::orbit_angle(unsigned long t) const {
    if (t == 0) throw Error(ErrorKind::InvalidArgument, "f^0(0) = 0 carries no external angle");
    std::lock_guard lock(cache_->mutex);
    cache_->extend_orbit(portrait_, t - 1);
    return cache_->orbit[t - 1];
}

Label Combinatorics::orbit_label(unsigned long t, unsigned depth) const {
    if (t == 0) return critical_label(depth);
    if (static_cast<unsigned long>(depth) + t - 1 > valid_depth_)
        throw Error(ErrorKind::DepthUnavailable, "f^" + std::to_string(t) + "(0) at depth " +
                                                     std::to_string(depth) + " needs value angle beyond valid depth");
    try {
        return label_containing(orbit_angle(t), depth);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::OnRay)
            throw Error(ErrorKind::CombinatoricsUndefined, "f^" + std::to_string(t) + "(0) lands on a boundary ray");
        throw;
    }
}

bool Combinatorics::orbit_in(unsigned long t, const Label& piece) const {
    if (t == 0) return piece == critical_label(piece.depth);
    if (static_cast<unsigned long>(piece.depth) + t - 1 > valid_depth_)
        throw Error(ErrorKind::DepthUnavailable, "orbit time " + std::to_string(t) + " at depth " +
                                                     std::to_string(piece.depth) + " beyond valid depth");
    const Angle a = orbit_angle(t);
    {
        std::lock_guard lock(cache_->mutex);
        cache_->extend_orbit(portrait_, t - 1 + piece.depth);
        for (unsigned long i = t - 1; i <= t - 1 + piece.depth; ++i) {
            if (cache_->orbit_on_ray[i])
                throw Error(ErrorKind::CombinatoricsUndefined,
                            "f^" + std::to_string(t) + "(0) on a depth-" + std::to_string(piece.depth) + " ray");
        }
    }
    return piece.contains(a);
}

std::vector<Label> Combinatorics::level(unsigned depth) const {
    if (depth > full_level_depth_)
        throw Error(ErrorKind::DepthUnavailable, "full level " + std::to_string(depth) +
                                                     " beyond full_level_depth " + std::to_string(full_level_depth_));
    require_depth(depth);
    std::lock_guard lock(cache_->mutex);
    auto& levels = cache_->levels;
    if (levels.empty()) levels.push_back(level0(portrait_));
    while (levels.size() <= depth) levels.push_back(pullback_labels(portrait_.degree, levels.back(), value_angle_));
    return levels[depth];
}

std::vector<std::size_t> Combinatorics::itinerary(const Angle& t, unsigned length) const {
    std::vector<std::size_t> out;
    Angle a = t;
    for (unsigned i = 0; i < length; ++i) {
        out.push_back(sector_index(portrait_, a));
        a = a.times(portrait_.degree);
    }
    return out;
}

bool same_combinatorics(const Combinatorics& a, const Combinatorics& b, unsigned n) {
    if (n > a.valid_depth() || n > b.valid_depth())
        throw Error(ErrorKind::DepthUnavailable, "comparison depth " + std::to_string(n) + " not available");
    if (!(a.portrait() == b.portrait())) return false;
    for (unsigned k = 0; k <= n; ++k) {
        if (!(a.critical_label(k) == b.critical_label(k))) return false;
        if (!(a.value_label(k) == b.value_label(k))) return false;
        if (k <= a.full_level_depth() && k <= b.full_level_depth() && !(a.level(k) == b.level(k)))
            return false;
    }
    return true;
}

int agreement_depth(const Combinatorics& a, const Combinatorics& b, unsigned limit) {
    if (!(a.portrait() == b.portrait())) return -1;
    int best = -1;
    for (unsigned k = 0; k <= limit; ++k) {
        if (k > a.valid_depth() || k > b.valid_depth()) break;
        if (!(a.critical_label(k) == b.critical_label(k)) || !(a.value_label(k) == b.value_label(k)))
            break;
        if (k <= a.full_level_depth() && k <= b.full_level_depth() && !(a.level(k) == b.level(k))) break;
        best = static_cast<int>(k);
    }
    return best;
}

}  // namespace puzzlekit
