#pragma once

#include "puzzlekit/angle.hpp"

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace puzzlekit {

/// Cycle of external angles landing at the dividing fixed point.
struct Portrait {
    unsigned degree = 2;
    std::vector<Angle> angles;  // ascending
    unsigned rotation_p = 0;
    unsigned rotation_q = 0;

    /// Validates that t ↦ d·t permutes `angles` as a circular rotation.
    static Portrait from_angles(unsigned degree, std::vector<Angle> angles);

    std::size_t size() const { return angles.size(); }
    bool contains(const Angle& t) const;

    /// Sector arcs indexed by sector number; sector 0 is the critical sector
    /// (the unique arc of length > (d-1)/d), the rest follow counter-clockwise.
    const std::vector<Arc>& sectors() const { return sectors_; }
    /// Image of the critical sector: the sector containing the critical value.
    const Arc& characteristic_arc() const { return sectors_[characteristic_]; }
    std::size_t characteristic_sector() const { return characteristic_; }

    friend bool operator==(const Portrait& a, const Portrait& b) {
        return a.degree == b.degree && a.angles == b.angles;
    }

private:
    std::vector<Arc> sectors_;
    std::size_t characteristic_ = 0;
};

/// All period-q cycles of t ↦ d·t mod 1 acting on their circular order as rotation by p/q.
std::vector<Portrait> enumerate_portraits(unsigned d, unsigned q, unsigned p);

/// Sector number of t; throws OnRay for portrait angles.
std::size_t sector_index(const Portrait& portrait, const Angle& t);

/// Symbolic puzzle piece: the union of its equipotential arcs on the circle at infinity.
struct Label {
    unsigned depth = 0;
    std::vector<Arc> arcs;  // disjoint, sorted by start

    /// Endpoints of all arcs, ascending and deduplicated.
    std::vector<Angle> boundary_angles() const;
    /// Canonical key: the smallest arc start. Unique within one depth.
    const Angle& sector_id() const { return arcs.front().start; }
    bool contains(const Angle& t) const;
    /// Every arc of *this lies inside an arc of `parent`.
    bool refines(const Label& parent) const;
    /// Total angular measure.
    double measure() const;
    std::string key() const;

    friend bool operator==(const Label&, const Label&) = default;
};

std::vector<Label> level0(const Portrait& portrait);

/// Pulls back one label. The preimage is a single label when `holds_value`
/// (the piece contains the critical value); otherwise it splits into d labels
/// separated by the critical partition {(value_angle + j)/d}.
std::vector<Label> pullback_label(unsigned d, const Label& label, bool holds_value,
                                  const Angle& value_angle);

/// Full depth-(n+1) level from a full depth-n level. The value angle selects
/// which depth-n piece holds the critical value.
std::vector<Label> pullback_labels(unsigned d, const std::vector<Label>& level,
                                   const Angle& value_angle);

/// Per-depth labels of the pieces containing the critical value, depths 0..n.
std::vector<Label> critical_value_labels(const Portrait& portrait, const Angle& value_angle,
                                         unsigned n);

/// Combinatorics of a map up to a depth, generated lazily from the portrait and
/// an external angle of the critical value. Thread-safe.
class Combinatorics {
public:
    static constexpr unsigned kUnbounded = std::numeric_limits<unsigned>::max();

    /// `valid_depth` bounds the depths at which `value_angle` is trusted
    /// (geometrically inferred angles are only valid to a finite depth).
    Combinatorics(Portrait portrait, Angle value_angle, unsigned valid_depth = kUnbounded,
                  unsigned full_level_depth = 6);

    const Portrait& portrait() const { return portrait_; }
    unsigned degree() const { return portrait_.degree; }
    const Angle& value_angle() const { return value_angle_; }
    unsigned valid_depth() const { return valid_depth_; }
    unsigned full_level_depth() const { return full_level_depth_; }

    /// Critical piece Y^n.
    Label critical_label(unsigned depth) const;
    /// Piece containing the critical value.
    Label value_label(unsigned depth) const;
    /// Depth-n label containing angle t. Throws OnRay if t is a boundary angle.
    Label label_containing(const Angle& t, unsigned depth) const;
    /// Angle carried by f^t(0) for t >= 1 (i.e. d^(t-1) times the value angle).
    Angle orbit_angle(unsigned long t) const;
    /// Label of the piece containing f^t(0). t = 0 gives the critical label.
    Label orbit_label(unsigned long t, unsigned depth) const;
    /// Whether f^t(0) lies in the interior of `piece`.
    bool orbit_in(unsigned long t, const Label& piece) const;
    /// Complete list of labels at `depth` (only up to full_level_depth()).
    std::vector<Label> level(unsigned depth) const;
    /// Sector numbers of t, d·t, ..., d^(length-1)·t.
    std::vector<std::size_t> itinerary(const Angle& t, unsigned length) const;
    /// First depth k <= n at which the critical orbit hits a boundary ray, or -1.
    int first_undefined_depth(unsigned n) const;

private:
    void require_depth(unsigned depth) const;
    bool is_value_label(const Label& l) const;

    Portrait portrait_;
    Angle value_angle_;
    unsigned valid_depth_;
    unsigned full_level_depth_;

    struct Cache;
    std::shared_ptr<Cache> cache_;
};

/// Same portrait and identical labels (critical, value, and full levels where
/// available) at every depth <= n. Throws DepthUnavailable.
bool same_combinatorics(const Combinatorics& a, const Combinatorics& b, unsigned n);

/// Deepest n <= limit with same_combinatorics(a, b, n), or -1 if even depth 0 differs.
int agreement_depth(const Combinatorics& a, const Combinatorics& b, unsigned limit);

}  // namespace puzzlekit
