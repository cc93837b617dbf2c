#pragma once

#include "puzzlekit/angle_engine.hpp"
#include "puzzlekit/dynamics.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace puzzlekit {

struct PuzzleConfig {
    double height = 1.0;          // equipotential height h of depth 0
    int steps_per_d_fold = 8;     // ray samples per division of the potential by d
    double landing_tol = 1e-10;   // spread of the last three ray points that counts as landed
    double boundary_tol = 1e-7;   // OnBoundary tolerance, relative to the piece diameter
    double arc_step = 0.04;       // equipotential spacing, relative to the arc's chord scale
    double potential_floor = 1e-250;
    std::size_t max_level_pieces = 4096;
};

/// Geometric realization of a labeled piece: closed counter-clockwise boundary made of
/// equipotential arcs at height h/d^n and ray segments down to their landing points.
struct PuzzlePiece {
    Label label;
    Polyline boundary;
    unsigned depth = 0;
    double potential = 0;  // equipotential height of the piece
    bool contains_critical_point = false;
    /// Longest boundary segment (the sampling step).
    double max_segment = 0;

    bool contains(cplx z) const { return encloses(boundary, z); }
    double diameter() const { return diameter_bound(boundary); }
};

struct PuzzleLevel {
    unsigned depth = 0;
    std::vector<PuzzlePiece> pieces;
};

/// Ray, landing-point and piece geometry for one parameter, cached per angle and label.
/// Thread-safe; geometry is immutable once built.
class Puzzle {
public:
    Puzzle(Parameter param, Combinatorics comb, cplx alpha, PuzzleConfig config = {});

    const Parameter& parameter() const { return param_; }
    const Combinatorics& combinatorics() const { return comb_; }
    const PuzzleConfig& config() const { return config_; }
    /// Same parameter and geometry cache, different combinatorics.
    Puzzle with_combinatorics(Combinatorics comb) const;
    cplx alpha() const { return alpha_; }
    double height_at(unsigned depth) const;

    /// Preperiod of a boundary angle: least k with d^k t in the portrait.
    unsigned boundary_depth(const Angle& t) const;
    /// Landing point of a boundary ray (a preimage of alpha), refined by Newton.
    cplx landing(const Angle& t) const;
    /// Ray of boundary angle t: points and potentials from h down to the landing point.
    const RayTrace& ray(const Angle& t) const;

    /// Geometry of a labeled piece. Throws LabelMismatch if consecutive arcs do not
    /// close up at a common landing point.
    std::shared_ptr<const PuzzlePiece> piece(const Label& label) const;

    /// Depth-(n+1) labels inside a depth-n label.
    std::vector<Label> children(const Label& parent) const;
    /// Depth-(n+1) boundary angles inside the arcs of a depth-n label, ascending.
    std::vector<Angle> child_boundary_angles(const Label& parent) const;

    /// Deepest label of the requested depth whose piece contains z, by descending the
    /// refinement tree. Throws OnBoundary / OutsideTruncation.
    Label locate(cplx z, unsigned depth) const;
    /// Labels of all depths 0..depth along the descent.
    std::vector<Label> locate_chain(cplx z, unsigned depth) const;

private:
    Parameter param_;
    Combinatorics comb_;
    cplx alpha_;
    PuzzleConfig config_;

    struct Cache;
    std::shared_ptr<Cache> cache_;
};

/// Builds the alpha portrait, combinatorics and puzzle in one step.
struct PuzzleSetup {
    FixedPointInfo alpha;
    Portrait portrait;
};
PuzzleSetup detect_portrait(const Parameter& p, unsigned q_max = 10);

/// Depth-0 pieces: sectors between consecutive alpha rays, truncated at height h.
PuzzleLevel build_level0(const Puzzle& puzzle);

/// Full levels 0..n. Throws CombinatoricsUndefined, LabelMismatch, or BudgetExhausted
/// when a level would exceed config.max_level_pieces.
std::vector<PuzzleLevel> refine_to_depth(const Puzzle& puzzle, unsigned n);

/// Infers an external angle of the critical value from geometry, valid to the
/// returned depth: for escaping c, the Böttcher angle of c; otherwise descent through
/// the pieces containing c. Returns {angle, valid depth}.
std::pair<Angle, unsigned> infer_value_angle(const Parameter& p, const Portrait& portrait, cplx alpha,
                                             unsigned max_depth, const PuzzleConfig& config = {});

/// Largest distance from f(boundary of child) to the boundary of its image piece.
double equivariance_defect(const Puzzle& puzzle, const Label& child);
/// Whether every vertex of child's boundary lies in (or on) the parent piece.
bool nested_in(const Puzzle& puzzle, const Label& child, const Label& parent);

}  // namespace puzzlekit
