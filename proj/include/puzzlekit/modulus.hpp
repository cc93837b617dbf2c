#pragma once

#include "puzzlekit/nest.hpp"
#include "puzzlekit/polyline.hpp"
#include "puzzlekit/puzzle.hpp"

#include <optional>
#include <string>
#include <vector>

namespace puzzlekit {

/// Topological annulus between two closed curves, inner strictly inside outer.
struct AnnulusSpec {
    Polyline outer;
    Polyline inner;
    std::string outer_label;
    std::string inner_label;
};

struct ModulusEstimate {
    double value = 0;               // extrapolated conformal modulus
    std::vector<int> grid_sizes;    // angular resolutions used
    std::vector<double> grid_values;
    double richardson_error = 0;    // |extrapolated - finest|
    double order = 0;               // observed convergence order (0 if not estimated)
    bool converged = false;         // richardson_error within 2% of the value
};

/// Throws InvalidArgument unless both curves are simple, and DegenerateAnnulus when the
/// inner curve reaches the outer one (nested pieces sharing boundary rays do this).
void validate_annulus(const AnnulusSpec& a);
/// Discrete Dirichlet-energy modulus on one log-polar grid with `n_phi` angular cells.
/// Throws DegenerateAnnulus when the curves come within one cell, NonConvergence if CG stalls.
double modulus_on_grid(const AnnulusSpec& a, int n_phi);
/// Richardson-extrapolated modulus from grids grid_n/4, grid_n/2, grid_n.
ModulusEstimate modulus(const AnnulusSpec& a, int grid_n = 512);
/// Annulus between two nested puzzle pieces.
AnnulusSpec piece_annulus(const Puzzle& puzzle, const Label& outer, const Label& inner);

struct ModulusBudget {
    int grid_n = 256;
    std::size_t samples = 512;       // angles sampled in the piece
    unsigned long max_time = 400;    // longest first return followed
    std::size_t measured = 4;        // return domains whose modulus is solved (largest first)
};

/// Running minimum of mod(Q \ D) over return domains D of Q. Only finitely many D are
/// seen, so the value is an upper bound for the true infimum m(Q).
struct PieceModulus {
    ModulusEstimate estimate;
    Label argmin;
    std::size_t visited_components = 0;
    std::size_t measured_components = 0;
    std::vector<std::pair<Label, double>> measured;  // domain, modulus
    std::string note;
};

PieceModulus m_of_piece(const Puzzle& puzzle, const Label& Q, const ModulusBudget& budget = {});

struct VerificationRow {
    std::string check;
    std::vector<std::string> labels;
    bool hypothesis_met = true;
    double lhs = 0;
    double rhs = 0;
    double margin = 0;  // (lhs - rhs) / rhs
    bool passed = false;
    std::string note;
};

/// Slack on theorem-backed inequalities, as a fraction of the right-hand side.
inline constexpr double kVerificationSlack = 0.05;

/// m(V') >= mod(V \ U) / d for a child V' of V with first child U.
VerificationRow verify_children_lemma(const Puzzle& puzzle, const Label& V, const Label& child,
                                      const ModulusBudget& budget = {}, const NestBudget& nest_budget = {});
/// mod(Q' \ P') >= m(V) / d^2 for P' ⊂ Q' ⊂ P ⊂ Q (P, P' first children, Q' favorite child of Q)
/// and V ⊃ Q whose first child lies in Q. HypothesisNotMet is reported in the row, not thrown.
VerificationRow verify_lemma_Y(const Puzzle& puzzle, const Label& Q, const Label& P, const Label& Qp,
                               const Label& Pp, const Label& V, const ModulusBudget& budget = {},
                               const NestBudget& nest_budget = {});

struct ModuliProfile {
    std::vector<std::optional<ModulusEstimate>> levels;  // mod(Q^n \ P^n)
    std::vector<std::string> errors;                     // per level, empty when fine
    std::optional<double> floor;                         // min over measured levels n >= n0
    unsigned n0 = 0;
};

ModuliProfile nest_moduli_profile(const Puzzle& puzzle, const NestRecord& nest, int grid_n = 256, unsigned n0 = 0);

}  // namespace puzzlekit
