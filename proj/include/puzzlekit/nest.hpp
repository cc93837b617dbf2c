#pragma once

#include "puzzlekit/angle_engine.hpp"
#include "puzzlekit/error.hpp"

#include <optional>
#include <string>
#include <vector>

namespace puzzlekit {

struct NestBudget {
    unsigned long orbit = 100000;  // critical-orbit iterates
    unsigned depth = 200;          // deepest label the engine may create
};

/// First return of the critical point to a critical piece V: f^time maps the
/// central domain `from` (the first child) onto `to` = V.
struct ReturnEvent {
    unsigned long time = 0;
    Label from;
    Label to;
    bool is_central = false;  // f^time(0) lies in the first child again
};

enum class ChildKind { First, Good, Spoiled, Favorite, Plain };

std::string_view to_string(ChildKind kind);

struct ChildFlags {
    bool first = false;
    bool good = false;
    bool spoiled = false;
    bool favorite = false;
};

/// A critical piece `child` with f^map_time : child -> parent a degree-d branched cover.
struct ChildRecord {
    Label child;
    Label parent;
    unsigned long map_time = 0;
    ChildKind kind = ChildKind::Plain;
    ChildFlags flags;
};

struct NestEntry {
    Label q;  // Q^i
    Label p;  // P^i, first child of Q^i
    unsigned long first_return = 0;  // map time of P^i onto Q^i
    std::optional<bool> central;     // R_Q(0) lies in P^i (unknown past the valid depth)
    // Favorite child construction: k returns to leave P, l more to come back;
    // favorite_time is the global iterate of the (k+l)-th return. Absent on a
    // last level whose favorite child lies beyond the budget.
    bool has_favorite = false;
    unsigned long k = 0;
    unsigned long l = 0;
    unsigned long favorite_time = 0;
};

struct NestRecord {
    unsigned q_period = 0;  // number of rays at alpha
    unsigned long seed_l = 0;
    std::vector<NestEntry> entries;
    /// Why construction stopped before the requested length (empty when it did not).
    std::optional<ErrorKind> stop_kind;
    std::string stop_reason;

    /// Q^0 ⊃ P^0 ⊃ Q^1 ⊃ ... with strictly increasing depths.
    std::vector<Label> chain() const;
};

/// Minimal t >= 1 with f^t(0) in Y. Y must be a critical piece.
unsigned long first_return_time(const Combinatorics& comb, const Label& Y, const NestBudget& budget = {});
ReturnEvent first_return(const Combinatorics& comb, const Label& V, const NestBudget& budget = {});
/// Whether the critical piece at depth(V)+t is a child of V with map time t.
bool is_child_time(const Combinatorics& comb, const Label& V, unsigned long t);
/// With `classify` false the good/spoiled flags are left unset, which needs less depth.
ChildRecord first_child(const Combinatorics& comb, const Label& V, const NestBudget& budget = {},
                        bool classify = true);
/// Flags of a child record relative to the first child of its parent.
ChildFlags classify_child(const Combinatorics& comb, const ChildRecord& rec, const NestBudget& budget = {});
/// The oldest `count` children of V in inclusion order (first child first),
/// with flags filled in. Scanning stops at `max_time`.
std::vector<ChildRecord> children_list(const Combinatorics& comb, const Label& V, std::size_t count,
                                       unsigned long max_time, const NestBudget& budget = {});
/// Favorite child with its k, l construction data.
ChildRecord favorite_child(const Combinatorics& comb, const Label& Q, const NestBudget& budget = {},
                           NestEntry* construction = nullptr);
/// Pairs (V^i, W^i): W^i is the first child of V^i, V^{i+1} the oldest unspoiled child of W^i.
std::vector<std::pair<Label, Label>> modified_principal_nest(const Combinatorics& comb, const Label& V0,
                                                             unsigned levels, const NestBudget& budget = {});
/// Favorite nest of length up to m from Q^0 = Y^{lq}.
NestRecord favorite_nest(const Combinatorics& comb, unsigned m, const NestBudget& budget = {});
/// Checks the NestRecord invariants; returns a description of the first violation.
std::optional<std::string> check_nest(const Combinatorics& comb, const NestRecord& nest,
                                      const NestBudget& budget = {});

}  // namespace puzzlekit
