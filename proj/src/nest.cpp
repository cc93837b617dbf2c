#include "puzzlekit/nest.hpp"

#include "puzzlekit/error.hpp"

namespace puzzlekit {

namespace {

void require_critical(const Combinatorics& comb, const Label& V) {
    if (!(V == comb.critical_label(V.depth)))
        throw Error(ErrorKind::InvalidArgument, "piece " + V.key() + " does not contain the critical point");
}

void require_depth_budget(unsigned long depth, const NestBudget& budget) {
    if (depth > budget.depth)
        throw Error(ErrorKind::BudgetExhausted, "child depth " + std::to_string(depth) + " exceeds depth budget " +
                                                    std::to_string(budget.depth));
}

// Times 1 <= t <= upto with f^t(0) in V, in increasing order.
std::vector<unsigned long> returns_to(const Combinatorics& comb, const Label& V, unsigned long upto) {
    std::vector<unsigned long> out;
    for (unsigned long t = 1; t <= upto; ++t) {
        if (comb.orbit_in(t, V)) out.push_back(t);
    }
    return out;
}

// Same as is_child_time, given the returns to V before t.
bool child_given_returns(const Combinatorics& comb, const Label& V, unsigned long t,
                         const std::vector<unsigned long>& returns) {
    if (!comb.orbit_in(t, V)) return false;
    // f^j(0) in Y^{n+t-j} forces f^j(0) in V, so only earlier returns can spoil the cover.
    for (unsigned long j : returns) {
        if (j >= t) break;
        if (comb.orbit_in(j, comb.critical_label(static_cast<unsigned>(V.depth + t - j)))) return false;
    }
    return true;
}

ChildKind kind_of(const ChildFlags& f) {
    if (f.favorite) return ChildKind::Favorite;
    if (f.spoiled) return ChildKind::Spoiled;
    if (f.first) return ChildKind::First;
    if (f.good) return ChildKind::Good;
    return ChildKind::Plain;
}

}  // namespace

std::string_view to_string(ChildKind kind) {
    switch (kind) {
        case ChildKind::First: return "first";
        case ChildKind::Good: return "good";
        case ChildKind::Spoiled: return "spoiled";
        case ChildKind::Favorite: return "favorite";
        case ChildKind::Plain: return "plain";
    }
    return "?";
}

std::vector<Label> NestRecord::chain() const {
    std::vector<Label> out;
    for (const auto& e : entries) {
        out.push_back(e.q);
        out.push_back(e.p);
    }
    return out;
}

unsigned long first_return_time(const Combinatorics& comb, const Label& Y, const NestBudget& budget) {
    require_critical(comb, Y);
    for (unsigned long t = 1; t <= budget.orbit; ++t) {
        if (comb.orbit_in(t, Y)) return t;
    }
    throw Error(ErrorKind::BudgetExhausted, "no return to " + Y.key() + " within " +
                                                std::to_string(budget.orbit) + " iterates");
}

ReturnEvent first_return(const Combinatorics& comb, const Label& V, const NestBudget& budget) {
    ReturnEvent ev;
    ev.time = first_return_time(comb, V, budget);
    ev.to = V;
    require_depth_budget(V.depth + ev.time, budget);
    ev.from = comb.critical_label(static_cast<unsigned>(V.depth + ev.time));
    ev.is_central = comb.orbit_in(ev.time, ev.from);
    return ev;
}

bool is_child_time(const Combinatorics& comb, const Label& V, unsigned long t) {
    require_critical(comb, V);
    if (t == 0) return false;
    return child_given_returns(comb, V, t, returns_to(comb, V, t - 1));
}

ChildRecord first_child(const Combinatorics& comb, const Label& V, const NestBudget& budget, bool classify) {
    ChildRecord rec;
    rec.parent = V;
    rec.map_time = first_return_time(comb, V, budget);
    require_depth_budget(V.depth + rec.map_time, budget);
    rec.child = comb.critical_label(static_cast<unsigned>(V.depth + rec.map_time));
    rec.flags.first = true;
    rec.kind = ChildKind::First;
    if (!classify) return rec;
    rec.flags.good = comb.orbit_in(rec.map_time, rec.child);
    rec.flags.spoiled = rec.flags.good;
    rec.kind = kind_of(rec.flags);
    return rec;
}

ChildFlags classify_child(const Combinatorics& comb, const ChildRecord& rec, const NestBudget& budget) {
    const ChildRecord first = first_child(comb, rec.parent, budget);
    const std::vector<unsigned long> returns = returns_to(comb, rec.parent, rec.map_time);
    if (!child_given_returns(comb, rec.parent, rec.map_time, returns))
        throw Error(ErrorKind::InvalidArgument, "time " + std::to_string(rec.map_time) + " is not a child time of " +
                                                    rec.parent.key());
    ChildFlags f;
    f.first = rec.map_time == first.map_time;
    f.good = comb.orbit_in(rec.map_time, first.child);
    f.spoiled = f.first && f.good;
    if (f.good && !f.first) {
        f.favorite = true;
        for (unsigned long s : returns) {
            if (s <= first.map_time || s >= rec.map_time) continue;
            if (comb.orbit_in(s, first.child) && child_given_returns(comb, rec.parent, s, returns)) {
                f.favorite = false;
                break;
            }
        }
    }
    return f;
}

std::vector<ChildRecord> children_list(const Combinatorics& comb, const Label& V, std::size_t count,
                                       unsigned long max_time, const NestBudget& budget) {
    require_critical(comb, V);
    std::vector<ChildRecord> out;
    if (count == 0) return out;
    const ChildRecord first = first_child(comb, V, budget);
    std::vector<unsigned long> returns;
    bool have_favorite = false;
    for (unsigned long t = 1; t <= std::min(max_time, budget.orbit) && out.size() < count; ++t) {
        if (!comb.orbit_in(t, V)) continue;
        if (child_given_returns(comb, V, t, returns)) {
            require_depth_budget(V.depth + t, budget);
            ChildRecord rec;
            rec.parent = V;
            rec.map_time = t;
            rec.child = comb.critical_label(static_cast<unsigned>(V.depth + t));
            rec.flags.first = t == first.map_time;
            rec.flags.good = comb.orbit_in(t, first.child);
            rec.flags.spoiled = rec.flags.first && rec.flags.good;
            rec.flags.favorite = !have_favorite && rec.flags.good && !rec.flags.first;
            have_favorite = have_favorite || rec.flags.favorite;
            rec.kind = kind_of(rec.flags);
            out.push_back(std::move(rec));
        }
        returns.push_back(t);
    }
    return out;
}

ChildRecord favorite_child(const Combinatorics& comb, const Label& Q, const NestBudget& budget,
                           NestEntry* construction) {
    const ChildRecord P = first_child(comb, Q, budget);
    // Returns T_1 < T_2 < ... of the critical orbit to Q; T_1 is the first return.
    std::vector<unsigned long> T{P.map_time};
    auto next_return = [&]() {
        for (unsigned long t = T.back() + 1; t <= budget.orbit; ++t) {
            if (comb.orbit_in(t, Q)) {
                T.push_back(t);
                return true;
            }
        }
        return false;
    };
    unsigned long k = 1;
    while (comb.orbit_in(T.back(), P.child)) {
        if (!next_return())
            throw Error(ErrorKind::NeverEscapes, "central cascade in " + P.child.key() + " exceeds orbit budget " +
                                                     std::to_string(budget.orbit) + " (possibly renormalizable)");
        ++k;
    }
    unsigned long l = 0;
    do {
        if (!next_return())
            throw Error(ErrorKind::NotRecurrent, "critical orbit does not come back to the depth-" +
                                                     std::to_string(P.child.depth) + " critical piece within " +
                                                     std::to_string(budget.orbit) + " iterates");
        ++l;
    } while (!comb.orbit_in(T.back(), P.child));

    ChildRecord rec;
    rec.parent = Q;
    rec.map_time = T.back();
    require_depth_budget(Q.depth + rec.map_time, budget);
    rec.child = comb.critical_label(static_cast<unsigned>(Q.depth + rec.map_time));
    rec.flags = classify_child(comb, rec, budget);
    if (!rec.flags.favorite)
        throw Error(ErrorKind::LabelMismatch, "constructed favorite child of " + Q.key() +
                                                  " is not the oldest good unspoiled child");
    rec.kind = ChildKind::Favorite;
    if (construction) {
        construction->q = Q;
        construction->p = P.child;
        construction->first_return = P.map_time;
        construction->central = P.flags.good;
        construction->has_favorite = true;
        construction->k = k;
        construction->l = l;
        construction->favorite_time = rec.map_time;
    }
    return rec;
}

std::vector<std::pair<Label, Label>> modified_principal_nest(const Combinatorics& comb, const Label& V0,
                                                             unsigned levels, const NestBudget& budget) {
    std::vector<std::pair<Label, Label>> out;
    Label V = V0;
    try {
        for (unsigned i = 0; i < levels; ++i) {
            const ChildRecord W = first_child(comb, V, budget);
            out.emplace_back(V, W.child);
            if (i + 1 == levels) break;
            const ChildRecord U = first_child(comb, W.child, budget);
            if (!U.flags.spoiled) {
                V = U.child;
                continue;
            }
            // Unbounded search for the second child is exactly the central cascade.
            auto kids = children_list(comb, W.child, 2, budget.orbit, budget);
            if (kids.size() < 2)
                throw Error(ErrorKind::NeverEscapes, "no second child of " + W.child.key() + " within budget");
            V = kids[1].child;
        }
    } catch (const Error& e) {
        if (!e.inconclusive() || out.empty()) throw;
    }
    return out;
}

NestRecord favorite_nest(const Combinatorics& comb, unsigned m, const NestBudget& budget) {
    NestRecord rec;
    rec.q_period = static_cast<unsigned>(comb.portrait().angles.size());
    const Label Y1 = comb.critical_label(1);
    unsigned long l = 1;
    for (;; ++l) {
        if (l * rec.q_period > budget.orbit)
            throw Error(ErrorKind::NeverEscapes, "f^(lq)(0) stays in the depth-1 critical piece within budget");
        if (!comb.orbit_in(l * rec.q_period, Y1)) break;
    }
    rec.seed_l = l;
    require_depth_budget(l * rec.q_period, budget);
    Label Q = comb.critical_label(static_cast<unsigned>(l * rec.q_period));
    auto soft = [](const Error& e) { return e.inconclusive() || e.kind() == ErrorKind::CombinatoricsUndefined; };
    for (unsigned i = 0; i < m; ++i) {
        NestEntry entry;
        try {
            try {
                first_return_time(comb, Q, budget);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::BudgetExhausted) throw;
                throw Error(ErrorKind::NotRecurrent, "critical orbit does not come back to the depth-" +
                                                         std::to_string(Q.depth) + " critical piece within " +
                                                         std::to_string(budget.orbit) + " iterates");
            }
            const ChildRecord P = first_child(comb, Q, budget, false);
            entry.q = Q;
            entry.p = P.child;
            entry.first_return = P.map_time;
            try {
                entry.central = comb.orbit_in(P.map_time, P.child);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::DepthUnavailable) throw;
            }
        } catch (const Error& e) {
            if (!soft(e) || (rec.entries.empty() && e.kind() == ErrorKind::NotRecurrent)) throw;
            rec.stop_kind = e.kind();
            rec.stop_reason = e.what();
            break;
        }
        if (i + 1 == m) {
            rec.entries.push_back(entry);
            break;
        }
        try {
            const ChildRecord fav = favorite_child(comb, Q, budget, &entry);
            rec.entries.push_back(entry);
            Q = fav.child;
        } catch (const Error& e) {
            if (!soft(e)) throw;
            rec.entries.push_back(entry);
            rec.stop_kind = e.kind();
            rec.stop_reason = e.what();
            break;
        }
    }
    return rec;
}

std::optional<std::string> check_nest(const Combinatorics& comb, const NestRecord& nest, const NestBudget& budget) {
    for (std::size_t i = 0; i < nest.entries.size(); ++i) {
        const NestEntry& e = nest.entries[i];
        const std::string at = "level " + std::to_string(i) + ": ";
        const ChildRecord P = first_child(comb, e.q, budget, false);
        if (!(P.child == e.p)) return at + "P is not the first child of Q";
        if (!(e.p.depth > e.q.depth && e.p.refines(e.q))) return at + "P not strictly inside Q";
        if (i + 1 < nest.entries.size() && !e.has_favorite) return at + "missing favorite child";
        if (!e.has_favorite) continue;
        const Label next = comb.critical_label(static_cast<unsigned>(e.q.depth + e.favorite_time));
        if (i + 1 < nest.entries.size() && !(nest.entries[i + 1].q == next)) return at + "next Q mismatch";
        if (!(next.depth > e.p.depth && next.refines(e.p))) return at + "next Q not strictly inside P";
        if (!is_child_time(comb, e.q, e.favorite_time)) return at + "favorite is not a child";
        ChildRecord fav{next, e.q, e.favorite_time, ChildKind::Favorite, {}};
        const ChildFlags f = classify_child(comb, fav, budget);
        if (!f.good) return at + "favorite child not good";
        if (f.spoiled) return at + "favorite child spoiled";
        if (f.first) return at + "favorite child is the first child";
        if (!f.favorite) return at + "favorite child is not the oldest good unspoiled child";
    }
    return std::nullopt;
}

}  // namespace puzzlekit
