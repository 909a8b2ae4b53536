#pragma once

#include "captree/labelling.hpp"
#include "captree/tree.hpp"

namespace captree {

/// Directed path of a label from its current position to its destination.
struct LabelPath {
    Label label = 0;
    VertexIdx origin = kNoVertex;
    std::vector<VertexIdx> vertices;  // origin .. destination, inclusive

    VertexIdx destination() const { return vertices.back(); }
    bool trivial() const { return vertices.size() <= 1; }
    int edge_count() const { return static_cast<int>(vertices.size()) - 1; }
    DirEdge edge(int i) const { return {vertices[i], vertices[i + 1]}; }
    bool contains_vertex(VertexIdx v) const {
        return std::find(vertices.begin(), vertices.end(), v) != vertices.end();
    }
    bool traverses(const DirEdge& e) const {
        for (int i = 0; i + 1 < static_cast<int>(vertices.size()); ++i)
            if (vertices[i] == e.from && vertices[i + 1] == e.to) return true;
        return false;
    }
};

inline LabelPath make_path(const CapacityTree& t, Label l, VertexIdx origin) {
    return LabelPath{l, origin, t.path_vertices(origin, t.dest(l))};
}

/// Suffix of the path starting at `at` (which must lie on the path).
inline LabelPath rebase_path(const LabelPath& p, VertexIdx at) {
    auto it = std::find(p.vertices.begin(), p.vertices.end(), at);
    if (it == p.vertices.end()) throw std::invalid_argument("rebase vertex not on path");
    return LabelPath{p.label, at, std::vector<VertexIdx>(it, p.vertices.end())};
}

/// Distance |i - j| between the parts holding the path's two endpoints at one
/// level of a coarsening.  Throws when an endpoint is not covered.
inline int coarsening_path_distance(const CapacityTree& t, const LabelPath& p,
                                    const Coarsening& c, int level) {
    if (level < 0 || level >= static_cast<int>(c.levels.size()))
        throw std::invalid_argument("no such coarsening level");
    const auto& lv = c.levels[level];
    int a = lv.part[p.vertices.front()];
    int b = lv.part[p.vertices.back()];
    if (a == 0 || b == 0) throw std::invalid_argument("path endpoint outside coarsening level");
    return std::abs(a - b);
}

namespace detail {

enum class Travel { MuFarther, NuFarther, None };

// First coarsening level at y where the two paths' endpoint-part distances
// differ decides; scanning stops once either path loses coverage.
inline Travel compare_part_distance(const CapacityTree& t, VertexIdx y, const LabelPath& pm,
                                    const LabelPath& pn) {
    const Coarsening& co = t.coarsening(y);
    for (const auto& lv : co.levels) {
        int mf = lv.part[pm.vertices.front()], mb = lv.part[pm.vertices.back()];
        int nf = lv.part[pn.vertices.front()], nb = lv.part[pn.vertices.back()];
        if (mf == 0 || mb == 0 || nf == 0 || nb == 0) break;
        int dm = std::abs(mf - mb), dn = std::abs(nf - nb);
        if (dm != dn) return dm > dn ? Travel::MuFarther : Travel::NuFarther;
    }
    return Travel::None;
}

inline std::optional<VertexIdx> next_after(const LabelPath& p, VertexIdx v) {
    for (size_t i = 0; i + 1 < p.vertices.size(); ++i)
        if (p.vertices[i] == v) return p.vertices[i + 1];
    return std::nullopt;
}

// Core travel-priority comparison.  `use_labels` disables the equal
// destination tie-break (used when comparing hypothetical edge traffic);
// `clauses_23_only` restricts to the part-distance and edge-priority clauses.
inline Travel compare_travel(const CapacityTree& t, const LabelPath& mu, const LabelPath& nu,
                             bool use_labels = true, bool clauses_23_only = false) {
    // Final shared directed edge, if any.
    std::optional<DirEdge> final_shared;
    for (int i = 0; i < mu.edge_count(); ++i)
        if (nu.traverses(mu.edge(i))) final_shared = mu.edge(i);

    VertexIdx x;
    if (final_shared) {
        x = final_shared->from;
    } else {
        std::set<VertexIdx> mv(mu.vertices.begin(), mu.vertices.end());
        std::vector<VertexIdx> shared;
        for (VertexIdx v : nu.vertices)
            if (mv.count(v)) shared.push_back(v);
        if (shared.empty()) throw std::invalid_argument("paths are disjoint");
        if (shared.size() != 1) return Travel::None;  // opposite traversal of a segment
        x = shared.front();
    }

    LabelPath pm = rebase_path(mu, x);
    LabelPath pn = rebase_path(nu, x);

    if (!clauses_23_only) {
        // (1) proper containment of the rebased paths.
        bool n_in_m = pn.vertices.size() < pm.vertices.size() &&
                      std::equal(pn.vertices.begin(), pn.vertices.end(), pm.vertices.begin());
        bool m_in_n = pm.vertices.size() < pn.vertices.size() &&
                      std::equal(pm.vertices.begin(), pm.vertices.end(), pn.vertices.begin());
        if (n_in_m) return Travel::MuFarther;
        if (m_in_n) return Travel::NuFarther;
    }

    if (final_shared) {
        VertexIdx y = final_shared->to;
        // (2) part distance with respect to the coarsening at y.
        Travel d = compare_part_distance(t, y, pm, pn);
        if (d != Travel::None) return d;
        // (3) priority of the onward edges out of y.
        auto mnext = next_after(pm, y), nnext = next_after(pn, y);
        if (mnext && nnext && *mnext != *nnext)
            return t.edge_priority_higher(y, {y, *mnext}, {y, *nnext}) ? Travel::MuFarther
                                                                       : Travel::NuFarther;
        if (clauses_23_only) return Travel::None;
        // (4) equal destinations: label values against the DFS direction of
        // the final shared edge.
        if (pm.destination() == pn.destination() && use_labels && mu.label != nu.label) {
            bool later_to_earlier = t.dfs_index(x) > t.dfs_index(y);
            bool mu_smaller = mu.label < nu.label;
            return (mu_smaller == later_to_earlier) ? Travel::MuFarther : Travel::NuFarther;
        }
        return Travel::None;
    }
    if (clauses_23_only) return Travel::None;
    // (5) priority of the outgoing edges at the unique shared vertex.
    auto mnext = next_after(pm, x), nnext = next_after(pn, x);
    if (mnext && nnext && *mnext != *nnext)
        return t.edge_priority_higher(x, {x, *mnext}, {x, *nnext}) ? Travel::MuFarther
                                                                   : Travel::NuFarther;
    return Travel::None;
}

}  // namespace detail

/// True when mu travels farther than nu from the last vertex their directed
/// paths share.  Throws when the paths are disjoint.
inline bool travels_farther(const CapacityTree& t, const LabelPath& mu, const LabelPath& nu) {
    return detail::compare_travel(t, mu, nu) == detail::Travel::MuFarther;
}

namespace detail {

// Reverse-prefix lexicographic order on channel index lists: at the first
// difference the smaller index wins; a proper prefix ranks AFTER its
// extensions, so the empty list is greatest (labels that terminate rank last).
inline bool key_less(const std::vector<int>& a, const std::vector<int>& b) {
    size_t m = std::min(a.size(), b.size());
    for (size_t i = 0; i < m; ++i)
        if (a[i] != b[i]) return a[i] < b[i];
    return a.size() > b.size();
}

inline std::vector<int> channel_key(const CapacityTree& t, VertexIdx w, const LabelPath& p,
                                    const std::set<int>& filled) {
    std::vector<int> key;
    for (int i = 0; i < p.edge_count(); ++i) {
        int idx = t.channel_index(w, p.edge(i));
        if (!filled.count(idx)) key.push_back(idx);
    }
    std::sort(key.begin(), key.end());
    return key;
}

}  // namespace detail

/// Orders labels at w by the channel-filling scheme: repeatedly take the
/// label whose path from w covers the least list of still-unfilled channels,
/// ties going to the label travelling farther, then to the smaller label.
/// Paths must start at w.
inline std::vector<Label> prioritize_labels(const CapacityTree& t, VertexIdx w,
                                            std::vector<LabelPath> paths) {
    for (const auto& p : paths)
        if (p.vertices.front() != w) throw std::invalid_argument("path does not start at w");
    std::vector<Label> order;
    std::set<int> filled;
    std::vector<char> taken(paths.size(), 0);
    while (order.size() < paths.size()) {
        int best = -1;
        std::vector<int> best_key;
        for (int i = 0; i < static_cast<int>(paths.size()); ++i) {
            if (taken[i]) continue;
            std::vector<int> key = detail::channel_key(t, w, paths[i], filled);
            if (best == -1) { best = i; best_key = std::move(key); continue; }
            if (detail::key_less(key, best_key)) { best = i; best_key = std::move(key); continue; }
            if (key == best_key) {
                auto cmp = detail::compare_travel(t, paths[i], paths[best]);
                if (cmp == detail::Travel::MuFarther ||
                    (cmp == detail::Travel::None && paths[i].label < paths[best].label)) {
                    best = i;
                    best_key = std::move(key);
                }
            }
        }
        taken[best] = 1;
        order.push_back(paths[best].label);
        for (int i = 0; i < paths[best].edge_count(); ++i)
            filled.insert(t.channel_index(w, paths[best].edge(i)));
    }
    return order;
}

enum class Rule { E1, E2, E3, V1, V2, V3, V4 };

inline const char* rule_name(Rule r) {
    switch (r) {
        case Rule::E1: return "E1";
        case Rule::E2: return "E2";
        case Rule::E3: return "E3";
        case Rule::V1: return "V1";
        case Rule::V2: return "V2";
        case Rule::V3: return "V3";
        case Rule::V4: return "V4";
    }
    return "?";
}

namespace detail {

// E2: simulate the channel-filling scheme at vj over the labels resident at
// vj plus the visiting label.  At the moment the first of the two labels
// under comparison would be chosen, compare their unfilled-channel keys
// directly; an exact tie falls through to the travel comparison and fires
// only when the visitor travels farther.
inline bool e2_fires(const CapacityTree& t, const Labelling& sigma, const LabelPath& pi_full,
                     Label lj, VertexIdx vj) {
    LabelPath pi = rebase_path(pi_full, vj);
    std::vector<LabelPath> pool;
    pool.push_back(pi);
    for (Label l : sigma.at(vj)) pool.push_back(make_path(t, l, vj));

    std::set<int> filled;
    std::vector<char> taken(pool.size(), 0);
    size_t remaining = pool.size();
    while (remaining > 0) {
        int best = -1;
        std::vector<int> best_key;
        for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
            if (taken[i]) continue;
            std::vector<int> key = channel_key(t, vj, pool[i], filled);
            if (best == -1) { best = i; best_key = std::move(key); continue; }
            if (key_less(key, best_key)) { best = i; best_key = std::move(key); continue; }
            if (key == best_key) {
                auto cmp = compare_travel(t, pool[i], pool[best]);
                if (cmp == Travel::MuFarther ||
                    (cmp == Travel::None && pool[i].label < pool[best].label)) {
                    best = i;
                    best_key = std::move(key);
                }
            }
        }
        if (pool[best].label == pi.label || pool[best].label == lj) {
            const LabelPath* pj = nullptr;
            for (const auto& p : pool)
                if (p.label == lj) pj = &p;
            std::vector<int> ki = channel_key(t, vj, pi, filled);
            std::vector<int> kj = channel_key(t, vj, *pj, filled);
            if (key_less(ki, kj)) return true;
            // A tie proper means the two labels cover the same channels
            // outright (equivalently, they share a destination); then the
            // travel comparison decides.
            static const std::set<int> kNothingFilled;
            if (channel_key(t, vj, pi, kNothingFilled) == channel_key(t, vj, *pj, kNothingFilled))
                return compare_travel(t, pi, *pj) == Travel::MuFarther;
            return false;
        }
        taken[best] = 1;
        --remaining;
        for (int i = 0; i < pool[best].edge_count(); ++i)
            filled.insert(t.channel_index(vj, pool[best].edge(i)));
    }
    return false;
}

// True when every capacity channel the label would use from its host is
// already taken by a higher-priority resident: the label holds a slot it is
// not needed for.
inline bool dominated_at_host(const CapacityTree& t, const Labelling& sigma, Label l, VertexIdx v) {
    LabelPath mine = make_path(t, l, v);
    if (mine.trivial()) return false;
    std::vector<LabelPath> pool;
    for (Label m : sigma.at(v)) pool.push_back(make_path(t, m, v));
    std::set<int> filled;
    std::vector<char> taken(pool.size(), 0);
    size_t remaining = pool.size();
    while (remaining > 0) {
        int best = -1;
        std::vector<int> best_key;
        for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
            if (taken[i]) continue;
            std::vector<int> key = channel_key(t, v, pool[i], filled);
            if (best == -1 || key_less(key, best_key)) { best = i; best_key = std::move(key); continue; }
            if (key == best_key) {
                auto cmp = compare_travel(t, pool[i], pool[best]);
                if (cmp == Travel::MuFarther ||
                    (cmp == Travel::None && pool[i].label < pool[best].label)) {
                    best = i;
                    best_key = channel_key(t, v, pool[i], filled);
                }
            }
        }
        if (pool[best].label == l) return best_key.empty();
        taken[best] = 1;
        --remaining;
        for (int i = 0; i < pool[best].edge_count(); ++i)
            filled.insert(t.channel_index(v, pool[best].edge(i)));
    }
    return false;
}

// True when the label, queued for transit through w, would be first in line
// for a still-unfilled channel there against w's residents.
inline bool first_in_line_at(const CapacityTree& t, const Labelling& sigma, Label l, VertexIdx w,
                             const LabelPath& full_path) {
    LabelPath mine = rebase_path(full_path, w);
    if (mine.trivial()) return false;
    std::vector<LabelPath> pool{mine};
    for (Label m : sigma.at(w))
        if (m != l) pool.push_back(make_path(t, m, w));
    std::set<int> filled;
    std::vector<char> taken(pool.size(), 0);
    size_t remaining = pool.size();
    while (remaining > 0) {
        int best = -1;
        std::vector<int> best_key;
        for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
            if (taken[i]) continue;
            std::vector<int> key = channel_key(t, w, pool[i], filled);
            if (best == -1 || key_less(key, best_key)) { best = i; best_key = std::move(key); continue; }
            if (key == best_key) {
                auto cmp = compare_travel(t, pool[i], pool[best]);
                if (cmp == Travel::MuFarther ||
                    (cmp == Travel::None && pool[i].label < pool[best].label)) {
                    best = i;
                    best_key = channel_key(t, w, pool[i], filled);
                }
            }
        }
        if (pool[best].label == l) return !best_key.empty();
        taken[best] = 1;
        --remaining;
        for (int i = 0; i < pool[best].edge_count(); ++i)
            filled.insert(t.channel_index(w, pool[best].edge(i)));
    }
    return false;
}

// Both destinations in the same part at every level of the coarsening at w
// for as long as both are covered.
inline bool same_part_all_levels(const CapacityTree& t, VertexIdx w, VertexIdx a, VertexIdx b) {
    const Coarsening& co = t.coarsening(w);
    for (const auto& lv : co.levels) {
        bool ca = lv.part[a] != 0, cb = lv.part[b] != 0;
        if (!ca && !cb) break;
        if (ca != cb) return false;
        if (lv.part[a] != lv.part[b]) return false;
        if (lv.part[a] != 2) break;  // peeled off together; no deeper level covers them
    }
    return true;
}

}  // namespace detail

/// First rule (E1, E2, E3, V1, V2, V3, V4) making the ordered label pair
/// (li at its host, lj at its host) a label inversion pair, if any.
inline std::optional<Rule> label_pair_rule(const Labelling& sigma, Label li, Label lj) {
    const CapacityTree& t = sigma.tree();
    auto hvi = sigma.host(li), hvj = sigma.host(lj);
    if (!hvi || !hvj) throw std::invalid_argument("label not assigned");
    VertexIdx vi = *hvi, vj = *hvj;
    if (vi == vj) return std::nullopt;
    LabelPath pi = make_path(t, li, vi);
    LabelPath pj = make_path(t, lj, vj);

    // E1: same edge traversed in opposite directions.
    for (int i = 0; i < pi.edge_count(); ++i)
        if (pj.traverses(pi.edge(i).reversed())) return Rule::E1;

    // E2: the visiting label beats a resident for the resident's channels.
    if (pi.contains_vertex(vj) && detail::e2_fires(t, sigma, pi, lj, vj)) return Rule::E2;

    // E3: a shared directed edge not emanating from vj; the label nearer to
    // the end of the shared stretch must not be the one travelling farther
    // beyond it.  Equidistant hosts are compared by the travel priority of
    // their reversed approach paths.
    {
        std::vector<DirEdge> shared;
        for (int i = 0; i < pi.edge_count(); ++i)
            if (pj.traverses(pi.edge(i))) shared.push_back(pi.edge(i));
        bool has_non_vj = false;
        for (const DirEdge& e : shared)
            if (e.from != vj) has_non_vj = true;
        if (!shared.empty() && has_non_vj) {
            DirEdge last = shared.back();
            VertexIdx y = last.to;
            int dj_y = t.distance(vj, y), di_y = t.distance(vi, y);
            bool j_closer = dj_y < di_y;
            if (dj_y == di_y && vi != vj) {
                LabelPath ri{li, y, t.path_vertices(y, vi)};
                LabelPath rj{lj, y, t.path_vertices(y, vj)};
                j_closer = detail::compare_travel(t, ri, rj, false) == detail::Travel::MuFarther;
            }
            if (j_closer && detail::compare_travel(t, pi, pj) == detail::Travel::MuFarther)
                return Rule::E3;
        }
    }

    // V rules require the paths to meet in exactly one vertex and share no
    // edge in either direction.
    {
        bool share_undirected = false;
        for (int i = 0; i < pi.edge_count() && !share_undirected; ++i)
            if (pj.traverses(pi.edge(i)) || pj.traverses(pi.edge(i).reversed()))
                share_undirected = true;
        if (share_undirected) return std::nullopt;
        std::set<VertexIdx> piv(pi.vertices.begin(), pi.vertices.end());
        std::vector<VertexIdx> shared;
        for (VertexIdx v : pj.vertices)
            if (piv.count(v)) shared.push_back(v);
        if (shared.size() != 1) return std::nullopt;
        VertexIdx w = shared.front();
        VertexIdx di = pi.destination(), dj = pj.destination();

        if (t.is_ancestor(w, vi) && t.is_ancestor(w, vj)) {
            const Coarsening& co = t.coarsening(w);
            for (const auto& lv : co.levels) {
                int r = lv.part[vi], s = lv.part[vj], dr = lv.part[di], ds = lv.part[dj];
                if (r == 0 || s == 0) break;
                // V1: positions ordered one way, destinations the other.
                if (dr != 0 && ds != 0 && r < s && dr > ds) return Rule::V1;
            }
            // V2: positions separated, destinations never separated by the
            // coarsening, with the second label heading strictly above w and
            // the first at or below.  The second label must be out of place
            // with respect to w: a redundant occupant when it sits at w, or
            // first in line for an unfilled channel when it waits below.
            bool positions_split = false;
            for (const auto& lv : co.levels) {
                if (lv.part[vi] == 0 || lv.part[vj] == 0) break;
                if (lv.part[vi] < lv.part[vj]) { positions_split = true; break; }
            }
            if (positions_split && t.is_strict_ancestor(dj, w) && t.is_ancestor(w, di) &&
                detail::same_part_all_levels(t, w, di, dj)) {
                bool out_of_place =
                    vj != w || detail::dominated_at_host(t, sigma, lj, vj);
                if (out_of_place) return Rule::V2;
            }
        }

        // V3: a label below, home-bound to the crossing vertex, against a
        // label above it destined past that vertex.  When the crossing
        // vertex is the upper host itself, the upper label must additionally
        // be a redundant occupant there (all its channels taken by
        // higher-priority residents); a redundant occupant also yields when
        // it is headed out above w.
        if (t.is_strict_ancestor(vi, vj) && t.is_ancestor(w, dj)) {
            if (w != vi) {
                if (dj == w && t.is_ancestor(w, di) && t.dfs_index(dj) < t.dfs_index(di))
                    return Rule::V3;
            } else if (detail::dominated_at_host(t, sigma, li, vi)) {
                if (!t.is_ancestor(w, di) || t.dfs_index(dj) < t.dfs_index(di)) return Rule::V3;
            }
        }

        // V4: equal destinations with the smaller label sitting later.
        if (di == dj && li < lj && t.dfs_index(vi) > t.dfs_index(vj)) return Rule::V4;
    }
    return std::nullopt;
}

struct LabelPairRecord {
    Label li = 0, lj = 0;
    VertexIdx vi = kNoVertex, vj = kNoVertex;
    Rule rule = Rule::E1;
};

struct InversionReport {
    std::vector<LabelPairRecord> label_pairs;
    std::set<std::pair<VertexIdx, VertexIdx>> node_pairs;      // normalized by DFS index
    std::set<std::pair<VertexIdx, VertexIdx>> neighbor_pairs;  // subset joined by a tree edge
};

inline std::pair<VertexIdx, VertexIdx> normalize_pair(const CapacityTree& t, VertexIdx a, VertexIdx b) {
    if (t.dfs_index(a) > t.dfs_index(b)) std::swap(a, b);
    return {a, b};
}

/// All label inversion pairs of the labelling (restricted to its assigned
/// vertices) together with their host-vertex projections.
inline InversionReport label_inversions(const Labelling& sigma) {
    const CapacityTree& t = sigma.tree();
    InversionReport rep;
    std::vector<Label> labels = sigma.all_labels();
    for (Label li : labels) {
        for (Label lj : labels) {
            if (li == lj) continue;
            auto rule = label_pair_rule(sigma, li, lj);
            if (!rule) continue;
            VertexIdx vi = *sigma.host(li), vj = *sigma.host(lj);
            rep.label_pairs.push_back({li, lj, vi, vj, *rule});
            auto np = normalize_pair(t, vi, vj);
            rep.node_pairs.insert(np);
            if (t.adjacent(vi, vj)) rep.neighbor_pairs.insert(np);
        }
    }
    return rep;
}

inline std::set<std::pair<VertexIdx, VertexIdx>> node_inversions(const Labelling& sigma) {
    return label_inversions(sigma).node_pairs;
}

/// Is the specific vertex pair inverted (some label pair between the two
/// hosts fires a rule, in either orientation)?
inline bool pair_inverted(const Labelling& sigma, VertexIdx u, VertexIdx v) {
    for (Label a : sigma.at(u))
        for (Label b : sigma.at(v)) {
            if (label_pair_rule(sigma, a, b)) return true;
            if (label_pair_rule(sigma, b, a)) return true;
        }
    return false;
}

/// True when no vertex pair inside `verts` is inverted.
inline bool inversion_free_on(const Labelling& sigma, const std::vector<VertexIdx>& verts) {
    for (size_t i = 0; i < verts.size(); ++i)
        for (size_t j = i + 1; j < verts.size(); ++j)
            if (pair_inverted(sigma, verts[i], verts[j])) return false;
    return true;
}

/// The unique reassignment of the labels jointly held at vi and vj that
/// leaves the pair (vi, vj) inversion-free.  Labels are first split along
/// the vi-vj path by the attachment point of their destination; only the
/// labels attached at the pivot vertex need a rule-driven tie-break, found by
/// checking the few candidate splits.  Anything but exactly one solution is
/// an internal error.
inline Labelling unique_redistribution(const Labelling& sigma, VertexIdx vi, VertexIdx vj) {
    const CapacityTree& t = sigma.tree();
    if (vi == vj) throw std::invalid_argument("redistribution needs two distinct vertices");
    std::vector<Label> pool = sigma.at(vi);
    pool.insert(pool.end(), sigma.at(vj).begin(), sigma.at(vj).end());
    std::vector<VertexIdx> P = t.path_vertices(vi, vj);
    std::map<VertexIdx, int> pos_on_path;
    for (int i = 0; i < static_cast<int>(P.size()); ++i) pos_on_path[P[i]] = i;

    auto attach = [&](Label l) {
        VertexIdx d = t.dest(l);
        int best = -1, best_dist = -1;
        for (int i = 0; i < static_cast<int>(P.size()); ++i) {
            int dd = t.distance(P[i], d);
            if (best == -1 || dd < best_dist) { best = i; best_dist = dd; }
        }
        return best;
    };

    std::vector<std::pair<int, Label>> tagged;
    for (Label l : pool) tagged.push_back({attach(l), l});
    std::sort(tagged.begin(), tagged.end());

    int ni = t.capacity(vi);
    auto apply = [&](const std::vector<Label>& at_i) {
        std::set<Label> si(at_i.begin(), at_i.end());
        std::vector<Label> at_j;
        for (Label l : pool)
            if (!si.count(l)) at_j.push_back(l);
        Labelling out = sigma;
        out.unassign(vi);
        out.unassign(vj);
        out.assign(vi, at_i);
        out.assign(vj, at_j);
        return out;
    };

    if (ni == 0 || ni == static_cast<int>(pool.size())) {
        std::vector<Label> at_i;
        for (int k = 0; k < ni; ++k) at_i.push_back(tagged[k].second);
        Labelling out = apply(at_i);
        if (pair_inverted(out, vi, vj))
            throw RuleConsistencyError("forced redistribution is inverted");
        return out;
    }

    int pivot = tagged[ni - 1].first;
    std::vector<Label> before, at_pivot;
    for (auto [a, l] : tagged) {
        if (a < pivot) before.push_back(l);
        else if (a == pivot) at_pivot.push_back(l);
    }
    int r = ni - static_cast<int>(before.size());

    std::optional<Labelling> found;
    int found_count = 0;
    // All ways to pick r of the pivot-attached labels for vi.
    std::vector<int> idx(r);
    for (int i = 0; i < r; ++i) idx[i] = i;
    int tcount = static_cast<int>(at_pivot.size());
    while (true) {
        std::vector<Label> at_i = before;
        for (int i : idx) at_i.push_back(at_pivot[i]);
        Labelling cand = apply(at_i);
        if (!pair_inverted(cand, vi, vj)) {
            ++found_count;
            found = std::move(cand);
        }
        int j = r - 1;
        while (j >= 0 && idx[j] == tcount - r + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int l = j + 1; l < r; ++l) idx[l] = idx[l - 1] + 1;
    }
    if (found_count != 1)
        throw RuleConsistencyError("redistribution between " + t.name(vi) + " and " + t.name(vj) +
                                   " has " + std::to_string(found_count) +
                                   " inversion-free splits, expected exactly 1");
    return *found;
}

// ---------------------------------------------------------------------------
// Base labelling: the unique inversion-free labelling of a component with a
// proscribed label set.

namespace detail {

// Anchor of a label relative to a component: its destination when inside,
// otherwise the component vertex its exit path leaves from.
inline VertexIdx anchor_in(const CapacityTree& t, const std::set<VertexIdx>& comp, Label l) {
    VertexIdx d = t.dest(l);
    if (comp.count(d)) return d;
    VertexIdx best = kNoVertex;
    int best_dist = -1;
    for (VertexIdx v : comp) {
        int dd = t.distance(v, d);
        if (best == kNoVertex || dd < best_dist) { best = v; best_dist = dd; }
    }
    return best;
}

struct BaseSearch {
    const CapacityTree& t;
    bool all_sink_orders;
    long long branch_budget = 1 << 20;

    void assemble(const std::map<VertexIdx, std::vector<Label>>& parts, Labelling& into) {
        for (const auto& [v, ls] : parts) into.assign(v, ls);
    }

    // Recursively produce every assignment the construction admits; the
    // caller filters for inversion-freeness and uniqueness.
    void run(const std::vector<VertexIdx>& comp, const std::vector<Label>& labels,
             std::map<VertexIdx, std::vector<Label>> acc,
             std::vector<std::map<VertexIdx, std::vector<Label>>>& out) {
        if (--branch_budget < 0) throw std::runtime_error("base labelling search budget exceeded");
        if (comp.size() == 1) {
            acc[comp.front()] = labels;
            out.push_back(std::move(acc));
            return;
        }
        std::set<VertexIdx> cset(comp.begin(), comp.end());
        std::map<VertexIdx, std::vector<Label>> anchored;
        for (Label l : labels) anchored[anchor_in(t, cset, l)].push_back(l);

        // Flow across each internal edge: anchored minus capacity on the
        // child side.  Zero-flow edges split the component into balanced
        // pieces that are labelled independently.
        std::vector<VertexIdx> zero_flow, internal_edges;
        for (VertexIdx v : comp) {
            VertexIdx p = t.parent(v);
            if (p == kNoVertex || !cset.count(p)) continue;
            internal_edges.push_back(v);
            int anchored_side = 0, cap_side = 0;
            for (VertexIdx u : t.subtree(v)) {
                if (!cset.count(u)) continue;
                cap_side += t.capacity(u);
                auto it = anchored.find(u);
                if (it != anchored.end()) anchored_side += static_cast<int>(it->second.size());
            }
            if (anchored_side == cap_side) zero_flow.push_back(v);
        }

        if (!zero_flow.empty()) {
            // Split at all zero-flow edges and recurse per piece.
            std::set<VertexIdx> zf(zero_flow.begin(), zero_flow.end());
            std::map<VertexIdx, int> piece_of;
            std::vector<std::vector<VertexIdx>> pieces;
            for (VertexIdx v : comp) {
                if (piece_of.count(v)) continue;
                int id = static_cast<int>(pieces.size());
                pieces.emplace_back();
                std::vector<VertexIdx> stack{v};
                piece_of[v] = id;
                while (!stack.empty()) {
                    VertexIdx u = stack.back();
                    stack.pop_back();
                    pieces[id].push_back(u);
                    for (VertexIdx c : t.children(u))
                        if (cset.count(c) && !zf.count(c) && !piece_of.count(c)) {
                            piece_of[c] = id;
                            stack.push_back(c);
                        }
                    VertexIdx p = t.parent(u);
                    if (p != kNoVertex && cset.count(p) && !zf.count(u) && !piece_of.count(p)) {
                        piece_of[p] = id;
                        stack.push_back(p);
                    }
                }
            }
            std::vector<std::vector<Label>> piece_labels(pieces.size());
            for (const auto& [v, ls] : anchored)
                for (Label l : ls) piece_labels[piece_of[v]].push_back(l);
            // Cartesian product of the per-piece candidate sets.
            std::vector<std::vector<std::map<VertexIdx, std::vector<Label>>>> cands(pieces.size());
            for (size_t i = 0; i < pieces.size(); ++i) {
                std::sort(pieces[i].begin(), pieces[i].end());
                std::sort(piece_labels[i].begin(), piece_labels[i].end());
                std::vector<std::map<VertexIdx, std::vector<Label>>> sub;
                run(pieces[i], piece_labels[i], {}, sub);
                // Prune: a piece assignment inverted inside the piece can
                // never extend to an inversion-free whole.
                for (auto& m : sub) {
                    Labelling l(t);
                    for (const auto& [v, ls] : m) l.assign(v, ls);
                    if (inversion_free_on(l, pieces[i])) cands[i].push_back(std::move(m));
                }
                if (cands[i].empty()) return;
            }
            std::vector<size_t> pick(pieces.size(), 0);
            while (true) {
                auto merged = acc;
                for (size_t i = 0; i < pieces.size(); ++i)
                    for (const auto& [v, ls] : cands[i][pick[i]]) merged[v] = ls;
                out.push_back(merged);
                size_t i = 0;
                while (i < pieces.size() && ++pick[i] == cands[i].size()) pick[i++] = 0;
                if (i == pieces.size()) break;
            }
            return;
        }

        // No zero-flow edge: find the sinks of the excess-capacity
        // orientation and saturate one.
        std::vector<VertexIdx> sinks;
        for (VertexIdx v : comp) {
            bool sink = true;
            for (VertexIdx e : internal_edges) {
                // Edge e = (parent(e), e); the side containing v must be the
                // anchored-heavy one for every incident edge of v.
                bool v_on_child_side = false;
                for (VertexIdx u : t.subtree(e))
                    if (u == v) { v_on_child_side = true; break; }
                if (e != v && t.parent(e) != v) continue;
                int anchored_child = 0, cap_child = 0;
                for (VertexIdx u : t.subtree(e)) {
                    if (!cset.count(u)) continue;
                    cap_child += t.capacity(u);
                    auto it = anchored.find(u);
                    if (it != anchored.end()) anchored_child += static_cast<int>(it->second.size());
                }
                bool child_heavy = anchored_child > cap_child;
                if (v_on_child_side != child_heavy) { sink = false; break; }
            }
            if (sink) sinks.push_back(v);
        }
        if (sinks.empty()) throw RuleConsistencyError("component has no sink");
        std::sort(sinks.begin(), sinks.end(),
                  [&](VertexIdx a, VertexIdx b) { return t.dfs_index(a) < t.dfs_index(b); });
        if (!all_sink_orders) sinks.resize(1);

        for (VertexIdx v : sinks) saturate_sink(comp, labels, cset, anchored, v, acc, out);
    }

    void saturate_sink(const std::vector<VertexIdx>& comp, const std::vector<Label>& labels,
                       const std::set<VertexIdx>& cset,
                       const std::map<VertexIdx, std::vector<Label>>& anchored, VertexIdx v,
                       std::map<VertexIdx, std::vector<Label>> acc,
                       std::vector<std::vector<std::map<VertexIdx, std::vector<Label>>>::value_type>& out) {
        std::vector<Label> pool;
        if (auto it = anchored.find(v); it != anchored.end()) pool = it->second;
        if (static_cast<int>(pool.size()) < t.capacity(v))
            throw RuleConsistencyError("sink cannot be saturated");

        std::vector<LabelPath> paths;
        for (Label l : pool) paths.push_back(make_path(t, l, v));
        std::vector<Label> order = prioritize_labels(t, v, paths);

        auto first_hop = [&](Label l) -> std::optional<VertexIdx> {
            LabelPath p = make_path(t, l, v);
            if (p.trivial()) return std::nullopt;
            return p.vertices[1];
        };

        std::vector<Label> tops;
        std::set<Label> tops_set;
        // Top label per outward channel first.
        std::set<VertexIdx> channels_done;
        for (Label l : order) {
            auto hop = first_hop(l);
            if (!hop || cset.count(*hop)) continue;  // stays put or heads inside
            if (channels_done.count(*hop)) continue;
            if (static_cast<int>(tops.size()) == t.capacity(v)) break;
            channels_done.insert(*hop);
            tops.push_back(l);
            tops_set.insert(l);
        }
        // Remaining outbound labels in scheme order; how many of them join
        // the channel tops is a choice point resolved by the final
        // inversion-freeness filter.
        std::vector<Label> extra_outbound;
        for (Label l : order) {
            if (tops_set.count(l)) continue;
            auto hop = first_hop(l);
            if (!hop || cset.count(*hop)) continue;
            extra_outbound.push_back(l);
        }
        int max_extra = std::min<int>(static_cast<int>(extra_outbound.size()),
                                      t.capacity(v) - static_cast<int>(tops.size()));
        for (int extra = max_extra; extra >= 0; --extra)
            fill_and_split(comp, labels, cset, anchored, v, tops, extra_outbound, extra, acc, out);
    }

    void fill_and_split(const std::vector<VertexIdx>& comp, const std::vector<Label>& labels,
                        const std::set<VertexIdx>& cset,
                        const std::map<VertexIdx, std::vector<Label>>& anchored, VertexIdx v,
                        const std::vector<Label>& tops, const std::vector<Label>& extra_outbound,
                        int extra, std::map<VertexIdx, std::vector<Label>> acc,
                        std::vector<std::map<VertexIdx, std::vector<Label>>>& out) {
        std::vector<Label> pool;
        if (auto it = anchored.find(v); it != anchored.end()) pool = it->second;

        std::vector<Label> chosen = tops;
        std::set<Label> chosen_set(tops.begin(), tops.end());
        for (int i = 0; i < extra; ++i) {
            chosen.push_back(extra_outbound[i]);
            chosen_set.insert(extra_outbound[i]);
        }
        int vacancies = t.capacity(v) - static_cast<int>(chosen.size());

        std::vector<Label> destined;  // labels with destination v, unplaced
        for (Label l : pool)
            if (t.dest(l) == v && !chosen_set.count(l)) destined.push_back(l);
        if (static_cast<int>(destined.size()) < vacancies) return;  // branch infeasible

        // Remaining component pieces after removing v, with their quotas of
        // v's excess labels.
        std::vector<std::vector<VertexIdx>> pieces;
        {
            std::set<VertexIdx> rest = cset;
            rest.erase(v);
            std::set<VertexIdx> seen;
            for (VertexIdx s : rest) {
                if (seen.count(s)) continue;
                pieces.emplace_back();
                std::vector<VertexIdx> stack{s};
                seen.insert(s);
                while (!stack.empty()) {
                    VertexIdx u = stack.back();
                    stack.pop_back();
                    pieces.back().push_back(u);
                    for (VertexIdx c : t.children(u))
                        if (rest.count(c) && !seen.count(c)) { seen.insert(c); stack.push_back(c); }
                    VertexIdx p = t.parent(u);
                    if (p != kNoVertex && rest.count(p) && !seen.count(p)) {
                        seen.insert(p);
                        stack.push_back(p);
                    }
                }
                std::sort(pieces.back().begin(), pieces.back().end());
            }
        }

        // Enumerate the admissible fills of the remaining vacancies with
        // destination-v labels, then the admissible quota-respecting splits
        // of the excess over the pieces; every choice is completed
        // recursively and judged by the inversion-freeness filter upstream.
        std::vector<int> fill_idx(vacancies);
        for (int i = 0; i < vacancies; ++i) fill_idx[i] = i;
        int dcount = static_cast<int>(destined.size());
        bool more_fill = true;
        while (more_fill) {
            std::vector<Label> at_v = chosen;
            std::set<Label> at_v_set = chosen_set;
            for (int i : fill_idx) {
                at_v.push_back(destined[i]);
                at_v_set.insert(destined[i]);
            }
            std::vector<Label> excess;
            for (Label l : pool)
                if (!at_v_set.count(l)) excess.push_back(l);

            // Quota per piece: capacity minus labels already anchored there.
            std::vector<std::vector<Label>> piece_base(pieces.size());
            std::vector<int> quota(pieces.size());
            for (size_t i = 0; i < pieces.size(); ++i) {
                int cap = 0;
                for (VertexIdx u : pieces[i]) cap += t.capacity(u);
                int have = 0;
                for (VertexIdx u : pieces[i])
                    if (auto it = anchored.find(u); it != anchored.end()) {
                        have += static_cast<int>(it->second.size());
                        for (Label l : it->second) piece_base[i].push_back(l);
                    }
                quota[i] = cap - have;
                if (quota[i] < 0) throw RuleConsistencyError("negative quota after sink removal");
            }
            // Distribute the excess labels over the pieces respecting quotas.
            std::vector<int> assignment(excess.size(), 0);
            std::function<void(size_t, std::vector<int>&)> distribute = [&](size_t k,
                                                                            std::vector<int>& left) {
                if (k == excess.size()) {
                    auto acc2 = acc;
                    acc2[v] = at_v;
                    std::sort(acc2[v].begin(), acc2[v].end());
                    // Recurse on every piece with its final label set.
                    std::vector<std::vector<std::map<VertexIdx, std::vector<Label>>>> cands(
                        pieces.size());
                    for (size_t i = 0; i < pieces.size(); ++i) {
                        std::vector<Label> ls = piece_base[i];
                        for (size_t e = 0; e < excess.size(); ++e)
                            if (assignment[e] == static_cast<int>(i)) ls.push_back(excess[e]);
                        std::sort(ls.begin(), ls.end());
                        std::vector<std::map<VertexIdx, std::vector<Label>>> sub;
                        run(pieces[i], ls, {}, sub);
                        for (auto& m : sub) {
                            Labelling l(t);
                            for (const auto& [u, lls] : m) l.assign(u, lls);
                            if (inversion_free_on(l, pieces[i])) cands[i].push_back(std::move(m));
                        }
                        if (cands[i].empty()) return;
                    }
                    std::vector<size_t> pick(pieces.size(), 0);
                    while (true) {
                        auto merged = acc2;
                        for (size_t i = 0; i < pieces.size(); ++i)
                            for (const auto& [u, lls] : cands[i][pick[i]]) merged[u] = lls;
                        out.push_back(merged);
                        size_t i = 0;
                        while (i < pieces.size() && ++pick[i] == cands[i].size()) pick[i++] = 0;
                        if (i == pieces.size()) break;
                    }
                    return;
                }
                for (size_t i = 0; i < pieces.size(); ++i) {
                    if (left[i] == 0) continue;
                    --left[i];
                    assignment[k] = static_cast<int>(i);
                    distribute(k + 1, left);
                    ++left[i];
                }
            };
            std::vector<int> left = quota;
            int total_quota = 0;
            for (int q : quota) total_quota += q;
            if (total_quota != static_cast<int>(excess.size()))
                throw RuleConsistencyError("excess does not match quotas");
            distribute(0, left);

            // next combination of destined labels
            int j = vacancies - 1;
            while (j >= 0 && fill_idx[j] == dcount - vacancies + j) --j;
            if (j < 0) more_fill = false;
            else {
                ++fill_idx[j];
                for (int l = j + 1; l < vacancies; ++l) fill_idx[l] = fill_idx[l - 1] + 1;
            }
            if (vacancies == 0) more_fill = false;
        }
    }
};

}  // namespace detail

/// The unique inversion-free labelling of a connected component with a
/// proscribed label set.  Follows the split / saturate-sinks construction,
/// resolving its "in the unique inversion-free way" choice points by bounded
/// search; anything but exactly one surviving assignment is an error.
inline Labelling base_labelling(const CapacityTree& t, std::vector<VertexIdx> comp,
                                std::vector<Label> labels, bool all_sink_orders = false) {
    std::sort(comp.begin(), comp.end());
    comp.erase(std::unique(comp.begin(), comp.end()), comp.end());
    int cap = 0;
    for (VertexIdx v : comp) cap += t.capacity(v);
    if (cap != static_cast<int>(labels.size()))
        throw std::invalid_argument("label set size does not match component capacity");
    std::sort(labels.begin(), labels.end());

    detail::BaseSearch search{t, all_sink_orders};
    std::vector<std::map<VertexIdx, std::vector<Label>>> results;
    search.run(comp, labels, {}, results);

    std::vector<Labelling> free;
    std::set<std::string> seen;
    for (const auto& m : results) {
        Labelling l(t);
        for (const auto& [v, ls] : m) l.assign(v, ls);
        if (!inversion_free_on(l, comp)) continue;
        if (seen.insert(l.key()).second) free.push_back(std::move(l));
    }
    if (free.size() != 1)
        throw RuleConsistencyError("base labelling construction found " +
                                   std::to_string(free.size()) +
                                   " inversion-free assignments, expected exactly 1");
    return free.front();
}

/// Convenience: base labelling of the whole tree with all labels.
inline Labelling base_labelling(const CapacityTree& t) {
    std::vector<Label> labels(t.total_capacity());
    for (int i = 0; i < t.total_capacity(); ++i) labels[i] = i + 1;
    return base_labelling(t, t.dfs_order(), labels);
}

/// Renders an inversion report in the line format used by the CLI.
inline std::string render_report(const CapacityTree& t, const InversionReport& rep) {
    std::ostringstream out;
    for (const auto& p : rep.label_pairs)
        out << "LABELPAIR " << p.li << "@" << t.name(p.vi) << " " << p.lj << "@" << t.name(p.vj)
            << " rule=" << rule_name(p.rule) << "\n";
    for (const auto& [a, b] : rep.node_pairs)
        out << "NODEPAIR " << t.name(a) << " " << t.name(b)
            << " neighbor=" << (t.adjacent(a, b) ? "true" : "false") << "\n";
    return out.str();
}

}  // namespace captree
