#pragma once

#include <random>

#include "captree/weak_order.hpp"

namespace captree {

/// Face of the labelled-forest complex: a set of deleted edges together with
/// a label set per remaining component.  Components are keyed by their
/// DFS-smallest member vertex.
struct Face {
    std::vector<VertexIdx> cut;                      // child endpoints, DFS order
    std::map<VertexIdx, std::vector<Label>> labels;  // component rep -> sorted labels

    int dim() const { return static_cast<int>(cut.size()) - 1; }

    std::string key() const {
        std::ostringstream out;
        out << "cut:";
        for (size_t i = 0; i < cut.size(); ++i) out << (i ? "," : "") << cut[i];
        for (const auto& [rep, ls] : labels) {
            out << "|" << rep << ":";
            for (size_t i = 0; i < ls.size(); ++i) out << (i ? "," : "") << ls[i];
        }
        return out.str();
    }
    friend bool operator==(const Face&, const Face&) = default;
    friend bool operator<(const Face& a, const Face& b) {
        if (a.cut != b.cut) return a.cut < b.cut;
        return a.labels < b.labels;
    }
};

namespace detail {

// Component representative (smallest DFS member) for every vertex, after
// deleting the cut edges.
inline std::vector<VertexIdx> component_reps(const CapacityTree& t,
                                             const std::vector<VertexIdx>& cut) {
    std::set<VertexIdx> cutset(cut.begin(), cut.end());
    std::vector<VertexIdx> rep(t.size(), kNoVertex);
    for (VertexIdx v : t.dfs_order()) {
        if (v == t.root() || cutset.count(v))
            rep[v] = v;  // starts a new component
        else
            rep[v] = rep[t.parent(v)];
    }
    return rep;
}

}  // namespace detail

/// Face with the given cut whose component label sets are induced from a
/// full labelling.
inline Face face_from_labelling(const CapacityTree& t, const std::vector<VertexIdx>& cut,
                                const Labelling& sigma) {
    Face f;
    f.cut = EdgeSet(t, cut).members();
    auto rep = detail::component_reps(t, f.cut);
    for (VertexIdx v = 0; v < t.size(); ++v) {
        auto& ls = f.labels[rep[v]];
        ls.insert(ls.end(), sigma.at(v).begin(), sigma.at(v).end());
    }
    for (auto& [r, ls] : f.labels) std::sort(ls.begin(), ls.end());
    return f;
}

/// Subface obtained by keeping only a subset of the cut (merging the other
/// components back together).
inline Face subface(const CapacityTree& t, const Face& f, const std::vector<VertexIdx>& subcut) {
    Face g;
    g.cut = subcut;
    auto rep = detail::component_reps(t, subcut);
    for (const auto& [r, ls] : f.labels) {
        auto& gl = g.labels[rep[r]];
        gl.insert(gl.end(), ls.begin(), ls.end());
    }
    for (auto& [r, ls] : g.labels) std::sort(ls.begin(), ls.end());
    return g;
}

/// Is g a face of the closed facet f?
inline bool face_leq(const CapacityTree& t, const Face& g, const Face& f) {
    std::set<VertexIdx> fcut(f.cut.begin(), f.cut.end());
    for (VertexIdx e : g.cut)
        if (!fcut.count(e)) return false;
    return subface(t, f, g.cut) == g;
}

/// All faces with the given cut size (every cut, every label distribution).
inline std::vector<Face> enumerate_faces(const CapacityTree& t, int cut_size,
                                         long long bound = 200000) {
    const auto& edges = t.edges();
    int m = static_cast<int>(edges.size());
    if (cut_size < 1 || cut_size > m) return {};
    std::vector<Face> out;
    std::vector<int> idx(cut_size);
    for (int i = 0; i < cut_size; ++i) idx[i] = i;
    while (true) {
        std::vector<VertexIdx> cut;
        for (int i : idx) cut.push_back(edges[i]);
        auto rep = detail::component_reps(t, cut);
        // Component member lists in DFS-representative order.
        std::map<VertexIdx, int> caps;
        for (VertexIdx v = 0; v < t.size(); ++v) caps[rep[v]] += t.capacity(v);
        std::vector<std::pair<VertexIdx, int>> comps(caps.begin(), caps.end());
        // Distribute labels 1..N over the components.
        std::vector<Label> pool(t.total_capacity());
        for (int i = 0; i < t.total_capacity(); ++i) pool[i] = i + 1;
        std::function<void(size_t, std::vector<Label>&, Face&)> rec =
            [&](size_t ci, std::vector<Label>& rest, Face& acc) {
                if (ci == comps.size()) {
                    if (static_cast<long long>(out.size()) >= bound)
                        throw std::runtime_error("face enumeration bound exceeded");
                    out.push_back(acc);
                    return;
                }
                auto [rep_v, k] = comps[ci];
                std::vector<int> pick(k);
                for (int i = 0; i < k; ++i) pick[i] = i;
                if (k == 0) {
                    acc.labels[rep_v] = {};
                    rec(ci + 1, rest, acc);
                    acc.labels.erase(rep_v);
                    return;
                }
                while (true) {
                    std::vector<Label> chosen, remaining;
                    std::set<int> used(pick.begin(), pick.end());
                    for (int i = 0; i < static_cast<int>(rest.size()); ++i)
                        (used.count(i) ? chosen : remaining).push_back(rest[i]);
                    acc.labels[rep_v] = chosen;
                    rec(ci + 1, remaining, acc);
                    acc.labels.erase(rep_v);
                    int j = k - 1;
                    while (j >= 0 && pick[j] == static_cast<int>(rest.size()) - k + j) --j;
                    if (j < 0) break;
                    ++pick[j];
                    for (int l = j + 1; l < k; ++l) pick[l] = pick[l - 1] + 1;
                }
            };
        Face acc;
        acc.cut = cut;
        rec(0, pool, acc);

        int j = cut_size - 1;
        while (j >= 0 && idx[j] == m - cut_size + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int l = j + 1; l < cut_size; ++l) idx[l] = idx[l - 1] + 1;
    }
    return out;
}

/// Facets: the full complex has one facet per labelling (every edge cut);
/// the k-skeleton's facets are the faces with k+1 cut edges.
inline std::vector<Face> enumerate_facets(const CapacityTree& t, std::optional<int> skeleton_dim,
                                          long long bound = 200000) {
    int cut_size = skeleton_dim ? *skeleton_dim + 1 : static_cast<int>(t.edges().size());
    return enumerate_faces(t, cut_size, bound);
}

/// Star with m unit leaves and center capacity n-m, rooted at a leaf; its
/// labelled-forest complex is the chessboard complex with m rows and n
/// columns.
inline CapacityTree chessboard_tree(int m, int n) {
    if (m < 1 || n < m) throw std::invalid_argument("chessboard needs 1 <= m <= n");
    CapacityTree t;
    VertexIdx root = t.add_vertex("l1", 1, kNoVertex);
    if (m == 1) {
        t.finalize();
        if (n - m > 0) {
            CapacityTree t2;
            VertexIdx r2 = t2.add_vertex("l1", 1, kNoVertex);
            t2.add_vertex("c", n - m, r2);
            t2.finalize();
            return t2;
        }
        return t;
    }
    VertexIdx c = t.add_vertex("c", n - m, root);
    for (int i = 2; i <= m; ++i) t.add_vertex("l" + std::to_string(i), 1, c);
    t.finalize();
    return t;
}

/// Checks the skeleton-shelling hypothesis for an edge set: the derived tree
/// is distributable, and so is the derived tree of every component left by
/// deleting edges outside the set, exhaustively over those subsets.
inline bool validate_edge_set(const CapacityTree& t, const EdgeSet& e) {
    std::vector<VertexIdx> others;
    for (VertexIdx c : t.edges())
        if (!e.contains(c)) others.push_back(c);
    int m = static_cast<int>(others.size());
    for (long long mask = 0; mask < (1ll << m); ++mask) {
        std::vector<VertexIdx> removed;
        for (int i = 0; i < m; ++i)
            if (mask & (1ll << i)) removed.push_back(others[i]);
        auto rep = detail::component_reps(t, removed);
        std::map<VertexIdx, std::vector<VertexIdx>> comps;
        for (VertexIdx v = 0; v < t.size(); ++v) comps[rep[v]].push_back(v);
        for (const auto& [r, verts] : comps) {
            SubTree sub = build_subtree(t, verts);
            std::vector<VertexIdx> e_in_sub;
            for (VertexIdx c : e.members())
                if (sub.to_sub.count(c) && c != sub.to_ambient[sub.tree.root()])
                    e_in_sub.push_back(sub.to_sub.at(c));
            DerivedTree d = derive_tree(sub.tree, EdgeSet(sub.tree, e_in_sub));
            if (!is_distributable(d.tree)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Shelling order and certificate.

struct FacetKey {
    int c = 0;                   // |cut \ E|
    std::vector<int> s_word;     // DFS edge indices of cut ∩ E
    int cut_id = 0;              // index of the cut in the fixed cut order
    int weak_rank = 0;           // position in the linear extension for this cut

    friend bool operator<(const FacetKey& a, const FacetKey& b) {
        return std::tie(a.c, a.s_word, a.cut_id, a.weak_rank) <
               std::tie(b.c, b.s_word, b.cut_id, b.weak_rank);
    }
    friend bool operator==(const FacetKey&, const FacetKey&) = default;
};

struct ShellEntry {
    Face face;
    FacetKey key;
    std::vector<VertexIdx> gm;  // cut edges of the minimal new face
};

struct ShellingCertificate {
    EdgeSet base_edges;
    std::vector<ShellEntry> entries;
};

namespace detail {

// The derived tree of a cut together with the piece structure induced by the
// base edge set: pieces are the components of the derived tree after
// removing the non-E edges; each piece gets its own subtree object for label
// compressed inversion computations.
struct CutContext {
    DerivedTree derived;
    std::vector<VertexIdx> e_edges_in_cut;  // derived-tree child endpoints for cut ∩ E
    std::vector<std::vector<VertexIdx>> piece_verts;  // derived-tree vertex sets
    std::vector<SubTree> pieces;
    std::vector<int> piece_of;  // derived vertex -> piece index
};

inline CutContext make_cut_context(const CapacityTree& t, const std::vector<VertexIdx>& cut,
                                   const EdgeSet& e) {
    CutContext ctx;
    ctx.derived = derive_tree(t, EdgeSet(t, cut));
    const CapacityTree& dt = ctx.derived.tree;
    // A derived-tree edge is keyed by its child component; the original cut
    // edge with the same child endpoint identifies it.
    std::set<VertexIdx> eset(e.members().begin(), e.members().end());
    std::vector<VertexIdx> allowed;
    for (VertexIdx orig_child : cut) {
        VertexIdx dchild = ctx.derived.component_of[orig_child];
        if (eset.count(orig_child)) allowed.push_back(dchild);
    }
    ctx.e_edges_in_cut = allowed;
    std::set<VertexIdx> allowed_set(allowed.begin(), allowed.end());
    // Pieces: components of the derived tree keeping only allowed edges.
    std::vector<VertexIdx> nonallowed;
    for (VertexIdx c : dt.edges())
        if (!allowed_set.count(c)) nonallowed.push_back(c);
    auto rep = component_reps(dt, nonallowed);
    std::map<VertexIdx, int> piece_index;
    ctx.piece_of.assign(dt.size(), -1);
    for (VertexIdx v : dt.dfs_order()) {
        VertexIdx r = rep[v];
        auto [it, fresh] = piece_index.insert({r, static_cast<int>(ctx.piece_verts.size())});
        if (fresh) ctx.piece_verts.emplace_back();
        ctx.piece_verts[it->second].push_back(v);
        ctx.piece_of[v] = it->second;
    }
    for (const auto& verts : ctx.piece_verts) ctx.pieces.push_back(build_subtree(dt, verts));
    return ctx;
}

// Labelling of one piece subtree with rank-compressed labels, taken from a
// face's component label sets.
inline Labelling piece_labelling(const CutContext& ctx, int piece, const Face& f,
                                 std::map<Label, Label>* decompress = nullptr) {
    const SubTree& sub = ctx.pieces[piece];
    std::vector<Label> all;
    for (VertexIdx dv : ctx.piece_verts[piece]) {
        VertexIdx rep = ctx.derived.members[dv].front();
        auto it = f.labels.find(rep);
        if (it == f.labels.end()) throw std::logic_error("face lacks component labels");
        all.insert(all.end(), it->second.begin(), it->second.end());
    }
    std::sort(all.begin(), all.end());
    std::map<Label, Label> compress;
    for (int i = 0; i < static_cast<int>(all.size()); ++i) {
        compress[all[i]] = i + 1;
        if (decompress) (*decompress)[i + 1] = all[i];
    }
    Labelling out(sub.tree);
    for (VertexIdx dv : ctx.piece_verts[piece]) {
        VertexIdx rep = ctx.derived.members[dv].front();
        std::vector<Label> ls;
        for (Label l : f.labels.at(rep)) ls.push_back(compress.at(l));
        out.assign(sub.to_sub.at(dv), ls);
    }
    return out;
}

// Neighbor inversion pairs of a facet across the allowed (base set) edges,
// as derived-tree child endpoints.
inline std::vector<VertexIdx> inverted_e_edges(const CutContext& ctx, const Face& f) {
    std::vector<VertexIdx> out;
    for (VertexIdx dchild : ctx.e_edges_in_cut) {
        int piece = ctx.piece_of[dchild];
        const SubTree& sub = ctx.pieces[piece];
        Labelling pl = piece_labelling(ctx, piece, f);
        VertexIdx sc = sub.to_sub.at(dchild);
        if (pair_inverted(pl, sub.tree.parent(sc), sc)) out.push_back(dchild);
    }
    return out;
}

// One sorting step across an allowed edge of the derived tree, written back
// into the face's label sets.
inline Face facet_sort_step(const CutContext& ctx, const Face& f, VertexIdx dchild) {
    int piece = ctx.piece_of[dchild];
    const SubTree& sub = ctx.pieces[piece];
    std::map<Label, Label> decompress;
    Labelling pl = piece_labelling(ctx, piece, f, &decompress);
    VertexIdx sc = sub.to_sub.at(dchild);
    Labelling lower = unique_redistribution(pl, sub.tree.parent(sc), sc);
    Face out = f;
    for (VertexIdx dv : ctx.piece_verts[piece]) {
        VertexIdx rep = ctx.derived.members[dv].front();
        std::vector<Label> ls;
        for (Label l : lower.at(sub.to_sub.at(dv))) ls.push_back(decompress.at(l));
        std::sort(ls.begin(), ls.end());
        out.labels[rep] = ls;
    }
    return out;
}

// Topological rank of the facets of one cut under the piecewise sorting
// covers; ties broken by serialized face text (or a seeded shuffle).
inline std::map<std::string, int> rank_facets_of_cut(const CutContext& ctx,
                                                     const std::vector<Face>& facets,
                                                     unsigned long long seed) {
    std::map<std::string, int> index;
    for (int i = 0; i < static_cast<int>(facets.size()); ++i) index[facets[i].key()] = i;
    std::vector<std::vector<int>> succ(facets.size());
    std::vector<int> indeg(facets.size(), 0);
    for (int i = 0; i < static_cast<int>(facets.size()); ++i) {
        for (VertexIdx dchild : inverted_e_edges(ctx, facets[i])) {
            Face lower = facet_sort_step(ctx, facets[i], dchild);
            auto it = index.find(lower.key());
            if (it == index.end()) throw RuleConsistencyError("sorting step left the facet set");
            succ[it->second].push_back(i);  // lower precedes upper
            ++indeg[i];
        }
    }
    // Kahn with deterministic (or seeded) tie-breaking on the face text.
    std::vector<int> order;
    std::mt19937_64 rng(seed);
    std::set<std::pair<std::string, int>> ready;
    std::vector<std::string> tie_key(facets.size());
    for (int i = 0; i < static_cast<int>(facets.size()); ++i) {
        tie_key[i] = facets[i].key();
        if (seed != 0) {
            std::string shuffled;
            for (char ch : tie_key[i]) shuffled += static_cast<char>(ch ^ (rng() & 0x7f));
            tie_key[i] = shuffled;
        }
    }
    for (int i = 0; i < static_cast<int>(facets.size()); ++i)
        if (indeg[i] == 0) ready.insert({tie_key[i], i});
    std::map<std::string, int> rank;
    while (!ready.empty()) {
        auto [k, v] = *ready.begin();
        ready.erase(ready.begin());
        rank[facets[v].key()] = static_cast<int>(order.size());
        order.push_back(v);
        for (int s : succ[v])
            if (--indeg[s] == 0) ready.insert({tie_key[s], s});
    }
    if (order.size() != facets.size())
        throw RuleConsistencyError("piecewise weak order has a cycle");
    return rank;
}

}  // namespace detail

/// Facet key with respect to a base edge set: cut size outside the set, the
/// DFS word of the cut inside it, the cut's position in the fixed cut order,
/// and the facet's rank in the linear extension of the piecewise weak order.
inline FacetKey facet_key(const CapacityTree& t, const Face& f, const EdgeSet& e,
                          unsigned long long seed = 0) {
    FacetKey key;
    std::map<int, int> edge_pos;
    const auto& edges = t.edges();
    for (int i = 0; i < static_cast<int>(edges.size()); ++i) edge_pos[edges[i]] = i;
    std::vector<int> cut_word;
    for (VertexIdx c : f.cut) {
        cut_word.push_back(edge_pos.at(c));
        if (e.contains(c)) key.s_word.push_back(edge_pos.at(c));
        else ++key.c;
    }
    // cut_id: lexicographic rank among all cuts of this size.
    int m = static_cast<int>(edges.size()), k = static_cast<int>(f.cut.size());
    auto choose = [](int n, int r) {
        long long res = 1;
        for (int i = 1; i <= r; ++i) res = res * (n - r + i) / i;
        return res;
    };
    long long id = 0;
    int prev = -1;
    for (int i = 0; i < k; ++i) {
        for (int x = prev + 1; x < cut_word[i]; ++x) id += choose(m - x - 1, k - i - 1);
        prev = cut_word[i];
    }
    key.cut_id = static_cast<int>(id);

    detail::CutContext ctx = detail::make_cut_context(t, f.cut, e);
    // Rank within the block of facets sharing this cut.
    std::vector<Face> block;
    for (const auto& cand : enumerate_faces(t, k)) {
        if (cand.cut == f.cut) block.push_back(cand);
    }
    auto rank = detail::rank_facets_of_cut(ctx, block, seed);
    key.weak_rank = rank.at(f.key());
    return key;
}

/// Shelling order for the (|E|-1)-skeleton: facets sorted by (c, S, cut,
/// weak rank), each with its minimal new face assembled from the three edge
/// types (outside E; inside E past the first missing E-edge; inside E and
/// carrying a neighbor inversion).
inline ShellingCertificate shelling_order(const CapacityTree& t, const EdgeSet& e,
                                          unsigned long long seed = 0, long long bound = 200000) {
    if (!validate_edge_set(t, e))
        throw std::invalid_argument("edge set does not satisfy the shelling hypothesis");
    ShellingCertificate cert;
    cert.base_edges = e;
    const auto& edges = t.edges();
    std::map<int, int> edge_pos;
    for (int i = 0; i < static_cast<int>(edges.size()); ++i) edge_pos[edges[i]] = i;
    int k = e.size();

    std::vector<Face> facets = enumerate_faces(t, k, bound);
    // Group by cut, preserving lexicographic cut order.
    std::vector<std::pair<std::vector<VertexIdx>, std::vector<Face>>> groups;
    for (auto& f : facets) {
        if (groups.empty() || groups.back().first != f.cut) groups.push_back({f.cut, {}});
        groups.back().second.push_back(std::move(f));
    }

    for (auto& [cut, block] : groups) {
        detail::CutContext ctx = detail::make_cut_context(t, cut, e);
        auto rank = detail::rank_facets_of_cut(ctx, block, seed);
        // Shared key parts for the cut.
        int c = 0;
        std::vector<int> s_word;
        for (VertexIdx ce : cut) {
            if (e.contains(ce)) s_word.push_back(edge_pos.at(ce));
            else ++c;
        }
        // First E-edge missing from the cut, in DFS edge order.
        std::optional<int> min_missing;
        for (VertexIdx me : e.members()) {
            if (std::find(cut.begin(), cut.end(), me) == cut.end()) {
                min_missing = edge_pos.at(me);
                break;
            }
        }
        for (auto& f : block) {
            ShellEntry entry;
            entry.key.c = c;
            entry.key.s_word = s_word;
            entry.key.weak_rank = rank.at(f.key());
            {
                auto choose = [](int n, int r) {
                    long long res = 1;
                    for (int i = 1; i <= r; ++i) res = res * (n - r + i) / i;
                    return res;
                };
                long long id = 0;
                int prev = -1;
                int m = static_cast<int>(edges.size());
                for (int i = 0; i < k; ++i) {
                    int w = edge_pos.at(cut[i]);
                    for (int x = prev + 1; x < w; ++x) id += choose(m - x - 1, k - i - 1);
                    prev = w;
                }
                entry.key.cut_id = static_cast<int>(id);
            }
            // Minimal new face: the three edge types.
            std::set<VertexIdx> gm;
            for (VertexIdx ce : cut)
                if (!e.contains(ce)) gm.insert(ce);  // type 1
            if (min_missing) {
                for (VertexIdx ce : cut)
                    if (e.contains(ce) && edge_pos.at(ce) > *min_missing) gm.insert(ce);  // type 2
            }
            for (VertexIdx dchild : detail::inverted_e_edges(ctx, f)) {
                // Map the derived child endpoint back to the original cut edge.
                for (VertexIdx ce : cut)
                    if (ctx.derived.component_of[ce] == dchild && e.contains(ce)) gm.insert(ce);
            }  // type 3
            entry.gm.assign(gm.begin(), gm.end());
            std::sort(entry.gm.begin(), entry.gm.end(),
                      [&](VertexIdx a, VertexIdx b) { return edge_pos.at(a) < edge_pos.at(b); });
            entry.face = std::move(f);
            cert.entries.push_back(std::move(entry));
        }
    }
    std::stable_sort(cert.entries.begin(), cert.entries.end(),
                     [](const ShellEntry& a, const ShellEntry& b) { return a.key < b.key; });
    return cert;
}

/// Full-complex shelling of a distributable capacity tree: every edge is in
/// the base set, so the facets are the labellings ordered by a linear
/// extension of the weak order.
inline ShellingCertificate shell_full_distributable(const CapacityTree& t,
                                                    unsigned long long seed = 0,
                                                    long long bound = 200000) {
    if (!is_distributable(t)) throw std::invalid_argument("tree is not distributable");
    return shelling_order(t, EdgeSet::all_edges(t), seed, bound);
}

struct ShellingVerifyResult {
    bool ok = true;
    int failing_index = -1;      // 0-based facet position
    std::string reason;
    std::optional<Face> witness;
};

/// Brute-force shelling check: for every facet, the intersection of its
/// closed face with the union of the earlier closed faces must be pure of
/// codimension one.  Also verifies the minimal-new-face characterization
/// when certificates are supplied: a face of the facet lies in an earlier
/// facet exactly when it misses part of G_m.
inline ShellingVerifyResult verify_shelling(const CapacityTree& t,
                                            const std::vector<Face>& ordered,
                                            const std::vector<std::vector<VertexIdx>>* gms = nullptr) {
    ShellingVerifyResult res;
    std::map<std::string, int> first_seen;  // face key -> first containing facet
    std::vector<std::vector<std::pair<std::string, Face>>> subfaces(ordered.size());
    for (int m = 0; m < static_cast<int>(ordered.size()); ++m) {
        const Face& f = ordered[m];
        int k = static_cast<int>(f.cut.size());
        for (long long mask = 0; mask < (1ll << k); ++mask) {
            std::vector<VertexIdx> subcut;
            for (int i = 0; i < k; ++i)
                if (mask & (1ll << i)) subcut.push_back(f.cut[i]);
            Face g = subface(t, f, subcut);
            std::string gk = g.key();
            first_seen.emplace(gk, m);
            subfaces[m].push_back({gk, std::move(g)});
        }
    }
    for (int m = 1; m < static_cast<int>(ordered.size()); ++m) {
        const Face& f = ordered[m];
        int fk = static_cast<int>(f.cut.size());
        // Codimension-one faces shared with earlier facets.
        std::set<VertexIdx> shared_removals;
        for (VertexIdx drop : f.cut) {
            std::vector<VertexIdx> subcut;
            for (VertexIdx c : f.cut)
                if (c != drop) subcut.push_back(c);
            Face g = subface(t, f, subcut);
            auto it = first_seen.find(g.key());
            if (it != first_seen.end() && it->second < m) shared_removals.insert(drop);
        }
        for (const auto& [gk, g] : subfaces[m]) {
            bool in_earlier = first_seen.at(gk) < m;
            if (static_cast<int>(g.cut.size()) == fk) in_earlier = false;  // the facet itself
            if (in_earlier) {
                // Purity: g must lie under a shared codimension-one face.
                bool under = false;
                std::set<VertexIdx> gcut(g.cut.begin(), g.cut.end());
                for (VertexIdx drop : shared_removals)
                    if (!gcut.count(drop)) { under = true; break; }
                if (!under) {
                    res.ok = false;
                    res.failing_index = m;
                    res.reason = "shared face not under a shared codimension-one face";
                    res.witness = g;
                    return res;
                }
            }
            if (gms) {
                const auto& gm = (*gms)[m];
                bool contains_gm = true;
                std::set<VertexIdx> gcut(g.cut.begin(), g.cut.end());
                for (VertexIdx ge : gm)
                    if (!gcut.count(ge)) { contains_gm = false; break; }
                bool is_new = !in_earlier;
                if (is_new != contains_gm) {
                    res.ok = false;
                    res.failing_index = m;
                    res.reason = "minimal new face does not characterize the new faces";
                    res.witness = g;
                    return res;
                }
            }
        }
        if (shared_removals.empty()) {
            res.ok = false;
            res.failing_index = m;
            res.reason = "facet shares no codimension-one face with earlier facets";
            return res;
        }
    }
    return res;
}

inline ShellingVerifyResult verify_shelling(const CapacityTree& t, const ShellingCertificate& cert) {
    std::vector<Face> faces;
    std::vector<std::vector<VertexIdx>> gms;
    for (const auto& e : cert.entries) {
        faces.push_back(e.face);
        gms.push_back(e.gm);
    }
    return verify_shelling(t, faces, &gms);
}

/// Certificate text: one record per facet with its sort key and minimal new
/// face.
inline std::string render_certificate(const CapacityTree& t, const ShellingCertificate& cert) {
    std::ostringstream out;
    for (int i = 0; i < static_cast<int>(cert.entries.size()); ++i) {
        const auto& en = cert.entries[i];
        out << "facet " << i << " key=(c=" << en.key.c << ",S=";
        for (size_t j = 0; j < en.key.s_word.size(); ++j) {
            if (j) out << ".";
            out << t.name(t.edges()[en.key.s_word[j]]);
        }
        out << ",cut=" << en.key.cut_id << ",rank=" << en.key.weak_rank << ") Gm=";
        for (size_t j = 0; j < en.gm.size(); ++j) {
            if (j) out << ",";
            out << t.name(en.gm[j]);
        }
        out << " " << en.face.key() << "\n";
    }
    return out.str();
}

}  // namespace captree
