#pragma once

#include <random>

#include "captree/inversion.hpp"

namespace captree {

/// One inversion-eliminating redistribution across a tree edge.
inline Labelling local_sort_step(const Labelling& tau, VertexIdx u, VertexIdx v) {
    const CapacityTree& t = tau.tree();
    if (!t.adjacent(u, v)) throw std::invalid_argument("local step needs neighboring vertices");
    if (!pair_inverted(tau, u, v)) throw std::invalid_argument("pair is not an inversion");
    return unique_redistribution(tau, u, v);
}

/// Potential: over every inverted vertex pair, the number of labels the
/// pairwise redistribution moves, weighted by graph distance.  Zero exactly
/// on the sorted labelling; strictly decreasing along sorting steps.
inline long long potential(const Labelling& sigma) {
    const CapacityTree& t = sigma.tree();
    std::vector<VertexIdx> verts = sigma.assigned_vertices();
    long long f = 0;
    for (size_t i = 0; i < verts.size(); ++i) {
        for (size_t j = i + 1; j < verts.size(); ++j) {
            VertexIdx u = verts[i], w = verts[j];
            if (!pair_inverted(sigma, u, w)) continue;
            Labelling redo = unique_redistribution(sigma, u, w);
            int moved = 0;
            for (Label l : sigma.at(u))
                if (*redo.host(l) == w) ++moved;
            f += static_cast<long long>(moved) * t.distance(u, w);
        }
    }
    return f;
}

enum class SortStrategy { First, Random, LargestPotentialDrop };

inline SortStrategy parse_strategy(const std::string& s) {
    if (s == "first") return SortStrategy::First;
    if (s == "random") return SortStrategy::Random;
    if (s == "largest-potential-drop") return SortStrategy::LargestPotentialDrop;
    throw std::invalid_argument("unknown strategy: " + s);
}

struct SortTrace {
    struct Step {
        std::pair<VertexIdx, VertexIdx> swapped;
        Labelling after;
    };
    std::vector<Step> steps;
    Labelling terminal;
    SortStrategy strategy = SortStrategy::First;
    unsigned long long seed = 0;

    int step_count() const { return static_cast<int>(steps.size()); }
};

/// Applies local sorting steps until no neighboring pair is inverted.  The
/// potential of the input bounds the number of steps; exceeding it means the
/// rules are inconsistent and raises an error.
inline SortTrace greedy_sort(const Labelling& sigma, SortStrategy strategy,
                             unsigned long long seed = 0,
                             const std::optional<std::vector<VertexIdx>>& within = std::nullopt) {
    const CapacityTree& t = sigma.tree();
    std::vector<VertexIdx> verts = within ? *within : sigma.assigned_vertices();
    std::set<VertexIdx> vset(verts.begin(), verts.end());

    std::vector<std::pair<VertexIdx, VertexIdx>> edges;  // (parent, child) in DFS edge order
    for (VertexIdx c : t.edges())
        if (vset.count(c) && vset.count(t.parent(c))) edges.push_back({t.parent(c), c});

    SortTrace trace{{}, sigma, strategy, seed};
    std::mt19937_64 rng(seed);
    long long bound = potential(sigma);
    Labelling cur = sigma;
    while (true) {
        std::vector<std::pair<VertexIdx, VertexIdx>> inverted;
        for (auto [p, c] : edges)
            if (pair_inverted(cur, p, c)) inverted.push_back({p, c});
        if (inverted.empty()) break;
        if (trace.step_count() >= bound)
            throw RuleConsistencyError("sorting exceeded its potential bound");
        std::pair<VertexIdx, VertexIdx> pick = inverted.front();
        if (strategy == SortStrategy::Random) {
            pick = inverted[static_cast<size_t>(rng() % inverted.size())];
        } else if (strategy == SortStrategy::LargestPotentialDrop) {
            long long best_f = -1;
            for (auto pr : inverted) {
                Labelling nxt = unique_redistribution(cur, pr.first, pr.second);
                long long f = potential(nxt);
                if (best_f == -1 || f < best_f) { best_f = f; pick = pr; }
            }
        }
        cur = unique_redistribution(cur, pick.first, pick.second);
        trace.steps.push_back({pick, cur});
    }
    trace.terminal = cur;
    return trace;
}

/// Cover digraph of the weak order on the labellings of a component: an arc
/// leads from a labelling to the result of one local sorting step.
struct WeakOrderDigraph {
    std::vector<Labelling> nodes;
    std::map<std::string, int> index;  // labelling key -> node id
    struct Arc {
        int upper = 0;  // labelling with the inversion
        int lower = 0;  // after the sorting step
        std::pair<VertexIdx, VertexIdx> pair;
    };
    std::vector<Arc> arcs;
    bool acyclic = false;
    std::vector<int> sinks;                  // nodes with no outgoing arc
    bool potential_strictly_decreasing = false;
};

inline WeakOrderDigraph build_weak_order(const CapacityTree& t, std::vector<VertexIdx> comp,
                                         std::vector<Label> labels, long long bound = 50000,
                                         bool check_potential = true) {
    WeakOrderDigraph g;
    g.nodes = enumerate_assignments(t, comp, labels, bound);
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) g.index[g.nodes[i].key()] = i;

    std::set<VertexIdx> vset(comp.begin(), comp.end());
    std::vector<std::pair<VertexIdx, VertexIdx>> edges;
    for (VertexIdx c : t.edges())
        if (vset.count(c) && vset.count(t.parent(c))) edges.push_back({t.parent(c), c});

    std::vector<long long> f(g.nodes.size(), -1);
    g.potential_strictly_decreasing = true;
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i) {
        for (auto [p, c] : edges) {
            if (!pair_inverted(g.nodes[i], p, c)) continue;
            Labelling lower = unique_redistribution(g.nodes[i], p, c);
            auto it = g.index.find(lower.key());
            if (it == g.index.end()) throw RuleConsistencyError("sorting step left the node set");
            g.arcs.push_back({i, it->second, {p, c}});
            if (check_potential) {
                if (f[i] < 0) f[i] = potential(g.nodes[i]);
                if (f[it->second] < 0) f[it->second] = potential(g.nodes[it->second]);
                if (!(f[it->second] < f[i])) g.potential_strictly_decreasing = false;
            }
        }
    }

    // Sinks and acyclicity.
    std::vector<int> outdeg(g.nodes.size(), 0), indeg_tmp(g.nodes.size(), 0);
    std::vector<std::vector<int>> succ(g.nodes.size());
    for (const auto& a : g.arcs) {
        ++outdeg[a.upper];
        succ[a.upper].push_back(a.lower);
        ++indeg_tmp[a.lower];
    }
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i)
        if (outdeg[i] == 0) g.sinks.push_back(i);
    // Kahn's algorithm on the arc direction.
    std::vector<int> indeg = indeg_tmp, queue;
    for (int i = 0; i < static_cast<int>(g.nodes.size()); ++i)
        if (indeg[i] == 0) queue.push_back(i);
    size_t seen = 0;
    while (!queue.empty()) {
        int v = queue.back();
        queue.pop_back();
        ++seen;
        for (int s : succ[v])
            if (--indeg[s] == 0) queue.push_back(s);
    }
    g.acyclic = seen == g.nodes.size();
    return g;
}

inline WeakOrderDigraph build_weak_order(const CapacityTree& t, long long bound = 50000,
                                         bool check_potential = true) {
    std::vector<Label> labels(t.total_capacity());
    for (int i = 0; i < t.total_capacity(); ++i) labels[i] = i + 1;
    return build_weak_order(t, t.dfs_order(), labels, bound, check_potential);
}

struct ConfluenceResult {
    bool ok = true;
    std::string failure;                       // human-readable witness
    std::optional<Labelling> witness;          // labelling violating confluence
    int components_checked = 0;
    long long labellings_checked = 0;
};

namespace detail {
inline bool confluent_digraph(const WeakOrderDigraph& g, const Labelling& expected_sink,
                              std::string& why) {
    if (!g.acyclic) { why = "cover digraph has a cycle"; return false; }
    if (g.sinks.size() != 1) {
        why = "digraph has " + std::to_string(g.sinks.size()) + " sinks";
        return false;
    }
    if (!(g.nodes[g.sinks.front()] == expected_sink)) {
        why = "unique sink is not the base labelling";
        return false;
    }
    // Every node must reach the sink: walk the reversed arcs from the sink.
    std::vector<std::vector<int>> pred(g.nodes.size());
    for (const auto& a : g.arcs) pred[a.lower].push_back(a.upper);
    std::vector<char> reach(g.nodes.size(), 0);
    std::vector<int> stack{g.sinks.front()};
    reach[g.sinks.front()] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int p : pred[v])
            if (!reach[p]) { reach[p] = 1; stack.push_back(p); }
    }
    for (size_t i = 0; i < g.nodes.size(); ++i)
        if (!reach[i]) { why = "labelling cannot reach the sorted labelling"; return false; }
    return true;
}
}  // namespace detail

/// Exhaustive confluence check: for the whole tree and every connected
/// restriction with every admissible label set, the cover digraph must be
/// acyclic with exactly one sink (the base labelling) reachable from
/// everywhere.
inline ConfluenceResult check_confluence(const CapacityTree& t, long long bound = 50000) {
    ConfluenceResult res;
    std::vector<Label> all(t.total_capacity());
    for (int i = 0; i < t.total_capacity(); ++i) all[i] = i + 1;

    for (const auto& comp : connected_subsets(t)) {
        int cap = 0;
        for (VertexIdx v : comp) cap += t.capacity(v);
        if (cap == 0) continue;
        // every label subset of the right size
        std::vector<int> idx(cap);
        for (int i = 0; i < cap; ++i) idx[i] = i;
        int n = t.total_capacity();
        while (true) {
            std::vector<Label> ls;
            for (int i : idx) ls.push_back(all[i]);
            WeakOrderDigraph g = build_weak_order(t, comp, ls, bound, false);
            res.labellings_checked += static_cast<long long>(g.nodes.size());
            Labelling base = base_labelling(t, comp, ls);
            std::string why;
            if (!detail::confluent_digraph(g, base, why)) {
                res.ok = false;
                res.failure = "component {";
                for (size_t i = 0; i < comp.size(); ++i)
                    res.failure += (i ? "," : "") + t.name(comp[i]);
                res.failure += "}: " + why;
                if (!g.sinks.empty()) res.witness = g.nodes[g.sinks.front()];
                return res;
            }
            int j = cap - 1;
            while (j >= 0 && idx[j] == n - cap + j) --j;
            if (j < 0) break;
            ++idx[j];
            for (int l = j + 1; l < cap; ++l) idx[l] = idx[l - 1] + 1;
        }
        ++res.components_checked;
    }
    return res;
}

/// Weak order digraph in DOT format; arcs follow sorting steps.
inline std::string to_dot(const CapacityTree& t, const WeakOrderDigraph& g) {
    std::ostringstream out;
    out << "digraph weak_order {\n";
    for (const auto& n : g.nodes) out << "  \"" << n.key() << "\";\n";
    for (const auto& a : g.arcs)
        out << "  \"" << g.nodes[a.upper].key() << "\" -> \"" << g.nodes[a.lower].key()
            << "\" [label=\"(" << t.name(a.pair.first) << "," << t.name(a.pair.second) << ")\"];\n";
    out << "}\n";
    return out.str();
}

inline std::string render_trace(const CapacityTree& t, const SortTrace& trace) {
    std::ostringstream out;
    if (trace.strategy == SortStrategy::Random) out << "seed " << trace.seed << "\n";
    for (int i = 0; i < trace.step_count(); ++i) {
        const auto& s = trace.steps[i];
        out << "step " << (i + 1) << ": swap (" << t.name(s.swapped.first) << ","
            << t.name(s.swapped.second) << ") -> " << s.after.key() << "\n";
    }
    out << "terminal: " << trace.terminal.key() << "\n";
    out << "steps " << trace.step_count() << "\n";
    return out.str();
}

}  // namespace captree
