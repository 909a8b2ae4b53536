#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace captree {

using Label = int;
using VertexIdx = int;

constexpr VertexIdx kNoVertex = -1;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when an operation that the theory guarantees to be well defined
/// (unique redistribution, unique base labelling, ...) finds zero or several
/// solutions. Always indicates a bug, never a property of the input.
struct RuleConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Directed edge between two adjacent tree vertices.
struct DirEdge {
    VertexIdx from = kNoVertex;
    VertexIdx to = kNoVertex;
    friend bool operator==(const DirEdge&, const DirEdge&) = default;
    friend auto operator<=>(const DirEdge&, const DirEdge&) = default;
    DirEdge reversed() const { return {to, from}; }
};

/// One level of the three-part decomposition at a local root.  part[v] is
/// 1, 2 or 3 for vertices covered by this level and 0 for vertices that were
/// peeled off at a coarser level.
struct CoarseningLevel {
    std::vector<int> part;
    bool has_c1 = false;
    bool has_c3 = false;
};

/// Nested decomposition of the tree at a local root: the first level splits
/// off the subtrees of the root's first and last child, deeper levels keep
/// subdividing the middle part until at most one child of the root remains.
struct Coarsening {
    VertexIdx local_root = kNoVertex;
    std::vector<CoarseningLevel> levels;
};

/// Rooted planar tree with a nonnegative integer capacity per vertex.
/// Immutable once finalized; all derived data (DFS order, destinations,
/// coarsenings, channel priorities) is precomputed.
class CapacityTree {
public:
    CapacityTree() = default;

    VertexIdx add_vertex(const std::string& name, int capacity, VertexIdx parent) {
        if (finalized_) throw std::logic_error("tree already finalized");
        if (capacity < 0) throw ParseError("negative capacity for vertex " + name);
        if (index_.count(name)) throw ParseError("duplicate vertex identifier " + name);
        if (parent == kNoVertex) {
            if (root_ != kNoVertex) throw ParseError("multiple roots: " + name);
            root_ = static_cast<VertexIdx>(names_.size());
        } else if (parent < 0 || parent >= static_cast<VertexIdx>(names_.size())) {
            throw ParseError("unknown parent for vertex " + name);
        }
        VertexIdx v = static_cast<VertexIdx>(names_.size());
        names_.push_back(name);
        index_[name] = v;
        capacity_.push_back(capacity);
        parent_.push_back(parent);
        children_.emplace_back();
        if (parent != kNoVertex) children_[parent].push_back(v);
        return v;
    }

    void finalize() {
        if (finalized_) return;
        if (names_.empty()) throw ParseError("tree has no vertices");
        if (root_ == kNoVertex) throw ParseError("tree has no root");
        total_capacity_ = 0;
        for (int c : capacity_) total_capacity_ += c;
        if (total_capacity_ < 1) throw ParseError("total capacity must be positive");
        build_dfs();
        build_destinations();
        build_coarsenings();
        build_channels();
        finalized_ = true;
    }

    /// Parses the .ctree text format: one `node <id> parent=<id|-> cap=<n>`
    /// record per line, `#` comments, root declared before its descendants.
    static CapacityTree parse(const std::string& text) {
        CapacityTree t;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::istringstream ls(line);
            std::string word;
            if (!(ls >> word)) continue;
            if (word != "node") throw ParseError("line " + std::to_string(lineno) + ": expected 'node'");
            std::string id, parent_tok, cap_tok;
            if (!(ls >> id >> parent_tok >> cap_tok))
                throw ParseError("line " + std::to_string(lineno) + ": malformed record");
            std::string extra;
            if (ls >> extra) throw ParseError("line " + std::to_string(lineno) + ": trailing tokens");
            if (parent_tok.rfind("parent=", 0) != 0 || cap_tok.rfind("cap=", 0) != 0)
                throw ParseError("line " + std::to_string(lineno) + ": malformed record");
            std::string parent_name = parent_tok.substr(7);
            std::string cap_str = cap_tok.substr(4);
            if (cap_str.empty() || cap_str.find_first_not_of("0123456789") != std::string::npos)
                throw ParseError("line " + std::to_string(lineno) + ": capacity must be a nonnegative integer");
            VertexIdx parent = kNoVertex;
            if (parent_name != "-") {
                auto it = t.index_.find(parent_name);
                if (it == t.index_.end())
                    throw ParseError("line " + std::to_string(lineno) + ": parent " + parent_name +
                                     " not declared before " + id);
                parent = it->second;
            }
            t.add_vertex(id, std::stoi(cap_str), parent);
        }
        t.finalize();
        return t;
    }

    std::string serialize() const {
        std::ostringstream out;
        for (VertexIdx v : dfs_order_) {
            out << "node " << names_[v] << " parent="
                << (parent_[v] == kNoVertex ? std::string("-") : names_[parent_[v]])
                << " cap=" << capacity_[v] << "\n";
        }
        return out.str();
    }

    int size() const { return static_cast<int>(names_.size()); }
    VertexIdx root() const { return root_; }
    const std::string& name(VertexIdx v) const { return names_.at(v); }
    int capacity(VertexIdx v) const { return capacity_.at(v); }
    VertexIdx parent(VertexIdx v) const { return parent_.at(v); }
    const std::vector<VertexIdx>& children(VertexIdx v) const { return children_.at(v); }
    int total_capacity() const { return total_capacity_; }

    std::optional<VertexIdx> find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    VertexIdx require(const std::string& name) const {
        auto v = find(name);
        if (!v) throw ParseError("unknown vertex identifier " + name);
        return *v;
    }

    int degree(VertexIdx v) const {
        return static_cast<int>(children_[v].size()) + (parent_[v] == kNoVertex ? 0 : 1);
    }
    bool is_leaf(VertexIdx v) const { return degree(v) <= 1; }
    bool root_is_leaf() const { return is_leaf(root_); }
    int depth(VertexIdx v) const { return depth_.at(v); }

    const std::vector<VertexIdx>& dfs_order() const { return dfs_order_; }
    int dfs_index(VertexIdx v) const { return dfs_index_.at(v); }

    /// Non-root vertices (= edges keyed by child endpoint) in DFS order.
    const std::vector<VertexIdx>& edges() const { return edges_dfs_; }

    bool is_edge_key(VertexIdx v) const { return v != root_ && v >= 0 && v < size(); }

    /// Weak ancestor test: a vertex is an ancestor of itself.
    bool is_ancestor(VertexIdx anc, VertexIdx v) const {
        while (v != kNoVertex) {
            if (v == anc) return true;
            v = parent_[v];
        }
        return false;
    }
    bool is_strict_ancestor(VertexIdx anc, VertexIdx v) const {
        return anc != v && is_ancestor(anc, v);
    }

    std::vector<VertexIdx> subtree(VertexIdx v) const {
        std::vector<VertexIdx> out, stack{v};
        while (!stack.empty()) {
            VertexIdx u = stack.back();
            stack.pop_back();
            out.push_back(u);
            for (auto it = children_[u].rbegin(); it != children_[u].rend(); ++it) stack.push_back(*it);
        }
        return out;
    }

    /// Vertex sequence of the unique path from `a` to `b`, inclusive.
    std::vector<VertexIdx> path_vertices(VertexIdx a, VertexIdx b) const {
        std::vector<VertexIdx> up, down;
        VertexIdx x = a, y = b;
        while (depth_[x] > depth_[y]) { up.push_back(x); x = parent_[x]; }
        while (depth_[y] > depth_[x]) { down.push_back(y); y = parent_[y]; }
        while (x != y) {
            up.push_back(x); x = parent_[x];
            down.push_back(y); y = parent_[y];
        }
        up.push_back(x);
        up.insert(up.end(), down.rbegin(), down.rend());
        return up;
    }

    int distance(VertexIdx a, VertexIdx b) const {
        return static_cast<int>(path_vertices(a, b).size()) - 1;
    }

    /// Destination vertex of a label under the consecutive DFS deal.
    VertexIdx dest(Label l) const {
        if (l < 1 || l > total_capacity_) throw std::invalid_argument("label out of range");
        return dest_of_label_[l];
    }
    /// Labels dealt to a vertex (empty for capacity-zero vertices).
    const std::vector<Label>& dest_labels(VertexIdx v) const { return dest_labels_.at(v); }

    const Coarsening& coarsening(VertexIdx v) const { return coarsenings_.at(v); }

    /// Edges incident to `v`, directed outward, highest priority first.
    const std::vector<DirEdge>& capacity_channels(VertexIdx v) const { return channels_.at(v); }

    /// Channel list of `v` extended to all tree edges (directed away from v).
    const std::vector<DirEdge>& augmented_channels(VertexIdx v) const { return augmented_.at(v); }

    int channel_index(VertexIdx v, const DirEdge& e) const {
        auto& m = augmented_index_.at(v);
        auto it = m.find(e);
        if (it == m.end()) throw std::invalid_argument("edge not in channel list");
        return it->second;
    }

    /// True when e1 beats e2 among the channels of u.  Decided by the
    /// three-part decomposition at u: earlier-peeled far endpoints win, the
    /// first-child side beats the last-child side within a level, and the
    /// parent edge beats the never-peeled middle child.
    bool edge_priority_higher(VertexIdx u, const DirEdge& e1, const DirEdge& e2) const {
        if (e1 == e2) throw std::invalid_argument("edge compared with itself");
        VertexIdx a = far_endpoint(u, e1);
        VertexIdx b = far_endpoint(u, e2);
        return neighbor_priority_higher(u, a, b);
    }

    bool adjacent(VertexIdx a, VertexIdx b) const {
        return parent_[a] == b || parent_[b] == a;
    }

private:
    VertexIdx far_endpoint(VertexIdx u, const DirEdge& e) const {
        if (e.from == u) {
            if (!adjacent(u, e.to)) throw std::invalid_argument("edge not incident to vertex");
            return e.to;
        }
        if (e.to == u) {
            if (!adjacent(u, e.from)) throw std::invalid_argument("edge not incident to vertex");
            return e.from;
        }
        throw std::invalid_argument("edge not incident to vertex");
    }

    // a, b: distinct neighbors of u.  Returns true when edge (u,a) has higher
    // priority than (u,b).
    bool neighbor_priority_higher(VertexIdx u, VertexIdx a, VertexIdx b) const {
        if (a == b) throw std::invalid_argument("edge compared with itself");
        const Coarsening& co = coarsenings_[u];
        auto clause12 = [&](VertexIdx w, VertexIdx v) {
            for (const auto& lv : co.levels) {
                if (lv.part[w] != 0 && lv.part[w] != 2 && lv.part[v] == 2) return true;  // (1)
                if (lv.part[w] == 1 && lv.part[v] == 3) return true;                     // (2)
            }
            return false;
        };
        if (clause12(a, b)) return true;
        if (clause12(b, a)) return false;
        bool all_c2 = true;
        for (const auto& lv : co.levels)
            if (lv.part[a] != 2 || lv.part[b] != 2) { all_c2 = false; break; }
        if (all_c2) {
            if (a == parent_[u] && parent_[b] == u) return true;   // (3)
            if (b == parent_[u] && parent_[a] == u) return false;
        }
        // Not reachable for tree coarsenings; kept as a total-order fallback.
        return dfs_index_[a] < dfs_index_[b];
    }

    void build_dfs() {
        dfs_order_.clear();
        dfs_order_.reserve(names_.size());
        depth_.assign(names_.size(), 0);
        std::vector<VertexIdx> stack{root_};
        while (!stack.empty()) {
            VertexIdx v = stack.back();
            stack.pop_back();
            dfs_order_.push_back(v);
            for (auto it = children_[v].rbegin(); it != children_[v].rend(); ++it) {
                depth_[*it] = depth_[v] + 1;
                stack.push_back(*it);
            }
        }
        if (dfs_order_.size() != names_.size())
            throw ParseError("disconnected input");
        dfs_index_.assign(names_.size(), -1);
        for (int i = 0; i < static_cast<int>(dfs_order_.size()); ++i) dfs_index_[dfs_order_[i]] = i;
        edges_dfs_.clear();
        for (VertexIdx v : dfs_order_)
            if (v != root_) edges_dfs_.push_back(v);
    }

    void build_destinations() {
        dest_of_label_.assign(total_capacity_ + 1, kNoVertex);
        dest_labels_.assign(names_.size(), {});
        Label next = 1;
        for (VertexIdx v : dfs_order_) {
            for (int k = 0; k < capacity_[v]; ++k) {
                dest_of_label_[next] = v;
                dest_labels_[v].push_back(next);
                ++next;
            }
        }
    }

    void build_coarsenings() {
        coarsenings_.clear();
        coarsenings_.resize(names_.size());
        const int n = size();
        for (VertexIdx r = 0; r < n; ++r) {
            Coarsening& co = coarsenings_[r];
            co.local_root = r;
            std::vector<char> covered(n, 1);
            int lo = 0, hi = static_cast<int>(children_[r].size()) - 1;
            while (hi - lo + 1 >= 2) {
                CoarseningLevel lv;
                lv.part.assign(n, 0);
                for (VertexIdx v = 0; v < n; ++v)
                    if (covered[v]) lv.part[v] = 2;
                for (VertexIdx u : subtree(children_[r][lo])) lv.part[u] = 1;
                lv.has_c1 = true;
                ++lo;
                if (hi - lo + 2 >= 3) {
                    for (VertexIdx u : subtree(children_[r][hi])) lv.part[u] = 3;
                    lv.has_c3 = true;
                    --hi;
                }
                for (VertexIdx v = 0; v < n; ++v)
                    if (lv.part[v] == 1 || lv.part[v] == 3) covered[v] = 0;
                co.levels.push_back(std::move(lv));
            }
        }
    }

    void build_channels() {
        const int n = size();
        channels_.assign(n, {});
        augmented_.assign(n, {});
        augmented_index_.assign(n, {});
        for (VertexIdx v = 0; v < n; ++v) {
            std::vector<VertexIdx> nbrs;
            if (parent_[v] != kNoVertex) nbrs.push_back(parent_[v]);
            for (VertexIdx c : children_[v]) nbrs.push_back(c);
            std::sort(nbrs.begin(), nbrs.end(),
                      [&](VertexIdx a, VertexIdx b) { return neighbor_priority_higher(v, a, b); });
            for (VertexIdx x : nbrs) channels_[v].push_back({v, x});

            // Augmentation: walk the list; behind each edge (x,y) append the
            // edges out of y, those reaching a farther coarsening part at y
            // first, ties decided by channel priority at y.
            std::vector<DirEdge>& list = augmented_[v];
            list = channels_[v];
            std::set<std::pair<VertexIdx, VertexIdx>> seen;
            for (const DirEdge& e : list) seen.insert(undirected(e));
            for (size_t i = 0; i < list.size(); ++i) {
                DirEdge e = list[i];
                std::vector<VertexIdx> nexts;
                if (parent_[e.to] != kNoVertex && parent_[e.to] != e.from &&
                    !seen.count(undirected({e.to, parent_[e.to]})))
                    nexts.push_back(parent_[e.to]);
                for (VertexIdx c : children_[e.to])
                    if (c != e.from && !seen.count(undirected({e.to, c}))) nexts.push_back(c);
                std::sort(nexts.begin(), nexts.end(), [&](VertexIdx p, VertexIdx q) {
                    int d = compare_onward_distance(e.from, e.to, p, q);
                    if (d != 0) return d > 0;
                    return neighbor_priority_higher(e.to, p, q);
                });
                for (VertexIdx y : nexts) {
                    list.push_back({e.to, y});
                    seen.insert(undirected({e.to, y}));
                }
            }
            for (int i = 0; i < static_cast<int>(list.size()); ++i) augmented_index_[v][list[i]] = i;
        }
    }

    // Compares hypothetical onward hops (y->p) vs (y->q) for traffic entering
    // y from x: positive when p lands in a part farther from x at the first
    // level of the coarsening at y where the two differ.
    int compare_onward_distance(VertexIdx x, VertexIdx y, VertexIdx p, VertexIdx q) const {
        const Coarsening& co = coarsenings_[y];
        for (const auto& lv : co.levels) {
            if (lv.part[x] == 0 || lv.part[p] == 0 || lv.part[q] == 0) break;
            int dp = std::abs(lv.part[x] - lv.part[p]);
            int dq = std::abs(lv.part[x] - lv.part[q]);
            if (dp != dq) return dp > dq ? 1 : -1;
        }
        return 0;
    }

    static std::pair<VertexIdx, VertexIdx> undirected(const DirEdge& e) {
        return {std::min(e.from, e.to), std::max(e.from, e.to)};
    }

    bool finalized_ = false;
    std::vector<std::string> names_;
    std::map<std::string, VertexIdx> index_;
    std::vector<int> capacity_;
    std::vector<VertexIdx> parent_;
    std::vector<std::vector<VertexIdx>> children_;
    VertexIdx root_ = kNoVertex;
    int total_capacity_ = 0;

    std::vector<VertexIdx> dfs_order_;
    std::vector<int> dfs_index_;
    std::vector<int> depth_;
    std::vector<VertexIdx> edges_dfs_;
    std::vector<VertexIdx> dest_of_label_;
    std::vector<std::vector<Label>> dest_labels_;
    std::vector<Coarsening> coarsenings_;
    std::vector<std::vector<DirEdge>> channels_;
    std::vector<std::vector<DirEdge>> augmented_;
    std::vector<std::map<DirEdge, int>> augmented_index_;
};

/// Set of tree edges keyed by child endpoint, kept in DFS order.
class EdgeSet {
public:
    EdgeSet() = default;
    EdgeSet(const CapacityTree& t, std::vector<VertexIdx> child_endpoints) {
        for (VertexIdx v : child_endpoints) {
            if (!t.is_edge_key(v)) throw std::invalid_argument("not an edge of the tree: vertex " + std::to_string(v));
        }
        std::sort(child_endpoints.begin(), child_endpoints.end(),
                  [&](VertexIdx a, VertexIdx b) { return t.dfs_index(a) < t.dfs_index(b); });
        child_endpoints.erase(std::unique(child_endpoints.begin(), child_endpoints.end()),
                              child_endpoints.end());
        edges_ = std::move(child_endpoints);
    }

    static EdgeSet parse(const CapacityTree& t, const std::string& csv) {
        std::vector<VertexIdx> out;
        std::istringstream in(csv);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            if (tok.empty()) continue;
            out.push_back(t.require(tok));
        }
        return EdgeSet(t, std::move(out));
    }

    static EdgeSet all_edges(const CapacityTree& t) { return EdgeSet(t, t.edges()); }

    const std::vector<VertexIdx>& members() const { return edges_; }
    int size() const { return static_cast<int>(edges_.size()); }
    bool contains(VertexIdx v) const {
        return std::find(edges_.begin(), edges_.end(), v) != edges_.end();
    }

    std::string word(const CapacityTree& t) const {
        std::string out;
        for (size_t i = 0; i < edges_.size(); ++i) {
            if (i) out += ",";
            out += t.name(edges_[i]);
        }
        return out;
    }

    friend bool operator==(const EdgeSet&, const EdgeSet&) = default;

private:
    std::vector<VertexIdx> edges_;
};

// ---------------------------------------------------------------------------
// Operations on capacity trees.

inline std::vector<VertexIdx> dfs_order(const CapacityTree& t) { return t.dfs_order(); }

/// label -> destination vertex for every label 1..total_capacity.
inline std::map<Label, VertexIdx> destinations(const CapacityTree& t) {
    std::map<Label, VertexIdx> out;
    for (Label l = 1; l <= t.total_capacity(); ++l) out[l] = t.dest(l);
    return out;
}

inline bool is_distributable(const CapacityTree& t) {
    for (VertexIdx v = 0; v < t.size(); ++v)
        if (t.capacity(v) < t.degree(v) - 1) return false;
    return true;
}

/// Tree obtained by keeping exactly the edges in `e`: one vertex per
/// component of the remaining forest, capacities added up.  The component of
/// the old root becomes the new root; sibling components are ordered by the
/// DFS position of the child endpoint of their connecting edge.
struct DerivedTree {
    CapacityTree tree;
    std::vector<int> component_of;              // original vertex -> derived vertex
    std::vector<std::vector<VertexIdx>> members; // derived vertex -> original vertices (DFS order)
};

inline DerivedTree derive_tree(const CapacityTree& t, const EdgeSet& e) {
    const int n = t.size();
    std::vector<int> comp(n, -1);
    std::vector<std::vector<VertexIdx>> members;
    for (VertexIdx v : t.dfs_order()) {
        if (comp[v] != -1) continue;
        int id = static_cast<int>(members.size());
        members.emplace_back();
        std::vector<VertexIdx> stack{v};
        comp[v] = id;
        while (!stack.empty()) {
            VertexIdx u = stack.back();
            stack.pop_back();
            members[id].push_back(u);
            for (VertexIdx c : t.children(u))
                if (!e.contains(c) && comp[c] == -1) { comp[c] = id; stack.push_back(c); }
            VertexIdx p = t.parent(u);
            if (p != kNoVertex && !e.contains(u) && comp[p] == -1) { comp[p] = id; stack.push_back(p); }
        }
        std::sort(members[id].begin(), members[id].end(),
                  [&](VertexIdx a, VertexIdx b) { return t.dfs_index(a) < t.dfs_index(b); });
    }

    // Child components of each component, ordered by the DFS position of the
    // cut edge's child endpoint.
    std::vector<std::vector<std::pair<int, int>>> child_comps(members.size());
    for (VertexIdx c : e.members())
        child_comps[comp[t.parent(c)]].push_back({t.dfs_index(c), comp[c]});
    for (auto& v : child_comps) std::sort(v.begin(), v.end());

    DerivedTree out;
    out.component_of = comp;
    std::vector<int> derived_idx(members.size(), -1);
    // Emit components in derived-DFS order so parents precede children.
    std::vector<std::pair<int, VertexIdx>> stack{{comp[t.root()], kNoVertex}};
    std::vector<std::pair<int, VertexIdx>> order;
    while (!stack.empty()) {
        auto [cid, par] = stack.back();
        stack.pop_back();
        order.push_back({cid, par});
        for (auto it = child_comps[cid].rbegin(); it != child_comps[cid].rend(); ++it)
            stack.push_back({it->second, cid});
    }
    for (auto [cid, par_cid] : order) {
        int cap = 0;
        for (VertexIdx v : members[cid]) cap += t.capacity(v);
        VertexIdx parent = par_cid == kNoVertex ? kNoVertex : derived_idx[par_cid];
        derived_idx[cid] = out.tree.add_vertex(t.name(members[cid].front()), cap, parent);
        out.members.push_back(members[cid]);
    }
    out.tree.finalize();
    for (VertexIdx v = 0; v < n; ++v) out.component_of[v] = derived_idx[comp[v]];
    // members was pushed in emission order already; remap not needed.
    return out;
}

/// Checks the merge-closure property of distributable trees: contracting any
/// edge keeps the tree distributable and gives the merged vertex capacity at
/// least its degree.
inline bool check_merge_closure(const CapacityTree& t) {
    if (!is_distributable(t)) throw std::invalid_argument("tree is not distributable");
    for (VertexIdx c : t.edges()) {
        VertexIdx p = t.parent(c);
        int merged_cap = t.capacity(p) + t.capacity(c);
        int merged_deg = t.degree(p) + t.degree(c) - 2;
        if (merged_cap < merged_deg) return false;
        // The contracted tree: degrees of all other vertices are unchanged,
        // so distributability only needs re-checking at the merged vertex.
        if (merged_cap < merged_deg - 1) return false;
    }
    return true;
}

inline EdgeSet first_children_edges(const CapacityTree& t) {
    if (!t.root_is_leaf()) throw std::invalid_argument("root of the tree is not a leaf");
    std::vector<VertexIdx> out;
    for (VertexIdx v = 0; v < t.size(); ++v)
        if (!t.children(v).empty()) out.push_back(t.children(v).front());
    return EdgeSet(t, std::move(out));
}

inline EdgeSet half_degree_edges(const CapacityTree& t) {
    if (!t.root_is_leaf()) throw std::invalid_argument("root of the tree is not a leaf");
    std::vector<VertexIdx> out;
    for (VertexIdx v = 0; v < t.size(); ++v) {
        int take = (t.degree(v) - 1) / 2;
        for (int i = 0; i < take && i < static_cast<int>(t.children(v).size()); ++i)
            out.push_back(t.children(v)[i]);
    }
    out.push_back(t.children(t.root()).front());
    return EdgeSet(t, std::move(out));
}

namespace detail {
inline void connected_subsets_rec(const CapacityTree& t, std::vector<VertexIdx>& cur,
                                  std::set<VertexIdx>& cur_set, std::set<VertexIdx>& banned,
                                  std::vector<std::vector<VertexIdx>>& out) {
    out.push_back(cur);
    std::vector<VertexIdx> frontier;
    for (VertexIdx v : cur) {
        for (VertexIdx c : t.children(v))
            if (!cur_set.count(c) && !banned.count(c)) frontier.push_back(c);
        VertexIdx p = t.parent(v);
        if (p != kNoVertex && !cur_set.count(p) && !banned.count(p)) frontier.push_back(p);
    }
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    std::vector<VertexIdx> banned_here;
    for (VertexIdx f : frontier) {
        cur.push_back(f);
        cur_set.insert(f);
        connected_subsets_rec(t, cur, cur_set, banned, out);
        cur.pop_back();
        cur_set.erase(f);
        banned.insert(f);
        banned_here.push_back(f);
    }
    for (VertexIdx f : banned_here) banned.erase(f);
}
}  // namespace detail

/// All connected vertex subsets of the tree.
inline std::vector<std::vector<VertexIdx>> connected_subsets(const CapacityTree& t) {
    std::vector<std::vector<VertexIdx>> out;
    std::set<VertexIdx> banned;
    for (VertexIdx v = 0; v < t.size(); ++v) {
        std::vector<VertexIdx> cur{v};
        std::set<VertexIdx> cur_set{v};
        detail::connected_subsets_rec(t, cur, cur_set, banned, out);
        banned.insert(v);
    }
    for (auto& s : out) std::sort(s.begin(), s.end());
    return out;
}

/// Rooted planar subtree induced by a connected vertex subset; structure and
/// child order inherited from the ambient tree.
struct SubTree {
    CapacityTree tree;
    std::vector<VertexIdx> to_ambient;     // sub vertex -> ambient vertex
    std::map<VertexIdx, VertexIdx> to_sub; // ambient vertex -> sub vertex
};

inline SubTree build_subtree(const CapacityTree& t, const std::vector<VertexIdx>& verts) {
    std::set<VertexIdx> in(verts.begin(), verts.end());
    VertexIdx top = kNoVertex;
    for (VertexIdx v : verts) {
        VertexIdx p = t.parent(v);
        if (p == kNoVertex || !in.count(p)) {
            if (top != kNoVertex) throw std::invalid_argument("vertex subset is not connected");
            top = v;
        }
    }
    SubTree out;
    std::vector<std::pair<VertexIdx, VertexIdx>> stack{{top, kNoVertex}};
    while (!stack.empty()) {
        auto [v, par_sub] = stack.back();
        stack.pop_back();
        VertexIdx sv = out.tree.add_vertex(t.name(v), t.capacity(v), par_sub);
        out.to_ambient.push_back(v);
        out.to_sub[v] = sv;
        const auto& kids = t.children(v);
        for (auto it = kids.rbegin(); it != kids.rend(); ++it)
            if (in.count(*it)) stack.push_back({*it, sv});
    }
    out.tree.finalize();
    return out;
}

}  // namespace captree
