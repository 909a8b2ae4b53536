#pragma once

#include <functional>

#include "captree/tree.hpp"

namespace captree {

/// Assignment of labels to a subset of the tree's vertices, exactly
/// capacity(v) labels per assigned vertex.  A full labelling assigns every
/// vertex and partitions {1..total_capacity}; partial labellings describe a
/// single component with a proscribed label set.
class Labelling {
public:
    explicit Labelling(const CapacityTree& t)
        : tree_(&t), at_(t.size()), assigned_(t.size(), 0) {}

    const CapacityTree& tree() const { return *tree_; }

    void assign(VertexIdx v, std::vector<Label> labels) {
        std::sort(labels.begin(), labels.end());
        if (static_cast<int>(labels.size()) != tree_->capacity(v))
            throw std::invalid_argument("label count does not match capacity of " + tree_->name(v));
        for (Label l : labels) {
            if (l < 1 || l > tree_->total_capacity())
                throw std::invalid_argument("label out of range: " + std::to_string(l));
            auto [it, fresh] = host_.insert({l, v});
            if (!fresh) throw std::invalid_argument("label assigned twice: " + std::to_string(l));
        }
        if (assigned_[v]) throw std::invalid_argument("vertex assigned twice: " + tree_->name(v));
        at_[v] = std::move(labels);
        assigned_[v] = 1;
    }

    void unassign(VertexIdx v) {
        for (Label l : at_[v]) host_.erase(l);
        at_[v].clear();
        assigned_[v] = 0;
    }

    bool assigned(VertexIdx v) const { return assigned_[v]; }
    const std::vector<Label>& at(VertexIdx v) const { return at_[v]; }

    std::optional<VertexIdx> host(Label l) const {
        auto it = host_.find(l);
        if (it == host_.end()) return std::nullopt;
        return it->second;
    }

    bool is_full() const {
        for (char a : assigned_)
            if (!a) return false;
        return true;
    }

    std::vector<VertexIdx> assigned_vertices() const {
        std::vector<VertexIdx> out;
        for (VertexIdx v : tree_->dfs_order())
            if (assigned_[v]) out.push_back(v);
        return out;
    }

    std::vector<Label> all_labels() const {
        std::vector<Label> out;
        for (const auto& [l, v] : host_) out.push_back(l);
        return out;
    }

    /// Canonical one-line form, assigned vertices in DFS order.
    std::string key() const {
        std::ostringstream out;
        bool first = true;
        for (VertexIdx v : tree_->dfs_order()) {
            if (!assigned_[v]) continue;
            if (!first) out << " ";
            first = false;
            out << tree_->name(v) << "={";
            for (size_t i = 0; i < at_[v].size(); ++i) {
                if (i) out << ",";
                out << at_[v][i];
            }
            out << "}";
        }
        return out.str();
    }

    /// Multi-line text form: `assign <id> = {k1,k2,...}` per assigned vertex.
    std::string serialize() const {
        std::ostringstream out;
        for (VertexIdx v : tree_->dfs_order()) {
            if (!assigned_[v]) continue;
            out << "assign " << tree_->name(v) << " = {";
            for (size_t i = 0; i < at_[v].size(); ++i) {
                if (i) out << ",";
                out << at_[v][i];
            }
            out << "}\n";
        }
        return out.str();
    }

    static Labelling parse(const CapacityTree& t, const std::string& text) {
        Labelling out(t);
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
            if (word != "assign") throw ParseError("line " + std::to_string(lineno) + ": expected 'assign'");
            std::string id, eq, rest;
            if (!(ls >> id >> eq)) throw ParseError("line " + std::to_string(lineno) + ": malformed assignment");
            if (eq != "=") throw ParseError("line " + std::to_string(lineno) + ": expected '='");
            std::getline(ls, rest);
            auto lb = rest.find('{');
            auto rb = rest.find('}');
            if (lb == std::string::npos || rb == std::string::npos || rb < lb)
                throw ParseError("line " + std::to_string(lineno) + ": expected {..}");
            std::string inner = rest.substr(lb + 1, rb - lb - 1);
            std::vector<Label> labels;
            std::istringstream is(inner);
            std::string tok;
            while (std::getline(is, tok, ',')) {
                tok.erase(std::remove_if(tok.begin(), tok.end(), [](char c) { return std::isspace(c); }),
                          tok.end());
                if (tok.empty()) continue;
                if (tok.find_first_not_of("0123456789") != std::string::npos)
                    throw ParseError("line " + std::to_string(lineno) + ": bad label " + tok);
                labels.push_back(std::stoi(tok));
            }
            out.assign(t.require(id), std::move(labels));
        }
        return out;
    }

    /// The labelling with every label at its destination.
    static Labelling sorted(const CapacityTree& t) {
        Labelling out(t);
        for (VertexIdx v = 0; v < t.size(); ++v) out.assign(v, t.dest_labels(v));
        return out;
    }

    friend bool operator==(const Labelling& a, const Labelling& b) {
        return a.assigned_ == b.assigned_ && a.at_ == b.at_;
    }
    friend bool operator<(const Labelling& a, const Labelling& b) { return a.at_ < b.at_; }

private:
    const CapacityTree* tree_;
    std::vector<std::vector<Label>> at_;
    std::vector<char> assigned_;
    std::map<Label, VertexIdx> host_;
};

namespace detail {
inline void enumerate_rec(const CapacityTree& t, const std::vector<VertexIdx>& verts, size_t i,
                          std::vector<Label>& pool, Labelling& cur,
                          const std::function<void(const Labelling&)>& emit) {
    if (i == verts.size()) {
        emit(cur);
        return;
    }
    VertexIdx v = verts[i];
    int k = t.capacity(v);
    std::vector<int> idx(k);
    for (int j = 0; j < k; ++j) idx[j] = j;
    auto run = [&]() {
        std::vector<Label> chosen;
        for (int j : idx) chosen.push_back(pool[j]);
        std::vector<Label> rest;
        std::set<int> used(idx.begin(), idx.end());
        for (int j = 0; j < static_cast<int>(pool.size()); ++j)
            if (!used.count(j)) rest.push_back(pool[j]);
        cur.assign(v, chosen);
        std::swap(pool, rest);
        enumerate_rec(t, verts, i + 1, pool, cur, emit);
        std::swap(pool, rest);
        cur.unassign(v);
    };
    if (k == 0) {
        cur.assign(v, {});
        enumerate_rec(t, verts, i + 1, pool, cur, emit);
        cur.unassign(v);
        return;
    }
    if (k > static_cast<int>(pool.size())) throw std::invalid_argument("label pool too small");
    // Standard combination enumeration in lexicographic order.
    while (true) {
        run();
        int j = k - 1;
        while (j >= 0 && idx[j] == static_cast<int>(pool.size()) - k + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int l = j + 1; l < k; ++l) idx[l] = idx[l - 1] + 1;
    }
}
}  // namespace detail

/// All assignments of `labels` to the component `verts` (capacity many per
/// vertex), in a deterministic order.  Throws when more than `bound` exist.
inline std::vector<Labelling> enumerate_assignments(const CapacityTree& t,
                                                    std::vector<VertexIdx> verts,
                                                    std::vector<Label> labels,
                                                    long long bound = 50000) {
    std::sort(verts.begin(), verts.end(),
              [&](VertexIdx a, VertexIdx b) { return t.dfs_index(a) < t.dfs_index(b); });
    int need = 0;
    for (VertexIdx v : verts) need += t.capacity(v);
    if (need != static_cast<int>(labels.size()))
        throw std::invalid_argument("label count does not match component capacity");
    std::sort(labels.begin(), labels.end());
    std::vector<Labelling> out;
    Labelling cur(t);
    detail::enumerate_rec(t, verts, 0, labels, cur, [&](const Labelling& l) {
        if (static_cast<long long>(out.size()) >= bound)
            throw std::runtime_error("enumeration bound exceeded");
        out.push_back(l);
    });
    return out;
}

/// All full labellings of the tree.
inline std::vector<Labelling> enumerate_labellings(const CapacityTree& t, long long bound = 50000) {
    std::vector<Label> labels(t.total_capacity());
    for (int i = 0; i < t.total_capacity(); ++i) labels[i] = i + 1;
    return enumerate_assignments(t, t.dfs_order(), labels, bound);
}

inline long long count_labellings(const CapacityTree& t) {
    // (sum cap)! / prod cap(v)!, computed incrementally to avoid overflow for
    // desk-scale inputs.
    long long res = 1;
    int placed = 0;
    for (VertexIdx v = 0; v < t.size(); ++v) {
        for (int j = 1; j <= t.capacity(v); ++j) {
            res = res * (placed + j) / j;
        }
        placed += t.capacity(v);
    }
    return res;
}

}  // namespace captree
