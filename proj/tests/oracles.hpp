#pragma once

// Test-side oracles: brute-force reference computations kept independent of
// the construction paths they check.

#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

#include "captree/inversion.hpp"
#include "captree/labelling.hpp"
#include "captree/tree.hpp"

namespace oracles {

using namespace captree;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fixture_path(const std::string& rel) {
    return std::string(CAPTREE_FIXTURE_DIR) + "/" + rel;
}

inline CapacityTree load_tree(const std::string& rel) {
    return CapacityTree::parse(read_file(fixture_path(rel)));
}

inline std::vector<std::string> small_fixture_names() {
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(fixture_path("small")))
        if (e.path().extension() == ".ctree") names.push_back("small/" + e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

/// Blind search: every assignment of the label set to the component that has
/// no inverted vertex pair inside the component.
inline std::vector<Labelling> inversion_free_assignments(const CapacityTree& t,
                                                         const std::vector<VertexIdx>& comp,
                                                         const std::vector<Label>& labels) {
    std::vector<Labelling> out;
    for (const auto& cand : enumerate_assignments(t, comp, labels))
        if (inversion_free_on(cand, comp)) out.push_back(cand);
    return out;
}

/// Blind search over every split of the joint labels of (vi, vj) for the
/// splits leaving the pair inversion-free.
inline std::vector<Labelling> redistribution_candidates(const Labelling& sigma, VertexIdx vi,
                                                        VertexIdx vj) {
    const CapacityTree& t = sigma.tree();
    std::vector<Label> pool = sigma.at(vi);
    pool.insert(pool.end(), sigma.at(vj).begin(), sigma.at(vj).end());
    std::sort(pool.begin(), pool.end());
    int k = t.capacity(vi);
    int n = static_cast<int>(pool.size());
    std::vector<Labelling> out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    auto consider = [&]() {
        std::vector<Label> at_i;
        std::set<int> used(idx.begin(), idx.end());
        std::vector<Label> at_j;
        for (int i = 0; i < n; ++i)
            (used.count(i) ? at_i : at_j).push_back(pool[i]);
        Labelling cand = sigma;
        cand.unassign(vi);
        cand.unassign(vj);
        cand.assign(vi, at_i);
        cand.assign(vj, at_j);
        if (!pair_inverted(cand, vi, vj)) out.push_back(std::move(cand));
    };
    if (k == 0 || k == n) {
        consider();
        return out;
    }
    while (true) {
        consider();
        int j = k - 1;
        while (j >= 0 && idx[j] == n - k + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int l = j + 1; l < k; ++l) idx[l] = idx[l - 1] + 1;
    }
    return out;
}

/// Classical adjacent/full inversions of a permutation written on a
/// unit-capacity path in DFS order.
inline std::set<std::pair<VertexIdx, VertexIdx>> classical_inversions(const CapacityTree& t,
                                                                      const Labelling& sigma,
                                                                      bool adjacent_only) {
    std::set<std::pair<VertexIdx, VertexIdx>> out;
    const auto& order = t.dfs_order();
    for (size_t i = 0; i < order.size(); ++i)
        for (size_t j = i + 1; j < order.size(); ++j) {
            if (adjacent_only && j != i + 1) continue;
            if (sigma.at(order[i]).front() > sigma.at(order[j]).front())
                out.insert({order[i], order[j]});
        }
    return out;
}

/// All label subsets of {1..N} of a given size.
inline std::vector<std::vector<Label>> label_subsets(int n, int k) {
    std::vector<std::vector<Label>> out;
    if (k == 0) { out.push_back({}); return out; }
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        std::vector<Label> s;
        for (int i : idx) s.push_back(i + 1);
        out.push_back(s);
        int j = k - 1;
        while (j >= 0 && idx[j] == n - k + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int l = j + 1; l < k; ++l) idx[l] = idx[l - 1] + 1;
    }
    return out;
}

/// Rooted planar tree shapes on n vertices as parent vectors (parent[i] < i).
inline std::vector<std::vector<int>> tree_shapes(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> parent(n, -1);
    std::function<void(int)> rec = [&](int i) {
        if (i == n) { out.push_back(parent); return; }
        for (int p = 0; p < i; ++p) { parent[i] = p; rec(i + 1); }
    };
    if (n >= 1) rec(1);
    return out;
}

inline CapacityTree tree_from_shape(const std::vector<int>& parent, const std::vector<int>& caps) {
    CapacityTree t;
    for (size_t i = 0; i < parent.size(); ++i)
        t.add_vertex("n" + std::to_string(i), caps[i], parent[i]);
    t.finalize();
    return t;
}

}  // namespace oracles
