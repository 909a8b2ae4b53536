#include <catch2/catch_amalgamated.hpp>

#include "captree/weak_order.hpp"
#include "oracles.hpp"

using namespace captree;

namespace {

CapacityTree path_tree(int n) {
    CapacityTree t;
    for (int i = 0; i < n; ++i) t.add_vertex("v" + std::to_string(i + 1), 1, i - 1 < 0 ? kNoVertex : i - 1);
    t.finalize();
    return t;
}

Labelling path_labelling(const CapacityTree& t, const std::vector<Label>& word) {
    Labelling l(t);
    for (int i = 0; i < static_cast<int>(word.size()); ++i) l.assign(i, {word[i]});
    return l;
}

// Weak order of the symmetric group: permutations with an arc for each
// descent-removing adjacent transposition.
struct BruhatOracle {
    std::vector<std::vector<int>> perms;
    std::map<std::vector<int>, int> index;
    std::set<std::pair<int, int>> covers;  // (upper, lower)

    explicit BruhatOracle(int n) {
        std::vector<int> w(n);
        for (int i = 0; i < n; ++i) w[i] = i + 1;
        do {
            index[w] = static_cast<int>(perms.size());
            perms.push_back(w);
        } while (std::next_permutation(w.begin(), w.end()));
        for (int i = 0; i < static_cast<int>(perms.size()); ++i) {
            for (int k = 0; k + 1 < n; ++k) {
                if (perms[i][k] > perms[i][k + 1]) {
                    std::vector<int> lower = perms[i];
                    std::swap(lower[k], lower[k + 1]);
                    covers.insert({i, index.at(lower)});
                }
            }
        }
    }
    static int inversions(const std::vector<int>& w) {
        int inv = 0;
        for (size_t i = 0; i < w.size(); ++i)
            for (size_t j = i + 1; j < w.size(); ++j)
                if (w[i] > w[j]) ++inv;
        return inv;
    }
};

}  // namespace

TEST_CASE("local sort step") {
    CapacityTree p2 = path_tree(2);
    Labelling fixed = local_sort_step(path_labelling(p2, {2, 1}), 0, 1);
    REQUIRE(fixed == path_labelling(p2, {1, 2}));

    CapacityTree p3 = path_tree(3);
    Labelling stepped = local_sort_step(path_labelling(p3, {3, 1, 2}), 0, 1);
    REQUIRE(stepped == path_labelling(p3, {1, 3, 2}));

    REQUIRE_THROWS_AS(local_sort_step(path_labelling(p3, {1, 2, 3}), 0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(local_sort_step(path_labelling(p3, {3, 2, 1}), 0, 2), std::invalid_argument);

    // Hub star: every local step matches the blind redistribution oracle.
    CapacityTree t = oracles::load_tree("small/hub2star.ctree");
    for (const auto& sigma : enumerate_labellings(t)) {
        for (VertexIdx c : t.edges()) {
            VertexIdx p = t.parent(c);
            if (!pair_inverted(sigma, p, c)) continue;
            auto frees = oracles::redistribution_candidates(sigma, p, c);
            REQUIRE(frees.size() == 1);
            REQUIRE(local_sort_step(sigma, p, c) == frees.front());
        }
    }
}

TEST_CASE("potential") {
    CapacityTree p2 = path_tree(2);
    REQUIRE(potential(path_labelling(p2, {1, 2})) == 0);
    REQUIRE(potential(path_labelling(p2, {2, 1})) == 1);

    CapacityTree p3 = path_tree(3);
    REQUIRE(potential(path_labelling(p3, {3, 2, 1})) == 4);

    for (const auto& name : oracles::small_fixture_names()) {
        CapacityTree t = oracles::load_tree(name);
        INFO(name);
        REQUIRE(potential(Labelling::sorted(t)) == 0);
    }
}

TEST_CASE("greedy sort") {
    CapacityTree p3 = path_tree(3);
    SortTrace none = greedy_sort(path_labelling(p3, {1, 2, 3}), SortStrategy::First);
    REQUIRE(none.step_count() == 0);

    SortTrace three = greedy_sort(path_labelling(p3, {3, 2, 1}), SortStrategy::First);
    REQUIRE(three.step_count() == 3);  // bubble sort distance
    REQUIRE(three.terminal == path_labelling(p3, {1, 2, 3}));

    // Hub star, all labellings, all strategies: terminal is the sorted
    // labelling and the potential bounds the step count.
    CapacityTree t = oracles::load_tree("small/hub2star.ctree");
    Labelling sorted = Labelling::sorted(t);
    for (const auto& sigma : enumerate_labellings(t)) {
        long long f = potential(sigma);
        for (auto strat : {SortStrategy::First, SortStrategy::LargestPotentialDrop}) {
            SortTrace tr = greedy_sort(sigma, strat);
            REQUIRE(tr.terminal == sorted);
            REQUIRE(tr.step_count() <= f);
        }
        for (unsigned long long seed : {1ull, 42ull}) {
            SortTrace tr = greedy_sort(sigma, SortStrategy::Random, seed);
            REQUIRE(tr.terminal == sorted);
            REQUIRE(tr.step_count() <= f);
        }
    }
}

TEST_CASE("weak order digraph matches the Bruhat oracle on paths") {
    for (int n = 2; n <= 4; ++n) {
        CapacityTree p = path_tree(n);
        WeakOrderDigraph g = build_weak_order(p);
        BruhatOracle oracle(n);
        REQUIRE(g.nodes.size() == oracle.perms.size());
        REQUIRE(g.acyclic);
        REQUIRE(g.sinks.size() == 1);
        REQUIRE(g.potential_strictly_decreasing);

        // Identify each labelling with its permutation word and compare arcs.
        auto word_of = [&](const Labelling& l) {
            std::vector<int> w;
            for (VertexIdx v = 0; v < n; ++v) w.push_back(l.at(v).front());
            return w;
        };
        std::set<std::pair<int, int>> arcs;
        for (const auto& a : g.arcs)
            arcs.insert({oracle.index.at(word_of(g.nodes[a.upper])),
                         oracle.index.at(word_of(g.nodes[a.lower]))});
        REQUIRE(arcs == oracle.covers);

        // Graded: each arc removes exactly one classical inversion.
        for (const auto& a : g.arcs)
            REQUIRE(BruhatOracle::inversions(word_of(g.nodes[a.upper])) ==
                    BruhatOracle::inversions(word_of(g.nodes[a.lower])) + 1);

        // Unique maximal element too.
        std::vector<int> indeg(g.nodes.size(), 0);
        for (const auto& a : g.arcs) ++indeg[a.lower];
        int sources = 0;
        for (size_t i = 0; i < g.nodes.size(); ++i)
            if (indeg[i] == 0) ++sources;
        REQUIRE(sources == 1);
    }

    CapacityTree p2 = path_tree(2);
    WeakOrderDigraph g2 = build_weak_order(p2);
    REQUIRE(g2.nodes.size() == 2);
    REQUIRE(g2.arcs.size() == 1);
}

TEST_CASE("weak order on the hub star") {
    CapacityTree t = oracles::load_tree("small/hub2star.ctree");
    WeakOrderDigraph g = build_weak_order(t);
    REQUIRE(g.nodes.size() == 60);
    REQUIRE(g.acyclic);
    REQUIRE(g.sinks.size() == 1);
    REQUIRE(g.nodes[g.sinks.front()] == Labelling::sorted(t));
    REQUIRE(g.potential_strictly_decreasing);

    REQUIRE_THROWS(build_weak_order(t, 10));
}

TEST_CASE("every non-sorted labelling admits a local step") {
    for (const auto& name : oracles::small_fixture_names()) {
        CapacityTree t = oracles::load_tree(name);
        Labelling sorted = Labelling::sorted(t);
        for (const auto& sigma : enumerate_labellings(t)) {
            if (sigma == sorted) continue;
            bool has = false;
            for (VertexIdx c : t.edges())
                if (pair_inverted(sigma, t.parent(c), c)) { has = true; break; }
            INFO(name << " " << sigma.key());
            REQUIRE(has);
        }
    }
}

TEST_CASE("check confluence") {
    CapacityTree single = CapacityTree::parse("node x parent=- cap=2\n");
    REQUIRE(check_confluence(single).ok);

    CapacityTree t = oracles::load_tree("small/hub2star.ctree");
    ConfluenceResult res = check_confluence(t);
    REQUIRE(res.ok);
    REQUIRE(res.labellings_checked > 60);  // includes restrictions
}

TEST_CASE("dot export and trace rendering") {
    CapacityTree p2 = path_tree(2);
    WeakOrderDigraph g = build_weak_order(p2);
    std::string dot = to_dot(p2, g);
    REQUIRE(dot.find("digraph weak_order") != std::string::npos);
    REQUIRE(dot.find("->") != std::string::npos);

    SortTrace tr = greedy_sort(path_labelling(p2, {2, 1}), SortStrategy::First);
    std::string text = render_trace(p2, tr);
    REQUIRE(text.find("step 1: swap (v1,v2)") != std::string::npos);
    REQUIRE(text.find("steps 1") != std::string::npos);
}
