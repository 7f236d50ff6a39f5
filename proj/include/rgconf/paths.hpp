#pragma once

// Path machinery shared by the convergence and weighting estimators. Works
// on any graph exposing node_count(), question_index(), out(i) and
// weight(i) — both ReasoningGraph and MergedGraph qualify.
//
// "Paths" are simple directed paths (no repeated nodes) from the question
// node with at most `max_len` edges; the hop cap keeps the set finite even
// though inter-edges are bidirectional.
//
// The Monte Carlo estimator runs M independent random walks of at most L
// iterations. Each iteration first checks arrival at the target (crediting
// the walk's current attenuated weight), then steps to a uniformly random
// successor and multiplies the weight by gamma. A walk that reaches a dead
// end is abandoned. Walks may revisit nodes; the companion dynamic program
// used in the tests integrates over exactly the same walk distribution.

#include <cstdint>
#include <random>
#include <vector>

#include "rgconf/common.hpp"

namespace rgconf {

namespace detail {

template <typename G>
void simple_path_dfs(const G& graph, int current, int target, int max_len, int depth,
                     std::vector<bool>& on_path, std::vector<int>& path, std::uint64_t& count,
                     double& weighted_sum, double weight_product,
                     std::vector<std::vector<int>>* collect) {
    if (current == target) {
        ++count;
        weighted_sum += weight_product;
        if (collect) collect->push_back(path);
        return;
    }
    if (depth == max_len) return;
    for (int next : graph.out(current)) {
        if (on_path[static_cast<size_t>(next)]) continue;
        on_path[static_cast<size_t>(next)] = true;
        path.push_back(next);
        simple_path_dfs(graph, next, target, max_len, depth + 1, on_path, path, count, weighted_sum,
                        weight_product * graph.weight(next), collect);
        path.pop_back();
        on_path[static_cast<size_t>(next)] = false;
    }
}

}  // namespace detail

template <typename G>
struct PathEnumeration {
    std::uint64_t count = 0;      // number of simple paths
    double weighted_sum = 0.0;    // sum over paths of the node-weight product
    std::vector<std::vector<int>> paths;  // filled only when requested
};

// Exhaustive DFS over simple paths question -> target with <= max_len edges.
template <typename G>
PathEnumeration<G> enumerate_paths(const G& graph, int target, int max_len, bool collect_paths = false) {
    if (max_len < 1) throw ParamError("max path length must be >= 1");
    PathEnumeration<G> result;
    std::vector<bool> on_path(static_cast<size_t>(graph.node_count()), false);
    int q = graph.question_index();
    on_path[static_cast<size_t>(q)] = true;
    std::vector<int> path{q};
    std::vector<std::vector<int>>* collect = collect_paths ? &result.paths : nullptr;
    // Question and answer nodes weigh 1, so seeding the product with the
    // question's weight keeps the invariant "product over path nodes".
    detail::simple_path_dfs(graph, q, target, max_len, 0, on_path, path, result.count,
                            result.weighted_sum, static_cast<double>(graph.weight(q)), collect);
    return result;
}

template <typename G>
std::uint64_t count_simple_paths(const G& graph, int target, int max_len) {
    return enumerate_paths(graph, target, max_len).count;
}

// Monte Carlo estimate of the attenuated path mass reaching `target`.
// When `use_node_weights` is set (the merged-graph extension), each step onto
// a node additionally multiplies the walk weight by that node's weight.
// Deterministic for a fixed seed.
template <typename G>
double sample_path_mass(const G& graph, int target, long num_walks, int max_len, double gamma,
                        std::uint64_t seed, bool use_node_weights = false) {
    if (num_walks < 1) throw ParamError("walk count must be >= 1");
    if (max_len < 1) throw ParamError("max path length must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ParamError("gamma must lie in (0, 1)");

    std::mt19937_64 rng(seed);
    const int q = graph.question_index();
    double accumulated = 0.0;
    for (long walk = 0; walk < num_walks; ++walk) {
        int v = q;
        double w = 1.0;
        for (int hop = 1; hop <= max_len; ++hop) {
            if (v == target) {
                accumulated += w;
                break;
            }
            const auto& successors = graph.out(v);
            if (successors.empty()) break;
            int next = successors[bounded_index(rng(), successors.size())];
            w *= gamma;
            if (use_node_weights) w *= graph.weight(next);
            v = next;
        }
    }
    return accumulated / static_cast<double>(num_walks);
}

}  // namespace rgconf
