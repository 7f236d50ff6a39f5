#pragma once

// Node centrality scores on the reasoning graph.
//
// Katz is the primary signal: scores satisfy x = alpha * M^T x + beta * 1,
// where M is the standard adjacency (M[i][j] = 1 iff edge i->j), so influence
// flows along edge direction and answer nodes accumulate mass from every
// short path that reaches them. The system is solved directly (Gaussian
// elimination) for small graphs and by fixed-point iteration beyond
// `dense_limit`; either way the residual must come out below 1e-10.
//
// Closeness, PageRank, and a Laplacian-energy centrality are provided for
// comparison reports only.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rgconf/common.hpp"
#include "rgconf/graph.hpp"

namespace rgconf {

// Estimate the spectral radius of a nonnegative matrix by power iteration
// with L1 renormalization. Nilpotent matrices (DAGs) collapse to zero.
inline double spectral_radius_estimate(const std::vector<std::vector<double>>& m) {
    const size_t n = m.size();
    if (n == 0) return 0.0;
    std::vector<double> x(n, 1.0), y(n, 0.0);
    double estimate = 0.0;
    const int iterations = 200;
    int tail = 0;
    double log_sum = 0.0;
    for (int it = 0; it < iterations; ++it) {
        double norm = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (size_t j = 0; j < n; ++j) acc += m[i][j] * x[j];
            y[i] = acc;
            norm += std::abs(acc);
        }
        if (norm < 1e-300) return 0.0;  // nilpotent: mass died out
        for (size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
        if (it >= iterations - 64) {
            // Geometric mean of the trailing growth factors; stable even for
            // periodic matrices such as isolated 2-cycles.
            log_sum += std::log(norm);
            ++tail;
        }
    }
    estimate = std::exp(log_sum / tail);
    return estimate;
}

struct KatzOptions {
    double tolerance = 1e-10;
    int dense_limit = 500;   // direct solve up to this many nodes
    int max_iterations = 200000;
};

namespace detail {

inline std::vector<double> gaussian_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const size_t n = b.size();
    for (size_t col = 0; col < n; ++col) {
        size_t pivot = col;
        for (size_t row = col + 1; row < n; ++row) {
            if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
        }
        if (std::abs(a[pivot][col]) < 1e-14) {
            throw DataError("Katz linear system is singular; alpha is too close to 1/lambda_max");
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (size_t row = col + 1; row < n; ++row) {
            double factor = a[row][col] / a[col][col];
            if (factor == 0.0) continue;
            for (size_t k = col; k < n; ++k) a[row][k] -= factor * a[col][k];
            b[row] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (size_t row = n; row-- > 0;) {
        double acc = b[row];
        for (size_t k = row + 1; k < n; ++k) acc -= a[row][k] * x[k];
        x[row] = acc / a[row][row];
    }
    return x;
}

}  // namespace detail

// Solve x = alpha * M^T x + beta * 1 for every node. Requires
// alpha < 1 / lambda_max(M); violations raise a ParamError naming the bound.
inline std::vector<double> katz_scores(const ReasoningGraph& graph, double alpha, double beta,
                                       const KatzOptions& options = {}) {
    const int n = graph.node_count();
    if (n == 0) return {};
    auto m = graph.adjacency_matrix();

    double radius = spectral_radius_estimate(m);
    if (radius > 1e-12) {
        double bound = 1.0 / radius;
        if (alpha >= bound) {
            throw ParamError("alpha " + std::to_string(alpha) +
                             " must be below 1/lambda_max = " + std::to_string(bound));
        }
    }

    std::vector<double> x;
    if (n <= options.dense_limit) {
        // (I - alpha * M^T) x = beta * 1
        std::vector<std::vector<double>> a(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(n), 0.0));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                a[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                    (i == j ? 1.0 : 0.0) - alpha * m[static_cast<size_t>(j)][static_cast<size_t>(i)];
            }
        }
        x = detail::gaussian_solve(std::move(a), std::vector<double>(static_cast<size_t>(n), beta));
    } else {
        x.assign(static_cast<size_t>(n), beta);
        std::vector<double> next(static_cast<size_t>(n), 0.0);
        int it = 0;
        for (; it < options.max_iterations; ++it) {
            double delta = 0.0;
            for (int v = 0; v < n; ++v) {
                double acc = beta;
                for (int u : graph.in(v)) acc += alpha * x[static_cast<size_t>(u)];
                next[static_cast<size_t>(v)] = acc;
                delta = std::max(delta, std::abs(acc - x[static_cast<size_t>(v)]));
            }
            x.swap(next);
            if (delta < options.tolerance * 1e-2) break;
        }
        if (it == options.max_iterations) throw DataError("Katz fixed-point iteration did not converge");
    }

    // Residual check: ||x - alpha*M^T x - beta*1||_inf
    double residual = 0.0;
    for (int v = 0; v < n; ++v) {
        double acc = beta;
        for (int u : graph.in(v)) acc += alpha * x[static_cast<size_t>(u)];
        residual = std::max(residual, std::abs(x[static_cast<size_t>(v)] - acc));
    }
    if (residual > 1e-9) {
        throw DataError("Katz solve residual " + std::to_string(residual) + " exceeds 1e-9");
    }
    return x;
}

// ---------------------------------------------------------------------------
// Comparison-only centrality variants
// ---------------------------------------------------------------------------

enum class CentralityVariant { katz, closeness, pagerank, laplacian };

inline const char* centrality_variant_name(CentralityVariant v) {
    switch (v) {
        case CentralityVariant::katz: return "katz";
        case CentralityVariant::closeness: return "closeness";
        case CentralityVariant::pagerank: return "pagerank";
        case CentralityVariant::laplacian: return "laplacian";
    }
    return "?";
}

namespace detail {

// Inward closeness with the reachability correction: how near a node sits to
// everything that can reach it.
inline std::vector<double> closeness_scores(const ReasoningGraph& graph) {
    const int n = graph.node_count();
    std::vector<double> scores(static_cast<size_t>(n), 0.0);
    if (n <= 1) return scores;
    for (int v = 0; v < n; ++v) {
        // BFS over incoming edges.
        std::vector<int> dist(static_cast<size_t>(n), -1);
        std::vector<int> queue{v};
        dist[static_cast<size_t>(v)] = 0;
        long total = 0;
        long reached = 0;
        for (size_t head = 0; head < queue.size(); ++head) {
            int u = queue[head];
            for (int w : graph.in(u)) {
                if (dist[static_cast<size_t>(w)] != -1) continue;
                dist[static_cast<size_t>(w)] = dist[static_cast<size_t>(u)] + 1;
                total += dist[static_cast<size_t>(w)];
                ++reached;
                queue.push_back(w);
            }
        }
        if (reached > 0 && total > 0) {
            double c = static_cast<double>(reached) / static_cast<double>(total);
            scores[static_cast<size_t>(v)] = c * static_cast<double>(reached) / static_cast<double>(n - 1);
        }
    }
    return scores;
}

inline std::vector<double> pagerank_scores(const ReasoningGraph& graph, double damping = 0.85) {
    const int n = graph.node_count();
    if (n == 0) return {};
    std::vector<double> x(static_cast<size_t>(n), 1.0 / n), next(static_cast<size_t>(n), 0.0);
    for (int it = 0; it < 10000; ++it) {
        double dangling = 0.0;
        for (int v = 0; v < n; ++v) {
            if (graph.out(v).empty()) dangling += x[static_cast<size_t>(v)];
        }
        double delta = 0.0;
        for (int v = 0; v < n; ++v) {
            double acc = 0.0;
            for (int u : graph.in(v)) {
                acc += x[static_cast<size_t>(u)] / static_cast<double>(graph.out(u).size());
            }
            double value = (1.0 - damping) / n + damping * (acc + dangling / n);
            next[static_cast<size_t>(v)] = value;
            delta += std::abs(value - x[static_cast<size_t>(v)]);
        }
        x.swap(next);
        if (delta < 1e-12) break;
    }
    return x;
}

// Laplacian-energy centrality on the undirected view: relative drop of
// E(G) = sum(d_i^2) + sum(d_i) when the node is removed.
inline std::vector<double> laplacian_scores(const ReasoningGraph& graph) {
    const int n = graph.node_count();
    std::vector<double> scores(static_cast<size_t>(n), 0.0);
    if (n == 0) return scores;

    std::set<std::pair<int, int>> undirected;
    for (const auto& e : graph.edges()) {
        undirected.insert({std::min(e.from, e.to), std::max(e.from, e.to)});
    }
    std::vector<long> degree(static_cast<size_t>(n), 0);
    for (const auto& [a, b] : undirected) {
        ++degree[static_cast<size_t>(a)];
        ++degree[static_cast<size_t>(b)];
    }
    auto energy = [](const std::vector<long>& deg) {
        double e = 0.0;
        for (long d : deg) e += static_cast<double>(d) * d + static_cast<double>(d);
        return e;
    };
    const double full = energy(degree);
    if (full <= 0.0) return scores;

    for (int v = 0; v < n; ++v) {
        std::vector<long> deg = degree;
        deg[static_cast<size_t>(v)] = 0;
        for (const auto& [a, b] : undirected) {
            if (a == v) --deg[static_cast<size_t>(b)];
            if (b == v) --deg[static_cast<size_t>(a)];
        }
        scores[static_cast<size_t>(v)] = (full - energy(deg)) / full;
    }
    return scores;
}

}  // namespace detail

inline std::vector<double> centrality_variant(const ReasoningGraph& graph, CentralityVariant variant,
                                              double alpha = 0.1, double beta = 1.0) {
    switch (variant) {
        case CentralityVariant::katz: return katz_scores(graph, alpha, beta);
        case CentralityVariant::closeness: return detail::closeness_scores(graph);
        case CentralityVariant::pagerank: return detail::pagerank_scores(graph);
        case CentralityVariant::laplacian: return detail::laplacian_scores(graph);
    }
    throw ParamError("unknown centrality variant");
}

}  // namespace rgconf
