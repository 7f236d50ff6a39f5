#pragma once

// Directed reasoning graph over one question node, step nodes, and
// deduplicated answer nodes. Construction follows the sampled chains
// directly: the question feeds each chain's first step, consecutive steps
// are linked by forward intra-edges, each chain's last step feeds its answer
// node, and every equivalence pair contributes a bidirectional inter-edge
// between steps of different chains.
//
// Cycle policy: a single inter-pair forms a 2-cycle between its two steps;
// those are retained (downstream path operations walk simple paths, which
// neutralizes them). Simple cycles of length >= 3 can only arise from
// combinations of inter-edges and are broken deterministically by discarding
// the inter-edge whose pair was found latest. Intra-edges are never removed.
//
// merge_equivalent quotients the graph by the union-find closure of the
// pairs. Inter-edges collapse into self-loops and vanish; each merged step
// class carries an integer weight equal to the number of original steps it
// absorbed. Crossing merges can still create cycles between classes; the
// merged graph is made fully acyclic by dropping the canonically largest
// edge of each remaining cycle.
//
// Node ordering is canonical everywhere (question, then steps by
// (chain, step), then answers lexicographically), so matrices, traversals,
// and dumps are reproducible.

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgconf/chains.hpp"
#include "rgconf/common.hpp"
#include "rgconf/equivalence.hpp"

namespace rgconf {

enum class NodeKind { question, step, answer };

inline const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::question: return "question";
        case NodeKind::step: return "step";
        case NodeKind::answer: return "answer";
    }
    return "?";
}

struct GraphNode {
    NodeKind kind = NodeKind::question;
    StepRef step{};       // valid iff kind == step
    std::string answer;   // canonical key, valid iff kind == answer

    std::string id() const {
        switch (kind) {
            case NodeKind::question: return "Q";
            case NodeKind::step:
                return "s" + std::to_string(step.chain_index) + "_" + std::to_string(step.step_index);
            case NodeKind::answer: return "ans:" + answer;
        }
        return "?";
    }
};

enum class EdgeLabel { intra, inter };

struct GraphEdge {
    int from = 0;
    int to = 0;
    EdgeLabel label = EdgeLabel::intra;
    int pair_rank = -1;  // index into the pair list for inter-edges

    bool operator==(const GraphEdge&) const = default;
};

struct EdgeRemoval {
    GraphEdge edge;
    std::string from_id;
    std::string to_id;
};

struct AcyclicReport {
    std::vector<EdgeRemoval> removed;
};

namespace detail {

// Deterministic BFS shortest path src -> dst over sorted adjacency,
// optionally excluding one node entirely. Returns the node sequence
// [src, ..., dst], or empty if unreachable.
inline std::vector<int> bfs_path(const std::vector<std::vector<int>>& out, int src, int dst, int banned) {
    if (src == banned || dst == banned) return {};
    std::vector<int> parent(out.size(), -2);
    std::vector<int> queue;
    queue.push_back(src);
    parent[static_cast<size_t>(src)] = -1;
    for (size_t head = 0; head < queue.size(); ++head) {
        int u = queue[head];
        if (u == dst) break;
        for (int v : out[static_cast<size_t>(u)]) {
            if (v == banned || parent[static_cast<size_t>(v)] != -2) continue;
            parent[static_cast<size_t>(v)] = u;
            queue.push_back(v);
        }
    }
    if (parent[static_cast<size_t>(dst)] == -2) return {};
    std::vector<int> path;
    for (int v = dst; v != -1; v = parent[static_cast<size_t>(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

inline std::vector<std::vector<int>> adjacency_from_edges(size_t n, const std::vector<GraphEdge>& edges) {
    std::vector<std::vector<int>> out(n);
    for (const auto& e : edges) out[static_cast<size_t>(e.from)].push_back(e.to);
    for (auto& row : out) std::sort(row.begin(), row.end());
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ReasoningGraph
// ---------------------------------------------------------------------------

class ReasoningGraph {
public:
    ReasoningGraph() = default;

    static ReasoningGraph assemble(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges) {
        ReasoningGraph g;
        g.nodes_ = std::move(nodes);
        std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
            return std::tie(a.from, a.to) < std::tie(b.from, b.to);
        });
        g.edges_ = std::move(edges);
        g.out_.assign(g.nodes_.size(), {});
        g.in_.assign(g.nodes_.size(), {});
        for (size_t i = 0; i < g.edges_.size(); ++i) {
            const auto& e = g.edges_[i];
            g.out_[static_cast<size_t>(e.from)].push_back(e.to);
            g.in_[static_cast<size_t>(e.to)].push_back(e.from);
            g.edge_index_[{e.from, e.to}] = i;
        }
        for (size_t i = 0; i < g.nodes_.size(); ++i) {
            if (g.nodes_[i].kind == NodeKind::answer) g.answer_indices_.push_back(static_cast<int>(i));
        }
        return g;
    }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int question_index() const { return 0; }
    const GraphNode& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    const std::vector<int>& out(int i) const { return out_[static_cast<size_t>(i)]; }
    const std::vector<int>& in(int i) const { return in_[static_cast<size_t>(i)]; }
    const std::vector<int>& answer_indices() const { return answer_indices_; }
    int weight(int /*i*/) const { return 1; }

    std::optional<int> find_step(StepRef ref) const {
        for (size_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].kind == NodeKind::step && nodes_[i].step == ref) return static_cast<int>(i);
        }
        return std::nullopt;
    }

    std::optional<int> find_answer(std::string_view canonical) const {
        for (int i : answer_indices_) {
            if (nodes_[static_cast<size_t>(i)].answer == canonical) return i;
        }
        return std::nullopt;
    }

    bool has_edge(int from, int to) const { return edge_index_.count({from, to}) > 0; }

    const GraphEdge* edge_between(int from, int to) const {
        auto it = edge_index_.find({from, to});
        return it == edge_index_.end() ? nullptr : &edges_[it->second];
    }

    // Standard orientation: M[i][j] = 1 iff edge i -> j exists.
    std::vector<std::vector<double>> adjacency_matrix() const {
        std::vector<std::vector<double>> m(nodes_.size(), std::vector<double>(nodes_.size(), 0.0));
        for (const auto& e : edges_) m[static_cast<size_t>(e.from)][static_cast<size_t>(e.to)] = 1.0;
        return m;
    }

    nlohmann::json to_json() const {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : nodes_) {
            nodes.push_back({{"id", n.id()}, {"kind", node_kind_name(n.kind)}, {"weight", 1}});
        }
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& e : edges_) {
            edges.push_back({{"from", nodes_[static_cast<size_t>(e.from)].id()},
                             {"to", nodes_[static_cast<size_t>(e.to)].id()},
                             {"label", e.label == EdgeLabel::intra ? "intra" : "inter"}});
        }
        return nlohmann::json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    }

private:
    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::vector<std::vector<int>> out_;
    std::vector<std::vector<int>> in_;
    std::map<std::pair<int, int>, size_t> edge_index_;
    std::vector<int> answer_indices_;
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

inline ReasoningGraph build_graph(const QuestionRecord& record, const std::vector<EquivalencePair>& pairs) {
    if (record.chains.empty()) throw DataError("cannot build a graph from zero chains");

    std::vector<GraphNode> nodes;
    nodes.push_back(GraphNode{NodeKind::question, {}, {}});

    std::map<StepRef, int> step_index;
    for (const auto& chain : record.chains) {
        for (const auto& step : chain.steps) {
            StepRef ref{step.chain_index, step.step_index};
            step_index[ref] = static_cast<int>(nodes.size());
            nodes.push_back(GraphNode{NodeKind::step, ref, {}});
        }
    }

    std::map<std::string, int> answer_index;  // canonical -> node, lexicographic order
    for (const auto& key : distinct_answers(record)) {
        answer_index[key.canonical] = static_cast<int>(nodes.size());
        nodes.push_back(GraphNode{NodeKind::answer, {}, key.canonical});
    }

    std::vector<GraphEdge> edges;
    for (const auto& chain : record.chains) {
        int prev = 0;  // question node
        for (const auto& step : chain.steps) {
            int cur = step_index.at(StepRef{step.chain_index, step.step_index});
            edges.push_back(GraphEdge{prev, cur, EdgeLabel::intra, -1});
            prev = cur;
        }
        int ans = answer_index.at(canonicalize_answer(chain.answer_text));
        edges.push_back(GraphEdge{prev, ans, EdgeLabel::intra, -1});
    }

    for (size_t r = 0; r < pairs.size(); ++r) {
        const auto& pair = pairs[r];
        auto a = step_index.find(pair.left);
        auto b = step_index.find(pair.right);
        if (a == step_index.end() || b == step_index.end()) {
            throw DataError("equivalence pair references an unknown step (chain " +
                            std::to_string(pair.left.chain_index) + " step " +
                            std::to_string(pair.left.step_index) + " / chain " +
                            std::to_string(pair.right.chain_index) + " step " +
                            std::to_string(pair.right.step_index) + ")");
        }
        if (pair.left.chain_index == pair.right.chain_index) {
            throw DataError("equivalence pair links steps of the same chain");
        }
        edges.push_back(GraphEdge{a->second, b->second, EdgeLabel::inter, static_cast<int>(r)});
        edges.push_back(GraphEdge{b->second, a->second, EdgeLabel::inter, static_cast<int>(r)});
    }

    return ReasoningGraph::assemble(std::move(nodes), std::move(edges));
}

namespace detail {

// Locate a simple directed cycle of length >= 3 over the given edge set.
// Every such cycle must pass through an inter-edge (intra-edges only move
// forward within a chain), so it suffices to test, for each edge u->v,
// whether some successor w != u of v reaches u without passing through v.
// Returns the edge list of one cycle, or empty.
inline std::vector<GraphEdge> find_cycle_ge3(const std::vector<GraphNode>& nodes,
                                             const std::vector<GraphEdge>& edges) {
    auto out = adjacency_from_edges(nodes.size(), edges);
    std::map<std::pair<int, int>, const GraphEdge*> lookup;
    for (const auto& e : edges) lookup[{e.from, e.to}] = &e;

    for (const auto& e : edges) {
        for (int w : out[static_cast<size_t>(e.to)]) {
            if (w == e.from) continue;
            std::vector<int> path = bfs_path(out, w, e.from, /*banned=*/e.to);
            if (path.empty()) continue;
            std::vector<GraphEdge> cycle;
            cycle.push_back(e);
            cycle.push_back(*lookup.at({e.to, w}));
            for (size_t i = 0; i + 1 < path.size(); ++i) {
                cycle.push_back(*lookup.at({path[i], path[i + 1]}));
            }
            return cycle;
        }
    }
    return {};
}

}  // namespace detail

// Remove just enough inter-edges to eliminate every simple cycle of length
// >= 3. Pair 2-cycles survive; intra-edges are never touched. Deterministic:
// within each detected cycle, the discarded edge is the one whose pair was
// found latest (ties broken by endpoint order).
inline ReasoningGraph finalize_acyclic(const ReasoningGraph& graph, AcyclicReport* report = nullptr) {
    std::vector<GraphEdge> alive = graph.edges();
    AcyclicReport local;

    while (true) {
        std::vector<GraphEdge> cycle = detail::find_cycle_ge3(graph.nodes(), alive);
        if (cycle.empty()) break;

        const GraphEdge* victim = nullptr;
        for (const auto& e : cycle) {
            if (e.label != EdgeLabel::inter) continue;
            if (!victim || std::tie(e.pair_rank, e.from, e.to) >
                               std::tie(victim->pair_rank, victim->from, victim->to)) {
                victim = &e;
            }
        }
        if (!victim) throw std::logic_error("reasoning graph contains a cycle without inter-edges");

        GraphEdge removed = *victim;
        alive.erase(std::remove(alive.begin(), alive.end(), removed), alive.end());
        local.removed.push_back(EdgeRemoval{removed, graph.node(removed.from).id(), graph.node(removed.to).id()});
    }

    if (report) *report = std::move(local);
    return ReasoningGraph::assemble(graph.nodes(), std::move(alive));
}

// ---------------------------------------------------------------------------
// MergedGraph
// ---------------------------------------------------------------------------

struct MergedNode {
    NodeKind kind = NodeKind::question;
    int weight = 1;
    std::vector<StepRef> members;  // step classes only, sorted
    std::string answer;

    std::string id() const {
        switch (kind) {
            case NodeKind::question: return "Q";
            case NodeKind::step: {
                const StepRef& rep = members.front();
                return "s" + std::to_string(rep.chain_index) + "_" + std::to_string(rep.step_index);
            }
            case NodeKind::answer: return "ans:" + answer;
        }
        return "?";
    }
};

class MergedGraph {
public:
    int node_count() const { return static_cast<int>(nodes_.size()); }
    int question_index() const { return 0; }
    const MergedNode& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
    const std::vector<MergedNode>& nodes() const { return nodes_; }
    const std::vector<int>& out(int i) const { return out_[static_cast<size_t>(i)]; }
    const std::vector<int>& answer_indices() const { return answer_indices_; }
    int weight(int i) const { return nodes_[static_cast<size_t>(i)].weight; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<std::pair<std::string, std::string>>& removed_edges() const { return removed_edges_; }

    std::optional<int> find_answer(std::string_view canonical) const {
        for (int i : answer_indices_) {
            if (nodes_[static_cast<size_t>(i)].answer == canonical) return i;
        }
        return std::nullopt;
    }

    nlohmann::json to_json() const {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : nodes_) {
            nlohmann::json entry = {{"id", n.id()}, {"kind", node_kind_name(n.kind)}, {"weight", n.weight}};
            if (n.kind == NodeKind::step && n.members.size() > 1) {
                nlohmann::json members = nlohmann::json::array();
                for (const auto& m : n.members) {
                    members.push_back("s" + std::to_string(m.chain_index) + "_" + std::to_string(m.step_index));
                }
                entry["members"] = std::move(members);
            }
            nodes.push_back(std::move(entry));
        }
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [from, to] : edges_) {
            edges.push_back({{"from", nodes_[static_cast<size_t>(from)].id()},
                             {"to", nodes_[static_cast<size_t>(to)].id()},
                             {"label", "intra"}});
        }
        return nlohmann::json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    }

    friend MergedGraph merge_equivalent(const ReasoningGraph&, const std::vector<EquivalencePair>&);

    // Tests force unit weights to compare against plain path counting.
    void override_unit_weights() {
        for (auto& n : nodes_) n.weight = 1;
    }

private:
    void assemble(std::vector<std::pair<int, int>> edges) {
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        edges_ = std::move(edges);
        out_.assign(nodes_.size(), {});
        for (const auto& [from, to] : edges_) out_[static_cast<size_t>(from)].push_back(to);
        for (auto& row : out_) std::sort(row.begin(), row.end());
        answer_indices_.clear();
        for (size_t i = 0; i < nodes_.size(); ++i) {
            if (nodes_[i].kind == NodeKind::answer) answer_indices_.push_back(static_cast<int>(i));
        }
    }

    std::vector<MergedNode> nodes_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> out_;
    std::vector<int> answer_indices_;
    std::vector<std::pair<std::string, std::string>> removed_edges_;
};

// Quotient the graph by the union-find closure of the pairs. Each step class
// weighs as many original steps as it absorbed; question and answer classes
// weigh 1. Self-loops vanish, parallel edges collapse, and any cycle between
// classes is broken by dropping the canonically largest edge.
inline MergedGraph merge_equivalent(const ReasoningGraph& graph, const std::vector<EquivalencePair>& pairs) {
    const int n = graph.node_count();
    std::vector<int> parent(static_cast<size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (const auto& pair : pairs) {
        auto a = graph.find_step(pair.left);
        auto b = graph.find_step(pair.right);
        if (!a || !b) throw DataError("equivalence pair references a step absent from the graph");
        int ra = find(*a), rb = find(*b);
        if (ra != rb) parent[static_cast<size_t>(std::max(ra, rb))] = std::min(ra, rb);  // min index as root
    }

    // Classes in canonical order: question, step classes by smallest member,
    // answers. Node indices are already canonical, so ordering roots by
    // index does the job.
    std::map<int, int> class_of_root;
    MergedGraph merged;
    for (int i = 0; i < n; ++i) {
        int root = graph.node(i).kind == NodeKind::step ? find(i) : i;
        if (class_of_root.count(root)) continue;
        class_of_root[root] = static_cast<int>(merged.nodes_.size());
        MergedNode mn;
        mn.kind = graph.node(i).kind;
        mn.answer = graph.node(i).answer;
        merged.nodes_.push_back(std::move(mn));
    }
    std::vector<int> class_of(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int root = graph.node(i).kind == NodeKind::step ? find(i) : i;
        class_of[static_cast<size_t>(i)] = class_of_root.at(root);
        MergedNode& mn = merged.nodes_[static_cast<size_t>(class_of_root.at(root))];
        if (graph.node(i).kind == NodeKind::step) mn.members.push_back(graph.node(i).step);
    }
    for (auto& mn : merged.nodes_) {
        if (mn.kind == NodeKind::step) {
            std::sort(mn.members.begin(), mn.members.end());
            mn.weight = static_cast<int>(mn.members.size());
        }
    }

    std::vector<std::pair<int, int>> edges;
    for (const auto& e : graph.edges()) {
        int from = class_of[static_cast<size_t>(e.from)];
        int to = class_of[static_cast<size_t>(e.to)];
        if (from != to) edges.emplace_back(from, to);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    // Break any remaining cycles (length >= 2) deterministically.
    while (true) {
        std::vector<std::vector<int>> out(merged.nodes_.size());
        for (const auto& [from, to] : edges) out[static_cast<size_t>(from)].push_back(to);
        for (auto& row : out) std::sort(row.begin(), row.end());

        std::vector<std::pair<int, int>> cycle;
        for (const auto& [from, to] : edges) {
            std::vector<int> path = detail::bfs_path(out, to, from, /*banned=*/-1);
            if (path.empty()) continue;
            cycle.emplace_back(from, to);
            for (size_t i = 0; i + 1 < path.size(); ++i) cycle.emplace_back(path[i], path[i + 1]);
            break;
        }
        if (cycle.empty()) break;
        auto victim = *std::max_element(cycle.begin(), cycle.end());
        edges.erase(std::remove(edges.begin(), edges.end(), victim), edges.end());
        merged.removed_edges_.emplace_back(merged.nodes_[static_cast<size_t>(victim.first)].id(),
                                           merged.nodes_[static_cast<size_t>(victim.second)].id());
    }

    merged.assemble(std::move(edges));
    return merged;
}

}  // namespace rgconf
