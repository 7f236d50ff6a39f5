#pragma once

// The five confidence estimators. Each one returns a ConfidenceReport: a
// distribution over the question's distinct canonical answers (summing to 1
// whenever any answer carries mass), the parameters used, and diagnostics.
//
//   selfcons         - answer frequency across chains (in-degree baseline)
//   cenconf          - normalized Katz centrality of the answer nodes
//   pathconv_exact   - normalized simple-path counts question -> answer
//   pathconv_sampled - normalized Monte Carlo walk mass (per-answer walks)
//   pathweight       - normalized sums of per-path node-weight products on
//                      the merged graph
//
// pathconv_exact and pathweight guard their enumeration behind a node-count
// bound and raise a ParamError directing callers to the sampled variant
// instead of silently falling back.

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgconf/centrality.hpp"
#include "rgconf/chains.hpp"
#include "rgconf/common.hpp"
#include "rgconf/graph.hpp"
#include "rgconf/paths.hpp"

namespace rgconf {

enum class Estimator { selfcons, cenconf, pathconv_exact, pathconv_sampled, pathweight };

inline const char* estimator_name(Estimator e) {
    switch (e) {
        case Estimator::selfcons: return "selfcons";
        case Estimator::cenconf: return "cenconf";
        case Estimator::pathconv_exact: return "pathconv_exact";
        case Estimator::pathconv_sampled: return "pathconv_sampled";
        case Estimator::pathweight: return "pathweight";
    }
    return "?";
}

inline Estimator estimator_from_name(const std::string& name) {
    for (Estimator e : {Estimator::selfcons, Estimator::cenconf, Estimator::pathconv_exact,
                        Estimator::pathconv_sampled, Estimator::pathweight}) {
        if (name == estimator_name(e)) return e;
    }
    throw ParamError("unknown estimator: " + name);
}

inline const std::vector<Estimator>& all_estimators() {
    static const std::vector<Estimator> all = {Estimator::selfcons, Estimator::cenconf,
                                               Estimator::pathconv_exact, Estimator::pathconv_sampled,
                                               Estimator::pathweight};
    return all;
}

struct EstimatorParams {
    double alpha = 0.1;          // Katz attenuation
    double beta = 1.0;           // Katz base score
    int max_path_len = 12;       // hop cap L
    long sample_count = 10000;   // walks per answer M
    double gamma = 0.9;          // walk attenuation
    std::uint64_t seed = 0;
    int enum_node_bound = 200;   // exact enumeration guard

    void validate() const {
        if (!(alpha > 0.0)) throw ParamError("alpha must be positive");
        if (max_path_len < 1) throw ParamError("max_path_len must be >= 1");
        if (sample_count < 1) throw ParamError("sample_count must be >= 1");
        if (!(gamma > 0.0 && gamma < 1.0)) throw ParamError("gamma must lie in (0, 1)");
    }

    nlohmann::json to_json() const {
        return {{"alpha", alpha},         {"beta", beta},
                {"max_path_len", max_path_len}, {"sample_count", sample_count},
                {"gamma", gamma},         {"seed", seed},
                {"enum_node_bound", enum_node_bound}};
    }
};

struct ConfidenceReport {
    std::string question_id;
    Estimator estimator = Estimator::selfcons;
    std::map<std::string, double> scores;  // canonical answer -> confidence
    EstimatorParams params;
    nlohmann::json diagnostics = nlohmann::json::object();

    nlohmann::json to_json() const {
        return {{"question_id", question_id},
                {"estimator", estimator_name(estimator)},
                {"params", params.to_json()},
                {"scores", scores},
                {"diagnostics", diagnostics}};
    }
};

// Confidence assigned to an arbitrary response: answers outside the
// question's candidate set get 0.
inline double confidence_for(const ConfidenceReport& report, std::string_view raw_answer) {
    auto it = report.scores.find(canonicalize_answer(raw_answer));
    return it == report.scores.end() ? 0.0 : it->second;
}

// Highest-confidence answer; ties resolve to the lexicographically smallest
// canonical answer (scores iterate in key order).
inline std::pair<std::string, double> argmax_answer(const ConfidenceReport& report) {
    if (report.scores.empty()) throw DataError("confidence report has no scores");
    std::pair<std::string, double> best{"", -1.0};
    for (const auto& [answer, score] : report.scores) {
        if (score > best.second) best = {answer, score};
    }
    return best;
}

namespace detail {

// Normalize raw per-answer mass to a distribution. All-zero mass falls back
// to uniform and flags the report.
inline void normalize_scores(const std::map<std::string, double>& raw, ConfidenceReport& report) {
    double total = 0.0;
    for (const auto& [answer, mass] : raw) total += mass;
    if (total > 0.0) {
        for (const auto& [answer, mass] : raw) report.scores[answer] = mass / total;
        report.diagnostics["uniform_fallback"] = false;
    } else {
        double uniform = 1.0 / static_cast<double>(raw.size());
        for (const auto& [answer, mass] : raw) report.scores[answer] = uniform;
        report.diagnostics["uniform_fallback"] = true;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

inline ConfidenceReport self_consistency(const QuestionRecord& record) {
    if (record.chains.empty()) throw DataError("self_consistency needs at least one chain");
    ConfidenceReport report;
    report.question_id = record.question_id;
    report.estimator = Estimator::selfcons;
    std::map<std::string, long> counts;
    for (const auto& chain : record.chains) ++counts[canonicalize_answer(chain.answer_text)];
    const double n = static_cast<double>(record.chains.size());
    nlohmann::json raw = nlohmann::json::object();
    for (const auto& [answer, count] : counts) {
        report.scores[answer] = static_cast<double>(count) / n;
        raw[answer] = count;
    }
    report.diagnostics["chain_counts"] = std::move(raw);
    return report;
}

inline ConfidenceReport cenconf(const ReasoningGraph& graph, const EstimatorParams& params,
                                const std::string& question_id) {
    params.validate();
    ConfidenceReport report;
    report.question_id = question_id;
    report.estimator = Estimator::cenconf;
    report.params = params;

    std::vector<double> katz = katz_scores(graph, params.alpha, params.beta);
    std::map<std::string, double> raw;
    for (int i : graph.answer_indices()) {
        raw[graph.node(i).answer] = katz[static_cast<size_t>(i)];
    }
    detail::normalize_scores(raw, report);
    nlohmann::json katz_raw = nlohmann::json::object();
    for (const auto& [answer, score] : raw) katz_raw[answer] = score;
    report.diagnostics["katz_raw"] = std::move(katz_raw);
    return report;
}

inline ConfidenceReport pathconv_exact(const ReasoningGraph& graph, const EstimatorParams& params,
                                       const std::string& question_id) {
    params.validate();
    if (graph.node_count() > params.enum_node_bound) {
        throw ParamError("graph has " + std::to_string(graph.node_count()) +
                         " nodes, above the enumeration bound of " +
                         std::to_string(params.enum_node_bound) + "; use pathconv_sampled");
    }
    ConfidenceReport report;
    report.question_id = question_id;
    report.estimator = Estimator::pathconv_exact;
    report.params = params;

    std::map<std::string, double> raw;
    nlohmann::json counts = nlohmann::json::object();
    for (int i : graph.answer_indices()) {
        std::uint64_t count = count_simple_paths(graph, i, params.max_path_len);
        raw[graph.node(i).answer] = static_cast<double>(count);
        counts[graph.node(i).answer] = count;
    }
    detail::normalize_scores(raw, report);
    report.diagnostics["path_counts"] = std::move(counts);
    return report;
}

inline ConfidenceReport pathconv_sampled(const ReasoningGraph& graph, const EstimatorParams& params,
                                         const std::string& question_id) {
    params.validate();
    ConfidenceReport report;
    report.question_id = question_id;
    report.estimator = Estimator::pathconv_sampled;
    report.params = params;

    std::map<std::string, double> raw;
    nlohmann::json masses = nlohmann::json::object();
    for (int i : graph.answer_indices()) {
        const std::string& answer = graph.node(i).answer;
        std::uint64_t answer_seed = derive_seed(params.seed, answer);
        double mass = sample_path_mass(graph, i, params.sample_count, params.max_path_len,
                                       params.gamma, answer_seed);
        raw[answer] = mass;
        masses[answer] = mass;
    }
    detail::normalize_scores(raw, report);
    report.diagnostics["sampled_mass"] = std::move(masses);
    report.diagnostics["walks_per_answer"] = params.sample_count;
    return report;
}

inline ConfidenceReport pathweight(const MergedGraph& merged, const EstimatorParams& params,
                                   const std::string& question_id) {
    params.validate();
    if (merged.node_count() > params.enum_node_bound) {
        throw ParamError("merged graph has " + std::to_string(merged.node_count()) +
                         " nodes, above the enumeration bound of " +
                         std::to_string(params.enum_node_bound) +
                         "; use the weighted walk sampler (sample_path_mass with node weights)");
    }
    ConfidenceReport report;
    report.question_id = question_id;
    report.estimator = Estimator::pathweight;
    report.params = params;

    std::map<std::string, double> raw;
    nlohmann::json details = nlohmann::json::object();
    for (int i : merged.answer_indices()) {
        auto enumeration = enumerate_paths(merged, i, params.max_path_len);
        raw[merged.node(i).answer] = enumeration.weighted_sum;
        details[merged.node(i).answer] = {{"paths", enumeration.count},
                                          {"score_sum", enumeration.weighted_sum}};
    }
    detail::normalize_scores(raw, report);
    report.diagnostics["weighted_paths"] = std::move(details);
    return report;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline void reports_to_csv(const std::vector<ConfidenceReport>& reports, std::ostream& out) {
    out << "question_id,estimator,answer,confidence\n";
    for (const auto& report : reports) {
        for (const auto& [answer, confidence] : report.scores) {
            std::string escaped = answer;
            replace_all(escaped, "\"", "\"\"");
            out << report.question_id << "," << estimator_name(report.estimator) << ",\"" << escaped
                << "\"," << confidence << "\n";
        }
    }
}

}  // namespace rgconf
