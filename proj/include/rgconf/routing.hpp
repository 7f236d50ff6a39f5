#pragma once

// Confidence-gated intervention simulator: pick the bottom-k% questions by
// confidence and replace their outcome with the recorded post-intervention
// outcome (self-reflection or cascading to a stronger model). Selection is
// rank-based, so any strictly monotone rescaling of the confidences leaves
// it unchanged.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgconf/common.hpp"

namespace rgconf {

struct OutcomeFixture {
    std::string question_id;
    bool base_correct = false;
    bool intervened_correct = false;
};

enum class Intervention { reflect, cascade };

inline const char* intervention_name(Intervention i) {
    return i == Intervention::reflect ? "reflect" : "cascade";
}

struct RoutingPolicy {
    double k_percent = 15.0;  // in (0, 100]
    Intervention intervention = Intervention::reflect;
};

// The ceil(k% * n) lowest-confidence question ids; ties break by ascending
// question_id. Returned sorted by id.
inline std::vector<std::string> select_bottom_k(const std::map<std::string, double>& confidences,
                                                double k_percent) {
    if (confidences.empty()) throw DataError("select_bottom_k needs a nonempty confidence map");
    if (!(k_percent > 0.0) || k_percent > 100.0) {
        throw ParamError("k_percent must lie in (0, 100], got " + std::to_string(k_percent));
    }
    const size_t n = confidences.size();
    size_t take = static_cast<size_t>(std::ceil(k_percent / 100.0 * static_cast<double>(n)));
    take = std::min(take, n);

    std::vector<std::pair<double, std::string>> ranked;
    ranked.reserve(n);
    for (const auto& [qid, conf] : confidences) ranked.emplace_back(conf, qid);
    std::sort(ranked.begin(), ranked.end());  // (confidence, id) ascending

    std::vector<std::string> selected;
    selected.reserve(take);
    for (size_t i = 0; i < take; ++i) selected.push_back(ranked[i].second);
    std::sort(selected.begin(), selected.end());
    return selected;
}

struct RoutingOutcome {
    double base_accuracy = 0.0;
    double after_accuracy = 0.0;
    double delta = 0.0;
    long selected = 0;
    long wrong_to_right = 0;
    long right_to_wrong = 0;

    nlohmann::json to_json() const {
        return {{"base_accuracy", base_accuracy},
                {"after_accuracy", after_accuracy},
                {"delta", delta},
                {"selected", selected},
                {"wrong_to_right", wrong_to_right},
                {"right_to_wrong", right_to_wrong}};
    }
};

// After-accuracy over all questions, taking the intervened outcome for the
// selected set and the base outcome elsewhere.
inline RoutingOutcome simulate(const RoutingPolicy& policy, const std::vector<OutcomeFixture>& fixtures,
                               const std::map<std::string, double>& confidences) {
    std::map<std::string, const OutcomeFixture*> by_id;
    for (const auto& f : fixtures) by_id[f.question_id] = &f;

    std::vector<std::string> selected = select_bottom_k(confidences, policy.k_percent);
    std::set<std::string> selected_set(selected.begin(), selected.end());

    RoutingOutcome outcome;
    outcome.selected = static_cast<long>(selected.size());
    long base_correct = 0, after_correct = 0;
    for (const auto& [qid, conf] : confidences) {
        auto it = by_id.find(qid);
        if (it == by_id.end()) throw DataError("no outcome fixture for question `" + qid + "`");
        const OutcomeFixture& f = *it->second;
        bool routed = selected_set.count(qid) > 0;
        bool after = routed ? f.intervened_correct : f.base_correct;
        if (f.base_correct) ++base_correct;
        if (after) ++after_correct;
        if (routed) {
            if (!f.base_correct && f.intervened_correct) ++outcome.wrong_to_right;
            if (f.base_correct && !f.intervened_correct) ++outcome.right_to_wrong;
        }
    }
    const double n = static_cast<double>(confidences.size());
    outcome.base_accuracy = static_cast<double>(base_correct) / n;
    outcome.after_accuracy = static_cast<double>(after_correct) / n;
    outcome.delta = outcome.after_accuracy - outcome.base_accuracy;
    return outcome;
}

// Fixture file: JSONL of {"question_id", "base_correct", "intervened_correct"}.
inline std::vector<OutcomeFixture> parse_fixtures(std::istream& in) {
    std::vector<OutcomeFixture> fixtures;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("question_id") ||
            !j.contains("base_correct") || !j.contains("intervened_correct")) {
            throw DataError("fixture line " + std::to_string(line_no) + ": malformed record");
        }
        fixtures.push_back(OutcomeFixture{j["question_id"].get<std::string>(),
                                          j["base_correct"].get<bool>(),
                                          j["intervened_correct"].get<bool>()});
    }
    return fixtures;
}

inline std::vector<OutcomeFixture> load_fixtures(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fixture file: " + path);
    return parse_fixtures(in);
}

}  // namespace rgconf
