#pragma once

// JSONL dataset ingestion and persistence. One question per line:
//   {"question_id": str, "question": str, "gold_answer": str|null,
//    "chains": [{"steps": [str,...], "answer": str}, ...]}
// Serialization reproduces the same schema, so parse -> serialize -> parse
// round-trips to an equal dataset.

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgconf/chains.hpp"
#include "rgconf/common.hpp"

namespace rgconf {

namespace detail {

inline DataError line_error(size_t line_no, const std::string& what) {
    return DataError("line " + std::to_string(line_no) + ": " + what);
}

inline QuestionRecord parse_question_line(const nlohmann::json& j, size_t line_no, bool require_chains) {
    if (!j.is_object()) throw line_error(line_no, "record is not a JSON object");
    if (!j.contains("question_id") || !j["question_id"].is_string())
        throw line_error(line_no, "missing string field `question_id`");
    if (!j.contains("question") || !j["question"].is_string())
        throw line_error(line_no, "missing string field `question`");

    QuestionRecord record;
    record.question_id = j["question_id"].get<std::string>();
    record.question_text = j["question"].get<std::string>();
    if (j.contains("gold_answer") && !j["gold_answer"].is_null()) {
        if (!j["gold_answer"].is_string())
            throw line_error(line_no, "`gold_answer` must be a string or null");
        record.gold_answer = j["gold_answer"].get<std::string>();
    }

    if (!j.contains("chains")) {
        if (require_chains) throw line_error(line_no, "missing field `chains`");
        return record;
    }
    if (!j["chains"].is_array()) throw line_error(line_no, "`chains` must be an array");
    if (require_chains && j["chains"].empty())
        throw line_error(line_no, "`chains` is empty; every question needs at least one chain");

    int chain_index = 0;
    for (const auto& cj : j["chains"]) {
        ++chain_index;
        if (!cj.is_object()) throw line_error(line_no, "chain entry is not an object");
        if (!cj.contains("answer") || !cj["answer"].is_string())
            throw line_error(line_no, "chain missing string field `answer`");
        if (!cj.contains("steps") || !cj["steps"].is_array())
            throw line_error(line_no, "chain missing array field `steps`");

        ReasoningChain chain;
        chain.chain_index = chain_index;
        chain.answer_text = cj["answer"].get<std::string>();
        if (trim(chain.answer_text).empty())
            throw line_error(line_no, "chain answer is empty");

        int step_index = 0;
        for (const auto& sj : cj["steps"]) {
            ++step_index;
            if (!sj.is_string()) throw line_error(line_no, "step entry is not a string");
            std::string text = sj.get<std::string>();
            if (trim(text).empty())
                throw line_error(line_no, "step " + std::to_string(step_index) + " is empty");
            chain.steps.push_back(Step{chain_index, step_index, std::move(text)});
        }
        if (chain.steps.empty())
            throw line_error(line_no, "chain has no steps");
        record.chains.push_back(std::move(chain));
    }
    return record;
}

}  // namespace detail

// Parse a line-delimited dataset. Chain and step indices are renumbered
// 1..N / 1..T in input order. Blank lines are skipped.
inline std::vector<QuestionRecord> parse_dataset(std::istream& in) {
    std::vector<QuestionRecord> records;
    std::set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw detail::line_error(line_no, "malformed JSON");
        QuestionRecord record = detail::parse_question_line(j, line_no, /*require_chains=*/true);
        if (!seen_ids.insert(record.question_id).second)
            throw detail::line_error(line_no, "duplicate question_id `" + record.question_id + "`");
        records.push_back(std::move(record));
    }
    return records;
}

// Question stubs (`question_id`, `question`, optional `gold_answer`) for the
// sampling command; any `chains` field present is ignored.
inline std::vector<QuestionRecord> parse_question_stubs(std::istream& in) {
    std::vector<QuestionRecord> records;
    std::set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw detail::line_error(line_no, "malformed JSON");
        QuestionRecord record = detail::parse_question_line(j, line_no, /*require_chains=*/false);
        record.chains.clear();
        if (!seen_ids.insert(record.question_id).second)
            throw detail::line_error(line_no, "duplicate question_id `" + record.question_id + "`");
        records.push_back(std::move(record));
    }
    return records;
}

inline nlohmann::json record_to_json(const QuestionRecord& record) {
    nlohmann::json chains = nlohmann::json::array();
    for (const auto& chain : record.chains) {
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& step : chain.steps) steps.push_back(step.text);
        chains.push_back({{"steps", std::move(steps)}, {"answer", chain.answer_text}});
    }
    return nlohmann::json{
        {"question_id", record.question_id},
        {"question", record.question_text},
        {"gold_answer", record.gold_answer ? nlohmann::json(*record.gold_answer) : nlohmann::json(nullptr)},
        {"chains", std::move(chains)},
    };
}

inline void serialize_dataset(const std::vector<QuestionRecord>& records, std::ostream& out) {
    for (const auto& record : records) {
        out << record_to_json(record).dump() << "\n";
    }
}

inline std::vector<QuestionRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);
    return parse_dataset(in);
}

inline void save_dataset(const std::vector<QuestionRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write dataset file: " + path);
    serialize_dataset(records, out);
}

}  // namespace rgconf
