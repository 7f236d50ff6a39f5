#pragma once

// Shared test fixtures and generators.
//
// G1 is the worked three-chain example used across the suites:
//   chain 1: s11 -> s12 -> "4"
//   chain 2: s21 -> s22 -> "4"
//   chain 3: s31 -> "5"
//   one equivalence pair (s12, s22)
// giving 8 nodes, 8 intra/answer edges, and one bidirectional inter pair.
// Canonical node order: Q, s11, s12, s21, s22, s31, ans:4, ans:5.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rgconf/chains.hpp"
#include "rgconf/equivalence.hpp"
#include "rgconf/graph.hpp"
#include "rgconf/routing.hpp"

namespace fixtures {

inline rgconf::ReasoningChain make_chain(int chain_index, const std::vector<std::string>& texts,
                                         const std::string& answer) {
    rgconf::ReasoningChain chain;
    chain.chain_index = chain_index;
    for (size_t j = 0; j < texts.size(); ++j) {
        chain.steps.push_back(rgconf::Step{chain_index, static_cast<int>(j + 1), texts[j]});
    }
    chain.answer_text = answer;
    return chain;
}

inline rgconf::QuestionRecord g1_record() {
    rgconf::QuestionRecord record;
    record.question_id = "g1";
    record.question_text = "worked example";
    record.gold_answer = "4";
    record.chains.push_back(make_chain(1, {"expand the left side", "combine like terms"}, "4"));
    record.chains.push_back(make_chain(2, {"substitute the value", "combine like terms"}, "4"));
    record.chains.push_back(make_chain(3, {"estimate roughly"}, "5"));
    return record;
}

inline std::vector<rgconf::EquivalencePair> g1_pairs() {
    return {rgconf::EquivalencePair{{1, 2}, {2, 2}, rgconf::MatchSource::exact}};
}

inline rgconf::ReasoningGraph g1_graph() {
    return rgconf::finalize_acyclic(rgconf::build_graph(g1_record(), g1_pairs()));
}

inline rgconf::MergedGraph g1_merged() {
    return rgconf::merge_equivalent(g1_graph(), g1_pairs());
}

// ---------------------------------------------------------------------------
// Random chain sets. Step texts are globally unique unless a pair generator
// links them, so the `exact` strategy finds exactly the planted pairs.
// ---------------------------------------------------------------------------

struct RandomRecordOptions {
    int min_chains = 2;
    int max_chains = 5;
    int min_steps = 1;
    int max_steps = 4;
    int answer_pool = 3;  // answers drawn from {"a0", ...}
};

inline rgconf::QuestionRecord random_record(std::mt19937_64& rng, const RandomRecordOptions& options = {},
                                            const std::string& question_id = "q") {
    std::uniform_int_distribution<int> chain_count(options.min_chains, options.max_chains);
    std::uniform_int_distribution<int> step_count(options.min_steps, options.max_steps);
    std::uniform_int_distribution<int> answer_pick(0, options.answer_pool - 1);

    rgconf::QuestionRecord record;
    record.question_id = question_id;
    record.question_text = "random question";
    const int n = chain_count(rng);
    for (int i = 1; i <= n; ++i) {
        std::vector<std::string> texts;
        const int t = step_count(rng);
        for (int j = 1; j <= t; ++j) {
            texts.push_back("step " + question_id + " c" + std::to_string(i) + " s" + std::to_string(j) +
                            " #" + std::to_string(rng() % 100000));
        }
        record.chains.push_back(make_chain(i, texts, "a" + std::to_string(answer_pick(rng))));
    }
    return record;
}

// Random cross-chain pairs over an existing record. Deduplicated and
// canonically ordered, like the equivalence module produces.
inline std::vector<rgconf::EquivalencePair> random_pairs(std::mt19937_64& rng,
                                                         const rgconf::QuestionRecord& record,
                                                         int attempts) {
    std::vector<rgconf::EquivalencePair> pairs;
    std::set<std::pair<rgconf::StepRef, rgconf::StepRef>> seen;
    const int n = static_cast<int>(record.chains.size());
    if (n < 2) return pairs;
    for (int a = 0; a < attempts; ++a) {
        int ci = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        int ck = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        if (ci == ck) continue;
        const auto& chain_i = record.chains[static_cast<size_t>(ci)];
        const auto& chain_k = record.chains[static_cast<size_t>(ck)];
        rgconf::StepRef left{chain_i.chain_index,
                             static_cast<int>(rng() % chain_i.steps.size()) + 1};
        rgconf::StepRef right{chain_k.chain_index,
                              static_cast<int>(rng() % chain_k.steps.size()) + 1};
        if (right < left) std::swap(left, right);
        if (seen.insert({left, right}).second) {
            pairs.push_back(rgconf::EquivalencePair{left, right, rgconf::MatchSource::exact});
        }
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// Planted-answer benchmark: when a question is "solved", the gold answer
// gets `support` chains sharing `shared_steps` identical steps (diverse-path
// support); every other chain is structurally disjoint. Unsolved questions
// give the win to a distractor answer with no shared steps.
// ---------------------------------------------------------------------------

struct PlantedOptions {
    int questions = 200;
    int chains_per_question = 10;  // N
    int support = 3;               // C chains for the winning answer
    int shared_steps = 2;          // S identical steps across those chains
    double solved_fraction = 0.5;
};

inline std::vector<rgconf::QuestionRecord> planted_dataset(std::uint64_t seed,
                                                           const PlantedOptions& options = {}) {
    std::mt19937_64 rng(seed);
    std::vector<rgconf::QuestionRecord> dataset;
    for (int q = 0; q < options.questions; ++q) {
        const std::string qid = "pq" + std::to_string(q);
        rgconf::QuestionRecord record;
        record.question_id = qid;
        record.question_text = "planted question " + std::to_string(q);
        record.gold_answer = "gold";
        const bool solved = (static_cast<double>(rng() % 1000) / 1000.0) < options.solved_fraction;
        const std::string winner = solved ? "gold" : "wrong0";

        int chain_index = 0;
        auto unique_step = [&](int c, int s) {
            return "q" + std::to_string(q) + " c" + std::to_string(c) + " s" + std::to_string(s) + " #" +
                   std::to_string(rng() % 1000000);
        };

        // Winning answer: `support` chains. Solved questions share
        // `shared_steps` middle steps; unsolved winners stay disjoint.
        std::vector<std::string> shared;
        for (int s = 0; s < options.shared_steps; ++s) {
            shared.push_back("q" + std::to_string(q) + " shared step " + std::to_string(s));
        }
        for (int c = 0; c < options.support; ++c) {
            ++chain_index;
            std::vector<std::string> texts;
            texts.push_back(unique_step(chain_index, 1));
            if (solved) {
                for (const auto& s : shared) texts.push_back(s);
            } else {
                for (int s = 0; s < options.shared_steps; ++s) {
                    texts.push_back(unique_step(chain_index, 2 + s));
                }
            }
            texts.push_back(unique_step(chain_index, 99));
            record.chains.push_back(make_chain(chain_index, texts, winner));
        }

        // Remaining chains: disjoint distractors, multiplicity at most 2 so
        // the winner keeps the argmax.
        int distractor = 1;
        int used = 0;
        while (chain_index < options.chains_per_question) {
            ++chain_index;
            std::vector<std::string> texts = {unique_step(chain_index, 1), unique_step(chain_index, 2)};
            std::string answer = "wrong" + std::to_string(distractor);
            record.chains.push_back(make_chain(chain_index, texts, answer));
            if (++used == 2) {
                ++distractor;
                used = 0;
            }
        }
        dataset.push_back(std::move(record));
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Routing fixture: 100 questions, base accuracy 49%. The intervention fixes
// the five bottom-15 questions q000/q003/q006/q009/q012 and breaks q050 and
// q080 (which are selected only at k=100). Confidences increase with the
// question number, so bottom-k sets are exactly the lowest-numbered ids.
// Hand-computed after-accuracies: +5% -> 51, +10% -> 53, +15% -> 54,
// +100% -> 52.
// ---------------------------------------------------------------------------

struct RoutingFixture {
    std::vector<rgconf::OutcomeFixture> outcomes;
    std::map<std::string, double> confidences;
};

inline RoutingFixture routing_benchmark() {
    RoutingFixture fixture;
    auto qid = [](int i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "q%03d", i);
        return std::string(buf);
    };
    const std::set<int> fixed = {0, 3, 6, 9, 12};
    const std::set<int> broken = {50, 80};
    for (int i = 0; i < 100; ++i) {
        bool base = i >= 50 && i <= 98;  // 49 correct
        bool intervened = base;
        if (fixed.count(i)) intervened = true;
        if (broken.count(i)) intervened = false;
        fixture.outcomes.push_back(rgconf::OutcomeFixture{qid(i), base, intervened});
        fixture.confidences[qid(i)] = 0.005 + 0.01 * i;
    }
    return fixture;
}

}  // namespace fixtures
