#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "rgconf/equivalence.hpp"

#include "fixtures.hpp"

using namespace rgconf;

namespace {

Step make_step(int chain, int index, std::string text) {
    return Step{chain, index, std::move(text)};
}

std::vector<Step> chain_steps(int chain, const std::vector<std::string>& texts) {
    std::vector<Step> steps;
    for (size_t j = 0; j < texts.size(); ++j) {
        steps.push_back(make_step(chain, static_cast<int>(j + 1), texts[j]));
    }
    return steps;
}

// Scripted transport for judge tests: replies are served in order and every
// prompt is recorded.
class ScriptedTransport : public ChatTransport {
public:
    explicit ScriptedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    ChatExchange complete(const std::string& prompt, double temperature) override {
        prompts.push_back(prompt);
        temperatures.push_back(temperature);
        if (served_ >= replies_.size()) throw GatewayError("script exhausted");
        return ChatExchange{prompt, replies_[served_++], std::nullopt};
    }

    std::vector<std::string> prompts;
    std::vector<double> temperatures;

private:
    std::vector<std::string> replies_;
    size_t served_ = 0;
};

struct TempFile {
    TempFile() {
        path = (std::filesystem::temp_directory_path() /
                ("rgconf_cache_" + std::to_string(std::random_device{}()) + ".jsonl"))
                   .string();
    }
    ~TempFile() { std::remove(path.c_str()); }
    std::string path;
};

}  // namespace

TEST_CASE("find_equivalent with the exact strategy") {
    ExactChecker exact;
    Step target = make_step(1, 1, "x = 2+3 = 5");
    auto candidates = chain_steps(2, {"compute 2+3=5", "x = 2+3 = 5"});
    CHECK(find_equivalent(target, candidates, exact) == 2);

    SECTION("empty candidate list is vacuous") {
        CHECK(find_equivalent(target, {}, exact) == std::nullopt);
    }
    SECTION("first matching candidate wins") {
        auto dupes = chain_steps(2, {"x = 2+3 = 5", "x = 2+3 = 5"});
        CHECK(find_equivalent(target, dupes, exact) == 1);
    }
    SECTION("candidates must come from one other chain") {
        auto mixed = chain_steps(2, {"a"});
        mixed.push_back(make_step(3, 1, "b"));
        CHECK_THROWS_AS(find_equivalent(target, mixed, exact), DataError);
        CHECK_THROWS_AS(find_equivalent(target, chain_steps(1, {"a"}), exact), DataError);
    }
}

TEST_CASE("normalized strategy folds case and whitespace") {
    NormalizedChecker normalized;
    Step target = make_step(1, 1, "Combine  the terms");
    CHECK(find_equivalent(target, chain_steps(2, {"other", "combine the TERMS"}), normalized) == 2);

    SECTION("an exact match outranks an earlier normalized one") {
        auto candidates = chain_steps(2, {"COMBINE THE TERMS", "Combine  the terms"});
        CHECK(find_equivalent(target, candidates, normalized) == 2);
    }
}

TEST_CASE("every exact pair is also a normalized pair") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> base = {"add", "Add ", "ADD", "carry the one", "carry  THE one",
                                           "done", "simplify"};
    for (int trial = 0; trial < 300; ++trial) {
        QuestionRecord record;
        record.question_id = "q";
        int n = 2 + static_cast<int>(rng() % 2);
        for (int i = 1; i <= n; ++i) {
            std::vector<std::string> texts;
            int t = 1 + static_cast<int>(rng() % 3);
            for (int j = 0; j < t; ++j) texts.push_back(base[rng() % base.size()]);
            record.chains.push_back(fixtures::make_chain(i, texts, "a"));
        }
        ExactChecker exact;
        NormalizedChecker normalized;
        auto exact_pairs = build_equivalence_set(record, exact);
        auto normalized_pairs = build_equivalence_set(record, normalized);
        for (const auto& pair : exact_pairs) {
            CHECK(std::find(normalized_pairs.begin(), normalized_pairs.end(), pair) !=
                  normalized_pairs.end());
        }
    }
}

TEST_CASE("build_equivalence_set symmetrizes and deduplicates") {
    ExactChecker exact;

    SECTION("two chains sharing one step yield one pair") {
        QuestionRecord record;
        record.question_id = "q";
        record.chains.push_back(fixtures::make_chain(1, {"unique a", "shared"}, "x"));
        record.chains.push_back(fixtures::make_chain(2, {"shared", "unique b"}, "x"));
        auto pairs = build_equivalence_set(record, exact);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].left == StepRef{1, 2});
        CHECK(pairs[0].right == StepRef{2, 1});
    }

    SECTION("pairwise distinct texts yield nothing") {
        QuestionRecord record;
        record.question_id = "q";
        record.chains.push_back(fixtures::make_chain(1, {"aa", "bb"}, "x"));
        record.chains.push_back(fixtures::make_chain(2, {"cc", "dd"}, "x"));
        CHECK(build_equivalence_set(record, exact).empty());
    }

    SECTION("three chains with one common step yield one pair per chain pair") {
        QuestionRecord record;
        record.question_id = "q";
        record.chains.push_back(fixtures::make_chain(1, {"shared s"}, "x"));
        record.chains.push_back(fixtures::make_chain(2, {"shared s"}, "x"));
        record.chains.push_back(fixtures::make_chain(3, {"shared s"}, "x"));
        auto pairs = build_equivalence_set(record, exact);

        // Hand oracle: one pair for each of the C(3,2) chain pairs.
        std::set<std::pair<int, int>> chain_pairs;
        for (const auto& pair : pairs) {
            CHECK(pair.left < pair.right);
            CHECK(pair.left.chain_index != pair.right.chain_index);
            chain_pairs.insert({pair.left.chain_index, pair.right.chain_index});
        }
        CHECK(pairs.size() == 3);
        CHECK(chain_pairs == std::set<std::pair<int, int>>{{1, 2}, {1, 3}, {2, 3}});
    }

    SECTION("same input twice gives the identical pair list") {
        std::mt19937_64 rng(5);
        auto record = fixtures::random_record(rng);
        auto first = build_equivalence_set(record, exact);
        auto second = build_equivalence_set(record, exact);
        CHECK(first == second);
    }
}

TEST_CASE("judge cache round-trips and persists") {
    TempFile file;
    const std::string key = "00000000deadbeef";

    {
        JudgeCache cache(file.path);
        CHECK_FALSE(cache.get(key).found);
        cache.put(key, 3);
        auto hit = cache.get(key);
        REQUIRE(hit.found);
        CHECK(hit.verdict == 3);
        cache.put("other", std::nullopt);
    }
    {
        // Survives process restart (new instance, same file).
        JudgeCache cache(file.path);
        auto hit = cache.get(key);
        REQUIRE(hit.found);
        CHECK(hit.verdict == 3);
        auto miss_verdict = cache.get("other");
        REQUIRE(miss_verdict.found);
        CHECK(miss_verdict.verdict == std::nullopt);
        CHECK_FALSE(cache.get("unknown").found);
    }
}

TEST_CASE("judge cache key covers the prompt version") {
    Step target = make_step(1, 1, "t");
    auto candidates = chain_steps(2, {"a", "b"});
    auto k1 = JudgeCache::make_key(target, candidates, "equiv-v1");
    auto k2 = JudgeCache::make_key(target, candidates, "equiv-v2");
    CHECK(k1 != k2);
    // And the candidate path too.
    auto k3 = JudgeCache::make_key(target, chain_steps(2, {"a"}), "equiv-v1");
    CHECK(k1 != k3);
}

TEST_CASE("corrupt cache file is rebuilt empty with a warning") {
    TempFile file;
    {
        std::ofstream out(file.path);
        out << "{\"key\": \"aa\", \"verdict\": 1, \"prompt_version\": \"v\"}\n";
        out << "this is not json\n";
    }
    log_warnings_enabled() = false;
    JudgeCache cache(file.path);
    log_warnings_enabled() = true;
    CHECK(cache.size() == 0);
    CHECK_FALSE(cache.get("aa").found);
    // The file was truncated, so a fresh load stays empty.
    JudgeCache reloaded(file.path);
    CHECK(reloaded.size() == 0);
}

TEST_CASE("judge checker parses replies and consults the cache") {
    Step target = make_step(1, 1, "target step");
    auto candidates = chain_steps(2, {"c1", "c2", "c3", "c4", "c5", "c6", "c7"});

    SECTION("a numeric reply selects that step") {
        auto transport = std::make_shared<ScriptedTransport>(std::vector<std::string>{"5"});
        Gateway gateway(GatewayConfig{}, transport);
        JudgeCache cache;
        JudgeChecker judge(gateway, &cache);
        CHECK(find_equivalent(target, candidates, judge) == 5);
        CHECK(transport->temperatures == std::vector<double>{0.0});

        // Second identical query is served from the cache (script would throw).
        CHECK(find_equivalent(target, candidates, judge) == 5);
        CHECK(transport->prompts.size() == 1);
    }

    SECTION("a none reply means no match") {
        auto transport = std::make_shared<ScriptedTransport>(std::vector<std::string>{"\"none\""});
        Gateway gateway(GatewayConfig{}, transport);
        JudgeChecker judge(gateway, nullptr);
        CHECK(find_equivalent(target, candidates, judge) == std::nullopt);
    }

    SECTION("loose or out-of-range replies degrade to none") {
        log_warnings_enabled() = false;
        auto transport =
            std::make_shared<ScriptedTransport>(std::vector<std::string>{"Step 3", "12"});
        Gateway gateway(GatewayConfig{}, transport);
        JudgeChecker judge(gateway, nullptr);
        CHECK(judge.match(target, candidates) == std::nullopt);
        CHECK(judge.match(target, candidates) == std::nullopt);
        log_warnings_enabled() = true;
    }
}
