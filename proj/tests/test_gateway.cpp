#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <thread>

#include "rgconf/gateway.hpp"

using namespace rgconf;

namespace {

const char* kGoodCompletion =
    "Step 1:\n"
    "Thought: Split the problem into parts.\n"
    "Step 2:\n"
    "Thought: Add the parts together.\n"
    "Final Answer: \\boxed{5}\n";

class ScriptedTransport : public ChatTransport {
public:
    explicit ScriptedTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    ChatExchange complete(const std::string& prompt, double /*temperature*/) override {
        size_t i = served_.fetch_add(1);
        if (i >= replies_.size()) throw GatewayError("script exhausted");
        return ChatExchange{prompt, replies_[i], std::nullopt};
    }

private:
    std::vector<std::string> replies_;
    std::atomic<size_t> served_{0};
};

// Counts how many calls run concurrently.
class CountingTransport : public ChatTransport {
public:
    ChatExchange complete(const std::string& prompt, double /*temperature*/) override {
        int now = ++in_flight;
        int seen = max_seen.load();
        while (now > seen && !max_seen.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        --in_flight;
        return ChatExchange{prompt, kGoodCompletion, std::nullopt};
    }

    std::atomic<int> in_flight{0};
    std::atomic<int> max_seen{0};
};

struct TempDir {
    TempDir() {
        path = (std::filesystem::temp_directory_path() /
                ("rgconf_fixtures_" + std::to_string(std::random_device{}())))
                   .string();
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string path;
};

}  // namespace

TEST_CASE("parse_chain_completion splits on step markers and extracts the boxed answer") {
    auto chain = parse_chain_completion(kGoodCompletion);
    REQUIRE(chain.has_value());
    CHECK(chain->steps.size() == 2);
    CHECK(chain->steps[0].text == "Split the problem into parts.");
    CHECK(chain->steps[1].text == "Add the parts together.");
    CHECK(chain->answer_text == "5");
}

TEST_CASE("parse_chain_completion edge shapes") {
    SECTION("inline step text and unboxed answer") {
        auto chain = parse_chain_completion("Step 1: do the thing\nFinal Answer: 42\n");
        REQUIRE(chain.has_value());
        CHECK(chain->steps.size() == 1);
        CHECK(chain->steps[0].text == "do the thing");
        CHECK(chain->answer_text == "42");
    }
    SECTION("multi-line step bodies are joined") {
        auto chain = parse_chain_completion(
            "Step 1:\nThought: first line\nsecond line\nStep 2:\nThought: done\n"
            "Final Answer: \\boxed{x}\n");
        REQUIRE(chain.has_value());
        CHECK(chain->steps[0].text == "first line\nsecond line");
    }
    SECTION("model misnumbering is renumbered") {
        auto chain = parse_chain_completion(
            "Step 3: a\nStep 9: b\nFinal Answer: \\boxed{1}\n");
        REQUIRE(chain.has_value());
        REQUIRE(chain->steps.size() == 2);
        CHECK(chain->steps[0].step_index == 1);
        CHECK(chain->steps[1].step_index == 2);
    }
    SECTION("missing Final Answer is unparseable") {
        CHECK_FALSE(parse_chain_completion("Step 1: a\nStep 2: b\n").has_value());
    }
    SECTION("missing steps is unparseable") {
        CHECK_FALSE(parse_chain_completion("Final Answer: \\boxed{5}\n").has_value());
    }
    SECTION("prose mentioning a step number is not a heading") {
        auto chain = parse_chain_completion(
            "Step 1:\nThought: as computed in Step 3 of the lemma\nFinal Answer: \\boxed{2}\n");
        REQUIRE(chain.has_value());
        CHECK(chain->steps.size() == 1);
    }
}

TEST_CASE("parse_judge_reply is strict") {
    CHECK(parse_judge_reply("5", 7) == 5);
    CHECK(parse_judge_reply(" \"5\" ", 7) == 5);
    CHECK(parse_judge_reply("none", 7) == std::nullopt);
    CHECK(parse_judge_reply("\"NONE\"", 7) == std::nullopt);
    log_warnings_enabled() = false;
    CHECK(parse_judge_reply("Step 3", 7) == std::nullopt);
    CHECK(parse_judge_reply("8", 7) == std::nullopt);
    CHECK(parse_judge_reply("0", 7) == std::nullopt);
    log_warnings_enabled() = true;
}

TEST_CASE("sample_chains parses, renumbers, and reports stats") {
    GatewayConfig config;
    config.max_in_flight = 2;

    SECTION("three good completions give three chains") {
        auto transport = std::make_shared<ScriptedTransport>(std::vector<std::string>(3, kGoodCompletion));
        Gateway gateway(config, transport);
        SampleStats stats;
        auto chains = gateway.sample_chains("q", 3, &stats);
        REQUIRE(chains.size() == 3);
        CHECK(chains[0].chain_index == 1);
        CHECK(chains[2].chain_index == 3);
        CHECK(chains[2].steps[0].chain_index == 3);
        CHECK(stats.produced == 3);
        CHECK(stats.dropped == 0);
    }

    SECTION("an unparseable completion is retried once then dropped") {
        log_warnings_enabled() = false;
        auto transport = std::make_shared<ScriptedTransport>(
            std::vector<std::string>{"garbage", "still garbage", kGoodCompletion, kGoodCompletion});
        Gateway gateway(config, transport);
        SampleStats stats;
        auto chains = gateway.sample_chains("q", 3, &stats);
        log_warnings_enabled() = true;
        CHECK(chains.size() == 2);  // slot 1 burned two replies and was dropped
        CHECK(stats.requested == 3);
        CHECK(stats.dropped == 1);
        CHECK(stats.retried >= 1);
    }

    SECTION("all completions unparseable is an error") {
        log_warnings_enabled() = false;
        auto transport =
            std::make_shared<ScriptedTransport>(std::vector<std::string>(4, "not a chain"));
        Gateway gateway(config, transport);
        CHECK_THROWS_AS(gateway.sample_chains("q", 2), GatewayError);
        log_warnings_enabled() = true;
    }
}

TEST_CASE("in-flight requests never exceed max_in_flight") {
    GatewayConfig config;
    config.max_in_flight = 2;
    auto transport = std::make_shared<CountingTransport>();
    Gateway gateway(config, transport);
    auto chains = gateway.sample_chains("q", 8);
    CHECK(chains.size() == 8);
    CHECK(transport->max_seen.load() <= 2);
    CHECK(transport->max_seen.load() >= 1);
}

TEST_CASE("fixture transport replays recorded exchanges deterministically") {
    TempDir dir;
    PromptSet prompts;
    const std::string prompt = prompts.render_generation("what is 2+3?");
    FixtureTransport::write_fixture(dir.path, prompt,
                                    {kGoodCompletion, kGoodCompletion, kGoodCompletion});

    GatewayConfig config;
    config.mode = GatewayMode::fixture;
    config.fixture_dir = dir.path;

    auto run = [&] {
        Gateway gateway(config);
        nlohmann::json out = nlohmann::json::array();
        for (const auto& chain : gateway.sample_chains("what is 2+3?", 3)) {
            nlohmann::json steps = nlohmann::json::array();
            for (const auto& s : chain.steps) steps.push_back(s.text);
            out.push_back({{"steps", steps}, {"answer", chain.answer_text}});
        }
        return out.dump();
    };
    std::string first = run();
    std::string second = run();
    CHECK(first == second);

    SECTION("exhausting the recorded replies is an error") {
        Gateway gateway(config);
        CHECK_THROWS_AS(gateway.sample_chains("what is 2+3?", 4), GatewayError);
    }
    SECTION("an unknown prompt is an error") {
        Gateway gateway(config);
        CHECK_THROWS_AS(gateway.sample_chains("unknown question", 1), GatewayError);
    }
}

TEST_CASE("judge prompt renders a numbered candidate list") {
    PromptSet prompts;
    Step target{1, 2, "combine terms"};
    std::vector<Step> candidates = {Step{2, 1, "expand"}, Step{2, 2, "combine terms"}};
    std::string prompt = prompts.render_equivalence(target, candidates);
    CHECK(prompt.find("Target Step: combine terms") != std::string::npos);
    CHECK(prompt.find("1. expand") != std::string::npos);
    CHECK(prompt.find("2. combine terms") != std::string::npos);
    CHECK(prompt.find("{target_step}") == std::string::npos);
}

TEST_CASE("generation prompt fills the exemplar slot only when provided") {
    PromptSet prompts;
    std::string bare = prompts.render_generation("Q?");
    CHECK(bare.find("{exemplars}") == std::string::npos);
    CHECK(bare.rfind("Answer the following question.", 0) == 0);
    std::string shot = prompts.render_generation("Q?", "Example: ...");
    CHECK(shot.rfind("Example: ...", 0) == 0);
}
