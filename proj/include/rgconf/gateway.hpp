#pragma once

// Client for an OpenAI-compatible chat-completions endpoint, used to sample
// reasoning chains and to judge step equivalence.
//
// Two transports sit behind one interface:
//  - HttpTransport posts to {base_url}/v1/chat/completions (API key read
//    from OPENAI_API_KEY, one retry on 429/5xx).
//  - FixtureTransport replays recorded exchanges from a directory, keyed by
//    the FNV-1a hash of the prompt. It never touches the network, and the
//    gateway issues fixture requests sequentially so repeated identical
//    prompts consume recorded replies in a stable order (bit-determinism).
//
// Live requests fan out concurrently; a semaphore keeps the number of
// in-flight requests at or below GatewayConfig::max_in_flight.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

// glibc's resolv.h (dragged in via the socket headers) leaves `_res` defined
// as a macro, which breaks any later header using it as an identifier
// (Eigen does). We never touch the resolver state.
#ifdef _res
#undef _res
#endif

#include "rgconf/chains.hpp"
#include "rgconf/common.hpp"
#include "rgconf/prompts.hpp"

namespace rgconf {

enum class GatewayMode { live, fixture };

struct GatewayConfig {
    std::string base_url = "http://localhost:8000";
    std::string model_name = "llama-3.1-8b-instruct";
    double temperature_generation = 1.0;
    double temperature_judge = 0.0;
    int max_in_flight = 4;
    std::chrono::milliseconds timeout{30000};
    GatewayMode mode = GatewayMode::fixture;
    std::string fixture_dir;
};

struct ChatUsage {
    long prompt_tokens = -1;
    long completion_tokens = -1;
};

struct ChatExchange {
    std::string prompt;
    std::string reply;  // recorded verbatim
    std::optional<ChatUsage> usage;
};

struct SampleStats {
    int requested = 0;
    int produced = 0;
    int dropped = 0;
    int retried = 0;
};

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual ChatExchange complete(const std::string& prompt, double temperature) = 0;
    // Sequential transports get strictly ordered requests (fixture replay).
    virtual bool sequential() const { return false; }
};

class HttpTransport : public ChatTransport {
public:
    explicit HttpTransport(GatewayConfig config) : config_(std::move(config)) {
        parse_base_url();
    }

    ChatExchange complete(const std::string& prompt, double temperature) override {
        nlohmann::json body = {
            {"model", config_.model_name},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", temperature},
        };
        const std::string payload = body.dump();
        const std::string path = path_prefix_ + "/v1/chat/completions";

        httplib::Result res = post(path, payload);
        if (res && (res->status == 429 || res->status >= 500)) {
            res = post(path, payload);  // one retry
        }
        if (!res) {
            throw GatewayError("endpoint unreachable: " + config_.base_url + " (" +
                               httplib::to_string(res.error()) + ")");
        }
        if (res->status != 200) {
            throw GatewayError("chat completion failed with HTTP " + std::to_string(res->status) +
                               ": " + res->body);
        }
        nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
        if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty() ||
            !reply["choices"][0].contains("message")) {
            throw GatewayError("malformed chat completion response");
        }
        ChatExchange exchange;
        exchange.prompt = prompt;
        exchange.reply = reply["choices"][0]["message"].value("content", "");
        if (reply.contains("usage") && reply["usage"].is_object()) {
            ChatUsage usage;
            usage.prompt_tokens = reply["usage"].value("prompt_tokens", -1);
            usage.completion_tokens = reply["usage"].value("completion_tokens", -1);
            exchange.usage = usage;
        }
        return exchange;
    }

private:
    void parse_base_url() {
        std::string url = config_.base_url;
        if (starts_with(url, "http://")) {
            url = url.substr(7);
        } else if (starts_with(url, "https://")) {
            throw GatewayError("https base URLs are not supported by this build; use an http proxy");
        }
        size_t slash = url.find('/');
        std::string hostport = slash == std::string::npos ? url : url.substr(0, slash);
        path_prefix_ = slash == std::string::npos ? "" : url.substr(slash);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
        size_t colon = hostport.find(':');
        host_ = colon == std::string::npos ? hostport : hostport.substr(0, colon);
        port_ = colon == std::string::npos ? 80 : std::stoi(hostport.substr(colon + 1));
        if (host_.empty()) throw GatewayError("invalid base_url: " + config_.base_url);
    }

    httplib::Result post(const std::string& path, const std::string& payload) {
        httplib::Client client(host_, port_);
        auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        client.set_connection_timeout(seconds.count() ? seconds : std::chrono::seconds(1));
        client.set_read_timeout(seconds.count() ? seconds : std::chrono::seconds(1));
        httplib::Headers headers;
        if (const char* key = std::getenv("OPENAI_API_KEY")) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        return client.Post(path, headers, payload, "application/json");
    }

    GatewayConfig config_;
    std::string host_;
    std::string path_prefix_;
    int port_ = 80;
};

// Replays exchanges recorded as <fixture_dir>/<fnv1a64(prompt)>.json with
// shape {"prompt": str, "replies": [str, ...]} (or a single "reply").
// Repeated requests for the same prompt consume successive replies; running
// out raises a GatewayError rather than wrapping around.
class FixtureTransport : public ChatTransport {
public:
    explicit FixtureTransport(std::string dir) : dir_(std::move(dir)) {}

    ChatExchange complete(const std::string& prompt, double /*temperature*/) override {
        std::lock_guard lock(mutex_);
        const std::string key = to_hex64(fnv1a64(prompt));
        auto it = loaded_.find(key);
        if (it == loaded_.end()) {
            it = loaded_.emplace(key, load(key, prompt)).first;
        }
        Entry& entry = it->second;
        if (entry.prompt != prompt) {
            throw GatewayError("fixture " + key + ".json records a different prompt");
        }
        if (entry.next >= entry.replies.size()) {
            throw GatewayError("fixture exhausted for prompt hash " + key + " (" +
                               std::to_string(entry.replies.size()) + " replies recorded)");
        }
        ChatExchange exchange;
        exchange.prompt = prompt;
        exchange.reply = entry.replies[entry.next++];
        return exchange;
    }

    bool sequential() const override { return true; }

    // Helper for writing fixtures (tests and recording tools).
    static void write_fixture(const std::string& dir, const std::string& prompt,
                              const std::vector<std::string>& replies) {
        nlohmann::json j = {{"prompt", prompt}, {"replies", replies}};
        std::string path = dir + "/" + to_hex64(fnv1a64(prompt)) + ".json";
        std::ofstream out(path);
        if (!out) throw GatewayError("cannot write fixture file: " + path);
        out << j.dump(2) << "\n";
    }

private:
    struct Entry {
        std::string prompt;
        std::vector<std::string> replies;
        size_t next = 0;
    };

    Entry load(const std::string& key, const std::string& prompt) const {
        std::string path = dir_ + "/" + key + ".json";
        std::ifstream in(path);
        if (!in) {
            throw GatewayError("no fixture recorded for prompt hash " + key + " (looked in " + dir_ +
                               "); prompt begins: " + prompt.substr(0, 60));
        }
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw GatewayError("malformed fixture file: " + path);
        Entry entry;
        entry.prompt = j.value("prompt", std::string{});
        if (j.contains("replies") && j["replies"].is_array()) {
            for (const auto& r : j["replies"]) entry.replies.push_back(r.get<std::string>());
        } else if (j.contains("reply") && j["reply"].is_string()) {
            entry.replies.push_back(j["reply"].get<std::string>());
        }
        if (entry.replies.empty()) throw GatewayError("fixture has no replies: " + path);
        return entry;
    }

    std::string dir_;
    std::mutex mutex_;
    std::map<std::string, Entry> loaded_;
};

// ---------------------------------------------------------------------------
// Completion parsing
// ---------------------------------------------------------------------------

namespace detail {

// Recognize a "Step N:" heading; returns text after the colon.
inline bool match_step_heading(const std::string& line, std::string* rest) {
    std::string t = trim(line);
    if (!starts_with(t, "Step ") && !starts_with(t, "step ")) return false;
    size_t i = 5;
    size_t digits = 0;
    while (i < t.size() && t[i] >= '0' && t[i] <= '9') {
        ++i;
        ++digits;
    }
    if (digits == 0) return false;
    while (i < t.size() && t[i] == ' ') ++i;
    if (i >= t.size() || t[i] != ':') return false;
    *rest = trim(t.substr(i + 1));
    return true;
}

inline bool match_final_answer(const std::string& line, std::string* rest) {
    std::string t = trim(line);
    constexpr std::string_view kMarker = "Final Answer:";
    if (!starts_with(t, kMarker)) return false;
    *rest = trim(t.substr(kMarker.size()));
    return true;
}

// Extract the content of \boxed{...} if present, else the raw trimmed text.
inline std::string extract_answer_text(const std::string& rest) {
    size_t box = rest.find("\\boxed{");
    if (box == std::string::npos) return trim(rest);
    size_t open = box + 6;  // index of '{'
    int depth = 0;
    for (size_t i = open; i < rest.size(); ++i) {
        if (rest[i] == '{') ++depth;
        else if (rest[i] == '}') {
            --depth;
            if (depth == 0) return trim(rest.substr(open + 1, i - open - 1));
        }
    }
    return trim(rest.substr(open + 1));  // unbalanced: take what's there
}

}  // namespace detail

// Parse one completion into steps + final answer. Steps are delimited by
// "Step N:" headings and renumbered consecutively regardless of the numbers
// the model emitted; a leading "Thought:" label inside a step is dropped.
// Returns nullopt when no step or no final answer can be found.
inline std::optional<ReasoningChain> parse_chain_completion(const std::string& completion) {
    ReasoningChain chain;
    std::vector<std::string> current;
    bool in_step = false;
    std::string answer;
    bool saw_answer = false;

    auto flush_step = [&] {
        if (!in_step) return;
        std::string text;
        for (const auto& part : current) {
            if (!text.empty()) text += "\n";
            text += part;
        }
        text = trim(text);
        if (starts_with(text, "Thought:")) text = trim(text.substr(8));
        if (!text.empty()) {
            int idx = static_cast<int>(chain.steps.size()) + 1;
            chain.steps.push_back(Step{0, idx, text});
        }
        current.clear();
        in_step = false;
    };

    for (const std::string& line : split_lines(completion)) {
        std::string rest;
        if (detail::match_step_heading(line, &rest)) {
            flush_step();
            in_step = true;
            if (!rest.empty()) current.push_back(rest);
        } else if (detail::match_final_answer(line, &rest)) {
            flush_step();
            answer = detail::extract_answer_text(rest);
            saw_answer = true;
            break;
        } else if (in_step) {
            current.push_back(line);
        }
    }
    flush_step();

    if (!saw_answer || answer.empty() || chain.steps.empty()) return std::nullopt;
    chain.answer_text = answer;
    return chain;
}

// Strict parse of a judge reply: an integer in [1, num_candidates] or the
// literal "none" (case-insensitive, optionally quoted). Anything else is
// treated as no match, with a warning.
inline std::optional<int> parse_judge_reply(const std::string& reply, int num_candidates) {
    std::string t = trim(reply);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = trim(t.substr(1, t.size() - 2));
    if (to_lower(t) == "none") return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        log_warn("unparseable judge reply treated as none: \"" + trim(reply) + "\"");
        return std::nullopt;
    }
    if (value < 1 || value > num_candidates) {
        log_warn("judge reply " + std::to_string(value) + " out of range [1, " +
                 std::to_string(num_candidates) + "]; treated as none");
        return std::nullopt;
    }
    return value;
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

class Gateway {
public:
    explicit Gateway(GatewayConfig config, PromptSet prompts = PromptSet{})
        : config_(std::move(config)),
          prompts_(std::move(prompts)),
          semaphore_(std::make_unique<Semaphore>(config_.max_in_flight)) {
        if (config_.max_in_flight < 1) throw ParamError("max_in_flight must be >= 1");
        if (config_.mode == GatewayMode::fixture) {
            transport_ = std::make_shared<FixtureTransport>(config_.fixture_dir);
        } else {
            transport_ = std::make_shared<HttpTransport>(config_);
        }
    }

    // Custom transport (tests, recording).
    Gateway(GatewayConfig config, std::shared_ptr<ChatTransport> transport,
            PromptSet prompts = PromptSet{})
        : config_(std::move(config)),
          prompts_(std::move(prompts)),
          transport_(std::move(transport)),
          semaphore_(std::make_unique<Semaphore>(config_.max_in_flight)) {
        if (config_.max_in_flight < 1) throw ParamError("max_in_flight must be >= 1");
    }

    const GatewayConfig& config() const { return config_; }
    const PromptSet& prompts() const { return prompts_; }

    // Sample n reasoning chains for a question. Unparseable completions are
    // retried once, then dropped with a warning, so the result may hold fewer
    // than n chains; stats record the outcome.
    std::vector<ReasoningChain> sample_chains(const std::string& question, int n,
                                              SampleStats* stats = nullptr,
                                              const std::string& exemplars = "") {
        if (n < 1) throw ParamError("sample count must be >= 1");
        const std::string prompt = prompts_.render_generation(question, exemplars);
        SampleStats local;
        local.requested = n;

        auto attempt = [&]() -> std::optional<ReasoningChain> {
            ChatExchange exchange = bounded_complete(prompt, config_.temperature_generation);
            return parse_chain_completion(exchange.reply);
        };
        auto sample_one = [&](int /*slot*/) -> std::optional<ReasoningChain> {
            auto chain = attempt();
            if (!chain) {
                ++local.retried;
                chain = attempt();
            }
            return chain;
        };

        std::vector<std::optional<ReasoningChain>> slots(static_cast<size_t>(n));
        if (transport_->sequential()) {
            for (int i = 0; i < n; ++i) slots[static_cast<size_t>(i)] = sample_one(i);
        } else {
            std::vector<std::future<std::optional<ReasoningChain>>> futures;
            futures.reserve(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                futures.push_back(std::async(std::launch::async, sample_one, i));
            }
            for (int i = 0; i < n; ++i) slots[static_cast<size_t>(i)] = futures[static_cast<size_t>(i)].get();
        }

        std::vector<ReasoningChain> chains;
        for (auto& slot : slots) {
            if (!slot) {
                ++local.dropped;
                continue;
            }
            ReasoningChain chain = std::move(*slot);
            chain.chain_index = static_cast<int>(chains.size()) + 1;
            for (auto& step : chain.steps) step.chain_index = chain.chain_index;
            chains.push_back(std::move(chain));
        }
        local.produced = static_cast<int>(chains.size());
        if (local.dropped > 0) {
            log_warn("dropped " + std::to_string(local.dropped) + " of " + std::to_string(n) +
                     " completions after retry (unparseable)");
        }
        if (stats) *stats = local;
        if (chains.empty()) {
            throw GatewayError("all " + std::to_string(n) + " completions were unparseable");
        }
        return chains;
    }

    // Ask the judge which candidate step (1-based) matches the target, or
    // none. Judging always runs at the judge temperature (0 by default).
    std::optional<int> judge_equivalence(const Step& target, const std::vector<Step>& candidate_path) {
        if (candidate_path.empty()) throw ParamError("judge_equivalence needs a nonempty candidate path");
        const std::string prompt = prompts_.render_equivalence(target, candidate_path);
        ChatExchange exchange = bounded_complete(prompt, config_.temperature_judge);
        return parse_judge_reply(exchange.reply, static_cast<int>(candidate_path.size()));
    }

    // Raw completion with the in-flight bound applied.
    ChatExchange bounded_complete(const std::string& prompt, double temperature) {
        SemaphoreGuard guard(*semaphore_);
        return transport_->complete(prompt, temperature);
    }

private:
    GatewayConfig config_;
    PromptSet prompts_;
    std::shared_ptr<ChatTransport> transport_;
    std::unique_ptr<Semaphore> semaphore_;
};

}  // namespace rgconf
