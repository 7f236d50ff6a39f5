#pragma once

// Step-equivalence detection across chains. A checker strategy answers the
// question "which step of this candidate chain, if any, matches the target
// step?"; build_equivalence_set runs every (target chain, other chain)
// direction, symmetrizes, and deduplicates into canonically ordered pairs.
//
// Strategies:
//   exact      - identical trimmed text
//   normalized - case-folded, whitespace-collapsed text; prefers an exact
//                match when one exists so every exact pair is also found
//   judge      - delegates to the LLM gateway, with a persistent cache
//
// Pairs come back in a stable first-found order; graph construction relies on
// that order when it has to discard inter-edges to break cycles.

#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgconf/chains.hpp"
#include "rgconf/common.hpp"
#include "rgconf/gateway.hpp"
#include "rgconf/prompts.hpp"

namespace rgconf {

struct StepRef {
    int chain_index = 0;
    int step_index = 0;

    auto operator<=>(const StepRef&) const = default;
};

enum class MatchSource { exact, normalized, judge };

inline const char* match_source_name(MatchSource s) {
    switch (s) {
        case MatchSource::exact: return "exact";
        case MatchSource::normalized: return "normalized";
        case MatchSource::judge: return "judge";
    }
    return "?";
}

// A symmetric equivalence between steps of two different chains, stored with
// left < right in (chain, step) lexicographic order.
struct EquivalencePair {
    StepRef left;
    StepRef right;
    MatchSource source = MatchSource::exact;

    bool operator==(const EquivalencePair& other) const {
        return left == other.left && right == other.right;
    }
};

// ---------------------------------------------------------------------------
// Judge cache: append-only JSONL, one {"key", "verdict", "prompt_version"}
// record per line. Exact-key lookups only; a corrupt file is rebuilt empty.
// ---------------------------------------------------------------------------

class JudgeCache {
public:
    struct Lookup {
        bool found = false;
        std::optional<int> verdict;
    };

    JudgeCache() = default;

    explicit JudgeCache(std::string path) : path_(std::move(path)) { load(); }

    static std::string make_key(const Step& target, const std::vector<Step>& candidates,
                                std::string_view prompt_version) {
        std::uint64_t h = fnv1a64(prompt_version);
        h = fnv1a64("\x1e", h);
        h = fnv1a64(target.text, h);
        for (const auto& step : candidates) {
            h = fnv1a64("\x1f", h);
            h = fnv1a64(step.text, h);
        }
        return to_hex64(h);
    }

    Lookup get(const std::string& key) const {
        std::shared_lock lock(mutex_);
        auto it = entries_.find(key);
        if (it == entries_.end()) return {};
        return Lookup{true, it->second};
    }

    void put(const std::string& key, std::optional<int> verdict) {
        std::unique_lock lock(mutex_);
        auto [it, inserted] = entries_.insert_or_assign(key, verdict);
        (void)it;
        if (!path_.empty()) {
            std::ofstream out(path_, std::ios::app);
            if (!out) {
                log_warn("cannot append to judge cache file: " + path_);
                return;
            }
            nlohmann::json j = {
                {"key", key},
                {"verdict", verdict ? nlohmann::json(*verdict) : nlohmann::json(nullptr)},
                {"prompt_version", kEquivalencePromptVersion},
            };
            out << j.dump() << "\n";
        }
    }

    size_t size() const {
        std::shared_lock lock(mutex_);
        return entries_.size();
    }

private:
    void load() {
        std::ifstream in(path_);
        if (!in) return;  // fresh cache
        std::map<std::string, std::optional<int>> loaded;
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("key") || !j["key"].is_string() ||
                !j.contains("verdict")) {
                log_warn("judge cache " + path_ + " corrupt at line " + std::to_string(line_no) +
                         "; rebuilding empty");
                in.close();
                std::ofstream truncate(path_, std::ios::trunc);
                return;
            }
            std::optional<int> verdict;
            if (j["verdict"].is_number_integer()) verdict = j["verdict"].get<int>();
            loaded.insert_or_assign(j["key"].get<std::string>(), verdict);  // last write wins
        }
        entries_ = std::move(loaded);
    }

    std::string path_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::optional<int>> entries_;
};

// ---------------------------------------------------------------------------
// Checkers
// ---------------------------------------------------------------------------

class EquivalenceChecker {
public:
    virtual ~EquivalenceChecker() = default;
    // 1-based index of the matching candidate, or nullopt.
    virtual std::optional<int> match(const Step& target, const std::vector<Step>& candidates) = 0;
    virtual MatchSource source() const = 0;
};

class ExactChecker : public EquivalenceChecker {
public:
    std::optional<int> match(const Step& target, const std::vector<Step>& candidates) override {
        std::string key = trim(target.text);
        for (size_t i = 0; i < candidates.size(); ++i) {
            if (trim(candidates[i].text) == key) return static_cast<int>(i + 1);
        }
        return std::nullopt;
    }

    MatchSource source() const override { return MatchSource::exact; }
};

class NormalizedChecker : public EquivalenceChecker {
public:
    std::optional<int> match(const Step& target, const std::vector<Step>& candidates) override {
        // Exact matches take precedence; otherwise the earliest
        // case/whitespace-insensitive match wins.
        std::string exact_key = trim(target.text);
        std::string norm_key = normalize(target.text);
        std::optional<int> relaxed;
        for (size_t i = 0; i < candidates.size(); ++i) {
            if (trim(candidates[i].text) == exact_key) return static_cast<int>(i + 1);
            if (!relaxed && normalize(candidates[i].text) == norm_key) relaxed = static_cast<int>(i + 1);
        }
        return relaxed;
    }

    MatchSource source() const override { return MatchSource::normalized; }

    static std::string normalize(std::string_view text) { return to_lower(collapse_whitespace(text)); }
};

class JudgeChecker : public EquivalenceChecker {
public:
    JudgeChecker(Gateway& gateway, JudgeCache* cache = nullptr) : gateway_(gateway), cache_(cache) {}

    std::optional<int> match(const Step& target, const std::vector<Step>& candidates) override {
        if (candidates.empty()) return std::nullopt;
        std::string key;
        if (cache_) {
            key = JudgeCache::make_key(target, candidates, kEquivalencePromptVersion);
            auto hit = cache_->get(key);
            if (hit.found) return hit.verdict;
        }
        std::optional<int> verdict = gateway_.judge_equivalence(target, candidates);
        if (cache_) cache_->put(key, verdict);
        return verdict;
    }

    MatchSource source() const override { return MatchSource::judge; }

private:
    Gateway& gateway_;
    JudgeCache* cache_;
};

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

// Match one target step against the steps of one other chain. All candidates
// must come from a single chain different from the target's.
inline std::optional<int> find_equivalent(const Step& target, const std::vector<Step>& candidates,
                                          EquivalenceChecker& checker) {
    if (candidates.empty()) return std::nullopt;
    for (const auto& c : candidates) {
        if (c.chain_index != candidates.front().chain_index)
            throw DataError("find_equivalent: candidates span multiple chains");
    }
    if (candidates.front().chain_index == target.chain_index)
        throw DataError("find_equivalent: candidates must come from a different chain");
    return checker.match(target, candidates);
}

// Run every ordered (target chain, candidate chain) direction and collect the
// deduplicated, canonically ordered pair set. A match found in either
// direction yields the same single pair.
inline std::vector<EquivalencePair> build_equivalence_set(const QuestionRecord& record,
                                                          EquivalenceChecker& checker) {
    std::vector<EquivalencePair> pairs;
    std::set<std::pair<StepRef, StepRef>> seen;
    const auto& chains = record.chains;
    for (size_t i = 0; i < chains.size(); ++i) {
        for (size_t k = 0; k < chains.size(); ++k) {
            if (i == k) continue;
            for (const auto& target : chains[i].steps) {
                std::optional<int> idx = find_equivalent(target, chains[k].steps, checker);
                if (!idx) continue;
                StepRef a{target.chain_index, target.step_index};
                StepRef b{chains[k].chain_index, *idx};
                if (b < a) std::swap(a, b);
                if (seen.insert({a, b}).second) {
                    pairs.push_back(EquivalencePair{a, b, checker.source()});
                }
            }
        }
    }
    return pairs;
}

}  // namespace rgconf
