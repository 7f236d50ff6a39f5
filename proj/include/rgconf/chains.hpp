#pragma once

// Core domain types: sampled reasoning chains with their steps and final
// answers, grouped per question, plus the answer canonicalizer that decides
// when two final answers count as the same candidate.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rgconf/common.hpp"

namespace rgconf {

struct Step {
    int chain_index = 0;  // 1-based
    int step_index = 0;   // 1-based within the chain
    std::string text;

    bool operator==(const Step&) const = default;
};

struct ReasoningChain {
    int chain_index = 0;
    std::vector<Step> steps;  // consecutively indexed 1..T
    std::string answer_text;

    bool operator==(const ReasoningChain&) const = default;
};

struct QuestionRecord {
    std::string question_id;
    std::string question_text;
    std::vector<ReasoningChain> chains;
    std::optional<std::string> gold_answer;  // evaluation only

    bool operator==(const QuestionRecord&) const = default;
};

// One candidate answer: the canonical form plus every raw string that mapped
// to it across the question's chains.
struct AnswerKey {
    std::string canonical;
    std::vector<std::string> originals;  // sorted, deduplicated

    bool operator==(const AnswerKey&) const = default;
};

namespace detail {

// Lowercase the string, strip an enclosing \boxed{...} wrapper, collapse
// whitespace, and drop trailing periods. Applied repeatedly until stable so
// the overall normal form is idempotent by construction (e.g. a wrapper
// exposed only after period stripping still gets removed).
inline std::string normalize_pass(const std::string& in) {
    std::string s = to_lower(trim(in));

    // Strip \boxed{...} when it encloses the entire string (balanced braces).
    constexpr std::string_view kBox = "\\boxed{";
    while (starts_with(s, kBox) && s.size() > kBox.size() && s.back() == '}') {
        int depth = 0;
        size_t close = std::string::npos;
        for (size_t i = kBox.size() - 1; i < s.size(); ++i) {
            if (s[i] == '{') ++depth;
            else if (s[i] == '}') {
                --depth;
                if (depth == 0) {
                    close = i;
                    break;
                }
            }
        }
        if (close != s.size() - 1) break;  // wrapper closes early: not enclosing
        s = trim(s.substr(kBox.size(), s.size() - kBox.size() - 1));
    }

    s = collapse_whitespace(s);
    while (!s.empty() && s.back() == '.') s.pop_back();
    return trim(s);
}

inline bool is_plain_integer(std::string_view s) {
    size_t i = (s.size() > 0 && (s[0] == '+' || s[0] == '-')) ? 1 : 0;
    if (i >= s.size()) return false;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    return true;
}

inline bool is_plain_decimal(std::string_view s) {
    size_t i = (s.size() > 0 && (s[0] == '+' || s[0] == '-')) ? 1 : 0;
    size_t digits = 0, dots = 0;
    size_t mantissa_end = s.size();
    for (size_t j = i; j < s.size(); ++j) {
        char c = s[j];
        if (c >= '0' && c <= '9') {
            ++digits;
        } else if (c == '.') {
            if (++dots > 1) return false;
        } else if (c == 'e') {
            mantissa_end = j;
            break;
        } else {
            return false;
        }
    }
    if (digits == 0) return false;
    if (mantissa_end == s.size()) return dots == 1;  // pure integers take the exact path
    // exponent part
    size_t j = mantissa_end + 1;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    if (j >= s.size()) return false;
    for (; j < s.size(); ++j) {
        if (s[j] < '0' || s[j] > '9') return false;
    }
    return true;
}

// Exact integer normalization by string manipulation: survives values wider
// than any machine type ("007" -> "7", "-0" -> "0").
inline std::string normalize_integer(std::string_view s) {
    bool negative = s[0] == '-';
    size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
    while (i + 1 < s.size() && s[i] == '0') ++i;
    std::string digits(s.substr(i));
    if (digits == "0") return "0";
    return negative ? "-" + digits : digits;
}

// Decimal / scientific forms go through double parsing and shortest
// round-trip printing ("0.50" -> "0.5", "1e2" -> "100").
inline std::string normalize_decimal(const std::string& s) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return s;
    if (value == 0.0) return "0";  // fold -0.0
    char buf[64];
    auto [end, ec2] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec2 != std::errc{}) return s;
    return std::string(buf, end);
}

}  // namespace detail

// Deterministic normal form for final answers: trim, lowercase, strip an
// enclosing \boxed{...}, collapse internal whitespace, drop trailing periods,
// then reserialize plain numerics. Idempotent; symbolic forms ("1/2") are
// left as-is, so "0.5" and "1/2" remain distinct candidates.
inline std::string canonicalize_answer(std::string_view raw) {
    std::string s(raw);
    for (int round = 0; round < 16; ++round) {
        std::string next = detail::normalize_pass(s);
        if (next == s) break;
        s = std::move(next);
    }
    if (detail::is_plain_integer(s)) return detail::normalize_integer(s);
    if (detail::is_plain_decimal(s)) return detail::normalize_decimal(s);
    return s;
}

// Group the question's N answers by canonical form. Keys come back sorted
// lexicographically; 1 <= result size <= N.
inline std::vector<AnswerKey> distinct_answers(const QuestionRecord& record) {
    std::map<std::string, std::set<std::string>> groups;
    for (const auto& chain : record.chains) {
        groups[canonicalize_answer(chain.answer_text)].insert(chain.answer_text);
    }
    std::vector<AnswerKey> keys;
    keys.reserve(groups.size());
    for (auto& [canonical, originals] : groups) {
        keys.push_back(AnswerKey{canonical, {originals.begin(), originals.end()}});
    }
    return keys;
}

// Correctness uses the same canonicalizer as answer merging: one equality
// notion end to end.
inline bool answers_match(std::string_view a, std::string_view b) {
    return canonicalize_answer(a) == canonicalize_answer(b);
}

}  // namespace rgconf
