#pragma once

// Shared utilities: error taxonomy, string normalization helpers,
// stable hashing, seed derivation, and a bounded worker pool.

#include <atomic>
#include <cctype>
#include <charconv>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace rgconf {

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes: ParamError -> 1,
// DataError (and derived) -> 2, GatewayError -> 3.
// ---------------------------------------------------------------------------

struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MetricError : DataError {
    using DataError::DataError;
};

struct GatewayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Logging. Warnings go to stderr unless silenced (tests flip this off).
// ---------------------------------------------------------------------------

inline bool& log_warnings_enabled() {
    static bool enabled = true;
    return enabled;
}

inline void log_warn(const std::string& msg) {
    if (log_warnings_enabled()) {
        std::cerr << "[rgconf] warning: " << msg << "\n";
    }
}

// ---------------------------------------------------------------------------
// String helpers
// ---------------------------------------------------------------------------

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

// Collapse every run of whitespace to a single space, dropping leading/trailing runs.
inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline void replace_all(std::string& text, std::string_view token, std::string_view value) {
    size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        start = nl + 1;
    }
    return lines;
}

// ---------------------------------------------------------------------------
// Stable hashing (FNV-1a). Used for cache keys and fixture lookup, so it must
// be identical across runs and platforms; std::hash gives no such guarantee.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string to_hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

// splitmix64: cheap, well-mixed seed derivation for per-question /
// per-answer RNG streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Derive a child seed from a parent seed and a label. The same (seed, label)
// always yields the same stream regardless of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    return splitmix64(seed ^ fnv1a64(label));
}

// Map a raw 64-bit draw onto [0, n) without modulo bias (Lemire reduction).
inline std::size_t bounded_index(std::uint64_t draw, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(draw) * n) >> 64);
}

// ---------------------------------------------------------------------------
// Concurrency primitives
// ---------------------------------------------------------------------------

// Counting semaphore with runtime capacity.
class Semaphore {
public:
    explicit Semaphore(int capacity) : capacity_(capacity < 1 ? 1 : capacity), available_(capacity_) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

    int capacity() const { return capacity_; }

private:
    int capacity_;
    int available_;
    std::mutex mutex_;
    std::condition_variable cv_;
};

struct SemaphoreGuard {
    explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;
    Semaphore& sem;
};

// Run fn(i) for i in [0, n) on up to `jobs` threads and return results in
// index order. Aggregation stays deterministic no matter how work interleaves.
template <typename T>
std::vector<T> parallel_map_ordered(std::size_t n, int jobs, const std::function<T(std::size_t)>& fn) {
    std::vector<T> results(n);
    if (n == 0) return results;
    if (jobs < 1) jobs = 1;
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    results[i] = fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace rgconf
