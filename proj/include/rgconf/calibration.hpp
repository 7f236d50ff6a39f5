#pragma once

// Calibration metrics over (confidence, correctness) pairs.
//
// AUROC uses the rank formulation of the Mann-Whitney statistic with ties
// counted as half-wins; the numerator is assembled in integer arithmetic so
// the result is bit-identical to brute-force pair counting. Brier is the
// mean squared error. ECE uses equal-width bins on [0, 1], right-inclusive
// at 1.0, with empty bins contributing nothing.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgconf/common.hpp"

namespace rgconf {

struct CalibrationRecord {
    std::string question_id;
    double confidence = 0.0;  // in [0, 1]
    bool correct = false;
};

// Probability that a uniformly random correct record outranks a random
// incorrect one. Requires both classes to be present.
inline double auroc(std::span<const CalibrationRecord> records) {
    std::uint64_t positives = 0, negatives = 0;
    for (const auto& r : records) (r.correct ? positives : negatives)++;
    if (positives == 0 || negatives == 0) {
        throw MetricError("AUROC is undefined: need at least one correct and one incorrect record");
    }

    std::vector<size_t> order(records.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return records[a].confidence < records[b].confidence;
    });

    // Twice the positive rank sum, accumulated per tie group so ties get the
    // group's average rank. Integer throughout; one final division.
    std::uint64_t twice_rank_sum_pos = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() &&
               records[order[j + 1]].confidence == records[order[i]].confidence) {
            ++j;
        }
        std::uint64_t twice_avg_rank = static_cast<std::uint64_t>(i + 1) + static_cast<std::uint64_t>(j + 1);
        for (size_t k = i; k <= j; ++k) {
            if (records[order[k]].correct) twice_rank_sum_pos += twice_avg_rank;
        }
        i = j + 1;
    }

    std::uint64_t numerator = twice_rank_sum_pos - positives * (positives + 1);
    return static_cast<double>(numerator) / static_cast<double>(2 * positives * negatives);
}

inline double brier(std::span<const CalibrationRecord> records) {
    if (records.empty()) throw MetricError("Brier score is undefined on an empty record set");
    double total = 0.0;
    for (const auto& r : records) {
        double gap = r.confidence - (r.correct ? 1.0 : 0.0);
        total += gap * gap;
    }
    return total / static_cast<double>(records.size());
}

struct BinStat {
    long count = 0;
    double mean_confidence = 0.0;
    double accuracy = 0.0;
};

inline double ece(std::span<const CalibrationRecord> records, int bins = 10,
                  std::vector<BinStat>* bin_stats = nullptr) {
    if (records.empty()) throw MetricError("ECE is undefined on an empty record set");
    if (bins < 1) throw ParamError("ECE needs at least one bin");

    std::vector<BinStat> stats(static_cast<size_t>(bins));
    std::vector<double> conf_sum(static_cast<size_t>(bins), 0.0);
    std::vector<long> correct_sum(static_cast<size_t>(bins), 0);
    for (const auto& r : records) {
        int b = std::min(bins - 1, static_cast<int>(r.confidence * bins));
        if (b < 0) b = 0;
        ++stats[static_cast<size_t>(b)].count;
        conf_sum[static_cast<size_t>(b)] += r.confidence;
        if (r.correct) ++correct_sum[static_cast<size_t>(b)];
    }
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
        auto& s = stats[static_cast<size_t>(b)];
        if (s.count == 0) continue;
        s.mean_confidence = conf_sum[static_cast<size_t>(b)] / static_cast<double>(s.count);
        s.accuracy = static_cast<double>(correct_sum[static_cast<size_t>(b)]) / static_cast<double>(s.count);
        total += static_cast<double>(s.count) / static_cast<double>(records.size()) *
                 std::abs(s.accuracy - s.mean_confidence);
    }
    if (bin_stats) *bin_stats = std::move(stats);
    return total;
}

struct MetricsReport {
    double auroc = 0.0;
    double brier = 0.0;
    double ece = 0.0;
    long n = 0;
    long skipped = 0;  // questions without a gold answer
    std::vector<BinStat> bin_stats;

    nlohmann::json to_json() const {
        nlohmann::json bins = nlohmann::json::array();
        for (const auto& b : bin_stats) {
            bins.push_back({{"count", b.count},
                            {"mean_confidence", b.mean_confidence},
                            {"accuracy", b.accuracy}});
        }
        return {{"auroc", auroc}, {"brier", brier}, {"ece", ece},
                {"n", n},         {"skipped", skipped}, {"bin_stats", std::move(bins)}};
    }
};

inline MetricsReport compute_metrics(std::span<const CalibrationRecord> records, int bins = 10) {
    MetricsReport report;
    report.auroc = auroc(records);
    report.brier = brier(records);
    report.ece = ece(records, bins, &report.bin_stats);
    report.n = static_cast<long>(records.size());
    return report;
}

}  // namespace rgconf
