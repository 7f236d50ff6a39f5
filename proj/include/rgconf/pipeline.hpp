#pragma once

// End-to-end wiring: run configuration, the per-question scoring pipeline
// (equivalence -> graph -> estimators), dataset evaluation, and the command
// implementations behind the CLI subcommands.
//
// Every artifact embeds the run configuration, tool version, and seed, and
// contains nothing time- or host-dependent: re-running a command with the
// same inputs reproduces byte-identical files. Per-question RNG streams are
// derived as splitmix64(seed ^ fnv1a64(question_id)), and per-answer streams
// from the question stream by answer key, so results do not depend on the
// number of worker threads.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgconf/calibration.hpp"
#include "rgconf/chains.hpp"
#include "rgconf/common.hpp"
#include "rgconf/dataset.hpp"
#include "rgconf/equivalence.hpp"
#include "rgconf/estimators.hpp"
#include "rgconf/gateway.hpp"
#include "rgconf/graph.hpp"
#include "rgconf/routing.hpp"
#include "rgconf/version.hpp"

namespace rgconf {

struct RunConfig {
    std::string dataset;
    std::string output_dir = "out";
    std::vector<std::string> estimators = {"all"};
    EstimatorParams params;
    std::string equivalence = "exact";  // exact | normalized | judge
    GatewayConfig gateway;
    std::string cache_path;   // judge verdict cache (empty: in-memory only)
    std::string prompt_dir;   // prompt template overrides
    int n_samples = 10;
    int jobs = 1;
    int ece_bins = 10;
    std::vector<double> k_percents = {5, 10, 15, 100};
    std::string fixtures;            // routing outcomes
    std::string scores_path;         // routing input; defaults to <output_dir>/scores.jsonl
    std::string route_estimator = "pathweight";
    std::string intervention = "reflect";  // reflect | cascade

    nlohmann::json to_json() const {
        return {{"dataset", dataset},
                {"output_dir", output_dir},
                {"estimators", estimators},
                {"params", params.to_json()},
                {"equivalence", equivalence},
                {"gateway",
                 {{"base_url", gateway.base_url},
                  {"model_name", gateway.model_name},
                  {"temperature_generation", gateway.temperature_generation},
                  {"temperature_judge", gateway.temperature_judge},
                  {"max_in_flight", gateway.max_in_flight},
                  {"timeout_ms", gateway.timeout.count()},
                  {"mode", gateway.mode == GatewayMode::live ? "live" : "fixture"},
                  {"fixture_dir", gateway.fixture_dir}}},
                {"cache_path", cache_path},
                {"prompt_dir", prompt_dir},
                {"n_samples", n_samples},
                {"jobs", jobs},
                {"ece_bins", ece_bins},
                {"k_percents", k_percents},
                {"fixtures", fixtures},
                {"scores_path", scores_path},
                {"route_estimator", route_estimator},
                {"intervention", intervention}};
    }

    static RunConfig from_json(const nlohmann::json& j) {
        RunConfig cfg;
        cfg.dataset = j.value("dataset", cfg.dataset);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        if (j.contains("estimators")) cfg.estimators = j["estimators"].get<std::vector<std::string>>();
        if (j.contains("params")) {
            const auto& p = j["params"];
            cfg.params.alpha = p.value("alpha", cfg.params.alpha);
            cfg.params.beta = p.value("beta", cfg.params.beta);
            cfg.params.max_path_len = p.value("max_path_len", cfg.params.max_path_len);
            cfg.params.sample_count = p.value("sample_count", cfg.params.sample_count);
            cfg.params.gamma = p.value("gamma", cfg.params.gamma);
            cfg.params.seed = p.value("seed", cfg.params.seed);
            cfg.params.enum_node_bound = p.value("enum_node_bound", cfg.params.enum_node_bound);
        }
        cfg.equivalence = j.value("equivalence", cfg.equivalence);
        if (j.contains("gateway")) {
            const auto& g = j["gateway"];
            cfg.gateway.base_url = g.value("base_url", cfg.gateway.base_url);
            cfg.gateway.model_name = g.value("model_name", cfg.gateway.model_name);
            cfg.gateway.temperature_generation =
                g.value("temperature_generation", cfg.gateway.temperature_generation);
            cfg.gateway.temperature_judge = g.value("temperature_judge", cfg.gateway.temperature_judge);
            cfg.gateway.max_in_flight = g.value("max_in_flight", cfg.gateway.max_in_flight);
            cfg.gateway.timeout = std::chrono::milliseconds(g.value("timeout_ms", cfg.gateway.timeout.count()));
            cfg.gateway.mode = g.value("mode", std::string("fixture")) == "live" ? GatewayMode::live
                                                                                 : GatewayMode::fixture;
            cfg.gateway.fixture_dir = g.value("fixture_dir", cfg.gateway.fixture_dir);
        }
        cfg.cache_path = j.value("cache_path", cfg.cache_path);
        cfg.prompt_dir = j.value("prompt_dir", cfg.prompt_dir);
        cfg.n_samples = j.value("n_samples", cfg.n_samples);
        cfg.jobs = j.value("jobs", cfg.jobs);
        cfg.ece_bins = j.value("ece_bins", cfg.ece_bins);
        if (j.contains("k_percents")) cfg.k_percents = j["k_percents"].get<std::vector<double>>();
        cfg.fixtures = j.value("fixtures", cfg.fixtures);
        cfg.scores_path = j.value("scores_path", cfg.scores_path);
        cfg.route_estimator = j.value("route_estimator", cfg.route_estimator);
        cfg.intervention = j.value("intervention", cfg.intervention);
        return cfg;
    }

    static RunConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open config file: " + path);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw DataError("config file is not valid JSON: " + path);
        return from_json(j);
    }

    std::vector<Estimator> resolved_estimators() const {
        std::vector<Estimator> out;
        for (const auto& name : estimators) {
            if (name == "all") return all_estimators();
            out.push_back(estimator_from_name(name));
        }
        if (out.empty()) throw ParamError("no estimators selected");
        return out;
    }

    nlohmann::json run_header(const std::string& command) const {
        return {{"run", {{"command", command}, {"tool_version", kToolVersion},
                         {"seed", params.seed}, {"config", to_json()}}}};
    }
};

// ---------------------------------------------------------------------------
// Checker construction
// ---------------------------------------------------------------------------

// Owns the checker and whatever it depends on (gateway, cache).
struct CheckerBundle {
    std::unique_ptr<Gateway> gateway;
    std::unique_ptr<JudgeCache> cache;
    std::unique_ptr<EquivalenceChecker> checker;
};

inline CheckerBundle make_checker(const RunConfig& cfg) {
    CheckerBundle bundle;
    if (cfg.equivalence == "exact") {
        bundle.checker = std::make_unique<ExactChecker>();
    } else if (cfg.equivalence == "normalized") {
        bundle.checker = std::make_unique<NormalizedChecker>();
    } else if (cfg.equivalence == "judge") {
        PromptSet prompts = cfg.prompt_dir.empty() ? PromptSet{} : PromptSet::from_directory(cfg.prompt_dir);
        bundle.gateway = std::make_unique<Gateway>(cfg.gateway, std::move(prompts));
        bundle.cache = cfg.cache_path.empty() ? std::make_unique<JudgeCache>()
                                              : std::make_unique<JudgeCache>(cfg.cache_path);
        bundle.checker = std::make_unique<JudgeChecker>(*bundle.gateway, bundle.cache.get());
    } else {
        throw ParamError("unknown equivalence strategy: " + cfg.equivalence);
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Per-question pipeline
// ---------------------------------------------------------------------------

struct QuestionArtifacts {
    std::vector<EquivalencePair> pairs;
    ReasoningGraph graph;    // finalized
    MergedGraph merged;
    AcyclicReport removals;
};

inline QuestionArtifacts build_artifacts(const QuestionRecord& record, EquivalenceChecker& checker) {
    QuestionArtifacts artifacts;
    artifacts.pairs = build_equivalence_set(record, checker);
    ReasoningGraph raw = build_graph(record, artifacts.pairs);
    artifacts.graph = finalize_acyclic(raw, &artifacts.removals);
    artifacts.merged = merge_equivalent(artifacts.graph, artifacts.pairs);
    return artifacts;
}

inline ConfidenceReport run_estimator(Estimator estimator, const QuestionRecord& record,
                                      const QuestionArtifacts& artifacts, const EstimatorParams& params) {
    switch (estimator) {
        case Estimator::selfcons: {
            ConfidenceReport report = self_consistency(record);
            report.params = params;
            return report;
        }
        case Estimator::cenconf: return cenconf(artifacts.graph, params, record.question_id);
        case Estimator::pathconv_exact: return pathconv_exact(artifacts.graph, params, record.question_id);
        case Estimator::pathconv_sampled:
            return pathconv_sampled(artifacts.graph, params, record.question_id);
        case Estimator::pathweight: return pathweight(artifacts.merged, params, record.question_id);
    }
    throw ParamError("unknown estimator");
}

inline EstimatorParams params_for_question(const EstimatorParams& base, const std::string& question_id) {
    EstimatorParams p = base;
    p.seed = derive_seed(base.seed, question_id);
    return p;
}

// Per-question designated response: the estimator's argmax answer, its
// confidence, and whether it matches the gold answer.
struct ScoredQuestion {
    std::string question_id;
    std::string answer;
    double confidence = 0.0;
    bool correct = false;
};

inline ScoredQuestion score_designated(const QuestionRecord& record, const ConfidenceReport& report) {
    auto [answer, confidence] = argmax_answer(report);
    ScoredQuestion scored;
    scored.question_id = record.question_id;
    scored.answer = answer;
    scored.confidence = confidence;
    scored.correct = record.gold_answer && canonicalize_answer(*record.gold_answer) == answer;
    return scored;
}

// Evaluate one estimator over a dataset: argmax answers become calibration
// records, questions without a gold answer are skipped (counted), and the
// metrics are computed at the given bin count. A dataset whose designated
// answers are all correct or all incorrect raises the AUROC MetricError.
inline MetricsReport evaluate_dataset(const std::vector<QuestionRecord>& records, Estimator estimator,
                                      EquivalenceChecker& checker, const EstimatorParams& params,
                                      int bins = 10, int jobs = 1) {
    std::vector<std::optional<CalibrationRecord>> rows =
        parallel_map_ordered<std::optional<CalibrationRecord>>(
            records.size(), jobs, [&](std::size_t i) -> std::optional<CalibrationRecord> {
                const QuestionRecord& record = records[i];
                if (!record.gold_answer) return std::nullopt;
                QuestionArtifacts artifacts = build_artifacts(record, checker);
                ConfidenceReport report =
                    run_estimator(estimator, record, artifacts, params_for_question(params, record.question_id));
                ScoredQuestion scored = score_designated(record, report);
                return CalibrationRecord{record.question_id, scored.confidence, scored.correct};
            });

    std::vector<CalibrationRecord> kept;
    long skipped = 0;
    for (auto& row : rows) {
        if (row) kept.push_back(std::move(*row));
        else ++skipped;
    }
    if (kept.empty()) throw DataError("no questions with gold answers to evaluate");
    MetricsReport report = compute_metrics(kept, bins);
    report.skipped = skipped;
    return report;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write output file: " + path);
    return out;
}

inline std::string sanitize_id(const std::string& id) {
    std::string out;
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '-' || c == '_';
        out.push_back(ok ? c : '_');
    }
    return out;
}

}  // namespace detail

// sample: read question stubs, sample n chains per question through the
// gateway, and write a full dataset plus a per-question sampling report.
inline void cmd_sample(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ParamError("sample needs a dataset of question stubs (--dataset)");
    std::ifstream in(cfg.dataset);
    if (!in) throw DataError("cannot open dataset file: " + cfg.dataset);
    std::vector<QuestionRecord> stubs = parse_question_stubs(in);

    PromptSet prompts = cfg.prompt_dir.empty() ? PromptSet{} : PromptSet::from_directory(cfg.prompt_dir);
    Gateway gateway(cfg.gateway, std::move(prompts));

    detail::ensure_output_dir(cfg.output_dir);
    nlohmann::json stats_report = nlohmann::json::array();
    std::vector<QuestionRecord> sampled;
    for (auto& stub : stubs) {
        SampleStats stats;
        QuestionRecord record = stub;
        record.chains = gateway.sample_chains(record.question_text, cfg.n_samples, &stats);
        stats_report.push_back({{"question_id", record.question_id},
                                {"requested", stats.requested},
                                {"produced", stats.produced},
                                {"dropped", stats.dropped},
                                {"retried", stats.retried}});
        sampled.push_back(std::move(record));
    }

    save_dataset(sampled, cfg.output_dir + "/dataset.jsonl");
    auto out = detail::open_output(cfg.output_dir + "/sample_report.json");
    nlohmann::json report = cfg.run_header("sample");
    report["questions"] = stats_report;
    out << report.dump(2) << "\n";
}

// score: run the selected estimators over every question; one report line
// per (question, estimator). Estimator guard failures are recorded and the
// run continues.
inline void cmd_score(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ParamError("score needs --dataset");
    std::vector<QuestionRecord> records = load_dataset(cfg.dataset);
    std::vector<Estimator> estimators = cfg.resolved_estimators();
    CheckerBundle bundle = make_checker(cfg);

    struct QuestionResult {
        std::vector<ConfidenceReport> reports;
        std::vector<nlohmann::json> errors;
        bool cycle_affected = false;
    };

    std::vector<QuestionResult> results = parallel_map_ordered<QuestionResult>(
        records.size(), cfg.jobs, [&](std::size_t i) {
            const QuestionRecord& record = records[i];
            QuestionResult result;
            QuestionArtifacts artifacts = build_artifacts(record, *bundle.checker);
            result.cycle_affected = !artifacts.removals.removed.empty();
            EstimatorParams params = params_for_question(cfg.params, record.question_id);
            for (Estimator estimator : estimators) {
                try {
                    ConfidenceReport report = run_estimator(estimator, record, artifacts, params);
                    report.diagnostics["graph_nodes"] = artifacts.graph.node_count();
                    report.diagnostics["discarded_inter_edges"] =
                        static_cast<long>(artifacts.removals.removed.size());
                    result.reports.push_back(std::move(report));
                } catch (const std::exception& e) {
                    result.errors.push_back({{"question_id", record.question_id},
                                             {"estimator", estimator_name(estimator)},
                                             {"error", e.what()}});
                }
            }
            return result;
        });

    detail::ensure_output_dir(cfg.output_dir);
    auto jsonl = detail::open_output(cfg.output_dir + "/scores.jsonl");
    jsonl << cfg.run_header("score").dump() << "\n";
    std::vector<ConfidenceReport> flat;
    long errors = 0, cycle_affected = 0;
    for (const auto& result : results) {
        if (result.cycle_affected) ++cycle_affected;
        for (const auto& report : result.reports) {
            jsonl << report.to_json().dump() << "\n";
            flat.push_back(report);
        }
        for (const auto& err : result.errors) {
            jsonl << err.dump() << "\n";
            ++errors;
        }
    }

    auto csv = detail::open_output(cfg.output_dir + "/scores.csv");
    csv << "# " << cfg.run_header("score").dump() << "\n";
    reports_to_csv(flat, csv);

    auto summary = detail::open_output(cfg.output_dir + "/score_summary.json");
    nlohmann::json s = cfg.run_header("score");
    s["questions"] = records.size();
    s["reports"] = flat.size();
    s["errors"] = errors;
    s["cycle_affected_questions"] = cycle_affected;
    s["cycle_affected_fraction"] =
        records.empty() ? 0.0 : static_cast<double>(cycle_affected) / static_cast<double>(records.size());
    summary << s.dump(2) << "\n";
}

// evaluate: metrics grid (estimators x AUROC/Brier/ECE) over the dataset.
inline void cmd_evaluate(const RunConfig& cfg, bool render_table = false, std::ostream* table_out = nullptr) {
    if (cfg.dataset.empty()) throw ParamError("evaluate needs --dataset");
    std::vector<QuestionRecord> records = load_dataset(cfg.dataset);
    if (records.empty()) throw DataError("dataset is empty");
    std::vector<Estimator> estimators = cfg.resolved_estimators();
    CheckerBundle bundle = make_checker(cfg);

    // Build artifacts once per question, reuse across estimators.
    struct Row {
        std::map<std::string, CalibrationRecord> per_estimator;
        bool has_gold = false;
    };
    std::vector<Row> rows = parallel_map_ordered<Row>(records.size(), cfg.jobs, [&](std::size_t i) {
        const QuestionRecord& record = records[i];
        Row row;
        if (!record.gold_answer) return row;
        row.has_gold = true;
        QuestionArtifacts artifacts = build_artifacts(record, *bundle.checker);
        EstimatorParams params = params_for_question(cfg.params, record.question_id);
        for (Estimator estimator : estimators) {
            ConfidenceReport report = run_estimator(estimator, record, artifacts, params);
            ScoredQuestion scored = score_designated(record, report);
            row.per_estimator[estimator_name(estimator)] =
                CalibrationRecord{record.question_id, scored.confidence, scored.correct};
        }
        return row;
    });

    long skipped = 0;
    std::map<std::string, std::vector<CalibrationRecord>> per_estimator;
    for (const auto& row : rows) {
        if (!row.has_gold) {
            ++skipped;
            continue;
        }
        for (const auto& [name, record] : row.per_estimator) per_estimator[name].push_back(record);
    }
    if (per_estimator.empty()) throw DataError("no questions with gold answers to evaluate");

    nlohmann::json metrics = cfg.run_header("evaluate");
    std::ostringstream csv_rows;
    csv_rows << "estimator,auroc,brier,ece,n,skipped\n";
    std::ostringstream table;
    table << std::left << std::setw(18) << "estimator" << std::right << std::setw(9) << "AUROC"
          << std::setw(9) << "BS" << std::setw(9) << "ECE" << std::setw(7) << "n" << "\n";
    for (Estimator estimator : estimators) {
        const std::string name = estimator_name(estimator);
        MetricsReport report = compute_metrics(per_estimator.at(name), cfg.ece_bins);
        report.skipped = skipped;
        metrics["metrics"][name] = report.to_json();
        csv_rows << name << "," << report.auroc << "," << report.brier << "," << report.ece << ","
                 << report.n << "," << report.skipped << "\n";
        table << std::left << std::setw(18) << name << std::right << std::fixed << std::setprecision(1)
              << std::setw(9) << report.auroc * 100.0 << std::setw(9) << report.brier * 100.0
              << std::setw(9) << report.ece * 100.0 << std::setw(7) << report.n << "\n";
        table.unsetf(std::ios::fixed);
    }

    detail::ensure_output_dir(cfg.output_dir);
    auto json_out = detail::open_output(cfg.output_dir + "/metrics.json");
    json_out << metrics.dump(2) << "\n";
    auto csv_out = detail::open_output(cfg.output_dir + "/metrics.csv");
    csv_out << "# " << cfg.run_header("evaluate").dump() << "\n" << csv_rows.str();
    if (render_table && table_out) *table_out << table.str();
}

// route: bottom-k% intervention simulation from a scores file plus an
// outcome fixture file. Produces one column per k.
inline void cmd_route(const RunConfig& cfg, std::ostream* table_out = nullptr) {
    if (cfg.fixtures.empty()) throw ParamError("route needs --fixtures");
    std::string scores_path = cfg.scores_path.empty() ? cfg.output_dir + "/scores.jsonl" : cfg.scores_path;
    std::ifstream scores_in(scores_path);
    if (!scores_in) throw DataError("cannot open scores file: " + scores_path);

    // Confidence of the designated (argmax) answer for the routing estimator.
    std::map<std::string, double> confidences;
    std::string line;
    while (std::getline(scores_in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) continue;
        if (!j.contains("estimator") || j["estimator"] != cfg.route_estimator) continue;
        if (!j.contains("scores") || !j["scores"].is_object() || j["scores"].empty()) continue;
        double best = -1.0;
        for (const auto& [answer, conf] : j["scores"].items()) {
            if (conf.get<double>() > best) best = conf.get<double>();
        }
        confidences[j["question_id"].get<std::string>()] = best;
    }
    if (confidences.empty()) {
        throw DataError("scores file has no reports for estimator `" + cfg.route_estimator + "`");
    }

    std::vector<OutcomeFixture> fixtures = load_fixtures(cfg.fixtures);
    Intervention intervention =
        cfg.intervention == "cascade" ? Intervention::cascade : Intervention::reflect;

    nlohmann::json report = cfg.run_header("route");
    report["estimator"] = cfg.route_estimator;
    report["intervention"] = intervention_name(intervention);
    std::ostringstream table;
    bool first = true;
    for (double k : cfg.k_percents) {
        RoutingOutcome outcome = simulate(RoutingPolicy{k, intervention}, fixtures, confidences);
        if (first) {
            report["base_accuracy"] = outcome.base_accuracy;
            table << "base " << std::fixed << std::setprecision(1) << outcome.base_accuracy * 100.0;
            first = false;
        }
        std::ostringstream key;
        key << "+" << k << "%";
        report["columns"][key.str()] = outcome.to_json();
        table << "  " << key.str() << " " << std::fixed << std::setprecision(1)
              << outcome.after_accuracy * 100.0;
    }
    table << "\n";

    detail::ensure_output_dir(cfg.output_dir);
    auto out = detail::open_output(cfg.output_dir + "/routing.json");
    out << report.dump(2) << "\n";
    if (table_out) *table_out << table.str();
}

// dump-graph: canonical-order JSON dumps for external visualization, one
// file per question (plus the merged graph on request).
inline void cmd_dump_graph(const RunConfig& cfg, bool merged = false, bool centrality_table = false) {
    if (cfg.dataset.empty()) throw ParamError("dump-graph needs --dataset");
    std::vector<QuestionRecord> records = load_dataset(cfg.dataset);
    CheckerBundle bundle = make_checker(cfg);

    const std::string dir = cfg.output_dir + "/graphs";
    detail::ensure_output_dir(dir);
    for (const auto& record : records) {
        QuestionArtifacts artifacts = build_artifacts(record, *bundle.checker);
        nlohmann::json dump = artifacts.graph.to_json();
        dump["question_id"] = record.question_id;
        nlohmann::json removed = nlohmann::json::array();
        for (const auto& removal : artifacts.removals.removed) {
            removed.push_back({{"from", removal.from_id}, {"to", removal.to_id}});
        }
        dump["discarded_inter_edges"] = std::move(removed);
        if (centrality_table) {
            nlohmann::json scores = nlohmann::json::object();
            for (CentralityVariant variant : {CentralityVariant::katz, CentralityVariant::closeness,
                                              CentralityVariant::pagerank, CentralityVariant::laplacian}) {
                std::vector<double> values =
                    centrality_variant(artifacts.graph, variant, cfg.params.alpha, cfg.params.beta);
                nlohmann::json per_node = nlohmann::json::object();
                for (int i = 0; i < artifacts.graph.node_count(); ++i) {
                    per_node[artifacts.graph.node(i).id()] = values[static_cast<size_t>(i)];
                }
                scores[centrality_variant_name(variant)] = std::move(per_node);
            }
            dump["centrality"] = std::move(scores);
        }
        auto out = detail::open_output(dir + "/" + detail::sanitize_id(record.question_id) + ".json");
        out << dump.dump(2) << "\n";
        if (merged) {
            nlohmann::json mdump = artifacts.merged.to_json();
            mdump["question_id"] = record.question_id;
            auto mout =
                detail::open_output(dir + "/" + detail::sanitize_id(record.question_id) + ".merged.json");
            mout << mdump.dump(2) << "\n";
        }
    }
}

}  // namespace rgconf
