// Command-line entry point. Subcommands: sample, score, evaluate, route,
// dump-graph. A JSON config file supplies defaults; flags override it.
// Exit codes: 0 success, 1 usage/parameter error, 2 data error, 3 gateway
// error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgconf/pipeline.hpp"
#include "rgconf/version.hpp"

namespace {

struct FlagOverrides {
    std::string config_path;
    std::string dataset;
    std::string output_dir;
    std::vector<std::string> estimators;
    std::string equivalence;
    std::string mode;
    std::string base_url;
    std::string model_name;
    std::string fixture_dir;
    std::string cache_path;
    std::string prompt_dir;
    std::string fixtures;
    std::string scores_path;
    std::string route_estimator;
    std::string intervention;
    std::vector<double> k_percents;
    double alpha = -1.0;
    double gamma = -1.0;
    long sample_count = -1;
    int max_path_len = -1;
    int n_samples = -1;
    int jobs = -1;
    long long seed = -1;
    int ece_bins = -1;
};

void add_common_flags(CLI::App* cmd, FlagOverrides& fo) {
    cmd->add_option("--config", fo.config_path, "JSON config file (flags override it)");
    cmd->add_option("--dataset", fo.dataset, "input dataset (JSONL)");
    cmd->add_option("--out", fo.output_dir, "output directory");
    cmd->add_option("--estimators", fo.estimators,
                    "estimators to run (selfcons cenconf pathconv_exact pathconv_sampled pathweight, or all)");
    cmd->add_option("--equivalence", fo.equivalence, "equivalence strategy: exact|normalized|judge");
    cmd->add_option("--gateway-mode", fo.mode, "gateway mode: live|fixture");
    cmd->add_option("--base-url", fo.base_url, "chat-completions base URL");
    cmd->add_option("--model", fo.model_name, "model name sent to the endpoint");
    cmd->add_option("--fixture-dir", fo.fixture_dir, "directory of recorded exchanges");
    cmd->add_option("--cache", fo.cache_path, "judge verdict cache file (JSONL)");
    cmd->add_option("--prompts", fo.prompt_dir, "prompt template directory override");
    cmd->add_option("--alpha", fo.alpha, "Katz attenuation factor");
    cmd->add_option("--gamma", fo.gamma, "walk attenuation factor");
    cmd->add_option("--max-path-len", fo.max_path_len, "hop cap for path enumeration and walks");
    cmd->add_option("--samples", fo.sample_count, "Monte Carlo walks per answer");
    cmd->add_option("--seed", fo.seed, "base RNG seed");
    cmd->add_option("--jobs", fo.jobs, "worker threads for per-question fanout");
    cmd->add_option("--ece-bins", fo.ece_bins, "ECE bin count");
}

rgconf::RunConfig build_config(const FlagOverrides& fo) {
    rgconf::RunConfig cfg;
    if (!fo.config_path.empty()) cfg = rgconf::RunConfig::from_file(fo.config_path);
    if (!fo.dataset.empty()) cfg.dataset = fo.dataset;
    if (!fo.output_dir.empty()) cfg.output_dir = fo.output_dir;
    if (!fo.estimators.empty()) cfg.estimators = fo.estimators;
    if (!fo.equivalence.empty()) cfg.equivalence = fo.equivalence;
    if (!fo.mode.empty()) {
        cfg.gateway.mode = fo.mode == "live" ? rgconf::GatewayMode::live : rgconf::GatewayMode::fixture;
    }
    if (!fo.base_url.empty()) cfg.gateway.base_url = fo.base_url;
    if (!fo.model_name.empty()) cfg.gateway.model_name = fo.model_name;
    if (!fo.fixture_dir.empty()) cfg.gateway.fixture_dir = fo.fixture_dir;
    if (!fo.cache_path.empty()) cfg.cache_path = fo.cache_path;
    if (!fo.prompt_dir.empty()) cfg.prompt_dir = fo.prompt_dir;
    if (!fo.fixtures.empty()) cfg.fixtures = fo.fixtures;
    if (!fo.scores_path.empty()) cfg.scores_path = fo.scores_path;
    if (!fo.route_estimator.empty()) cfg.route_estimator = fo.route_estimator;
    if (!fo.intervention.empty()) cfg.intervention = fo.intervention;
    if (!fo.k_percents.empty()) cfg.k_percents = fo.k_percents;
    if (fo.alpha >= 0) cfg.params.alpha = fo.alpha;
    if (fo.gamma >= 0) cfg.params.gamma = fo.gamma;
    if (fo.sample_count >= 0) cfg.params.sample_count = fo.sample_count;
    if (fo.max_path_len >= 0) cfg.params.max_path_len = fo.max_path_len;
    if (fo.n_samples >= 0) cfg.n_samples = fo.n_samples;
    if (fo.jobs >= 0) cfg.jobs = fo.jobs;
    if (fo.seed >= 0) cfg.params.seed = static_cast<std::uint64_t>(fo.seed);
    if (fo.ece_bins >= 0) cfg.ece_bins = fo.ece_bins;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-based confidence estimation for multi-chain reasoning"};
    app.set_version_flag("--version", rgconf::kToolVersion);
    app.require_subcommand(1);

    FlagOverrides fo;
    bool table = false;
    bool dump_merged = false;
    bool dump_centrality = false;

    CLI::App* sample = app.add_subcommand("sample", "sample reasoning chains for question stubs");
    add_common_flags(sample, fo);
    sample->add_option("-n,--num-chains", fo.n_samples, "chains to sample per question");

    CLI::App* score = app.add_subcommand("score", "run confidence estimators over a dataset");
    add_common_flags(score, fo);

    CLI::App* evaluate = app.add_subcommand("evaluate", "compute AUROC/Brier/ECE per estimator");
    add_common_flags(evaluate, fo);
    evaluate->add_flag("--table", table, "print the metrics grid to stdout");

    CLI::App* route = app.add_subcommand("route", "simulate bottom-k% interventions");
    add_common_flags(route, fo);
    route->add_option("--fixtures", fo.fixtures, "outcome fixture file (JSONL)");
    route->add_option("--scores", fo.scores_path, "scores file from `score` (default <out>/scores.jsonl)");
    route->add_option("--route-estimator", fo.route_estimator, "estimator whose confidence gates routing");
    route->add_option("--intervention", fo.intervention, "reflect|cascade");
    route->add_option("-k,--k-percents", fo.k_percents, "k percentages (default 5 10 15 100)");

    CLI::App* dump = app.add_subcommand("dump-graph", "write per-question graph dumps");
    add_common_flags(dump, fo);
    dump->add_flag("--merged", dump_merged, "also dump the merged weighted graph");
    dump->add_flag("--centrality", dump_centrality, "include per-node centrality variant scores");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        rgconf::RunConfig cfg = build_config(fo);
        if (sample->parsed()) rgconf::cmd_sample(cfg);
        if (score->parsed()) rgconf::cmd_score(cfg);
        if (evaluate->parsed()) rgconf::cmd_evaluate(cfg, table, &std::cout);
        if (route->parsed()) rgconf::cmd_route(cfg, &std::cout);
        if (dump->parsed()) rgconf::cmd_dump_graph(cfg, dump_merged, dump_centrality);
    } catch (const rgconf::ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const rgconf::GatewayError& e) {
        std::cerr << "gateway error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
