// Command-line front end: run experiments over seed lists, print model
// parameter counts, compare result CSVs with nonparametric tests, and
// print systematic seed lists.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnn/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_flag, int workers) {
    pnn::ExperimentConfig cfg = pnn::load_experiment_config(config_path);
    std::string out = !out_flag.empty() ? out_flag
                      : !cfg.out_dir.empty() ? cfg.out_dir
                                             : "results";
    const auto result = pnn::run_experiment(cfg, out, workers);
    std::cout << "wrote " << result.runs.size() << " runs to " << result.directory << '\n';
    for (const auto& rec : result.runs) {
        std::printf("  seed %-10u ensemble_err %7.4f%%  swaps %d\n", rec.seed,
                    rec.ensemble_test_err, rec.swap_count);
    }
    if (result.runs.size() >= 3) {
        std::printf("summary: mean %.4f  trimmed_mean %.4f  median %.4f\n",
                    result.ensemble_err_summary.mean, result.ensemble_err_summary.trimmed_mean,
                    result.ensemble_err_summary.median);
    }
    return 0;
}

int cmd_param_count(const std::string& name) {
    const auto spec = pnn::named_architecture(name);
    pnn::SeededRng rng(0, "init");
    const auto net = pnn::build_network<float>(spec, rng);
    std::cout << net.param_count() << '\n';
    return 0;
}

int cmd_compare(const std::vector<std::string>& csvs, const std::string& metric,
                const std::vector<std::string>& pair_flags, double alpha,
                const std::string& out_dir) {
    std::vector<pnn::AggregateRow> rows;
    for (const auto& path : csvs) {
        auto r = pnn::read_aggregate_csv(path);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& p : pair_flags) {
        const auto pos = p.find(':');
        if (pos == std::string::npos)
            throw pnn::ConfigError("--pair expects LABEL_A:LABEL_B, got '" + p + "'");
        pairs.emplace_back(p.substr(0, pos), p.substr(pos + 1));
    }
    const auto report = pnn::compare_groups(rows, metric, pairs, alpha);
    std::cout << report.as_text;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const auto base = std::filesystem::path(out_dir);
        std::ofstream jf(base / "comparison.json");
        jf << report.as_json.dump(2) << '\n';
        std::ofstream tf(base / "comparison.txt");
        tf << report.as_text;
        std::cout << "wrote " << (base / "comparison.json").string() << " and .txt\n";
    }
    return 0;
}

int cmd_seeds(std::uint32_t strata, std::uint32_t take) {
    for (auto s : pnn::systematic_seeds(4294967295u, strata, take)) std::cout << s << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"planarian cooperative-training experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, metric = "ensemble_err";
    std::vector<std::string> csvs, pair_flags;
    std::string model_name;
    int workers = 1;
    double alpha = 0.05;
    std::uint32_t strata = 60, take = 5;

    auto* run = app.add_subcommand("run", "run an experiment config across its seeds");
    run->add_option("--config", config_path, "experiment config JSON")->required();
    run->add_option("--out", out_dir, "output directory (default from config, else ./results)");
    run->add_option("--workers", workers, "parallel seed runs")->check(CLI::PositiveNumber);

    auto* pc = app.add_subcommand("param-count", "print a model's trainable parameter count");
    pc->add_option("model", model_name, "architecture name")->required();

    auto* cmp = app.add_subcommand("compare", "nonparametric comparison of aggregate CSVs");
    cmp->add_option("csvs", csvs, "aggregate CSV files")->required()->expected(-1);
    cmp->add_option("--metric", metric, "column: cord1_err | cord2_err | ensemble_err");
    cmp->add_option("--pair", pair_flags, "pair to U-test as LABEL_A:LABEL_B (repeatable)");
    cmp->add_option("--alpha", alpha, "significance level (default 0.05)");
    cmp->add_option("--out", out_dir, "directory for comparison.json / comparison.txt");

    auto* sd = app.add_subcommand("seeds", "print the systematic seed list");
    sd->add_option("--strata", strata, "number of strata (default 60)");
    sd->add_option("--take", take, "seeds to take (default 5)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, workers);
        if (pc->parsed()) return cmd_param_count(model_name);
        if (cmp->parsed()) return cmd_compare(csvs, metric, pair_flags, alpha, out_dir);
        if (sd->parsed()) return cmd_seeds(strata, take);
    } catch (const pnn::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
