#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pnn/experiment.hpp"
#include "table_fixtures.hpp"

using namespace pnn;
namespace fs = std::filesystem;

namespace {

json tiny_config() {
    return json{
        {"label", "tiny-pnn"},
        {"models", {"tiny-deep", "tiny-wide"}},
        {"dataset",
         {{"kind", "synthetic"},
          {"classes", 3},
          {"per_class_train", 10},
          {"per_class_test", 5},
          {"shape", {3, 8, 8}},
          {"separation", 5.0}}},
        {"optimizer", {{"base_lr", 0.05}, {"batch_size", 16}, {"total_epochs", 3}}},
        {"brain", {{"global_epochs", 3}, {"max_patience", 1}}},
        {"validation_fraction", 0.2},
        {"seeds", {1, 2, 3}},
    };
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "pnn_exp_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST(Config, ParsesDefaults) {
    const auto cfg = parse_experiment_config(tiny_config());
    EXPECT_EQ(cfg.label, "tiny-pnn");
    EXPECT_EQ(cfg.models.size(), 2u);
    EXPECT_EQ(cfg.sub_epochs, (std::vector<int>{1, 1}));
    EXPECT_EQ(cfg.seeds, (std::vector<std::uint32_t>{1, 2, 3}));
    EXPECT_DOUBLE_EQ(cfg.opt.momentum, 0.9);
    EXPECT_DOUBLE_EQ(cfg.opt.weight_decay, 1e-4);
    EXPECT_EQ(cfg.brain.max_patience, 1);
    EXPECT_FALSE(cfg.config_hash.empty());
}

TEST(Config, SeedsAndSystematicAreExclusive) {
    auto j = tiny_config();
    j["systematic"] = {{"strata", 60}, {"take", 5}};
    try {
        parse_experiment_config(j);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("seeds/systematic"), std::string::npos);
    }

    j.erase("seeds");
    const auto cfg = parse_experiment_config(j);
    EXPECT_TRUE(cfg.systematic);
    EXPECT_EQ(cfg.seeds.size(), 5u);
    EXPECT_EQ(cfg.seeds[0], 71582788u);
}

TEST(Config, FieldLevelErrorsAreCollected) {
    auto j = tiny_config();
    j["models"] = json::array();
    j["validation_fraction"] = 1.5;
    j["optimizer"]["momentum"] = 2.0;
    try {
        parse_experiment_config(j);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("models"), std::string::npos);
        EXPECT_NE(msg.find("validation_fraction"), std::string::npos);
        EXPECT_NE(msg.find("momentum"), std::string::npos);
    }
}

TEST(Config, InlineModelSpec) {
    auto j = tiny_config();
    j["models"] = json::array({json{{"name", "mini"},
                                    {"family", "basic-residual"},
                                    {"n", 1},
                                    {"widths", {8}},
                                    {"feature_sizes", {8}},
                                    {"classes", 3},
                                    {"input", {3, 8, 8}},
                                    {"stem_width", 8}}});
    j["brain"].erase("max_patience");
    const auto cfg = parse_experiment_config(j);
    ASSERT_EQ(cfg.models.size(), 1u);
    EXPECT_EQ(cfg.model_names[0], "mini");
    EXPECT_EQ(cfg.models[0].stage_widths, (std::vector<std::size_t>{8}));
    EXPECT_EQ(cfg.brain.max_patience, -1); // null/absent means infinite
}

TEST(Config, UnknownModelNameIsFieldError) {
    auto j = tiny_config();
    j["models"] = {"resnet20", "resnet9000"};
    try {
        parse_experiment_config(j);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("resnet9000"), std::string::npos);
    }
}

TEST(AssembleDataset, TestSplitSharesTrainMean) {
    DatasetSpec spec;
    spec.kind = "synthetic";
    spec.classes = 3;
    spec.per_class_train = 8;
    spec.per_class_test = 4;
    spec.channels = 3;
    spec.height = 8;
    spec.width = 8;
    spec.augmentation = false;
    const auto data = assemble_dataset(spec, 77);
    ASSERT_FALSE(data.train.pixel_mean.empty());
    EXPECT_EQ(data.test.pixel_mean, data.train.pixel_mean);
    EXPECT_NE(data.test.pixel_mean, compute_pixel_mean(data.test));
    EXPECT_EQ(data.test_aug.mode, AugmentMode::test);
}

TEST(RunExperiment, WritesAllArtifacts) {
    const auto cfg = parse_experiment_config(tiny_config());
    const auto out = fresh_dir("artifacts");
    const auto result = run_experiment(cfg, out.string(), 1);
    ASSERT_EQ(result.runs.size(), 3u);

    const fs::path dir = fs::path(result.directory);
    EXPECT_TRUE(fs::exists(dir / "aggregate.csv"));
    EXPECT_TRUE(fs::exists(dir / "summary.txt"));
    for (std::uint32_t seed : {1u, 2u, 3u}) {
        EXPECT_TRUE(fs::exists(dir / ("run_seed" + std::to_string(seed) + ".json")));
        EXPECT_TRUE(fs::exists(dir / ("curve_seed" + std::to_string(seed) + ".csv")));
        EXPECT_TRUE(fs::exists(dir / ("trainlog_seed" + std::to_string(seed) + "_cord0.csv")));
        EXPECT_TRUE(fs::exists(dir / ("trainlog_seed" + std::to_string(seed) + "_cord1.csv")));
    }

    const auto rows = read_aggregate_csv((dir / "aggregate.csv").string());
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.model, "tiny-pnn");
        EXPECT_TRUE(r.cord2_err.has_value());
    }

    // run JSON carries the config hash and per-epoch records
    const auto j = json::parse(slurp(dir / "run_seed1.json"));
    EXPECT_EQ(j["config_hash"], cfg.config_hash);
    EXPECT_EQ(j["epochs"].size(), 3u);
    EXPECT_TRUE(j["final"].contains("ensemble_test_err_pct"));
}

TEST(RunExperiment, DeterministicAggregatesModuloWallTime) {
    const auto cfg = parse_experiment_config(tiny_config());
    const auto out1 = fresh_dir("det1");
    const auto out2 = fresh_dir("det2");
    run_experiment(cfg, out1.string(), 1);
    run_experiment(cfg, out2.string(), 2); // different worker count too

    auto a = read_aggregate_csv((out1 / "tiny-pnn" / "aggregate.csv").string());
    auto b = read_aggregate_csv((out2 / "tiny-pnn" / "aggregate.csv").string());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) { // wall_s is timing noise, rest is exact
        EXPECT_EQ(a[i].model, b[i].model);
        EXPECT_EQ(a[i].seed, b[i].seed);
        EXPECT_EQ(a[i].cord1_err, b[i].cord1_err);
        EXPECT_EQ(a[i].cord2_err, b[i].cord2_err);
        EXPECT_EQ(a[i].ensemble_err, b[i].ensemble_err);
        EXPECT_EQ(a[i].swap_count, b[i].swap_count);
    }
}

TEST(RunExperiment, SingleModelRunHasEmptyCord2) {
    auto j = tiny_config();
    j["label"] = "solo";
    j["models"] = {"tiny"};
    j["seeds"] = {5};
    const auto cfg = parse_experiment_config(j);
    const auto out = fresh_dir("solo");
    run_experiment(cfg, out.string(), 1);
    const auto rows = read_aggregate_csv((out / "solo" / "aggregate.csv").string());
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].cord2_err.has_value());
    EXPECT_EQ(rows[0].ensemble_err, rows[0].cord1_err); // soft vote of one
}

TEST(Compare, RoundTripsRunOutput) {
    const auto cfg = parse_experiment_config(tiny_config());
    const auto out = fresh_dir("roundtrip");
    run_experiment(cfg, out.string(), 1);
    const auto rows = read_aggregate_csv((out / "tiny-pnn" / "aggregate.csv").string());
    const auto report = compare_groups(rows, "ensemble_err");
    // one group with 3 observations -> descriptive row, no pairs
    ASSERT_EQ(report.as_json["groups"].size(), 1u);
    EXPECT_EQ(report.as_json["groups"][0]["n"], 3);
    EXPECT_TRUE(report.as_json["u_tests"].empty());
}

namespace {

std::string fixture_csv(const std::vector<Sample>& samples) {
    std::ostringstream os;
    os << kAggregateHeader << '\n';
    for (const auto& s : samples) {
        int seed = 1;
        for (double v : s.values) {
            os << s.label << ',' << seed++ << ',' << format_err(v) << ",," << format_err(v)
               << ",0,0.000\n";
        }
    }
    return os.str();
}

} // namespace

TEST(Compare, GoldenFixturesThroughCsvPath) {
    const auto dir = fresh_dir("golden");
    const auto path = dir / "cifar10_dual.csv";
    {
        std::ofstream out(path);
        out << fixture_csv(fixtures::cifar10_dual());
    }
    const auto rows = read_aggregate_csv(path.string());
    const auto report =
        compare_groups(rows, "ensemble_err", {{"pnn15", "ensemble"}}, 0.05);

    const auto& kw = report.as_json["kruskal_wallis"];
    EXPECT_NEAR(kw["statistic"].get<double>(), 7.0686, 5e-4);
    EXPECT_FALSE(kw["reject_h0"].get<bool>());

    ASSERT_EQ(report.as_json["u_tests"].size(), 1u);
    const auto& u = report.as_json["u_tests"][0];
    EXPECT_DOUBLE_EQ(u["U"].get<double>(), 2.0);
    EXPECT_NEAR(u["p_value"].get<double>(), 0.0350, 5e-4);
    EXPECT_TRUE(u["reject_h0"].get<bool>()); // significant at 0.05
}

TEST(Compare, TinyGroupsAreExcludedWithWarning) {
    std::vector<AggregateRow> rows;
    AggregateRow r;
    r.model = "lonely";
    r.seed = 1;
    r.cord1_err = 5;
    r.ensemble_err = 5;
    rows.push_back(r);
    for (int i = 0; i < 3; ++i) {
        r.model = "groupA";
        r.seed = i;
        r.ensemble_err = 5.0 + i;
        rows.push_back(r);
    }
    for (int i = 0; i < 3; ++i) {
        r.model = "groupB";
        r.seed = i;
        r.ensemble_err = 6.0 + i;
        rows.push_back(r);
    }
    const auto report = compare_groups(rows);
    EXPECT_EQ(report.as_json["warnings"].size(), 1u);
    EXPECT_EQ(report.as_json["groups"].size(), 2u);
}

TEST(Compare, IdenticalGroupsAreDegenerate) {
    std::vector<AggregateRow> rows;
    for (int g = 0; g < 2; ++g)
        for (int i = 0; i < 3; ++i) {
            AggregateRow r;
            r.model = g ? "b" : "a";
            r.seed = i;
            r.ensemble_err = 1.0;
            rows.push_back(r);
        }
    const auto report = compare_groups(rows);
    EXPECT_TRUE(report.as_json["kruskal_wallis"].contains("error"));
    EXPECT_TRUE(report.as_json["u_tests"][0].contains("error"));
}

TEST(Aggregate, RowFormatting) {
    PnnRunRecord rec;
    rec.seed = 42;
    rec.cord_test_err = {7.5, 8.25};
    rec.ensemble_test_err = 6.125;
    rec.swap_count = 3;
    rec.wall_seconds = 1.5;
    EXPECT_EQ(aggregate_row("m", rec), "m,42,7.5000,8.2500,6.1250,3,1.500");

    PnnRunRecord solo;
    solo.seed = 1;
    solo.cord_test_err = {10.0};
    solo.ensemble_test_err = 10.0;
    EXPECT_EQ(aggregate_row("s", solo), "s,1,10.0000,,10.0000,0,0.000");
}
