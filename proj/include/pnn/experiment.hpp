#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pnn/brain.hpp"
#include "pnn/model_zoo.hpp"
#include "pnn/stats.hpp"

namespace pnn {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct DatasetSpec {
    std::string kind; // "cifar10" | "cifar100" | "synthetic"
    std::string dir;  // cifar variants
    // synthetic parameters
    int classes = 3;
    int per_class_train = 40;
    int per_class_test = 20;
    std::size_t channels = 3, height = 8, width = 8;
    double separation = 5.0;
    bool augmentation = true; // pad/crop/flip on train, flip on validation
    std::size_t pad = 4;
};

struct ExperimentConfig {
    std::string label;
    std::vector<std::string> model_names; // display names (registry name or "custom")
    std::vector<ArchitectureSpec> models;
    std::vector<int> sub_epochs;
    DatasetSpec dataset;
    OptimizerConfig opt;
    BrainConfig brain;
    std::vector<std::uint32_t> seeds;
    bool systematic = false;
    std::uint32_t strata = 0, take = 0;
    std::string out_dir; // optional default output directory
    std::string config_hash;
};

namespace detail {

inline std::string hash_hex(const json& j) {
    const std::string s = j.dump(); // nlohmann orders keys, so this is canonical
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

inline ArchitectureSpec parse_inline_model(const json& j, std::vector<std::string>& errors) {
    ArchitectureSpec s;
    const std::string family = j.value("family", "basic-residual");
    if (family == "basic-residual") s.family = BlockFamily::basic_residual;
    else if (family == "bottleneck-residual") s.family = BlockFamily::bottleneck_residual;
    else if (family == "wide-basic-residual") s.family = BlockFamily::wide_basic_residual;
    else errors.push_back("models[].family: unknown family '" + family + "'");
    s.n = j.value("n", 1);
    for (const auto& w : j.value("widths", json::array()))
        s.stage_widths.push_back(w.get<std::size_t>());
    for (const auto& f : j.value("feature_sizes", json::array()))
        s.stage_feature_sizes.push_back(f.get<std::size_t>());
    s.num_classes = j.value("classes", 10);
    if (j.contains("input")) {
        const auto& in = j["input"];
        if (in.is_array() && in.size() == 3) {
            s.in_channels = in[0].get<std::size_t>();
            if (in[1] != in[2]) errors.push_back("models[].input: inputs must be square");
            s.input_size = in[1].get<std::size_t>();
        } else {
            errors.push_back("models[].input: expected [C,H,W]");
        }
    }
    s.stem_width = j.value("stem_width", s.stage_widths.empty() ? 16 : s.stage_widths.front());
    return s;
}

} // namespace detail

/// Parses and validates an experiment configuration. Collects all field
/// errors before throwing so a bad config is reported in one pass.
inline ExperimentConfig parse_experiment_config(const json& j) {
    std::vector<std::string> errors;
    ExperimentConfig cfg;

    if (!j.contains("models") || !j["models"].is_array() || j["models"].empty()) {
        errors.push_back("models: required non-empty array of model names or specs");
    } else {
        for (const auto& m : j["models"]) {
            try {
                if (m.is_string()) {
                    cfg.model_names.push_back(m.get<std::string>());
                    cfg.models.push_back(named_architecture(m.get<std::string>()));
                } else if (m.is_object()) {
                    cfg.model_names.push_back(m.value("name", "custom"));
                    cfg.models.push_back(detail::parse_inline_model(m, errors));
                } else {
                    errors.push_back("models[]: entries must be strings or objects");
                }
            } catch (const Error& e) {
                errors.push_back(std::string("models[]: ") + e.what());
            }
        }
    }

    cfg.label = j.value("label", "");
    if (cfg.label.empty()) {
        for (const auto& n : cfg.model_names) cfg.label += (cfg.label.empty() ? "" : "+") + n;
        if (cfg.label.empty()) cfg.label = "experiment";
    }
    if (cfg.label.find(',') != std::string::npos)
        errors.push_back("label: must not contain commas (it becomes a CSV field)");

    if (!j.contains("dataset") || !j["dataset"].is_object()) {
        errors.push_back("dataset: required object");
    } else {
        const auto& d = j["dataset"];
        cfg.dataset.kind = d.value("kind", "");
        if (cfg.dataset.kind == "cifar10" || cfg.dataset.kind == "cifar100") {
            cfg.dataset.dir = d.value("dir", "");
            if (cfg.dataset.dir.empty()) errors.push_back("dataset.dir: required for CIFAR variants");
        } else if (cfg.dataset.kind == "synthetic") {
            cfg.dataset.classes = d.value("classes", 3);
            cfg.dataset.per_class_train = d.value("per_class_train", 40);
            cfg.dataset.per_class_test = d.value("per_class_test", 20);
            cfg.dataset.separation = d.value("separation", 5.0);
            if (d.contains("shape")) {
                const auto& s = d["shape"];
                if (s.is_array() && s.size() == 3) {
                    cfg.dataset.channels = s[0].get<std::size_t>();
                    cfg.dataset.height = s[1].get<std::size_t>();
                    cfg.dataset.width = s[2].get<std::size_t>();
                } else {
                    errors.push_back("dataset.shape: expected [C,H,W]");
                }
            }
            if (cfg.dataset.classes < 2) errors.push_back("dataset.classes: must be >= 2");
        } else {
            errors.push_back("dataset.kind: must be cifar10, cifar100 or synthetic");
        }
        cfg.dataset.augmentation = d.value("augment", cfg.dataset.kind != "synthetic");
        cfg.dataset.pad = d.value("pad", cfg.dataset.kind == "synthetic" ? std::size_t{1} : std::size_t{4});
    }

    const auto& o = j.value("optimizer", json::object());
    cfg.opt.base_lr = o.value("base_lr", 0.1);
    cfg.opt.momentum = o.value("momentum", 0.9);
    cfg.opt.weight_decay = o.value("weight_decay", 1e-4);
    cfg.opt.batch_size = o.value("batch_size", 128);
    cfg.opt.total_epochs = o.value("total_epochs", 200);
    cfg.opt.weight_decay_on_bn = o.value("weight_decay_on_bn", true);
    try {
        cfg.opt.validate();
    } catch (const Error& e) {
        errors.push_back(e.what());
    }

    const auto& b = j.value("brain", json::object());
    cfg.brain.global_epochs = b.value("global_epochs", cfg.opt.total_epochs);
    if (b.contains("max_patience") && !b["max_patience"].is_null())
        cfg.brain.max_patience = b["max_patience"].get<long>();
    else
        cfg.brain.max_patience = -1;
    const std::string topo = b.value("topology", "pairwise-swap");
    if (topo == "pairwise-swap") cfg.brain.topology = SwapTopology::pairwise_swap;
    else if (topo == "ring-rotation") cfg.brain.topology = SwapTopology::ring_rotation;
    else errors.push_back("brain.topology: must be pairwise-swap or ring-rotation");
    const std::string sig = b.value("signal", "ensemble-validation");
    if (sig == "ensemble-validation") cfg.brain.signal = GateSignal::ensemble_validation;
    else if (sig == "per-cord") cfg.brain.signal = GateSignal::per_cord;
    else errors.push_back("brain.signal: must be ensemble-validation or per-cord");
    cfg.brain.swap_period_subepochs = b.value("swap_period", 0L);
    cfg.brain.validation_fraction = j.value("validation_fraction", 0.1);
    if (cfg.brain.validation_fraction <= 0.0 || cfg.brain.validation_fraction >= 1.0)
        errors.push_back("validation_fraction: must be in (0,1)");
    if (cfg.brain.global_epochs < 0) errors.push_back("brain.global_epochs: must be >= 0");
    if (cfg.brain.topology == SwapTopology::pairwise_swap && cfg.models.size() > 2)
        errors.push_back("brain.topology: pairwise-swap requires exactly 2 models");

    if (b.contains("sub_epochs")) {
        for (const auto& s : b["sub_epochs"]) cfg.sub_epochs.push_back(s.get<int>());
        if (cfg.sub_epochs.size() != cfg.models.size())
            errors.push_back("brain.sub_epochs: length must match the number of models");
        for (int s : cfg.sub_epochs)
            if (s < 1) errors.push_back("brain.sub_epochs: entries must be >= 1");
    } else {
        cfg.sub_epochs.assign(cfg.models.size(), 1);
    }

    const bool has_seeds = j.contains("seeds");
    const bool has_sys = j.contains("systematic");
    if (has_seeds == has_sys) {
        errors.push_back("seeds/systematic: exactly one of an explicit seed list or a "
                         "systematic {strata, take} block is required");
    } else if (has_seeds) {
        if (!j["seeds"].is_array() || j["seeds"].empty())
            errors.push_back("seeds: must be a non-empty array");
        else
            for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint32_t>());
    } else {
        cfg.systematic = true;
        cfg.strata = j["systematic"].value("strata", 60u);
        cfg.take = j["systematic"].value("take", 5u);
        try {
            cfg.seeds = systematic_seeds(4294967295u, cfg.strata, cfg.take);
        } catch (const Error& e) {
            errors.push_back(std::string("systematic: ") + e.what());
        }
    }

    cfg.out_dir = j.value("out", "");

    if (!errors.empty()) {
        std::string msg = "invalid experiment config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    cfg.config_hash = detail::hash_hex(j);
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_experiment_config(j);
}

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

struct ExperimentData {
    ImageDataset train;
    ImageDataset test;
    AugmentConfig train_aug, val_aug, test_aug;
};

inline ExperimentData assemble_dataset(const DatasetSpec& spec, std::uint32_t seed) {
    ExperimentData d;
    if (spec.kind == "synthetic") {
        d.train = make_synthetic(spec.classes, spec.per_class_train, spec.channels,
                                 spec.height, spec.width, spec.separation, seed, "train");
        d.test = make_synthetic(spec.classes, spec.per_class_test, spec.channels,
                                spec.height, spec.width, spec.separation, seed, "test");
    } else {
        const CifarVariant variant =
            spec.kind == "cifar10" ? CifarVariant::cifar10 : CifarVariant::cifar100;
        std::vector<std::string> train_files, test_files;
        const std::filesystem::path dir(spec.dir);
        if (variant == CifarVariant::cifar10) {
            for (int i = 1; i <= 5; ++i)
                train_files.push_back((dir / ("data_batch_" + std::to_string(i) + ".bin")).string());
            test_files.push_back((dir / "test_batch.bin").string());
        } else {
            train_files.push_back((dir / "train.bin").string());
            test_files.push_back((dir / "test.bin").string());
        }
        d.train = load_cifar_binary(train_files, variant);
        d.test = load_cifar_binary(test_files, variant);
        if (d.train.size() != 50000 || d.test.size() != 10000)
            throw DataError("unexpected dataset size: " + std::to_string(d.train.size()) +
                            " train / " + std::to_string(d.test.size()) +
                            " test (expected 50000/10000)");
    }
    d.train.pixel_mean = compute_pixel_mean(d.train);
    d.test.pixel_mean = d.train.pixel_mean; // normalization uses train statistics only

    const std::size_t h = d.train.height, w = d.train.width;
    d.train_aug = AugmentConfig::for_mode(
        spec.augmentation ? AugmentMode::train : AugmentMode::test, h, w, spec.pad);
    d.val_aug = AugmentConfig::for_mode(
        spec.augmentation ? AugmentMode::validation : AugmentMode::test, h, w, spec.pad);
    d.test_aug = AugmentConfig::for_mode(AugmentMode::test, h, w, spec.pad);
    return d;
}

// ---------------------------------------------------------------------------
// Run records on disk
// ---------------------------------------------------------------------------

inline json record_to_json(const PnnRunRecord& rec, const std::string& model_label,
                           const std::string& config_hash) {
    json j;
    j["model"] = model_label;
    j["seed"] = rec.seed;
    j["config_hash"] = config_hash;
    j["cord_ids"] = rec.cord_ids;
    json epochs = json::array();
    for (const auto& e : rec.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"swap_occurred", e.swap_occurred},
                          {"cord_val_acc", e.cord_val_acc},
                          {"ensemble_val_acc", e.ensemble_val_acc},
                          {"patience_level", e.patience_level},
                          {"best_acc", e.best_acc}});
    }
    j["epochs"] = epochs;
    j["final"] = {{"cord_test_err_pct", rec.cord_test_err},
                  {"ensemble_test_err_pct", rec.ensemble_test_err},
                  {"swap_count", rec.swap_count}};
    j["wall_s"] = rec.wall_seconds;
    return j;
}

inline std::string format_err(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

constexpr const char* kAggregateHeader = "model,seed,cord1_err,cord2_err,ensemble_err,swap_count,wall_s";

inline std::string aggregate_row(const std::string& model, const PnnRunRecord& rec) {
    std::ostringstream os;
    os << model << ',' << rec.seed << ',' << format_err(rec.cord_test_err.at(0)) << ',';
    if (rec.cord_test_err.size() > 1) os << format_err(rec.cord_test_err[1]);
    os << ',' << format_err(rec.ensemble_test_err) << ',' << rec.swap_count << ',';
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.3f", rec.wall_seconds);
    os << wall;
    return os.str();
}

struct AggregateRow {
    std::string model;
    std::uint32_t seed = 0;
    double cord1_err = 0.0;
    std::optional<double> cord2_err;
    double ensemble_err = 0.0;
    int swap_count = 0;
    double wall_s = 0.0;
};

inline std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty csv: " + path);
    if (line != kAggregateHeader)
        throw DataError("unexpected csv header in " + path + ": " + line);
    std::vector<AggregateRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() == 6) cells.push_back(""); // trailing empty wall
        if (cells.size() != 7) throw DataError("malformed csv row in " + path + ": " + line);
        AggregateRow r;
        r.model = cells[0];
        r.seed = static_cast<std::uint32_t>(std::stoul(cells[1]));
        r.cord1_err = std::stod(cells[2]);
        if (!cells[3].empty()) r.cord2_err = std::stod(cells[3]);
        r.ensemble_err = std::stod(cells[4]);
        r.swap_count = std::stoi(cells[5]);
        r.wall_s = cells[6].empty() ? 0.0 : std::stod(cells[6]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct ExperimentResult {
    std::vector<PnnRunRecord> runs; // in seed order
    Descriptive ensemble_err_summary{};
    std::string directory;
};

namespace detail {

inline void write_text_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write " + p.string());
    out << content;
}

template <typename T>
PnnRunRecord run_one_seed(const ExperimentConfig& cfg, std::uint32_t seed) {
    ExperimentData data = assemble_dataset(cfg.dataset, seed);
    PnnSetup<T> setup;
    setup.train_data = &data.train;
    setup.test_data = &data.test;
    for (std::size_t i = 0; i < cfg.models.size(); ++i)
        setup.cords.push_back({"cord" + std::to_string(i) + ":" + cfg.model_names[i],
                               cfg.models[i], cfg.sub_epochs[i]});
    setup.opt = cfg.opt;
    setup.brain = cfg.brain;
    setup.seed = seed;
    setup.train_aug = data.train_aug;
    setup.val_aug = data.val_aug;
    setup.test_aug = data.test_aug;
    return pnn_train(setup);
}

} // namespace detail

/// Runs the experiment once per seed (optionally in parallel) and writes
/// per-run JSON records, per-cord training-log CSVs, epoch-curve CSVs, an
/// aggregate CSV and a summary. Results land in out_dir/<label>/.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::string& out_dir, int workers = 1) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_dir) / cfg.label;
    fs::create_directories(dir);

    ExperimentResult result;
    result.directory = dir.string();
    std::vector<std::optional<PnnRunRecord>> runs(cfg.seeds.size());
    std::vector<std::string> failures;

    std::size_t next = 0;
    while (next < cfg.seeds.size()) {
        const std::size_t batch =
            std::min<std::size_t>(std::max(workers, 1), cfg.seeds.size() - next);
        std::vector<std::future<PnnRunRecord>> futs;
        for (std::size_t i = 0; i < batch; ++i) {
            const std::uint32_t seed = cfg.seeds[next + i];
            futs.push_back(std::async(std::launch::async, [&cfg, seed]() {
                return detail::run_one_seed<float>(cfg, seed);
            }));
        }
        for (std::size_t i = 0; i < batch; ++i) {
            try {
                runs[next + i] = futs[i].get();
            } catch (const std::exception& e) {
                failures.push_back("seed " + std::to_string(cfg.seeds[next + i]) + ": " + e.what());
            }
        }
        next += batch;
    }

    // Per-run artifacts for everything that completed, even when some
    // seeds failed.
    std::ostringstream agg;
    agg << kAggregateHeader << '\n';
    std::vector<double> ensemble_errs;
    for (const auto& maybe : runs) {
        if (!maybe) continue;
        const PnnRunRecord& rec = *maybe;
        detail::write_text_file(dir / ("run_seed" + std::to_string(rec.seed) + ".json"),
                                record_to_json(rec, cfg.label, cfg.config_hash).dump(2) + "\n");
        for (std::size_t c = 0; c < rec.cord_logs.size(); ++c) {
            std::ostringstream log;
            log << "epoch,lr,train_loss,train_acc,val_acc\n";
            for (const auto& row : rec.cord_logs[c]) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", row.epoch, row.lr,
                              row.train_loss, row.train_acc, row.val_acc);
                log << buf;
            }
            detail::write_text_file(dir / ("trainlog_seed" + std::to_string(rec.seed) + "_cord" +
                                           std::to_string(c) + ".csv"),
                                    log.str());
        }
        std::ostringstream curve;
        curve << "epoch";
        for (std::size_t c = 0; c < rec.cord_ids.size(); ++c) curve << ",cord" << c << "_val_err";
        curve << ",ensemble_val_err,swap\n";
        for (const auto& e : rec.epochs) {
            curve << e.epoch;
            for (double a : e.cord_val_acc) curve << ',' << format_err(100.0 * (1.0 - a));
            curve << ',' << format_err(100.0 * (1.0 - e.ensemble_val_acc)) << ','
                  << (e.swap_occurred ? 1 : 0) << '\n';
        }
        detail::write_text_file(dir / ("curve_seed" + std::to_string(rec.seed) + ".csv"),
                                curve.str());
        agg << aggregate_row(cfg.label, rec) << '\n';
        ensemble_errs.push_back(rec.ensemble_test_err);
    }
    detail::write_text_file(dir / "aggregate.csv", agg.str());

    if (!failures.empty()) {
        json manifest;
        manifest["label"] = cfg.label;
        manifest["failures"] = failures;
        detail::write_text_file(dir / "failure_manifest.json", manifest.dump(2) + "\n");
        std::string msg = "experiment '" + cfg.label + "' had failing runs:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw Error(msg);
    }
    for (auto& maybe : runs) result.runs.push_back(std::move(*maybe));

    std::ostringstream summary;
    summary << "experiment: " << cfg.label << "\nconfig_hash: " << cfg.config_hash
            << "\nruns: " << result.runs.size() << '\n';
    if (ensemble_errs.size() >= 3) {
        result.ensemble_err_summary = descriptive(ensemble_errs);
        summary << "ensemble_test_err_pct: mean " << format_err(result.ensemble_err_summary.mean)
                << ", trimmed_mean " << format_err(result.ensemble_err_summary.trimmed_mean)
                << ", median " << format_err(result.ensemble_err_summary.median) << '\n';
    } else if (!ensemble_errs.empty()) {
        double m = 0;
        for (double v : ensemble_errs) m += v;
        m /= static_cast<double>(ensemble_errs.size());
        result.ensemble_err_summary.mean = m;
        summary << "ensemble_test_err_pct: mean " << format_err(m) << '\n';
    }
    detail::write_text_file(dir / "summary.txt", summary.str());
    return result;
}

// ---------------------------------------------------------------------------
// Statistical comparison of aggregate CSVs
// ---------------------------------------------------------------------------

struct CompareReport {
    json as_json;
    std::string as_text;
};

/// Groups rows by model label, runs Kruskal-Wallis across all groups and
/// Mann-Whitney U for the requested pairs (every unordered pair when none
/// are requested), and emits descriptive rows per group. metric selects
/// the CSV column: cord1_err, cord2_err or ensemble_err.
inline CompareReport compare_groups(const std::vector<AggregateRow>& rows,
                                    const std::string& metric = "ensemble_err",
                                    std::vector<std::pair<std::string, std::string>> pairs = {},
                                    double alpha = 0.05) {
    auto metric_of = [&](const AggregateRow& r) -> std::optional<double> {
        if (metric == "ensemble_err") return r.ensemble_err;
        if (metric == "cord1_err") return r.cord1_err;
        if (metric == "cord2_err") return r.cord2_err;
        throw ConfigError("compare: unknown metric '" + metric + "'");
    };

    std::vector<Sample> groups;
    for (const auto& r : rows) {
        const auto v = metric_of(r);
        if (!v) continue;
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const Sample& s) { return s.label == r.model; });
        if (it == groups.end()) {
            groups.push_back({r.model, {*v}});
        } else {
            it->values.push_back(*v);
        }
    }

    json out;
    std::ostringstream text;
    out["metric"] = metric;
    out["alpha"] = alpha;
    text << "group comparison on " << metric << " (alpha = " << alpha << ")\n";

    std::vector<Sample> usable;
    json warnings = json::array();
    for (auto& g : groups) {
        if (g.values.size() < 2) {
            warnings.push_back("group '" + g.label + "' has fewer than 2 observations; excluded");
            text << "warning: group '" << g.label << "' excluded (" << g.values.size()
                 << " observation)\n";
        } else {
            usable.push_back(g);
        }
    }
    out["warnings"] = warnings;

    json desc = json::array();
    text << "\nper-group summary\n";
    for (const auto& g : usable) {
        json d;
        d["label"] = g.label;
        d["n"] = g.values.size();
        char line[256];
        if (g.values.size() >= 3) {
            const auto s = descriptive(g.values);
            d["mean"] = s.mean;
            d["trimmed_mean"] = s.trimmed_mean;
            d["median"] = s.median;
            std::snprintf(line, sizeof line, "  %-28s n=%zu mean=%.4f trimmed=%.4f median=%.4f\n",
                          g.label.c_str(), g.values.size(), s.mean, s.trimmed_mean, s.median);
        } else {
            const double m = (g.values[0] + g.values[1]) / 2.0;
            d["mean"] = m;
            std::snprintf(line, sizeof line, "  %-28s n=%zu mean=%.4f\n", g.label.c_str(),
                          g.values.size(), m);
        }
        text << line;
        desc.push_back(d);
    }
    out["groups"] = desc;

    if (usable.size() >= 2) {
        try {
            const auto kw = kruskal_wallis(usable);
            out["kruskal_wallis"] = {{"statistic", kw.statistic},
                                     {"statistic_uncorrected", kw.statistic_uncorrected},
                                     {"p_value", kw.p_value},
                                     {"df", kw.df},
                                     {"method", kw.method},
                                     {"reject_h0", kw.p_value < alpha}};
            char line[256];
            std::snprintf(line, sizeof line,
                          "\nkruskal-wallis: H=%.4f df=%g p=%.4f -> %s at alpha=%.2f\n",
                          kw.statistic, kw.df, kw.p_value,
                          kw.p_value < alpha ? "reject H0" : "fail to reject H0", alpha);
            text << line;
        } catch (const StatError& e) {
            out["kruskal_wallis"] = {{"error", e.what()}};
            text << "\nkruskal-wallis: " << e.what() << '\n';
        }
    }

    if (pairs.empty()) {
        for (std::size_t i = 0; i < usable.size(); ++i)
            for (std::size_t k = i + 1; k < usable.size(); ++k)
                pairs.emplace_back(usable[i].label, usable[k].label);
    }
    json utests = json::array();
    text << "\nmann-whitney u tests\n";
    for (const auto& [la, lb] : pairs) {
        const auto ga = std::find_if(usable.begin(), usable.end(),
                                     [&](const Sample& s) { return s.label == la; });
        const auto gb = std::find_if(usable.begin(), usable.end(),
                                     [&](const Sample& s) { return s.label == lb; });
        if (ga == usable.end() || gb == usable.end()) {
            text << "  pair (" << la << ", " << lb << "): group missing, skipped\n";
            continue;
        }
        json u;
        u["x"] = la;
        u["y"] = lb;
        try {
            const auto r = mann_whitney_u(*ga, *gb);
            u["U"] = r.statistic;
            u["U_other"] = r.statistic_other;
            u["p_value"] = r.p_value;
            u["method"] = r.method;
            u["reject_h0"] = r.p_value < alpha;
            char line[256];
            std::snprintf(line, sizeof line, "  %s vs %s: U=%.2f p=%.4f -> %s\n", la.c_str(),
                          lb.c_str(), r.statistic, r.p_value,
                          r.p_value < alpha ? "reject H0 (significant)" : "not significant");
            text << line;
        } catch (const StatError& e) {
            u["error"] = e.what();
            text << "  " << la << " vs " << lb << ": " << e.what() << '\n';
        }
        utests.push_back(u);
    }
    out["u_tests"] = utests;

    CompareReport rep;
    rep.as_json = out;
    rep.as_text = text.str();
    return rep;
}

} // namespace pnn
