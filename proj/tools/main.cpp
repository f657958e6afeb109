#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "actiml/csv.hpp"
#include "actiml/data.hpp"
#include "actiml/errors.hpp"
#include "actiml/features.hpp"
#include "actiml/manifest.hpp"
#include "actiml/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw actiml::IoError("cannot create directory '" + dir.string() +
                              "': " + ec.message());
    }
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw actiml::IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out) throw actiml::IoError("write failed for '" + path.string() + "'");
}

std::string rows_fingerprint(const std::vector<actiml::DayFeatureRow>& rows) {
    std::string blob;
    blob.reserve(rows.size() * 96 + 16);
    for (const auto& row : rows) {
        blob += row.origin.participant_id;
        blob += ',';
        blob += actiml::to_string(row.origin.date);
        for (const double value :
             {row.features.mean_log, row.features.std_log, row.features.min_log,
              row.features.max_log,
              static_cast<double>(row.features.zero_count),
              row.features.zero_proportion}) {
            blob += ',';
            blob += actiml::format_double(value);
        }
        blob += ',';
        blob += std::to_string(row.features.label);
        blob += '\n';
    }
    return actiml::fnv1a64_hex(blob);
}

struct SynthArgs {
    int condition = 0;
    int control = 0;
    int days = 14;
    std::uint64_t seed = 42;
    std::string out;
};

int cmd_synth(const SynthArgs& args) {
    const actiml::RawDataset dataset = actiml::generate_synthetic_cohort(
        args.condition, args.control, args.days, args.seed);
    ensure_directory(args.out);
    actiml::write_dataset(dataset, args.out);

    nlohmann::ordered_json manifest;
    manifest["format"] = "actiml.synth_manifest";
    manifest["version"] = 1;
    manifest["command"] = "synth";
    manifest["params"] = {{"condition", args.condition},
                          {"control", args.control},
                          {"days", args.days},
                          {"seed", args.seed}};
    nlohmann::ordered_json files;
    const auto add_file = [&](const std::string& relative) {
        files[relative] = actiml::hash_file(fs::path(args.out) / relative);
    };
    for (const auto& series : dataset.condition) {
        add_file("condition/" + series.participant_id + ".csv");
    }
    for (const auto& series : dataset.control) {
        add_file("control/" + series.participant_id + ".csv");
    }
    add_file("scores.csv");
    manifest["files"] = std::move(files);
    write_text(fs::path(args.out) / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "wrote " << (args.condition + args.control)
              << " participants to " << args.out << "\n";
    return 0;
}

struct FeaturizeArgs {
    std::string data_dir;
    std::string out_file = "features.csv";
    int min_records = 60;
};

int cmd_featurize(const FeaturizeArgs& args) {
    const actiml::RawDataset dataset = actiml::load_dataset(args.data_dir);
    const std::vector<actiml::DayFeatureRow> rows =
        actiml::extract_dataset_features(dataset, args.min_records);
    actiml::write_feature_csv(rows, args.out_file);
    if (rows.empty()) {
        std::cerr << "warning: no participant-day kept at least "
                  << args.min_records << " records; wrote the header only\n";
    } else {
        std::cout << "wrote " << rows.size() << " rows to " << args.out_file
                  << "\n";
    }
    return 0;
}

struct RunArgs {
    std::string config_path;
    std::string features_path;
    std::string data_dir;
    std::string out_dir = "out";
    std::string mode = "audited";
    std::string split_by = "row";
    std::string max_features = "sqrt";
    int max_depth = -1;
    bool no_shuffle = false;
    int min_records = 60;
    bool zero_proportion = false;
    actiml::PipelineConfig config;
};

// CLI11 only processes config files attached to the root command, so the run
// subcommand applies its own. Keys mirror the long option names and go
// through the option's normal conversion and validation; anything already
// given on the command line wins.
void apply_config_file(CLI::App& run, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw actiml::IoError("config: cannot open '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string entry{actiml::trim(line)};
        if (entry.empty() || entry[0] == '#') continue;
        const std::size_t eq = entry.find('=');
        if (eq == std::string::npos) {
            throw actiml::ParseError("config: expected key=value", line_no);
        }
        const std::string key{actiml::trim(entry.substr(0, eq))};
        const std::string value{actiml::trim(entry.substr(eq + 1))};
        if (key == "config") {
            throw actiml::ValidationError("config: cannot nest config files");
        }
        CLI::Option* option = run.get_option_no_throw("--" + key);
        if (option == nullptr) {
            throw actiml::ValidationError("config: unknown key '" + key + "'");
        }
        if (option->count() > 0) continue;
        try {
            option->add_result(value);
            option->run_callback();
        } catch (const CLI::Error& e) {
            throw actiml::ValidationError(std::string("config: ") + e.what());
        }
    }
}

int cmd_run(const RunArgs& args) {
    actiml::PipelineConfig config = args.config;
    config.mode = actiml::pipeline_mode_from_name(args.mode);
    config.split_by_participant = args.split_by == "participant";
    if (args.max_depth >= 0) {
        config.forest.max_depth = args.max_depth;
    } else {
        config.forest.max_depth.reset();
    }
    config.forest.max_features = args.max_features == "all"
                                     ? actiml::MaxFeaturesRule::All
                                     : actiml::MaxFeaturesRule::Sqrt;
    config.net.shuffle = !args.no_shuffle;

    if (args.features_path.empty() == args.data_dir.empty()) {
        throw actiml::ValidationError(
            "provide exactly one of --features or --data");
    }
    std::vector<actiml::DayFeatureRow> rows;
    std::string input_kind;
    std::string input_path;
    if (!args.features_path.empty()) {
        rows = actiml::read_feature_csv(args.features_path);
        input_kind = "features";
        input_path = args.features_path;
    } else {
        const actiml::RawDataset dataset = actiml::load_dataset(args.data_dir);
        rows = actiml::extract_dataset_features(dataset, args.min_records);
        input_kind = "dataset";
        input_path = args.data_dir;
    }

    const actiml::FeatureConfig feature_config{args.min_records,
                                               args.zero_proportion};
    const actiml::LabeledFeatureMatrix matrix =
        actiml::feature_rows_to_matrix(rows, feature_config);
    const actiml::HybridReport report =
        actiml::run_hybrid_pipeline(matrix, config);

    const nlohmann::ordered_json config_json =
        actiml::pipeline_config_to_json(config);
    const std::string fingerprint = rows_fingerprint(rows);
    std::string run_key = config_json.dump();
    run_key += '\n';
    run_key += input_kind;
    run_key += '\n';
    run_key += fingerprint;
    run_key += '\n';
    run_key += args.zero_proportion ? "zero_proportion" : "zero_count";
    const std::string run_id =
        "run-" + actiml::fnv1a64_hex(run_key).substr(0, 12);

    const fs::path run_dir = fs::path(args.out_dir) / run_id;
    ensure_directory(run_dir);
    write_text(run_dir / "report.json",
               actiml::hybrid_report_to_json(report).dump(2) + "\n");
    write_text(run_dir / "report.txt", actiml::render_hybrid_report(report));
    actiml::write_loss_trace_csv(report.nn_loss_trace,
                                 (run_dir / "loss_trace.csv").string());

    nlohmann::ordered_json manifest;
    manifest["format"] = "actiml.run_manifest";
    manifest["version"] = 1;
    manifest["run_id"] = run_id;
    manifest["command"] = "run";
    // Provenance only; the run directory name hashes everything else, so a
    // re-run lands in the same directory with identical artifacts.
    manifest["created_utc"] = actiml::utc_timestamp();
    manifest["input"] = {{"kind", input_kind},
                         {"path", input_path},
                         {"rows", rows.size()},
                         {"min_records", args.min_records},
                         {"zero_proportion", args.zero_proportion},
                         {"fingerprint", fingerprint}};
    manifest["config"] = config_json;
    nlohmann::ordered_json artifacts;
    for (const char* name : {"report.json", "report.txt", "loss_trace.csv"}) {
        artifacts[name] = actiml::hash_file(run_dir / name);
    }
    manifest["artifacts"] = std::move(artifacts);
    write_text(run_dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "run " << run_id << "\n";
    std::cout << "report: " << (run_dir / "report.json").string() << "\n";
    char line[96];
    std::snprintf(line, sizeof(line),
                  "accuracy: forest %.4f  network %.4f  hybrid %.4f\n",
                  report.rf_report.accuracy, report.nn_report.accuracy,
                  report.hybrid_report.accuracy);
    std::cout << line;
    return 0;
}

int cmd_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw actiml::IoError("cannot open '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw actiml::ParseError(std::string("invalid JSON in '") + path +
                                 "': " + e.what());
    }
    std::cout << actiml::render_hybrid_report(
        actiml::hybrid_report_from_json(doc));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"actiml: actigraphy depression-classification toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth = app.add_subcommand(
        "synth", "write a deterministic synthetic two-cohort dataset");
    synth->add_option("--condition", synth_args.condition,
                      "number of condition participants")->required();
    synth->add_option("--control", synth_args.control,
                      "number of control participants")->required();
    synth->add_option("--days", synth_args.days, "days per participant")
        ->capture_default_str();
    synth->add_option("--seed", synth_args.seed, "generator seed")
        ->capture_default_str();
    synth->add_option("--out", synth_args.out, "output directory")->required();

    FeaturizeArgs feat_args;
    auto* featurize = app.add_subcommand(
        "featurize", "extract per-day features from a dataset directory");
    featurize->add_option("--data", feat_args.data_dir, "dataset directory")
        ->required();
    featurize->add_option("--out", feat_args.out_file, "output CSV path")
        ->capture_default_str();
    featurize->add_option("--min-records", feat_args.min_records,
                          "minimum records for a day to be kept")
        ->capture_default_str();

    RunArgs run_args;
    auto* run = app.add_subcommand(
        "run", "train the base learners and the stacked forest, then report");
    run->add_option("--config", run_args.config_path,
                    "flat key=value file; command-line flags take precedence");
    run->add_option("--features", run_args.features_path,
                    "feature CSV produced by featurize");
    run->add_option("--data", run_args.data_dir,
                    "raw dataset directory (featurized on the fly)");
    run->add_option("--out", run_args.out_dir, "output root directory")
        ->capture_default_str();
    run->add_option("--mode", run_args.mode,
                    "faithful reproduces the published procedure including "
                    "its test-label reuse; audited holds out half the test "
                    "set from the meta learner")
        ->check(CLI::IsMember({"faithful", "audited"}))
        ->capture_default_str();
    run->add_option("--test-fraction", run_args.config.test_fraction,
                    "test share of the split")->capture_default_str();
    run->add_option("--seed", run_args.config.split_seed, "train/test split seed")
        ->capture_default_str();
    run->add_flag("--stratified", run_args.config.stratified,
                  "stratify the split by class");
    run->add_option("--split-by", run_args.split_by,
                    "row keeps days independent; participant groups all days "
                    "of a participant on one side")
        ->check(CLI::IsMember({"row", "participant"}))
        ->capture_default_str();
    run->add_option("--n-estimators", run_args.config.forest.n_estimators,
                    "trees per forest")->capture_default_str();
    run->add_option("--max-depth", run_args.max_depth,
                    "tree depth limit; negative means unlimited")
        ->capture_default_str();
    run->add_option("--min-samples-split",
                    run_args.config.forest.min_samples_split,
                    "minimum node size to attempt a split")
        ->capture_default_str();
    run->add_option("--min-samples-leaf",
                    run_args.config.forest.min_samples_leaf,
                    "minimum samples at a leaf")->capture_default_str();
    run->add_option("--forest-seed", run_args.config.forest.random_state,
                    "forest random state")->capture_default_str();
    run->add_option("--max-features", run_args.max_features,
                    "features searched per split")
        ->check(CLI::IsMember({"sqrt", "all"}))
        ->capture_default_str();
    run->add_option("--learning-rate", run_args.config.net.learning_rate,
                    "Adam learning rate")->capture_default_str();
    run->add_option("--epochs", run_args.config.net.epochs, "training epochs")
        ->capture_default_str();
    run->add_option("--batch-size", run_args.config.net.batch_size,
                    "mini-batch size")->capture_default_str();
    run->add_option("--nn-seed", run_args.config.net.seed,
                    "network init/shuffle seed")->capture_default_str();
    run->add_option("--threshold", run_args.config.net.threshold,
                    "network decision threshold")->capture_default_str();
    run->add_flag("--no-shuffle", run_args.no_shuffle,
                  "disable epoch shuffling");
    run->add_option("--threads", run_args.config.n_threads,
                    "worker threads for forest training")
        ->capture_default_str();
    run->add_option("--min-records", run_args.min_records,
                    "minimum records for a day to be kept (with --data)")
        ->capture_default_str();
    run->add_flag("--zero-proportion", run_args.zero_proportion,
                  "use the zero-proportion column instead of zero-count");

    std::string report_path;
    auto* report = app.add_subcommand(
        "report", "pretty-print an existing report.json");
    report->add_option("file", report_path, "path to report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth) return cmd_synth(synth_args);
        if (*featurize) return cmd_featurize(feat_args);
        if (*run) {
            if (!run_args.config_path.empty()) {
                apply_config_file(*run, run_args.config_path);
            }
            return cmd_run(run_args);
        }
        if (*report) return cmd_report(report_path);
    } catch (const actiml::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const actiml::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
