#include "actiml/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "actiml/errors.hpp"
#include "actiml/rng.hpp"

namespace actiml {

namespace {

void check_fraction(double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ValidationError("split: test_fraction must lie in (0, 1)");
    }
}

void check_binary(std::span<const int> labels, const char* what) {
    for (const int label : labels) {
        if (label != 0 && label != 1) {
            throw ValidationError(std::string(what) + ": labels must be 0 or 1");
        }
    }
}

std::size_t test_quota(std::size_t n, double fraction) {
    return static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(n)));
}

// Core seeded split, used for the public 80/20 split and for the audited
// meta sub-split (which supplies its own derived seed and may be tiny).
SplitIndices split_rows(std::size_t n, double test_fraction,
                        std::uint64_t rng_seed, bool stratified,
                        std::span<const int> labels) {
    check_fraction(test_fraction);
    const std::size_t n_test = test_quota(n, test_fraction);
    if (n_test == 0 || n_test >= n) {
        throw ValidationError("split: test_fraction leaves an empty side");
    }

    Rng rng(rng_seed);
    SplitIndices split;
    split.stratified = stratified;
    if (!stratified) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(rng, order);
        split.test.assign(order.begin(),
                          order.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test),
                           order.end());
    } else {
        if (labels.size() != n) {
            throw ValidationError("split: stratified mode needs one label per row");
        }
        check_binary(labels, "split");
        std::array<std::vector<std::size_t>, 2> by_class;
        for (std::size_t i = 0; i < n; ++i) {
            by_class[labels[i]].push_back(i);
        }

        // Per-class quotas: floors of the ideal shares, remainders assigned
        // by largest fractional part, ties to class 0.
        std::array<std::size_t, 2> quota{};
        std::array<double, 2> frac{};
        for (int c = 0; c < 2; ++c) {
            const double ideal =
                test_fraction * static_cast<double>(by_class[c].size());
            quota[c] = static_cast<std::size_t>(std::floor(ideal));
            frac[c] = ideal - std::floor(ideal);
        }
        const std::array<int, 2> order =
            frac[1] > frac[0] ? std::array<int, 2>{1, 0}
                              : std::array<int, 2>{0, 1};
        const std::size_t remainder = n_test - (quota[0] + quota[1]);
        for (std::size_t i = 0; i < remainder; ++i) quota[order[i % 2]]++;

        for (int c = 0; c < 2; ++c) {
            if (quota[c] == 0 || quota[c] >= by_class[c].size()) {
                throw ValidationError(
                    "split: class " + std::to_string(c) +
                    " would be absent from train or test; more rows needed");
            }
        }
        for (int c = 0; c < 2; ++c) {
            shuffle(rng, by_class[c]);
            split.test.insert(split.test.end(), by_class[c].begin(),
                              by_class[c].begin() +
                                  static_cast<std::ptrdiff_t>(quota[c]));
            split.train.insert(split.train.end(),
                               by_class[c].begin() +
                                   static_cast<std::ptrdiff_t>(quota[c]),
                               by_class[c].end());
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Matrix gather_rows(const Matrix& X, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), X.cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = X.row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::vector<int> gather_labels(std::span<const int> labels,
                               std::span<const std::size_t> indices) {
    std::vector<int> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels[indices[i]];
    return out;
}

std::vector<std::size_t> map_through(std::span<const std::size_t> base,
                                     std::span<const std::size_t> positions) {
    std::vector<std::size_t> out(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        out[i] = base[positions[i]];
    }
    return out;
}

nlohmann::ordered_json indices_to_json(const std::vector<std::size_t>& indices) {
    return nlohmann::ordered_json(indices);
}

} // namespace

std::string pipeline_mode_name(PipelineMode mode) {
    return mode == PipelineMode::Faithful ? "faithful" : "audited";
}

PipelineMode pipeline_mode_from_name(const std::string& name) {
    if (name == "faithful") return PipelineMode::Faithful;
    if (name == "audited") return PipelineMode::Audited;
    throw ValidationError("unknown pipeline mode '" + name +
                          "' (expected faithful or audited)");
}

SplitIndices split_train_test(std::size_t n, double test_fraction, int seed,
                              bool stratified, std::span<const int> labels) {
    if (n < 5) throw ValidationError("split: need at least 5 rows");
    SplitIndices split = split_rows(
        n, test_fraction,
        static_cast<std::uint64_t>(static_cast<std::int64_t>(seed)), stratified,
        labels);
    split.seed = seed;
    return split;
}

SplitIndices split_by_participant(const std::vector<RowOrigin>& provenance,
                                  std::span<const int> labels,
                                  double test_fraction, int seed,
                                  bool stratified) {
    const std::size_t n = provenance.size();
    if (n < 5) throw ValidationError("split: need at least 5 rows");
    if (labels.size() != n) {
        throw ValidationError("split: one label per row required");
    }
    check_binary(labels, "split");
    check_fraction(test_fraction);

    // std::map keeps participants in sorted-id order before shuffling.
    std::map<std::string, std::vector<std::size_t>> rows_by_pid;
    for (std::size_t i = 0; i < n; ++i) {
        rows_by_pid[provenance[i].participant_id].push_back(i);
    }
    if (rows_by_pid.size() < 2) {
        throw ValidationError(
            "split: participant grouping needs at least 2 participants");
    }
    std::map<std::string, int> label_by_pid;
    for (const auto& [pid, rows] : rows_by_pid) {
        const int label = labels[rows.front()];
        for (const std::size_t row : rows) {
            if (labels[row] != label) {
                throw ValidationError("split: participant '" + pid +
                                      "' appears with both labels");
            }
        }
        label_by_pid[pid] = label;
    }

    Rng rng(static_cast<std::uint64_t>(static_cast<std::int64_t>(seed)));
    SplitIndices split;
    split.seed = seed;
    split.stratified = stratified;

    const auto assign = [&](std::vector<std::string>& pids,
                            std::size_t row_target) {
        shuffle(rng, pids);
        std::size_t taken_rows = 0;
        std::size_t taken_pids = 0;
        for (const std::string& pid : pids) {
            if (taken_rows >= row_target) break;
            const auto& rows = rows_by_pid.at(pid);
            split.test.insert(split.test.end(), rows.begin(), rows.end());
            taken_rows += rows.size();
            ++taken_pids;
        }
        if (taken_pids == 0 || taken_pids == pids.size()) {
            throw ValidationError(
                "split: participant grouping left train or test empty");
        }
        for (std::size_t i = taken_pids; i < pids.size(); ++i) {
            const auto& rows = rows_by_pid.at(pids[i]);
            split.train.insert(split.train.end(), rows.begin(), rows.end());
        }
    };

    if (!stratified) {
        std::vector<std::string> pids;
        pids.reserve(rows_by_pid.size());
        for (const auto& [pid, rows] : rows_by_pid) pids.push_back(pid);
        assign(pids, test_quota(n, test_fraction));
    } else {
        std::array<std::vector<std::string>, 2> pids_by_class;
        std::array<std::size_t, 2> rows_by_class{};
        for (const auto& [pid, label] : label_by_pid) {
            pids_by_class[label].push_back(pid);
        }
        for (std::size_t i = 0; i < n; ++i) rows_by_class[labels[i]]++;

        // Same largest-remainder quota rule as the row-level split, applied
        // to per-class row counts.
        const std::size_t n_test = test_quota(n, test_fraction);
        std::array<std::size_t, 2> quota{};
        std::array<double, 2> frac{};
        for (int c = 0; c < 2; ++c) {
            const double ideal =
                test_fraction * static_cast<double>(rows_by_class[c]);
            quota[c] = static_cast<std::size_t>(std::floor(ideal));
            frac[c] = ideal - std::floor(ideal);
        }
        const std::array<int, 2> order =
            frac[1] > frac[0] ? std::array<int, 2>{1, 0}
                              : std::array<int, 2>{0, 1};
        if (n_test > quota[0] + quota[1]) {
            const std::size_t remainder = n_test - (quota[0] + quota[1]);
            for (std::size_t i = 0; i < remainder; ++i) quota[order[i % 2]]++;
        }
        for (int c = 0; c < 2; ++c) {
            if (pids_by_class[c].size() < 2) {
                throw ValidationError(
                    "split: stratified participant grouping needs at least 2 "
                    "participants of class " +
                    std::to_string(c));
            }
            assign(pids_by_class[c], std::max<std::size_t>(1, quota[c]));
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Scaler fit_scaler(const Matrix& X_train) {
    if (X_train.rows == 0 || X_train.cols == 0) {
        throw ValidationError("fit_scaler: empty matrix");
    }
    Scaler scaler;
    scaler.means.resize(X_train.cols);
    scaler.stds.resize(X_train.cols);
    scaler.constant.assign(X_train.cols, false);
    const double n = static_cast<double>(X_train.rows);
    for (std::size_t c = 0; c < X_train.cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < X_train.rows; ++r) sum += X_train(r, c);
        const double mean = sum / n;
        double sq = 0.0;
        for (std::size_t r = 0; r < X_train.rows; ++r) {
            const double delta = X_train(r, c) - mean;
            sq += delta * delta;
        }
        const double std_dev = std::sqrt(sq / n);
        scaler.means[c] = mean;
        if (std_dev == 0.0) {
            scaler.stds[c] = 1.0;
            scaler.constant[c] = true;
        } else {
            scaler.stds[c] = std_dev;
        }
    }
    return scaler;
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& X) {
    if (X.cols != scaler.means.size()) {
        throw ValidationError("apply_scaler: width mismatch");
    }
    Matrix out(X.rows, X.cols);
    for (std::size_t r = 0; r < X.rows; ++r) {
        for (std::size_t c = 0; c < X.cols; ++c) {
            out(r, c) = (X(r, c) - scaler.means[c]) / scaler.stds[c];
        }
    }
    return out;
}

Matrix combine_predictions(std::span<const int> rf_preds,
                           std::span<const int> nn_preds) {
    if (rf_preds.size() != nn_preds.size()) {
        throw ValidationError("combine_predictions: length mismatch");
    }
    check_binary(rf_preds, "combine_predictions");
    check_binary(nn_preds, "combine_predictions");
    Matrix meta(rf_preds.size(), 2);
    for (std::size_t i = 0; i < rf_preds.size(); ++i) {
        meta(i, 0) = static_cast<double>(rf_preds[i]);
        meta(i, 1) = static_cast<double>(nn_preds[i]);
    }
    return meta;
}

HybridReport run_hybrid_pipeline(const LabeledFeatureMatrix& matrix,
                                 const PipelineConfig& config) {
    const std::size_t n = matrix.rows.rows;
    if (matrix.labels.size() != n) {
        throw ValidationError("pipeline: label count mismatch");
    }
    check_binary(matrix.labels, "pipeline");
    std::array<std::size_t, 2> class_counts{};
    for (const int label : matrix.labels) class_counts[label]++;
    if (class_counts[0] < 2 || class_counts[1] < 2) {
        throw ValidationError("pipeline: need at least 2 rows of each class");
    }
    if (config.n_threads < 1) {
        throw ValidationError("pipeline: n_threads must be >= 1");
    }

    const SplitIndices split =
        config.split_by_participant
            ? split_by_participant(matrix.provenance, matrix.labels,
                                   config.test_fraction, config.split_seed,
                                   config.stratified)
            : split_train_test(n, config.test_fraction, config.split_seed,
                               config.stratified, matrix.labels);

    const Matrix X_train = gather_rows(matrix.rows, split.train);
    const Matrix X_test = gather_rows(matrix.rows, split.test);
    const std::vector<int> y_train = gather_labels(matrix.labels, split.train);
    const std::vector<int> y_test = gather_labels(matrix.labels, split.test);

    const Scaler scaler = fit_scaler(X_train);
    const Matrix Xs_train = apply_scaler(scaler, X_train);
    const Matrix Xs_test = apply_scaler(scaler, X_test);

    const Forest forest =
        train_forest(Xs_train, y_train, config.forest, config.n_threads);
    const TrainedNetwork network = train_network(Xs_train, y_train, config.net);

    const std::vector<int> rf_preds = predict_forest(forest, Xs_test);
    const std::vector<int> nn_preds =
        predict_network(network.params, Xs_test, config.net.threshold);
    const Matrix meta = combine_predictions(rf_preds, nn_preds);

    HybridReport report;
    report.mode = config.mode;
    report.config = config;
    report.nn_loss_trace = network.loss_trace;
    report.provenance.n_rows = n;
    report.provenance.train = split.train;
    report.provenance.test = split.test;

    if (config.mode == PipelineMode::Faithful) {
        const Forest meta_forest =
            train_forest(meta, y_test, config.forest, config.n_threads);
        const std::vector<int> hybrid_preds = predict_forest(meta_forest, meta);
        report.rf_report = classification_report(y_test, rf_preds);
        report.nn_report = classification_report(y_test, nn_preds);
        report.hybrid_report = classification_report(y_test, hybrid_preds);
        report.provenance.meta_train = split.test;
        report.provenance.meta_eval = split.test;
        return report;
    }

    if (split.test.size() < 2) {
        throw ValidationError("pipeline: audited mode needs at least 2 test rows");
    }
    const SplitIndices sub = split_rows(
        split.test.size(), 0.5,
        split_seed(static_cast<std::uint64_t>(
                       static_cast<std::int64_t>(config.split_seed)),
                   1),
        false, {});
    const Matrix meta_train_X = gather_rows(meta, sub.train);
    const Matrix meta_eval_X = gather_rows(meta, sub.test);
    const std::vector<int> meta_train_y = gather_labels(y_test, sub.train);
    const std::vector<int> meta_eval_y = gather_labels(y_test, sub.test);

    const Forest meta_forest =
        train_forest(meta_train_X, meta_train_y, config.forest, config.n_threads);
    const std::vector<int> hybrid_preds = predict_forest(meta_forest, meta_eval_X);

    report.rf_report = classification_report(
        meta_eval_y, gather_labels(rf_preds, sub.test));
    report.nn_report = classification_report(
        meta_eval_y, gather_labels(nn_preds, sub.test));
    report.hybrid_report = classification_report(meta_eval_y, hybrid_preds);
    report.provenance.meta_train = map_through(split.test, sub.train);
    report.provenance.meta_eval = map_through(split.test, sub.test);
    return report;
}

nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& config) {
    nlohmann::ordered_json doc;
    doc["test_fraction"] = config.test_fraction;
    doc["split_seed"] = config.split_seed;
    doc["stratified"] = config.stratified;
    doc["split_by_participant"] = config.split_by_participant;
    doc["mode"] = pipeline_mode_name(config.mode);
    doc["n_threads"] = config.n_threads;
    doc["forest"] = forest_params_to_json(config.forest);
    doc["net"] = train_config_to_json(config.net);
    return doc;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& doc) {
    try {
        PipelineConfig config;
        config.test_fraction = doc.at("test_fraction").get<double>();
        config.split_seed = doc.at("split_seed").get<int>();
        config.stratified = doc.at("stratified").get<bool>();
        config.split_by_participant = doc.at("split_by_participant").get<bool>();
        config.mode = pipeline_mode_from_name(doc.at("mode").get<std::string>());
        config.n_threads = doc.at("n_threads").get<int>();
        config.forest = forest_params_from_json(doc.at("forest"));
        config.net = train_config_from_json(doc.at("net"));
        return config;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed pipeline config JSON: ") +
                         e.what());
    }
}

nlohmann::ordered_json hybrid_report_to_json(const HybridReport& report) {
    nlohmann::ordered_json doc;
    doc["format"] = "actiml.hybrid_report";
    doc["version"] = 1;
    doc["mode"] = pipeline_mode_name(report.mode);
    doc["config"] = pipeline_config_to_json(report.config);
    nlohmann::ordered_json split;
    split["n_rows"] = report.provenance.n_rows;
    split["train"] = indices_to_json(report.provenance.train);
    split["test"] = indices_to_json(report.provenance.test);
    split["meta_train"] = indices_to_json(report.provenance.meta_train);
    split["meta_eval"] = indices_to_json(report.provenance.meta_eval);
    doc["split"] = std::move(split);
    nlohmann::ordered_json models;
    models["forest"] = report_to_json(report.rf_report);
    models["network"] = report_to_json(report.nn_report);
    models["hybrid"] = report_to_json(report.hybrid_report);
    doc["models"] = std::move(models);
    doc["nn_loss_trace"] = report.nn_loss_trace;
    return doc;
}

HybridReport hybrid_report_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "actiml.hybrid_report") {
            throw ParseError("hybrid report JSON: unexpected format tag");
        }
        if (doc.at("version").get<int>() != 1) {
            throw ParseError("hybrid report JSON: unsupported version");
        }
        HybridReport report;
        report.mode =
            pipeline_mode_from_name(doc.at("mode").get<std::string>());
        report.config = pipeline_config_from_json(doc.at("config"));
        const auto& split = doc.at("split");
        report.provenance.n_rows = split.at("n_rows").get<std::size_t>();
        report.provenance.train =
            split.at("train").get<std::vector<std::size_t>>();
        report.provenance.test =
            split.at("test").get<std::vector<std::size_t>>();
        report.provenance.meta_train =
            split.at("meta_train").get<std::vector<std::size_t>>();
        report.provenance.meta_eval =
            split.at("meta_eval").get<std::vector<std::size_t>>();
        const auto& models = doc.at("models");
        report.rf_report = report_from_json(models.at("forest"));
        report.nn_report = report_from_json(models.at("network"));
        report.hybrid_report = report_from_json(models.at("hybrid"));
        report.nn_loss_trace =
            doc.at("nn_loss_trace").get<std::vector<double>>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed hybrid report JSON: ") +
                         e.what());
    }
}

std::string render_hybrid_report(const HybridReport& report) {
    std::ostringstream out;
    out << "hybrid pipeline report\n";
    out << "mode: " << pipeline_mode_name(report.mode) << '\n';
    out << "rows: " << report.provenance.n_rows
        << "  train: " << report.provenance.train.size()
        << "  test: " << report.provenance.test.size()
        << "  meta-train: " << report.provenance.meta_train.size()
        << "  meta-eval: " << report.provenance.meta_eval.size() << '\n';
    char line[96];
    std::snprintf(line, sizeof(line),
                  "accuracy: forest %.4f  network %.4f  hybrid %.4f\n",
                  report.rf_report.accuracy, report.nn_report.accuracy,
                  report.hybrid_report.accuracy);
    out << line;
    const std::array<std::pair<const char*, const EvaluationReport*>, 3> blocks{
        {{"forest", &report.rf_report},
         {"network", &report.nn_report},
         {"hybrid", &report.hybrid_report}}};
    for (const auto& [name, block] : blocks) {
        out << '\n' << "[" << name << "]\n";
        out << render_report_text(*block);
    }
    return out.str();
}

} // namespace actiml
