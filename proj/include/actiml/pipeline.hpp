#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "actiml/features.hpp"
#include "actiml/forest.hpp"
#include "actiml/matrix.hpp"
#include "actiml/metrics.hpp"
#include "actiml/neuralnet.hpp"

namespace actiml {

struct SplitIndices {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
    int seed = 0;
    bool stratified = false;
};

// Column-wise standardization fitted on training rows only. Constant
// columns store std 1 and are flagged.
struct Scaler {
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<bool> constant;
};

enum class PipelineMode { Faithful, Audited };

std::string pipeline_mode_name(PipelineMode mode);
PipelineMode pipeline_mode_from_name(const std::string& name);

struct PipelineConfig {
    double test_fraction = 0.2;
    int split_seed = 42;
    bool stratified = false;
    bool split_by_participant = false;
    // Audited withholds half of the test rows from the meta learner;
    // faithful reproduces the published procedure, which trains the final
    // forest on the very rows it is scored on.
    PipelineMode mode = PipelineMode::Audited;
    ForestParams forest;  // shared by the base and the final forest
    TrainConfig net;
    int n_threads = 1;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Row indices (into the input matrix) actually used at each stage. In
// faithful mode meta_train and meta_eval both equal test.
struct SplitProvenance {
    std::size_t n_rows = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::size_t> meta_train;
    std::vector<std::size_t> meta_eval;

    friend bool operator==(const SplitProvenance&, const SplitProvenance&) = default;
};

struct HybridReport {
    PipelineMode mode = PipelineMode::Audited;
    EvaluationReport rf_report;
    EvaluationReport nn_report;
    EvaluationReport hybrid_report;
    PipelineConfig config;
    SplitProvenance provenance;
    std::vector<double> nn_loss_trace;
};

// Seeded shuffle, then the first round(test_fraction * n) indices become the
// test set; stratified mode cuts per class (quotas by largest remainder,
// ties to class 0) and merges. Both lists are returned ascending.
SplitIndices split_train_test(std::size_t n, double test_fraction, int seed,
                              bool stratified, std::span<const int> labels);

// Groups all rows of a participant on one side. Participants (sorted ids)
// are shuffled and assigned to the test side until it holds at least
// round(test_fraction * n) rows; the stratified variant fills a per-class
// row quota instead.
SplitIndices split_by_participant(const std::vector<RowOrigin>& provenance,
                                  std::span<const int> labels,
                                  double test_fraction, int seed,
                                  bool stratified);

Scaler fit_scaler(const Matrix& X_train);
Matrix apply_scaler(const Scaler& scaler, const Matrix& X);

// Two-column matrix of the paired binary votes, row i = (rf[i], nn[i]).
Matrix combine_predictions(std::span<const int> rf_preds,
                           std::span<const int> nn_preds);

HybridReport run_hybrid_pipeline(const LabeledFeatureMatrix& matrix,
                                 const PipelineConfig& config);

nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& config);
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc);

nlohmann::ordered_json hybrid_report_to_json(const HybridReport& report);
HybridReport hybrid_report_from_json(const nlohmann::json& doc);

std::string render_hybrid_report(const HybridReport& report);

} // namespace actiml
