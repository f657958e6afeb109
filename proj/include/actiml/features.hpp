#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "actiml/calendar.hpp"
#include "actiml/data.hpp"
#include "actiml/matrix.hpp"

namespace actiml {

// One participant-day of raw activity values, time-ordered.
struct DaySegment {
    std::string participant_id;
    Date date;
    Cohort group{Cohort::control};
    std::vector<double> raw_activity;
};

// Per-day statistics of the log-transformed activity. zero_count counts raw
// values equal to 0; the std is the population form (divide by n).
struct DayFeatures {
    double mean_log{0.0};
    double std_log{0.0};
    double min_log{0.0};
    double max_log{0.0};
    std::int64_t zero_count{0};
    double zero_proportion{0.0};
    int label{0}; // 1 = condition, 0 = control

    bool operator==(const DayFeatures&) const = default;
};

struct RowOrigin {
    std::string participant_id;
    Date date;

    bool operator==(const RowOrigin&) const = default;
};

struct DayFeatureRow {
    RowOrigin origin;
    DayFeatures features;

    bool operator==(const DayFeatureRow&) const = default;
};

struct FeatureConfig {
    int min_records{60};
    // Replaces the zero_count column with zero_proportion in the matrix.
    bool use_zero_proportion{false};
};

struct LabeledFeatureMatrix {
    Matrix rows;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::vector<RowOrigin> provenance;
};

// ln(1 + activity). Monotone and zero-preserving; negative input is a
// domain error.
double log_transform(double activity);

// One segment per distinct date with at least min_records records, sorted
// by date, records time-ordered within each day. Handles out-of-order input.
std::vector<DaySegment> segment_by_date(const ParticipantSeries& series,
                                        int min_records);

DayFeatures extract_day_features(const DaySegment& segment);

// All retained participant-days of the dataset: condition participants
// first, then control, each in dataset order, days ascending. May be empty.
std::vector<DayFeatureRow> extract_dataset_features(const RawDataset& dataset,
                                                    int min_records);

// Default column order [mean_log, std_log, min_log, max_log, zero_count].
// Throws EmptyMatrixError when rows is empty.
LabeledFeatureMatrix feature_rows_to_matrix(const std::vector<DayFeatureRow>& rows,
                                            const FeatureConfig& config);

LabeledFeatureMatrix build_feature_matrix(const RawDataset& dataset,
                                          const FeatureConfig& config = {});

// CSV export schema:
// participant_id,date,mean_log,std_log,min_log,max_log,zero_count,zero_proportion,label
void write_feature_csv(const std::vector<DayFeatureRow>& rows,
                       const std::filesystem::path& path);
std::vector<DayFeatureRow> read_feature_csv(const std::filesystem::path& path);

} // namespace actiml
