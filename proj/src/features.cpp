#include "actiml/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "actiml/csv.hpp"
#include "actiml/errors.hpp"

namespace actiml {

namespace {

constexpr std::string_view kFeatureCsvHeader =
    "participant_id,date,mean_log,std_log,min_log,max_log,zero_count,"
    "zero_proportion,label";

} // namespace

double log_transform(double activity) {
    if (activity < 0.0) {
        throw DomainError("log_transform: activity must be non-negative, got " +
                          format_double(activity));
    }
    return std::log1p(activity);
}

std::vector<DaySegment> segment_by_date(const ParticipantSeries& series,
                                        int min_records) {
    if (min_records < 1) {
        throw ValidationError("segment_by_date: min_records must be >= 1");
    }
    std::map<Date, std::vector<const ActigraphRecord*>> by_date;
    for (const auto& record : series.records) {
        by_date[record.date].push_back(&record);
    }
    std::vector<DaySegment> segments;
    for (auto& [date, records] : by_date) {
        if (std::ssize(records) < min_records) continue;
        std::stable_sort(records.begin(), records.end(),
                         [](const ActigraphRecord* a, const ActigraphRecord* b) {
                             return a->timestamp < b->timestamp;
                         });
        DaySegment segment;
        segment.participant_id = series.participant_id;
        segment.date = date;
        segment.group = series.group;
        segment.raw_activity.reserve(records.size());
        for (const auto* record : records) {
            segment.raw_activity.push_back(record->activity);
        }
        segments.push_back(std::move(segment));
    }
    return segments;
}

DayFeatures extract_day_features(const DaySegment& segment) {
    if (segment.raw_activity.empty()) {
        throw ValidationError("extract_day_features: empty segment for " +
                              segment.participant_id + " on " +
                              to_string(segment.date));
    }
    const std::size_t n = segment.raw_activity.size();
    DayFeatures features;
    features.label = cohort_label(segment.group);

    double sum = 0.0;
    double min_log = std::numeric_limits<double>::infinity();
    double max_log = -std::numeric_limits<double>::infinity();
    std::int64_t zeros = 0;
    std::vector<double> logs;
    logs.reserve(n);
    for (const double raw : segment.raw_activity) {
        const double value = log_transform(raw);
        logs.push_back(value);
        sum += value;
        min_log = std::min(min_log, value);
        max_log = std::max(max_log, value);
        if (raw == 0.0) ++zeros;
    }
    const double mean = sum / static_cast<double>(n);
    double sq_sum = 0.0;
    for (const double value : logs) {
        const double dev = value - mean;
        sq_sum += dev * dev;
    }
    features.mean_log = mean;
    features.std_log = std::sqrt(sq_sum / static_cast<double>(n));
    features.min_log = min_log;
    features.max_log = max_log;
    features.zero_count = zeros;
    features.zero_proportion = static_cast<double>(zeros) / static_cast<double>(n);
    return features;
}

std::vector<DayFeatureRow> extract_dataset_features(const RawDataset& dataset,
                                                    int min_records) {
    std::vector<DayFeatureRow> rows;
    for (const auto* cohort : {&dataset.condition, &dataset.control}) {
        for (const auto& series : *cohort) {
            for (const auto& segment : segment_by_date(series, min_records)) {
                rows.push_back(DayFeatureRow{{segment.participant_id, segment.date},
                                             extract_day_features(segment)});
            }
        }
    }
    return rows;
}

LabeledFeatureMatrix feature_rows_to_matrix(const std::vector<DayFeatureRow>& rows,
                                            const FeatureConfig& config) {
    if (rows.empty()) {
        throw EmptyMatrixError(
            "feature matrix has zero rows (no participant-day met min_records)");
    }
    LabeledFeatureMatrix matrix;
    matrix.feature_names = {"mean_log", "std_log", "min_log", "max_log",
                            config.use_zero_proportion ? "zero_proportion"
                                                       : "zero_count"};
    matrix.rows = Matrix(rows.size(), matrix.feature_names.size());
    matrix.labels.reserve(rows.size());
    matrix.provenance.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const DayFeatures& f = rows[i].features;
        matrix.rows(i, 0) = f.mean_log;
        matrix.rows(i, 1) = f.std_log;
        matrix.rows(i, 2) = f.min_log;
        matrix.rows(i, 3) = f.max_log;
        matrix.rows(i, 4) = config.use_zero_proportion
                                ? f.zero_proportion
                                : static_cast<double>(f.zero_count);
        matrix.labels.push_back(f.label);
        matrix.provenance.push_back(rows[i].origin);
    }
    return matrix;
}

LabeledFeatureMatrix build_feature_matrix(const RawDataset& dataset,
                                          const FeatureConfig& config) {
    return feature_rows_to_matrix(extract_dataset_features(dataset, config.min_records),
                                  config);
}

void write_feature_csv(const std::vector<DayFeatureRow>& rows,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write file: " + path.string());
    out << kFeatureCsvHeader << '\n';
    for (const auto& row : rows) {
        const DayFeatures& f = row.features;
        out << row.origin.participant_id << ',' << to_string(row.origin.date) << ','
            << format_double(f.mean_log) << ',' << format_double(f.std_log) << ','
            << format_double(f.min_log) << ',' << format_double(f.max_log) << ','
            << f.zero_count << ',' << format_double(f.zero_proportion) << ','
            << f.label << '\n';
    }
    if (!out.good()) throw IoError("write failed: " + path.string());
}

std::vector<DayFeatureRow> read_feature_csv(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line) || trim(line) != kFeatureCsvHeader) {
        throw ParseError("expected feature CSV header '" +
                             std::string(kFeatureCsvHeader) + "' in " +
                             path.filename().string(),
                         1);
    }
    std::vector<DayFeatureRow> rows;
    while (reader.next(line)) {
        if (trim(line).empty()) continue;
        const std::size_t line_no = reader.line_number();
        const auto fields = split_csv_line(line);
        if (fields.size() != 9) {
            throw ParseError("expected 9 fields, got " + std::to_string(fields.size()),
                             line_no);
        }
        DayFeatureRow row;
        row.origin.participant_id = std::string(trim(fields[0]));
        if (row.origin.participant_id.empty()) {
            throw ValidationError("empty participant id at line " +
                                  std::to_string(line_no));
        }
        const auto date = try_parse_date(trim(fields[1]));
        if (!date) throw ParseError("bad date '" + fields[1] + "'", line_no);
        row.origin.date = *date;

        DayFeatures& f = row.features;
        long long zero_count = 0;
        long long label = 0;
        if (!parse_double_field(fields[2], f.mean_log) ||
            !parse_double_field(fields[3], f.std_log) ||
            !parse_double_field(fields[4], f.min_log) ||
            !parse_double_field(fields[5], f.max_log) ||
            !parse_int_field(fields[6], zero_count) ||
            !parse_double_field(fields[7], f.zero_proportion) ||
            !parse_int_field(fields[8], label)) {
            throw ParseError("bad numeric field", line_no);
        }
        f.zero_count = zero_count;
        f.label = static_cast<int>(label);
        if (f.label != 0 && f.label != 1) {
            throw ValidationError("label must be 0 or 1 at line " +
                                  std::to_string(line_no));
        }
        if (f.zero_count < 0 || f.zero_proportion < 0.0 || f.zero_proportion > 1.0 ||
            f.std_log < 0.0 || !(f.min_log <= f.mean_log && f.mean_log <= f.max_log)) {
            throw ValidationError("feature row violates invariants at line " +
                                  std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace actiml
