#include "actiml/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "actiml/csv.hpp"
#include "actiml/errors.hpp"
#include "actiml/rng.hpp"

namespace actiml {

namespace {

constexpr std::string_view kActigraphHeader = "timestamp,date,activity";
constexpr std::string_view kScoresHeader =
    "number,days,gender,age,afftype,melanch,inpatient,edu,marriage,work,madrs1,madrs2";

std::string file_context(const std::filesystem::path& path) {
    return " in " + path.filename().string();
}

std::optional<int> parse_optional_int(std::string_view field,
                                      const std::filesystem::path& path,
                                      std::size_t line, std::string_view name) {
    field = trim(field);
    if (field.empty()) return std::nullopt;
    long long value = 0;
    if (!parse_int_field(field, value)) {
        throw ParseError("bad integer '" + std::string(field) + "' for " +
                             std::string(name) + file_context(path),
                         line);
    }
    return static_cast<int>(value);
}

} // namespace

std::string_view cohort_name(Cohort group) {
    return group == Cohort::condition ? "condition" : "control";
}

ParticipantSeries load_actigraph_file(const std::filesystem::path& path,
                                      std::string participant_id, Cohort group) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line)) {
        throw ParseError("missing header row" + file_context(path), 1);
    }
    if (trim(line) != kActigraphHeader) {
        throw ParseError("expected header '" + std::string(kActigraphHeader) +
                             "', got '" + line + "'" + file_context(path),
                         1);
    }

    ParticipantSeries series;
    series.participant_id = std::move(participant_id);
    series.group = group;

    while (reader.next(line)) {
        if (trim(line).empty()) continue;
        const std::size_t line_no = reader.line_number();
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) {
            throw ParseError("expected 3 fields, got " + std::to_string(fields.size()) +
                                 file_context(path),
                             line_no);
        }
        ActigraphRecord record;
        const auto timestamp = try_parse_datetime(trim(fields[0]));
        if (!timestamp) {
            throw ParseError("bad timestamp '" + fields[0] + "'" + file_context(path),
                             line_no);
        }
        record.timestamp = *timestamp;
        const auto date = try_parse_date(trim(fields[1]));
        if (!date) {
            throw ParseError("bad date '" + fields[1] + "'" + file_context(path),
                             line_no);
        }
        record.date = *date;
        if (!parse_double_field(fields[2], record.activity)) {
            throw ParseError("bad activity '" + fields[2] + "'" + file_context(path),
                             line_no);
        }
        if (record.activity < 0.0) {
            throw ValidationError("activity must be non-negative, got " + fields[2] +
                                  " at line " + std::to_string(line_no) +
                                  file_context(path));
        }
        if (record.date != record.timestamp.date) {
            throw ValidationError("date column disagrees with timestamp at line " +
                                  std::to_string(line_no) + file_context(path));
        }
        if (!series.records.empty() && record.timestamp < series.records.back().timestamp) {
            throw ValidationError("timestamps out of order at line " +
                                  std::to_string(line_no) + file_context(path));
        }
        series.records.push_back(record);
    }
    return series;
}

std::vector<ParticipantMeta> load_scores_file(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line) || trim(line) != kScoresHeader) {
        throw ParseError("expected scores header '" + std::string(kScoresHeader) + "'" +
                             file_context(path),
                         1);
    }
    std::vector<ParticipantMeta> metas;
    while (reader.next(line)) {
        if (trim(line).empty()) continue;
        const std::size_t line_no = reader.line_number();
        const auto fields = split_csv_line(line);
        if (fields.size() != 12) {
            throw ParseError("expected 12 fields, got " + std::to_string(fields.size()) +
                                 file_context(path),
                             line_no);
        }
        ParticipantMeta meta;
        meta.participant_id = std::string(trim(fields[0]));
        if (meta.participant_id.empty()) {
            throw ValidationError("empty participant id in scores row at line " +
                                  std::to_string(line_no) + file_context(path));
        }
        meta.days_measured = parse_optional_int(fields[1], path, line_no, "days");
        if (meta.days_measured && *meta.days_measured < 1) {
            throw ValidationError("days must be >= 1 for " + meta.participant_id +
                                  file_context(path));
        }
        meta.gender = std::string(trim(fields[2]));
        meta.age_group = std::string(trim(fields[3]));
        meta.afftype = std::string(trim(fields[4]));
        meta.melancholia = std::string(trim(fields[5]));
        meta.inpatient_status = std::string(trim(fields[6]));
        meta.education_years = std::string(trim(fields[7]));
        meta.marital_status = std::string(trim(fields[8]));
        meta.employment = std::string(trim(fields[9]));
        meta.madrs_start = parse_optional_int(fields[10], path, line_no, "madrs1");
        meta.madrs_end = parse_optional_int(fields[11], path, line_no, "madrs2");
        for (const auto& madrs : {meta.madrs_start, meta.madrs_end}) {
            if (madrs && (*madrs < 0 || *madrs > 60)) {
                throw ValidationError("MADRS score out of [0,60] for " +
                                      meta.participant_id + file_context(path));
            }
        }
        metas.push_back(std::move(meta));
    }
    return metas;
}

namespace {

std::vector<ParticipantSeries> load_cohort_dir(const std::filesystem::path& dir,
                                               Cohort group) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("missing cohort directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<ParticipantSeries> cohort;
    cohort.reserve(files.size());
    for (const auto& file : files) {
        cohort.push_back(load_actigraph_file(file, file.stem().string(), group));
    }
    return cohort;
}

} // namespace

RawDataset load_dataset(const std::filesystem::path& root_dir) {
    if (!std::filesystem::is_directory(root_dir)) {
        throw IoError("dataset root is not a directory: " + root_dir.string());
    }
    RawDataset dataset;
    dataset.condition = load_cohort_dir(root_dir / "condition", Cohort::condition);
    dataset.control = load_cohort_dir(root_dir / "control", Cohort::control);

    std::set<std::string> ids;
    for (const auto* cohort : {&dataset.condition, &dataset.control}) {
        for (const auto& series : *cohort) {
            if (!ids.insert(series.participant_id).second) {
                throw ValidationError("duplicate participant id: " +
                                      series.participant_id);
            }
        }
    }

    const auto scores_path = root_dir / "scores.csv";
    if (std::filesystem::exists(scores_path)) {
        dataset.meta = load_scores_file(scores_path);
        for (auto& meta : dataset.meta) {
            meta.matched = ids.contains(meta.participant_id);
        }
    } else {
        std::cerr << "warning: no scores.csv under " << root_dir.string()
                  << "; metadata left empty\n";
    }

    const auto by_id = [](const auto& a, const auto& b) {
        return a.participant_id < b.participant_id;
    };
    std::sort(dataset.condition.begin(), dataset.condition.end(), by_id);
    std::sort(dataset.control.begin(), dataset.control.end(), by_id);
    std::sort(dataset.meta.begin(), dataset.meta.end(), by_id);
    return dataset;
}

void write_actigraph_file(const ParticipantSeries& series,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write file: " + path.string());
    out << kActigraphHeader << '\n';
    for (const auto& record : series.records) {
        out << to_string(record.timestamp) << ',' << to_string(record.date) << ','
            << format_double(record.activity) << '\n';
    }
    if (!out.good()) throw IoError("write failed: " + path.string());
}

namespace {

std::string optional_int_field(const std::optional<int>& value) {
    return value ? std::to_string(*value) : std::string{};
}

} // namespace

void write_scores_file(const std::vector<ParticipantMeta>& metas,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write file: " + path.string());
    out << kScoresHeader << '\n';
    for (const auto& meta : metas) {
        out << meta.participant_id << ',' << optional_int_field(meta.days_measured)
            << ',' << meta.gender << ',' << meta.age_group << ',' << meta.afftype
            << ',' << meta.melancholia << ',' << meta.inpatient_status << ','
            << meta.education_years << ',' << meta.marital_status << ','
            << meta.employment << ',' << optional_int_field(meta.madrs_start) << ','
            << optional_int_field(meta.madrs_end) << '\n';
    }
    if (!out.good()) throw IoError("write failed: " + path.string());
}

void write_dataset(const RawDataset& dataset, const std::filesystem::path& root_dir) {
    std::error_code ec;
    std::filesystem::create_directories(root_dir / "condition", ec);
    std::filesystem::create_directories(root_dir / "control", ec);
    if (ec) throw IoError("cannot create dataset directories under " + root_dir.string());
    for (const auto& series : dataset.condition) {
        write_actigraph_file(series,
                             root_dir / "condition" / (series.participant_id + ".csv"));
    }
    for (const auto& series : dataset.control) {
        write_actigraph_file(series,
                             root_dir / "control" / (series.participant_id + ".csv"));
    }
    write_scores_file(dataset.meta, root_dir / "scores.csv");
}

namespace {

// Generative recipe (all draws from the participant's own stream, in the
// order written here):
//   1. metadata fields
//   2. personal level  L = exp(0.15 * N(0,1))
//   3. per minute, chronologically: with probability z the count is 0,
//      otherwise gamma-Poisson with mean  base * L * diurnal(minute)  and
//      the cohort's dispersion.
// Cohorts are separated by a wide gap in both mean level and zero share:
//   condition: base 110, zero share 0.35, dispersion 1.2
//   control:   base 260, zero share 0.10, dispersion 2.0
struct CohortProfile {
    double base_mean;
    double zero_share;
    double dispersion;
};

constexpr CohortProfile kConditionProfile{110.0, 0.35, 1.2};
constexpr CohortProfile kControlProfile{260.0, 0.10, 2.0};
constexpr Date kSynthStartDate{2020, 3, 1};

// Flat night level with a daytime sine bump between 06:30 and 23:00.
double diurnal_factor(int minute_of_day) {
    constexpr int wake = 390;
    constexpr int sleep = 1380;
    if (minute_of_day < wake || minute_of_day >= sleep) return 0.15;
    const double phase = static_cast<double>(minute_of_day - wake) / (sleep - wake);
    return 0.15 + 0.85 * std::sin(3.14159265358979323846 * phase);
}

const std::vector<std::string>& age_buckets() {
    static const std::vector<std::string> buckets = {"20-24", "25-29", "30-34",
                                                     "35-39", "40-44", "45-49",
                                                     "50-54", "55-59"};
    return buckets;
}

const std::vector<std::string>& edu_buckets() {
    static const std::vector<std::string> buckets = {"6-10", "11-15", "16-20"};
    return buckets;
}

ParticipantMeta draw_meta(Rng& rng, const std::string& id, Cohort group, int days) {
    ParticipantMeta meta;
    meta.participant_id = id;
    meta.days_measured = days;
    meta.matched = true;
    meta.gender = std::to_string(1 + rng.next_below(2));
    meta.age_group = age_buckets()[rng.next_below(age_buckets().size())];
    meta.education_years = edu_buckets()[rng.next_below(edu_buckets().size())];
    meta.marital_status = std::to_string(1 + rng.next_below(2));
    meta.employment = std::to_string(1 + rng.next_below(2));
    if (group == Cohort::condition) {
        meta.afftype = std::to_string(1 + rng.next_below(3));
        meta.melancholia = std::to_string(1 + rng.next_below(2));
        meta.inpatient_status = std::to_string(1 + rng.next_below(2));
        const int madrs1 = 13 + static_cast<int>(rng.next_below(18));
        const int delta = static_cast<int>(rng.next_below(10)) - 5;
        meta.madrs_start = madrs1;
        meta.madrs_end = std::clamp(madrs1 + delta, 0, 60);
    }
    return meta;
}

ParticipantSeries draw_series(Rng& rng, const std::string& id, Cohort group,
                              int days) {
    const CohortProfile& profile =
        group == Cohort::condition ? kConditionProfile : kControlProfile;
    const double personal = std::exp(0.15 * sample_standard_normal(rng));

    ParticipantSeries series;
    series.participant_id = id;
    series.group = group;
    series.records.reserve(static_cast<std::size_t>(days) * 1440);
    for (int day = 0; day < days; ++day) {
        const Date date = add_days(kSynthStartDate, day);
        for (int minute = 0; minute < 1440; ++minute) {
            double activity = 0.0;
            if (rng.next_double() >= profile.zero_share) {
                const double mean =
                    profile.base_mean * personal * diurnal_factor(minute);
                activity = static_cast<double>(
                    sample_gamma_poisson(rng, mean, profile.dispersion));
            }
            ActigraphRecord record;
            record.timestamp = DateTime{date, minute / 60, minute % 60, 0};
            record.date = date;
            record.activity = activity;
            series.records.push_back(record);
        }
    }
    return series;
}

} // namespace

RawDataset generate_synthetic_cohort(int n_condition, int n_control,
                                     int days_per_participant, std::uint64_t seed) {
    if (n_condition < 1 || n_control < 1 || days_per_participant < 1) {
        throw ValidationError("synthetic cohort counts must all be >= 1");
    }
    RawDataset dataset;
    std::uint64_t stream = 0;
    for (int i = 0; i < n_condition; ++i, ++stream) {
        Rng rng(split_seed(seed, stream));
        const std::string id = "condition_" + std::to_string(i + 1);
        dataset.meta.push_back(
            draw_meta(rng, id, Cohort::condition, days_per_participant));
        dataset.condition.push_back(
            draw_series(rng, id, Cohort::condition, days_per_participant));
    }
    for (int i = 0; i < n_control; ++i, ++stream) {
        Rng rng(split_seed(seed, stream));
        const std::string id = "control_" + std::to_string(i + 1);
        dataset.meta.push_back(
            draw_meta(rng, id, Cohort::control, days_per_participant));
        dataset.control.push_back(
            draw_series(rng, id, Cohort::control, days_per_participant));
    }
    const auto by_id = [](const auto& a, const auto& b) {
        return a.participant_id < b.participant_id;
    };
    std::sort(dataset.condition.begin(), dataset.condition.end(), by_id);
    std::sort(dataset.control.begin(), dataset.control.end(), by_id);
    std::sort(dataset.meta.begin(), dataset.meta.end(), by_id);
    return dataset;
}

} // namespace actiml
