#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "actiml/calendar.hpp"

namespace actiml {

enum class Cohort { condition, control };

constexpr int cohort_label(Cohort group) {
    return group == Cohort::condition ? 1 : 0;
}

std::string_view cohort_name(Cohort group);

// One timestamped activity measurement for one participant.
// Invariants: activity >= 0; date equals the calendar date of timestamp.
struct ActigraphRecord {
    DateTime timestamp;
    Date date;
    double activity{0.0};

    bool operator==(const ActigraphRecord&) const = default;
};

// All records of one participant, sorted non-decreasing by timestamp.
struct ParticipantSeries {
    std::string participant_id;
    Cohort group{Cohort::control};
    std::vector<ActigraphRecord> records;

    bool operator==(const ParticipantSeries&) const = default;
};

// Scores-file row. Empty string / nullopt marks a missing cell; values are
// never invented. `matched` is set by load_dataset when a loaded series
// carries the same participant id.
struct ParticipantMeta {
    std::string participant_id;
    std::optional<int> days_measured;
    std::string gender;
    std::string age_group;
    std::string afftype;
    std::string melancholia;
    std::string inpatient_status;
    std::string education_years;
    std::string marital_status;
    std::string employment;
    std::optional<int> madrs_start;
    std::optional<int> madrs_end;
    bool matched{false};

    bool operator==(const ParticipantMeta&) const = default;
};

// Two-cohort dataset plus joined metadata. Participant ids are unique across
// both cohorts; cohort lists and meta are sorted by participant_id.
struct RawDataset {
    std::vector<ParticipantSeries> condition;
    std::vector<ParticipantSeries> control;
    std::vector<ParticipantMeta> meta;
};

// Per-participant CSV layout: header `timestamp,date,activity`, timestamps
// as `YYYY-MM-DD HH:MM:SS`, one row per minute.
ParticipantSeries load_actigraph_file(const std::filesystem::path& path,
                                      std::string participant_id, Cohort group);

// Loads `condition/` and `control/` subdirectories of per-participant CSVs
// plus a `scores.csv`. A missing scores file leaves meta empty with a
// warning on stderr.
RawDataset load_dataset(const std::filesystem::path& root_dir);

// Scores CSV layout:
// number,days,gender,age,afftype,melanch,inpatient,edu,marriage,work,madrs1,madrs2
std::vector<ParticipantMeta> load_scores_file(const std::filesystem::path& path);

void write_actigraph_file(const ParticipantSeries& series,
                          const std::filesystem::path& path);
void write_scores_file(const std::vector<ParticipantMeta>& metas,
                       const std::filesystem::path& path);

// Writes the full dataset in the layout load_dataset expects.
void write_dataset(const RawDataset& dataset, const std::filesystem::path& root_dir);

// Deterministic synthetic cohorts for dataset-free testing. Condition
// participants draw per-minute counts from a zero-inflated gamma-Poisson
// with a lower mean and a higher zero share than controls; 1440 records per
// day. Pure function of its arguments: participant k draws from
// Rng(split_seed(seed, k)), counted condition-first.
RawDataset generate_synthetic_cohort(int n_condition, int n_control,
                                     int days_per_participant, std::uint64_t seed);

} // namespace actiml
