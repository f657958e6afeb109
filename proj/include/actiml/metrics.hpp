#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace actiml {

// Binary confusion counts with class 1 as "positive".
struct ConfusionMatrix {
    std::int64_t tp{0};
    std::int64_t fp{0};
    std::int64_t tn{0};
    std::int64_t fn{0};

    std::int64_t total() const { return tp + fp + tn + fn; }

    bool operator==(const ConfusionMatrix&) const = default;
};

struct PrfScores {
    double precision{0.0};
    double recall{0.0};
    double f1{0.0};
    bool precision_zero_division{false};
    bool recall_zero_division{false};
    bool f1_zero_division{false};
};

struct ClassScores {
    double precision{0.0};
    double recall{0.0};
    double f1{0.0};
    std::int64_t support{0};

    bool operator==(const ClassScores&) const = default;
};

struct AverageScores {
    double precision{0.0};
    double recall{0.0};
    double f1{0.0};

    bool operator==(const AverageScores&) const = default;
};

struct EvaluationReport {
    double accuracy{0.0};
    ConfusionMatrix confusion;
    std::array<ClassScores, 2> per_class; // index = class id
    AverageScores macro_avg;
    AverageScores weighted_avg;
    std::vector<std::string> zero_division_flags;

    bool operator==(const EvaluationReport&) const = default;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true,
                                 std::span<const int> y_pred);

// (tp + tn) / total.
double accuracy(const ConfusionMatrix& cm);

// Scores for the requested positive class (class 0 is scored by relabeling
// it positive). A 0/0 denominator yields 0 with the matching flag set.
PrfScores precision_recall_f1(const ConfusionMatrix& cm, int positive_class);

EvaluationReport classification_report(std::span<const int> y_true,
                                       std::span<const int> y_pred);

// JSON schema: {accuracy, classes, macro_avg, weighted_avg, flags};
// full precision.
nlohmann::ordered_json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& doc);

// Fixed-width table with 2-decimal rounding.
std::string render_report_text(const EvaluationReport& report);

} // namespace actiml
