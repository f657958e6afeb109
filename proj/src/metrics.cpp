#include "actiml/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "actiml/errors.hpp"

namespace actiml {

ConfusionMatrix confusion_matrix(std::span<const int> y_true,
                                 std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw ValidationError("confusion_matrix: length mismatch (" +
                              std::to_string(y_true.size()) + " vs " +
                              std::to_string(y_pred.size()) + ")");
    }
    if (y_true.empty()) {
        throw ValidationError("confusion_matrix: empty inputs");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int truth = y_true[i];
        const int pred = y_pred[i];
        if ((truth != 0 && truth != 1) || (pred != 0 && pred != 1)) {
            throw ValidationError("confusion_matrix: labels must be 0 or 1");
        }
        if (truth == 1) {
            (pred == 1 ? cm.tp : cm.fn)++;
        } else {
            (pred == 1 ? cm.fp : cm.tn)++;
        }
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) throw DomainError("accuracy: empty confusion matrix");
    return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
}

PrfScores precision_recall_f1(const ConfusionMatrix& cm, int positive_class) {
    if (positive_class != 0 && positive_class != 1) {
        throw ValidationError("precision_recall_f1: positive_class must be 0 or 1");
    }
    // Relabeling class 0 positive swaps tp<->tn and fp<->fn.
    const std::int64_t tp = positive_class == 1 ? cm.tp : cm.tn;
    const std::int64_t fp = positive_class == 1 ? cm.fp : cm.fn;
    const std::int64_t fn = positive_class == 1 ? cm.fn : cm.fp;

    PrfScores scores;
    if (tp + fp == 0) {
        scores.precision_zero_division = true;
    } else {
        scores.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn == 0) {
        scores.recall_zero_division = true;
    } else {
        scores.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    if (scores.precision + scores.recall == 0.0) {
        scores.f1_zero_division = true;
    } else {
        scores.f1 = 2.0 * scores.precision * scores.recall /
                    (scores.precision + scores.recall);
    }
    return scores;
}

EvaluationReport classification_report(std::span<const int> y_true,
                                       std::span<const int> y_pred) {
    EvaluationReport report;
    report.confusion = confusion_matrix(y_true, y_pred);
    report.accuracy = accuracy(report.confusion);

    const std::array<std::int64_t, 2> supports = {report.confusion.tn +
                                                      report.confusion.fp,
                                                  report.confusion.tp +
                                                      report.confusion.fn};
    for (int cls = 0; cls < 2; ++cls) {
        const PrfScores scores = precision_recall_f1(report.confusion, cls);
        report.per_class[cls] = ClassScores{scores.precision, scores.recall,
                                            scores.f1, supports[cls]};
        const std::string prefix = "class_" + std::to_string(cls) + "_";
        if (scores.precision_zero_division) {
            report.zero_division_flags.push_back(prefix + "precision_zero_division");
        }
        if (scores.recall_zero_division) {
            report.zero_division_flags.push_back(prefix + "recall_zero_division");
        }
        if (scores.f1_zero_division) {
            report.zero_division_flags.push_back(prefix + "f1_zero_division");
        }
    }

    const ClassScores& c0 = report.per_class[0];
    const ClassScores& c1 = report.per_class[1];
    report.macro_avg = AverageScores{(c0.precision + c1.precision) / 2.0,
                                     (c0.recall + c1.recall) / 2.0,
                                     (c0.f1 + c1.f1) / 2.0};
    const double total = static_cast<double>(supports[0] + supports[1]);
    const auto weighted = [&](double v0, double v1) {
        return (static_cast<double>(supports[0]) * v0 +
                static_cast<double>(supports[1]) * v1) /
               total;
    };
    report.weighted_avg = AverageScores{weighted(c0.precision, c1.precision),
                                        weighted(c0.recall, c1.recall),
                                        weighted(c0.f1, c1.f1)};
    return report;
}

nlohmann::ordered_json report_to_json(const EvaluationReport& report) {
    nlohmann::ordered_json doc;
    doc["accuracy"] = report.accuracy;
    nlohmann::ordered_json classes;
    for (int cls = 0; cls < 2; ++cls) {
        const ClassScores& scores = report.per_class[cls];
        classes[std::to_string(cls)] = {{"precision", scores.precision},
                                        {"recall", scores.recall},
                                        {"f1", scores.f1},
                                        {"support", scores.support}};
    }
    doc["classes"] = std::move(classes);
    doc["macro_avg"] = {{"precision", report.macro_avg.precision},
                        {"recall", report.macro_avg.recall},
                        {"f1", report.macro_avg.f1}};
    doc["weighted_avg"] = {{"precision", report.weighted_avg.precision},
                           {"recall", report.weighted_avg.recall},
                           {"f1", report.weighted_avg.f1}};
    doc["flags"] = report.zero_division_flags;
    return doc;
}

EvaluationReport report_from_json(const nlohmann::json& doc) {
    EvaluationReport report;
    try {
        report.accuracy = doc.at("accuracy").get<double>();
        for (int cls = 0; cls < 2; ++cls) {
            const auto& entry = doc.at("classes").at(std::to_string(cls));
            report.per_class[cls] =
                ClassScores{entry.at("precision").get<double>(),
                            entry.at("recall").get<double>(),
                            entry.at("f1").get<double>(),
                            entry.at("support").get<std::int64_t>()};
        }
        const auto& macro = doc.at("macro_avg");
        report.macro_avg = AverageScores{macro.at("precision").get<double>(),
                                         macro.at("recall").get<double>(),
                                         macro.at("f1").get<double>()};
        const auto& weighted = doc.at("weighted_avg");
        report.weighted_avg = AverageScores{weighted.at("precision").get<double>(),
                                            weighted.at("recall").get<double>(),
                                            weighted.at("f1").get<double>()};
        report.zero_division_flags =
            doc.at("flags").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed evaluation report JSON: ") + e.what());
    }
    // Rebuild the confusion counts from per-class recalls and supports.
    const std::int64_t s0 = report.per_class[0].support;
    const std::int64_t s1 = report.per_class[1].support;
    report.confusion.tp =
        std::llround(report.per_class[1].recall * static_cast<double>(s1));
    report.confusion.fn = s1 - report.confusion.tp;
    report.confusion.tn =
        std::llround(report.per_class[0].recall * static_cast<double>(s0));
    report.confusion.fp = s0 - report.confusion.tn;
    return report;
}

std::string render_report_text(const EvaluationReport& report) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof(line), "%14s %9s %9s %9s %9s\n", "", "precision",
                  "recall", "f1-score", "support");
    out << line;
    out << '\n';
    for (int cls = 0; cls < 2; ++cls) {
        const ClassScores& scores = report.per_class[cls];
        std::snprintf(line, sizeof(line), "%14d %9.2f %9.2f %9.2f %9lld\n", cls,
                      scores.precision, scores.recall, scores.f1,
                      static_cast<long long>(scores.support));
        out << line;
    }
    out << '\n';
    const long long total = report.per_class[0].support + report.per_class[1].support;
    std::snprintf(line, sizeof(line), "%14s %9s %9s %9.2f %9lld\n", "accuracy", "",
                  "", report.accuracy, total);
    out << line;
    std::snprintf(line, sizeof(line), "%14s %9.2f %9.2f %9.2f %9lld\n", "macro avg",
                  report.macro_avg.precision, report.macro_avg.recall,
                  report.macro_avg.f1, total);
    out << line;
    std::snprintf(line, sizeof(line), "%14s %9.2f %9.2f %9.2f %9lld\n",
                  "weighted avg", report.weighted_avg.precision,
                  report.weighted_avg.recall, report.weighted_avg.f1, total);
    out << line;
    if (!report.zero_division_flags.empty()) {
        out << '\n' << "flags:";
        for (const auto& flag : report.zero_division_flags) out << ' ' << flag;
        out << '\n';
    }
    return out.str();
}

} // namespace actiml
