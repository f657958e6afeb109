#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "actiml/errors.hpp"
#include "actiml/metrics.hpp"
#include "actiml/rng.hpp"
#include "oracles.hpp"

using namespace actiml;

TEST_CASE("confusion matrix counts the four cells") {
    const std::vector<int> y_true = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    const std::vector<int> y_pred = {1, 1, 1, 0, 0, 0, 0, 0, 0, 1};
    const ConfusionMatrix cm = confusion_matrix(y_true, y_pred);
    CHECK(cm.tp == 3);
    CHECK(cm.fn == 1);
    CHECK(cm.fp == 1);
    CHECK(cm.tn == 5);
    CHECK(cm.total() == 10);
}

TEST_CASE("confusion matrix validates its inputs") {
    const std::vector<int> ones = {1, 1};
    const std::vector<int> one = {1};
    const std::vector<int> bad = {2, 1};
    const std::vector<int> empty;
    CHECK_THROWS_AS(confusion_matrix(ones, one), ValidationError);
    CHECK_THROWS_AS(confusion_matrix(empty, empty), ValidationError);
    CHECK_THROWS_AS(confusion_matrix(bad, ones), ValidationError);
    CHECK_THROWS_AS(confusion_matrix(ones, bad), ValidationError);
}

TEST_CASE("accuracy is the diagonal share") {
    CHECK(accuracy(ConfusionMatrix{3, 1, 5, 1}) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(accuracy(ConfusionMatrix{0, 0, 4, 0}) == 1.0);
    CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), DomainError);
}

TEST_CASE("per-class scores relabel class 0 as positive") {
    const ConfusionMatrix cm{3, 1, 5, 1};

    const PrfScores c1 = precision_recall_f1(cm, 1);
    CHECK(c1.precision == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(c1.recall == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(c1.f1 == doctest::Approx(0.75).epsilon(1e-12));

    const PrfScores c0 = precision_recall_f1(cm, 0);
    CHECK(c0.precision == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(c0.recall == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
    CHECK(c0.f1 == doctest::Approx(5.0 / 6.0).epsilon(1e-12));

    CHECK_THROWS_AS(precision_recall_f1(cm, 2), ValidationError);
}

TEST_CASE("zero denominators produce zero scores and flags") {
    // Everything truly positive, everything predicted negative.
    const std::vector<int> y_true = {1, 1, 1, 1, 1};
    const std::vector<int> y_pred = {0, 0, 0, 0, 0};
    const EvaluationReport report = classification_report(y_true, y_pred);

    CHECK(report.accuracy == 0.0);
    CHECK(report.per_class[1].precision == 0.0);
    CHECK(report.per_class[1].recall == 0.0);
    CHECK(report.per_class[1].f1 == 0.0);
    CHECK(report.per_class[0].precision == 0.0);
    CHECK(report.per_class[0].support == 0);
    CHECK(report.zero_division_flags ==
          std::vector<std::string>{
              "class_0_recall_zero_division", "class_0_f1_zero_division",
              "class_1_precision_zero_division", "class_1_f1_zero_division"});
}

TEST_CASE("report fixture matches hand-worked numbers") {
    const std::vector<int> y_true = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    const std::vector<int> y_pred = {1, 1, 1, 0, 0, 0, 0, 0, 0, 1};
    const EvaluationReport report = classification_report(y_true, y_pred);

    CHECK(report.accuracy == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(report.per_class[1].support == 4);
    CHECK(report.per_class[0].support == 6);
    CHECK(report.macro_avg.precision == doctest::Approx(19.0 / 24.0).epsilon(1e-6));
    CHECK(report.macro_avg.recall == doctest::Approx(19.0 / 24.0).epsilon(1e-6));
    CHECK(report.weighted_avg.precision ==
          doctest::Approx(0.4 * 0.75 + 0.6 * 5.0 / 6.0).epsilon(1e-9));
    CHECK(report.zero_division_flags.empty());
}

TEST_CASE("report agrees exactly with a full recount on every short input") {
    for (int length = 1; length <= 4; ++length) {
        const int combos = 1 << length;
        for (int t = 0; t < combos; ++t) {
            for (int p = 0; p < combos; ++p) {
                std::vector<int> y_true(length);
                std::vector<int> y_pred(length);
                for (int i = 0; i < length; ++i) {
                    y_true[i] = (t >> i) & 1;
                    y_pred[i] = (p >> i) & 1;
                }
                const EvaluationReport got = classification_report(y_true, y_pred);
                const EvaluationReport expected =
                    oracles::recount_report(y_true, y_pred);
                REQUIRE(got == expected);
            }
        }
    }
}

TEST_CASE("report agrees with the recount on random longer inputs") {
    Rng rng(515);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<int> y_true(8);
        std::vector<int> y_pred(8);
        for (int i = 0; i < 8; ++i) {
            y_true[i] = static_cast<int>(rng.next_below(2));
            y_pred[i] = static_cast<int>(rng.next_below(2));
        }
        REQUIRE(classification_report(y_true, y_pred) ==
                oracles::recount_report(y_true, y_pred));
    }
}

TEST_CASE("relabeling both sides swaps the per-class scores") {
    Rng rng(616);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> y_true(12);
        std::vector<int> y_pred(12);
        for (int i = 0; i < 12; ++i) {
            y_true[i] = static_cast<int>(rng.next_below(2));
            y_pred[i] = static_cast<int>(rng.next_below(2));
        }
        std::vector<int> t_flip;
        std::vector<int> p_flip;
        for (const int v : y_true) t_flip.push_back(1 - v);
        for (const int v : y_pred) p_flip.push_back(1 - v);

        const EvaluationReport a = classification_report(y_true, y_pred);
        const EvaluationReport b = classification_report(t_flip, p_flip);
        CHECK(a.accuracy == b.accuracy);
        CHECK(a.per_class[0] == b.per_class[1]);
        CHECK(a.per_class[1] == b.per_class[0]);
        CHECK(a.macro_avg == b.macro_avg);
    }
}

TEST_CASE("weighted recall collapses to accuracy") {
    Rng rng(717);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> y_true(10);
        std::vector<int> y_pred(10);
        for (int i = 0; i < 10; ++i) {
            y_true[i] = static_cast<int>(rng.next_below(2));
            y_pred[i] = static_cast<int>(rng.next_below(2));
        }
        const EvaluationReport report = classification_report(y_true, y_pred);
        CHECK(std::abs(report.weighted_avg.recall - report.accuracy) < 1e-12);
    }
}

TEST_CASE("report json round-trips and keeps its schema") {
    const std::vector<int> y_true = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    const std::vector<int> y_pred = {1, 1, 1, 0, 0, 0, 0, 0, 0, 1};
    const EvaluationReport report = classification_report(y_true, y_pred);

    const nlohmann::ordered_json doc = report_to_json(report);
    CHECK(doc.size() == 5);
    CHECK(doc.contains("accuracy"));
    CHECK(doc.contains("classes"));
    CHECK(doc.contains("macro_avg"));
    CHECK(doc.contains("weighted_avg"));
    CHECK(doc.contains("flags"));
    CHECK(doc["classes"].size() == 2);
    for (const char* cls : {"0", "1"}) {
        CHECK(doc["classes"][cls].size() == 4);
        CHECK(doc["classes"][cls].contains("precision"));
        CHECK(doc["classes"][cls].contains("support"));
    }

    const EvaluationReport back = report_from_json(doc);
    CHECK(back == report);

    // Round trip through text, as the CLI artifacts do.
    const auto reparsed = nlohmann::json::parse(doc.dump(2));
    CHECK(report_from_json(reparsed) == report);
}

TEST_CASE("report json reconstruction also works with flags present") {
    const std::vector<int> y_true = {1, 1, 1};
    const std::vector<int> y_pred = {0, 0, 0};
    const EvaluationReport report = classification_report(y_true, y_pred);
    CHECK(report_from_json(report_to_json(report)) == report);
}

TEST_CASE("malformed report json raises parse errors") {
    CHECK_THROWS_AS(report_from_json(nlohmann::json::object()), ParseError);
    nlohmann::json doc = report_to_json(
        classification_report(std::vector<int>{1, 0}, std::vector<int>{1, 0}));
    doc.erase("macro_avg");
    CHECK_THROWS_AS(report_from_json(doc), ParseError);
}

TEST_CASE("text rendering is fixed-width with two decimals") {
    const std::vector<int> y_true = {1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    const std::vector<int> y_pred = {1, 1, 1, 0, 0, 0, 0, 0, 0, 1};
    const std::string text =
        render_report_text(classification_report(y_true, y_pred));

    CHECK(text.find("precision    recall  f1-score   support") != std::string::npos);
    CHECK(text.find("             1      0.75      0.75      0.75         4") !=
          std::string::npos);
    CHECK(text.find("      accuracy                          0.80        10") !=
          std::string::npos);
    CHECK(text.find("macro avg") != std::string::npos);
    CHECK(text.find("weighted avg") != std::string::npos);
    CHECK(text.find("flags:") == std::string::npos);

    const std::string flagged = render_report_text(
        classification_report(std::vector<int>{1, 1}, std::vector<int>{0, 0}));
    CHECK(flagged.find("flags: class_0_recall_zero_division") != std::string::npos);
}
