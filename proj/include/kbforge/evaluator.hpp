#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kbforge/degrader.hpp"

namespace kbforge {

/// A system output for one question. nullopt form is NK; nullopt answers NA.
struct Prediction {
    std::string qid;
    std::optional<std::string> lf;
    std::optional<AnswerSet> answers;
    std::optional<double> entity_score;
    std::optional<double> lf_score;

    bool operator==(const Prediction&) const = default;
};

struct Thresholds {
    double entity = -std::numeric_limits<double>::infinity();
    double lf = -std::numeric_limits<double>::infinity();
    bool operator==(const Thresholds&) const = default;
};

struct PRF {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

/// NA is a label of its own: NA vs NA scores 1, NA vs a set scores 0.
PRF answer_prf(const std::optional<AnswerSet>& pred, const std::optional<AnswerSet>& gold);

/// F1 of the best precision and best recall against either gold.
double lenient_f1(const std::optional<AnswerSet>& pred, const std::optional<AnswerSet>& gold_degraded,
                  const std::optional<AnswerSet>& gold_ideal);

struct EmResult {
    int value = 0;
    bool unparseable = false;
};

/// Exact match after canonical re-rendering. An unparseable prediction scores
/// 0 and is flagged.
EmResult em(const std::optional<std::string>& pred_lf, const std::optional<LogicalForm>& gold_lf);
EmResult em(const std::optional<std::string>& pred_lf, const std::optional<std::string>& gold_lf);

/// Forces NK/NA when a present score is strictly below its threshold.
Prediction apply_thresholds(Prediction pred, const Thresholds& t);
bool forced_by(const Prediction& pred, const Thresholds& t);

enum class Objective { EM, F1R };

std::string_view to_string(Objective o);
Objective objective_from_string(std::string_view s);

/// Mean objective (0..1) of `preds` after thresholding. Predictions are
/// matched to gold by qid; missing ones count as NK/NA.
double objective_value(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                       const Thresholds& t, Objective objective);

/// Searches {-inf}, every observed score and one point above the highest
/// score for each threshold. Exhaustive over the joint grid when it is small,
/// coordinate ascent otherwise. Ties go to the smaller threshold pair. Throws DataError when nothing is scored.
Thresholds tune_thresholds(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                           Objective objective);

struct EvalRow {
    std::string qid;
    Status status = Status::Answerable;
    Scenario scenario = Scenario::NotApplicable;
    std::optional<Cause> cause;  // primary
    int em = 0;
    double precision = 0;
    double recall = 0;
    double f1_regular = 0;
    double f1_lenient = 0;
    bool forced = false;       // thresholds turned it into NK/NA
    bool missing = false;      // no prediction for this qid
    bool unparseable = false;  // predicted form did not parse

    bool operator==(const EvalRow&) const = default;
};

/// Means in percent. Empty groups have count 0 and zero means.
struct Aggregate {
    std::size_t count = 0;
    double em = 0;
    double f1_regular = 0;
    double f1_lenient = 0;

    bool operator==(const Aggregate&) const = default;
};

struct EvalReport {
    /// Gold order.
    std::vector<EvalRow> rows;
    /// all, answerable, unanswerable, iid, partial_zero_shot, full_zero_shot
    /// (the scenario groups hold unanswerable questions only), then one group
    /// per primary cause.
    std::vector<std::pair<std::string, Aggregate>> groups;
    std::optional<Thresholds> thresholds;
    std::size_t missing = 0;
    std::size_t unparseable = 0;
    std::size_t forced = 0;

    const Aggregate& group(std::string_view name) const;
};

/// Throws DataError on duplicate gold or prediction qids and on predictions
/// for unknown qids.
EvalReport evaluate(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                    const std::optional<Thresholds>& thresholds = std::nullopt);
/// Single-threaded reference for evaluate.
EvalReport evaluate_serial(const std::vector<Prediction>& preds, const std::vector<QuestionRecord>& gold,
                           const std::optional<Thresholds>& thresholds = std::nullopt);

std::string render_report_text(const EvalReport& report);

}  // namespace kbforge
