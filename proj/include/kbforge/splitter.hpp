#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kbforge/degrader.hpp"

namespace kbforge {

struct SplitConfig {
    double train = 0.7;
    double test = 0.2;
    double dev = 0.1;
    /// Composition of the unanswerable questions on the test side (test+dev).
    double iid_share = 0.5;
    double partial_share = 0.375;
    double full_share = 0.125;
    std::uint64_t seed = 0;

    void check() const;
};

/// Target vs achieved for one quantity of the split.
struct SplitFigure {
    double target = 0;
    double achieved = 0;
};

struct DatasetSplits {
    std::vector<QuestionRecord> train;
    std::vector<QuestionRecord> dev;
    std::vector<QuestionRecord> test;
    /// Dropped schema elements whose questions were moved to the zero-shot pools.
    std::set<ElementRef> zero_shot_elements;
    /// Questions dropped because they cite a zero-shot element but did not fit
    /// the zero-shot quota.
    std::vector<std::string> removed_for_leakage;
    /// Kept questions whose ideal support (not form) touches a zero-shot
    /// element. Reported only.
    std::vector<std::string> path_contained;
    /// Keys: train, test, dev (fractions of kept questions) and iid,
    /// partial_zero_shot, full_zero_shot (shares of test-side unanswerable).
    std::map<std::string, SplitFigure> figures;
    std::vector<std::string> warnings;
};

/// Missing schema elements (types and relations) cited by the ideal form.
std::vector<ElementRef> missing_schema_elements(const QuestionRecord& record, const KnowledgeBase& degraded);

/// Every element cited by ideal forms of unanswerable records in `train`.
std::set<ElementRef> unanswerable_cited(const std::vector<QuestionRecord>& train);

/// Iid when every missing schema element is cited by some unanswerable train
/// question; full zero-shot when every schema element of the ideal form is
/// missing and unseen; partial zero-shot otherwise. Throws DataError for
/// answerable records.
Scenario classify_scenario(const QuestionRecord& record, const std::set<ElementRef>& train_unanswerable_cited,
                           const KnowledgeBase& degraded);

DatasetSplits build_splits(const DegradeState& state, const SplitConfig& config);

// ---------------------------------------------------------------------------
// Statistics

struct LabelCounts {
    std::size_t answerable = 0;
    std::size_t nk = 0;
    std::size_t na = 0;  // unanswerable with a valid form
    bool operator==(const LabelCounts&) const = default;
};

/// Cells of the per-cause table, in column order.
inline constexpr const char* kStatsCells[] = {"type/iid/NK",     "type/partial/NK",     "type/full/NK",
                                              "relation/iid/NK", "relation/partial/NK", "relation/full/NK",
                                              "entity/iid/NA",   "entity/iid/NK",       "fact/iid/NA"};

struct StatsReport {
    /// Split name -> A / NK / NA counts. Splits appear as train, dev, test.
    std::vector<std::pair<std::string, LabelCounts>> labels;
    /// Split name -> cell -> count, for every cell in kStatsCells.
    std::vector<std::pair<std::string, std::map<std::string, std::size_t>>> cells;
    /// Unanswerable questions whose (primary cause, scenario, label) is not a
    /// table cell, by "cause/scenario/label".
    std::map<std::string, std::size_t> outside_table;
};

StatsReport stats(const DatasetSplits& splits);
/// Questions are attributed to their primary (first) cause.
StatsReport stats(const std::vector<std::pair<std::string, const std::vector<QuestionRecord>*>>& splits);

std::string render_stats_text(const StatsReport& report);

}  // namespace kbforge
