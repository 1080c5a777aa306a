#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kbforge/executor.hpp"
#include "kbforge/kb.hpp"
#include "kbforge/logical_form.hpp"
#include "kbforge/rng.hpp"

namespace kbforge {

enum class Status { Answerable, Unanswerable };
enum class Cause { TypeDrop, RelationDrop, EntityDrop, FactDrop };
enum class Scenario { Iid, PartialZeroShot, FullZeroShot, NotApplicable };

inline constexpr Cause kAllCauses[] = {Cause::TypeDrop, Cause::RelationDrop, Cause::EntityDrop, Cause::FactDrop};

std::string_view to_string(Status s);
std::string_view to_string(Cause c);
std::string_view to_string(Scenario s);
Status status_from_string(std::string_view s);
Cause cause_from_string(std::string_view s);
Scenario scenario_from_string(std::string_view s);

/// The element kind a drop of `cause` starts from.
ElementKind root_kind(Cause c);

/// One question with its ideal and current (degraded) annotations.
struct QuestionRecord {
    std::string qid;
    std::string question;
    LogicalForm ideal_lf;
    AnswerSet ideal_answers;
    std::optional<LogicalForm> current_lf;    // nullopt: NK
    std::optional<AnswerSet> current_answers; // nullopt: NA
    Status status = Status::Answerable;
    /// In the order they were first attributed; front() is the primary cause.
    std::vector<Cause> causes;
    Scenario scenario = Scenario::NotApplicable;

    bool is_nk() const { return !current_lf.has_value(); }
    bool is_na() const { return !current_answers.has_value(); }
    bool has_cause(Cause c) const;

    bool operator==(const QuestionRecord&) const = default;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by sample_candidate when no element of a kind has importance >= 1.
class ExhaustedError : public DataError {
public:
    using DataError::DataError;
};

struct DegradeConfig {
    double target_unanswerable_fraction = 0.33;
    std::map<Cause, double> per_cause_fractions{{Cause::TypeDrop, 0.0825},
                                                {Cause::RelationDrop, 0.0825},
                                                {Cause::EntityDrop, 0.0825},
                                                {Cause::FactDrop, 0.0825}};
    std::uint64_t seed = 0;
    /// Sampling attempts per phase before giving up.
    std::size_t max_steps = 10000;
    /// A sampled drop that would push its phase more than this fraction of the
    /// corpus past the phase target is rejected and another is sampled.
    /// Negative disables the check.
    double overshoot_tolerance = 0.02;

    /// p_u split evenly over the four causes.
    static DegradeConfig equal_split(double target, std::uint64_t seed);
    /// Throws ConfigError when fractions are out of range or do not sum up.
    void check() const;
};

struct DropLogEntry {
    std::size_t step = 0;
    Cause cause = Cause::FactDrop;
    DropCascade cascade;
    std::vector<std::string> newly_unanswerable;
    /// Every question whose record changed, newly unanswerable ones included.
    std::vector<std::string> affected;

    bool operator==(const DropLogEntry&) const = default;
};

struct PhaseReport {
    Cause cause = Cause::FactDrop;
    double target_fraction = 0;
    std::size_t target_count = 0;  // ceil(target_fraction * |Q|)
    std::size_t achieved = 0;      // questions whose primary cause is this phase
    std::size_t drops = 0;
    std::size_t rejected = 0;      // candidates refused by the overshoot check
    bool reached = false;
    std::string warning;
    std::size_t audit_mismatches = 0;
};

/// Evolving (KB, questions) pair during degradation.
///
/// Holds the ideal KB immutably and shares it between copies. Keeps two
/// inverted indices over still-answerable questions: cited element -> questions
/// and support fact -> questions.
class DegradeState {
public:
    /// Checks that every question is answerable on `ideal` and initializes the
    /// current annotations from the ideal ones. Throws DataError otherwise.
    DegradeState(KnowledgeBase ideal, std::vector<QuestionRecord> questions);

    /// Rebuilds a state from persisted artifacts without replaying drops.
    static DegradeState restore(KnowledgeBase ideal, KnowledgeBase degraded, std::vector<QuestionRecord> questions,
                                std::vector<DropLogEntry> log);

    const KnowledgeBase& kb() const { return kb_; }
    const KnowledgeBase& ideal_kb() const { return *ideal_; }
    const std::vector<QuestionRecord>& questions() const { return questions_; }
    std::vector<QuestionRecord>& mutable_questions() { return questions_; }
    const std::vector<DropLogEntry>& drop_log() const { return log_; }
    const std::vector<PhaseReport>& phases() const { return phases_; }
    /// Union of ideal support facts of question `i`.
    const FactSet& ideal_support(std::size_t i) const { return ideal_support_[i]; }

    std::size_t popularity(const ElementRef& g) const { return (*popularity_)(g); }

    /// Still-answerable questions whose current form cites `g` or whose
    /// current support touches `g`.
    std::size_t importance(const ElementRef& g) const;

    /// Droppable elements of `kind` with importance >= 1, sorted.
    std::vector<std::pair<ElementRef, std::size_t>> candidates(ElementKind kind) const;

    /// Samples with weight importance / popularity. Throws ExhaustedError when
    /// no candidate (outside `excluded`) has positive importance.
    ElementRef sample_candidate(ElementKind kind, Rng& rng, const std::set<ElementRef>& excluded = {}) const;

    /// Drops `g` from the KB and relabels every affected question. Returns the
    /// qids that became unanswerable.
    std::vector<std::string> apply_labeled_drop(const ElementRef& g, Cause cause);

    /// Number of questions apply_labeled_drop(g, cause) would make unanswerable.
    std::size_t preview(const ElementRef& g, Cause cause) const;

    /// Re-executes every question from scratch and counts records whose
    /// stored labels, answers or support disagree.
    std::size_t audit() const;

    /// True when the inverted indices equal a from-scratch rebuild.
    bool index_consistent() const;

    std::size_t unanswerable_count() const;
    std::size_t primary_cause_count(Cause c) const;

    void record_phase(PhaseReport report) { phases_.push_back(std::move(report)); }

private:
    DegradeState() = default;

    struct Index {
        std::map<ElementRef, std::set<std::size_t>> cited;
        std::map<Fact, std::set<std::size_t>> support;
        bool operator==(const Index&) const = default;
    };
    Index build_index() const;
    void index_question(std::size_t i);
    void unindex_question(std::size_t i);
    void add_facts_hits(const FactSet& facts, std::set<std::size_t>& out) const;

    std::shared_ptr<const KnowledgeBase> ideal_;
    std::shared_ptr<const PopularityTable> popularity_;
    KnowledgeBase kb_;
    std::vector<QuestionRecord> questions_;
    std::vector<FactSet> ideal_support_;
    std::vector<FactSet> current_support_;
    std::map<ElementRef, std::set<std::size_t>> ideal_cited_;
    std::map<Fact, std::set<std::size_t>> ideal_facts_;
    Index index_;
    std::vector<DropLogEntry> log_;
    std::vector<PhaseReport> phases_;
};

/// Runs Type, Relation, Entity and Fact phases in order until each cause
/// reaches its share of the corpus, or sampling is exhausted.
DegradeState run_degrade(std::vector<QuestionRecord> questions, KnowledgeBase ideal_kb, const DegradeConfig& config);

/// Re-applies a drop log to the ideal inputs. Throws DataError when a logged
/// drop no longer resolves or produces a different cascade.
DegradeState replay(KnowledgeBase ideal_kb, std::vector<QuestionRecord> questions, const std::vector<DropLogEntry>& log);

}  // namespace kbforge
