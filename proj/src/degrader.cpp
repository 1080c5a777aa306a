#include "kbforge/degrader.hpp"

#include <algorithm>
#include <cmath>

namespace kbforge {

std::string_view to_string(Status s) { return s == Status::Answerable ? "answerable" : "unanswerable"; }

std::string_view to_string(Cause c) {
    switch (c) {
        case Cause::TypeDrop: return "type_drop";
        case Cause::RelationDrop: return "relation_drop";
        case Cause::EntityDrop: return "entity_drop";
        case Cause::FactDrop: return "fact_drop";
    }
    return "fact_drop";
}

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::Iid: return "iid";
        case Scenario::PartialZeroShot: return "partial_zero_shot";
        case Scenario::FullZeroShot: return "full_zero_shot";
        case Scenario::NotApplicable: return "none";
    }
    return "none";
}

Status status_from_string(std::string_view s) {
    if (s == "answerable") return Status::Answerable;
    if (s == "unanswerable") return Status::Unanswerable;
    throw DataError("unknown status '" + std::string(s) + "'");
}

Cause cause_from_string(std::string_view s) {
    for (Cause c : kAllCauses)
        if (to_string(c) == s) return c;
    throw DataError("unknown cause '" + std::string(s) + "'");
}

Scenario scenario_from_string(std::string_view s) {
    for (Scenario sc : {Scenario::Iid, Scenario::PartialZeroShot, Scenario::FullZeroShot, Scenario::NotApplicable})
        if (to_string(sc) == s) return sc;
    throw DataError("unknown scenario '" + std::string(s) + "'");
}

ElementKind root_kind(Cause c) {
    switch (c) {
        case Cause::TypeDrop: return ElementKind::Type;
        case Cause::RelationDrop: return ElementKind::Relation;
        case Cause::EntityDrop: return ElementKind::Entity;
        case Cause::FactDrop: return ElementKind::Fact;
    }
    return ElementKind::Fact;
}

bool QuestionRecord::has_cause(Cause c) const { return std::find(causes.begin(), causes.end(), c) != causes.end(); }

DegradeConfig DegradeConfig::equal_split(double target, std::uint64_t seed) {
    DegradeConfig cfg;
    cfg.target_unanswerable_fraction = target;
    for (Cause c : kAllCauses) cfg.per_cause_fractions[c] = target / 4.0;
    cfg.seed = seed;
    return cfg;
}

void DegradeConfig::check() const {
    auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!in_unit(target_unanswerable_fraction)) throw ConfigError("target unanswerable fraction must be in [0,1]");
    double sum = 0;
    for (const auto& [cause, frac] : per_cause_fractions) {
        if (!in_unit(frac)) throw ConfigError("fraction for " + std::string(to_string(cause)) + " must be in [0,1]");
        sum += frac;
    }
    if (std::abs(sum - target_unanswerable_fraction) > 1e-9)
        throw ConfigError("per-cause fractions sum to " + std::to_string(sum) + ", expected " +
                          std::to_string(target_unanswerable_fraction));
    if (!std::isfinite(overshoot_tolerance)) throw ConfigError("overshoot tolerance must be finite");
}

// ---------------------------------------------------------------------------
// DegradeState

namespace {

std::vector<std::size_t> sorted(const std::set<std::size_t>& s) { return {s.begin(), s.end()}; }

}  // namespace

DegradeState::DegradeState(KnowledgeBase ideal, std::vector<QuestionRecord> questions)
    : ideal_(std::make_shared<const KnowledgeBase>(std::move(ideal))),
      popularity_(std::make_shared<const PopularityTable>(*ideal_)),
      kb_(*ideal_),
      questions_(std::move(questions)) {
    std::set<std::string> seen;
    std::vector<LogicalForm> forms;
    forms.reserve(questions_.size());
    for (const auto& q : questions_) {
        if (!seen.insert(q.qid).second) throw DataError("duplicate qid '" + q.qid + "'");
        forms.push_back(q.ideal_lf);
    }
    auto results = execute_batch(forms, *ideal_);
    ideal_support_.resize(questions_.size());
    current_support_.resize(questions_.size());
    for (std::size_t i = 0; i < questions_.size(); ++i) {
        auto& q = questions_[i];
        if (results[i].error) throw DataError("question '" + q.qid + "': " + *results[i].error);
        const Execution& exec = results[i].execution;
        if (exec.empty()) throw DataError("question '" + q.qid + "' has no answer on the ideal KB");
        AnswerSet answers = exec.answers();
        if (!q.ideal_answers.empty() && q.ideal_answers != answers)
            throw DataError("question '" + q.qid + "': stored answers differ from execution on the ideal KB");
        q.ideal_answers = answers;
        q.current_lf = q.ideal_lf;
        q.current_answers = std::move(answers);
        q.status = Status::Answerable;
        q.causes.clear();
        q.scenario = Scenario::NotApplicable;
        ideal_support_[i] = exec.all_support();
        current_support_[i] = ideal_support_[i];
        for (const auto& e : elements(q.ideal_lf)) ideal_cited_[e].insert(i);
        for (const auto& f : ideal_support_[i]) ideal_facts_[f].insert(i);
    }
    index_ = build_index();
}

DegradeState DegradeState::restore(KnowledgeBase ideal, KnowledgeBase degraded, std::vector<QuestionRecord> questions,
                                   std::vector<DropLogEntry> log) {
    DegradeState s;
    s.ideal_ = std::make_shared<const KnowledgeBase>(std::move(ideal));
    s.popularity_ = std::make_shared<const PopularityTable>(*s.ideal_);
    s.kb_ = std::move(degraded);
    s.questions_ = std::move(questions);
    s.log_ = std::move(log);

    std::vector<LogicalForm> ideal_forms;
    for (const auto& q : s.questions_) ideal_forms.push_back(q.ideal_lf);
    auto ideal_runs = execute_batch(ideal_forms, *s.ideal_);
    s.ideal_support_.resize(s.questions_.size());
    s.current_support_.resize(s.questions_.size());
    for (std::size_t i = 0; i < s.questions_.size(); ++i) {
        const auto& q = s.questions_[i];
        if (ideal_runs[i].error) throw DataError("question '" + q.qid + "': " + *ideal_runs[i].error);
        if (ideal_runs[i].execution.answers() != q.ideal_answers)
            throw DataError("question '" + q.qid + "': ideal answers differ from execution on the ideal KB");
        s.ideal_support_[i] = ideal_runs[i].execution.all_support();
        for (const auto& e : elements(q.ideal_lf)) s.ideal_cited_[e].insert(i);
        for (const auto& f : s.ideal_support_[i]) s.ideal_facts_[f].insert(i);
        if (q.status == Status::Answerable) {
            if (!q.current_lf) throw DataError("question '" + q.qid + "' is answerable but labelled NK");
            auto run = execute(*q.current_lf, s.kb_);
            s.current_support_[i] = run.all_support();
        }
    }
    if (auto bad = s.audit(); bad != 0)
        throw DataError(std::to_string(bad) + " question(s) disagree with the degraded KB");
    s.index_ = s.build_index();
    return s;
}

DegradeState::Index DegradeState::build_index() const {
    Index idx;
    for (std::size_t i = 0; i < questions_.size(); ++i) {
        const auto& q = questions_[i];
        if (q.status != Status::Answerable) continue;
        for (const auto& e : elements(*q.current_lf)) idx.cited[e].insert(i);
        for (const auto& f : current_support_[i]) idx.support[f].insert(i);
    }
    return idx;
}

void DegradeState::index_question(std::size_t i) {
    const auto& q = questions_[i];
    if (q.status != Status::Answerable) return;
    for (const auto& e : elements(*q.current_lf)) index_.cited[e].insert(i);
    for (const auto& f : current_support_[i]) index_.support[f].insert(i);
}

void DegradeState::unindex_question(std::size_t i) {
    const auto& q = questions_[i];
    if (q.status != Status::Answerable) return;
    for (const auto& e : elements(*q.current_lf)) {
        auto it = index_.cited.find(e);
        if (it == index_.cited.end()) continue;
        it->second.erase(i);
        if (it->second.empty()) index_.cited.erase(it);
    }
    for (const auto& f : current_support_[i]) {
        auto it = index_.support.find(f);
        if (it == index_.support.end()) continue;
        it->second.erase(i);
        if (it->second.empty()) index_.support.erase(it);
    }
}

bool DegradeState::index_consistent() const { return build_index() == index_; }

void DegradeState::add_facts_hits(const FactSet& facts, std::set<std::size_t>& out) const {
    for (const auto& f : facts) {
        auto it = index_.support.find(f);
        if (it != index_.support.end()) out.insert(it->second.begin(), it->second.end());
    }
}

std::size_t DegradeState::importance(const ElementRef& g) const {
    if (!kb_.has(g)) throw DataError("importance of unknown " + render_element(g));
    std::set<std::size_t> hits;
    if (g.kind != ElementKind::Fact) {
        auto it = index_.cited.find(g);
        if (it != index_.cited.end()) hits = it->second;
    }
    switch (g.kind) {
        case ElementKind::Fact: {
            auto it = index_.support.find(g.fact);
            if (it != index_.support.end()) hits.insert(it->second.begin(), it->second.end());
            break;
        }
        case ElementKind::Entity: add_facts_hits(kb_.facts_of_entity(g.id), hits); break;
        case ElementKind::Relation: add_facts_hits(kb_.facts_of_relation(g.id), hits); break;
        case ElementKind::Type:
            for (const auto& e : kb_.entities_of_type(g.id)) add_facts_hits(kb_.facts_of_entity(e), hits);
            for (const auto& [id, info] : kb_.relations())
                if (info.domain == g.id || (!info.range.is_literal && info.range.type == g.id))
                    add_facts_hits(kb_.facts_of_relation(id), hits);
            break;
    }
    return hits.size();
}

std::vector<std::pair<ElementRef, std::size_t>> DegradeState::candidates(ElementKind kind) const {
    std::set<ElementRef> pool;
    for (const auto& [ref, _] : index_.cited)
        if (ref.kind == kind) pool.insert(ref);
    for (const auto& [f, _] : index_.support) {
        switch (kind) {
            case ElementKind::Fact: pool.insert(ElementRef::of(f)); break;
            case ElementKind::Entity:
                pool.insert(ElementRef::entity(f.subject));
                if (!f.object.is_literal) pool.insert(ElementRef::entity(f.object.id));
                break;
            case ElementKind::Relation: pool.insert(ElementRef::relation(f.relation)); break;
            case ElementKind::Type: {
                auto add_tags = [&](const std::string& e) {
                    auto it = kb_.entities().find(e);
                    if (it == kb_.entities().end()) return;
                    for (const auto& t : it->second.types) pool.insert(ElementRef::type(t));
                };
                add_tags(f.subject);
                if (!f.object.is_literal) add_tags(f.object.id);
                const auto& rel = kb_.relations().at(f.relation);
                pool.insert(ElementRef::type(rel.domain));
                if (!rel.range.is_literal) pool.insert(ElementRef::type(rel.range.type));
                break;
            }
        }
    }
    std::vector<std::pair<ElementRef, std::size_t>> out;
    for (const auto& ref : pool) {
        if (!kb_.has(ref)) continue;
        if (ref.kind == ElementKind::Type && !kb_.children(ref.id).empty()) continue;
        if (auto imp = importance(ref); imp > 0) out.emplace_back(ref, imp);
    }
    return out;
}

ElementRef DegradeState::sample_candidate(ElementKind kind, Rng& rng, const std::set<ElementRef>& excluded) const {
    std::vector<std::pair<ElementRef, double>> weighted;
    double total = 0;
    for (auto& [ref, imp] : candidates(kind)) {
        if (excluded.count(ref)) continue;
        double w = static_cast<double>(imp) / static_cast<double>(std::max<std::size_t>(1, popularity(ref)));
        total += w;
        weighted.emplace_back(std::move(ref), w);
    }
    if (weighted.empty())
        throw ExhaustedError("no " + std::string(to_string(kind)) + " with positive importance remains");
    double u = rng.uniform() * total;
    for (auto& [ref, w] : weighted) {
        if (u < w) return ref;
        u -= w;
    }
    return weighted.back().first;
}

std::vector<std::string> DegradeState::apply_labeled_drop(const ElementRef& g, Cause cause) {
    if (root_kind(cause) != g.kind)
        throw DataError(std::string(to_string(cause)) + " cannot start from a " + std::string(to_string(g.kind)));

    // Entities whose type membership changes: removed ones, and for a type
    // drop also those that only lose the tag. Forms citing any of their
    // (ancestor) types must be re-executed.
    DropCascade plan = kb_.plan_drop(g);
    std::set<std::string> retyped(plan.removed_entities.begin(), plan.removed_entities.end());
    if (g.kind == ElementKind::Type) {
        const auto& tagged = kb_.entities_of_type(g.id);
        retyped.insert(tagged.begin(), tagged.end());
    }
    std::set<std::string> touched_types;
    for (const auto& e : retyped)
        for (const auto& t : kb_.entities().at(e).types) {
            auto up = kb_.ancestors_and_self(t);
            touched_types.insert(up.begin(), up.end());
        }

    DropCascade cascade = kb_.apply_drop(g);

    std::set<ElementRef> removed;
    for (const auto& t : cascade.removed_types) removed.insert(ElementRef::type(t));
    for (const auto& r : cascade.removed_relations) removed.insert(ElementRef::relation(r));
    for (const auto& e : cascade.removed_entities) removed.insert(ElementRef::entity(e));
    const FactSet removed_facts(cascade.removed_facts.begin(), cascade.removed_facts.end());

    std::set<std::size_t> lf_hits, rerun;
    for (const auto& ref : removed) {
        auto it = index_.cited.find(ref);
        if (it != index_.cited.end()) lf_hits.insert(it->second.begin(), it->second.end());
    }
    for (const auto& f : removed_facts) {
        auto it = index_.support.find(f);
        if (it != index_.support.end()) rerun.insert(it->second.begin(), it->second.end());
    }
    for (const auto& t : touched_types) {
        auto it = index_.cited.find(ElementRef::type(t));
        if (it != index_.cited.end()) rerun.insert(it->second.begin(), it->second.end());
    }
    for (auto i : lf_hits) rerun.erase(i);

    std::set<std::size_t> newly, affected;
    auto mark_unanswerable = [&](std::size_t i, bool invalid_form) {
        unindex_question(i);
        auto& q = questions_[i];
        if (invalid_form) q.current_lf.reset();
        q.current_answers.reset();
        q.status = Status::Unanswerable;
        if (!q.has_cause(cause)) q.causes.push_back(cause);
        current_support_[i].clear();
        newly.insert(i);
        affected.insert(i);
    };

    for (auto i : lf_hits) mark_unanswerable(i, true);

    // Re-execution of support-only hits fans out over the now immutable KB.
    auto to_run = sorted(rerun);
    std::vector<LogicalForm> forms;
    forms.reserve(to_run.size());
    for (auto i : to_run) forms.push_back(*questions_[i].current_lf);
    auto results = execute_batch(forms, kb_);
    for (std::size_t k = 0; k < to_run.size(); ++k) {
        auto i = to_run[k];
        if (results[k].error) throw DataError("re-executing '" + questions_[i].qid + "': " + *results[k].error);
        const Execution& exec = results[k].execution;
        if (exec.empty()) {
            mark_unanswerable(i, false);
            continue;
        }
        AnswerSet answers = exec.answers();
        FactSet support = exec.all_support();
        if (answers == *questions_[i].current_answers && support == current_support_[i]) continue;
        unindex_question(i);
        questions_[i].current_answers = std::move(answers);
        current_support_[i] = std::move(support);
        index_question(i);
        affected.insert(i);
    }

    // Questions that were already unanswerable accumulate the cause when the
    // cascade touches their ideal form or ideal support.
    std::set<std::size_t> earlier;
    for (const auto& ref : removed) {
        auto it = ideal_cited_.find(ref);
        if (it != ideal_cited_.end()) earlier.insert(it->second.begin(), it->second.end());
    }
    for (const auto& f : removed_facts) {
        auto it = ideal_facts_.find(f);
        if (it != ideal_facts_.end()) earlier.insert(it->second.begin(), it->second.end());
    }
    for (auto i : earlier) {
        auto& q = questions_[i];
        if (q.status != Status::Unanswerable || newly.count(i)) continue;
        bool changed = false;
        if (!q.has_cause(cause)) {
            q.causes.push_back(cause);
            changed = true;
        }
        if (!q.is_nk()) {
            auto cited = elements(q.ideal_lf);
            bool hit = std::any_of(cited.begin(), cited.end(), [&](const ElementRef& r) { return removed.count(r); });
            if (hit) {
                q.current_lf.reset();
                changed = true;
            }
        }
        if (changed) affected.insert(i);
    }

    DropLogEntry entry;
    entry.step = log_.size() + 1;
    entry.cause = cause;
    entry.cascade = std::move(cascade);
    for (auto i : newly) entry.newly_unanswerable.push_back(questions_[i].qid);
    for (auto i : affected) entry.affected.push_back(questions_[i].qid);
    log_.push_back(entry);
    return entry.newly_unanswerable;
}

std::size_t DegradeState::preview(const ElementRef& g, Cause cause) const {
    DegradeState trial = *this;
    return trial.apply_labeled_drop(g, cause).size();
}

std::size_t DegradeState::audit() const {
    std::vector<LogicalForm> forms;
    std::vector<std::size_t> valid_idx;
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < questions_.size(); ++i) {
        const auto& q = questions_[i];
        bool valid = validate(q.ideal_lf, kb_).valid;
        if (q.is_nk() == valid) {
            ++mismatches;
            continue;
        }
        if (q.is_nk() && !q.is_na()) {
            ++mismatches;
            continue;
        }
        if (q.status == Status::Answerable && (!q.current_lf || *q.current_lf != q.ideal_lf || q.is_na())) {
            ++mismatches;
            continue;
        }
        if ((q.status == Status::Unanswerable) == q.causes.empty()) {
            ++mismatches;
            continue;
        }
        if (valid) {
            forms.push_back(q.ideal_lf);
            valid_idx.push_back(i);
        }
    }
    auto results = execute_batch(forms, kb_);
    for (std::size_t k = 0; k < valid_idx.size(); ++k) {
        const auto& q = questions_[valid_idx[k]];
        const auto& r = results[k];
        if (r.error) {
            ++mismatches;
            continue;
        }
        if (r.execution.empty()) {
            if (q.status != Status::Unanswerable || !q.is_na()) ++mismatches;
        } else if (q.status != Status::Answerable || *q.current_answers != r.execution.answers() ||
                   current_support_[valid_idx[k]] != r.execution.all_support()) {
            ++mismatches;
        }
    }
    return mismatches;
}

std::size_t DegradeState::unanswerable_count() const {
    return static_cast<std::size_t>(std::count_if(questions_.begin(), questions_.end(), [](const QuestionRecord& q) {
        return q.status == Status::Unanswerable;
    }));
}

std::size_t DegradeState::primary_cause_count(Cause c) const {
    return static_cast<std::size_t>(std::count_if(questions_.begin(), questions_.end(), [c](const QuestionRecord& q) {
        return !q.causes.empty() && q.causes.front() == c;
    }));
}

// ---------------------------------------------------------------------------

DegradeState run_degrade(std::vector<QuestionRecord> questions, KnowledgeBase ideal_kb, const DegradeConfig& config) {
    config.check();
    DegradeState state(std::move(ideal_kb), std::move(questions));
    Rng rng(derive_seed(config.seed, "degrade"));
    const double n = static_cast<double>(state.questions().size());
    double cumulative_target = 0;

    for (Cause cause : kAllCauses) {
        PhaseReport rep;
        rep.cause = cause;
        auto frac = config.per_cause_fractions.find(cause);
        rep.target_fraction = frac == config.per_cause_fractions.end() ? 0.0 : frac->second;
        const double target = rep.target_fraction * n;
        rep.target_count = static_cast<std::size_t>(std::ceil(target - 1e-9));
        cumulative_target += target;
        const double ceiling = target + config.overshoot_tolerance * n;
        // Overshoot of earlier phases eats into this one's allowance.
        const double total_ceiling = cumulative_target + config.overshoot_tolerance * n;

        std::set<ElementRef> rejected;
        std::size_t attempts = 0;
        while (state.primary_cause_count(cause) < rep.target_count) {
            if (attempts++ >= config.max_steps) {
                rep.warning = "step limit reached";
                break;
            }
            ElementRef g;
            try {
                g = state.sample_candidate(root_kind(cause), rng, rejected);
            } catch (const ExhaustedError& e) {
                rep.warning = rejected.empty() ? e.what() : "every remaining candidate overshoots the target";
                break;
            }
            DegradeState trial = state;
            trial.apply_labeled_drop(g, cause);
            if (config.overshoot_tolerance >= 0 &&
                (static_cast<double>(trial.primary_cause_count(cause)) > ceiling + 1e-9 ||
                 static_cast<double>(trial.unanswerable_count()) > total_ceiling + 1e-9)) {
                rejected.insert(g);
                ++rep.rejected;
                continue;
            }
            state = std::move(trial);
            ++rep.drops;
        }
        rep.achieved = state.primary_cause_count(cause);
        rep.reached = rep.achieved >= rep.target_count;
        rep.audit_mismatches = state.audit();
        state.record_phase(std::move(rep));
    }
    return state;
}

DegradeState replay(KnowledgeBase ideal_kb, std::vector<QuestionRecord> questions, const std::vector<DropLogEntry>& log) {
    DegradeState state(std::move(ideal_kb), std::move(questions));
    for (const auto& entry : log) {
        state.apply_labeled_drop(entry.cascade.root, entry.cause);
        const auto& got = state.drop_log().back();
        if (got.cascade != entry.cascade || got.newly_unanswerable != entry.newly_unanswerable)
            throw DataError("replay diverged at step " + std::to_string(entry.step));
    }
    return state;
}

}  // namespace kbforge
