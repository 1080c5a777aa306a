#include "kbforge/executor.hpp"

#include <algorithm>

namespace kbforge {

namespace {

using Denotation = std::map<Term, FactSet>;

void merge_into(FactSet& dst, const FactSet& src) { dst.insert(src.begin(), src.end()); }

Literal literal_or_throw(const Term& t, const RelationTerm& r) {
    if (!t.is_literal) throw ExecutionError("relation '" + r.id + "' does not yield literal values");
    return t.literal;
}

std::partial_ordering compare_or_throw(const Literal& a, const Literal& b) {
    try {
        return compare_literals(a, b);
    } catch (const DataError& e) {
        throw ExecutionError(e.what());
    }
}

bool satisfies(Op op, std::partial_ordering c) {
    switch (op) {
        case Op::Lt: return c == std::partial_ordering::less;
        case Op::Le: return c == std::partial_ordering::less || c == std::partial_ordering::equivalent;
        case Op::Gt: return c == std::partial_ordering::greater;
        case Op::Ge: return c == std::partial_ordering::greater || c == std::partial_ordering::equivalent;
        default: return false;
    }
}

class Evaluator {
public:
    explicit Evaluator(const KnowledgeBase& kb) : kb_(kb) {}

    Denotation eval(const Expr& e) const {
        switch (e.op) {
            case Op::Entity: return {{Term::entity(e.id), {}}};
            case Op::Literal: return {{Term::of(e.literal), {}}};
            case Op::Type: {
                Denotation out;
                for (const auto& m : kb_.members(e.id)) out.emplace(Term::entity(m), FactSet{});
                return out;
            }
            case Op::And: return conj(eval(e.args[0]), eval(e.args[1]));
            case Op::Join: return join(e.relation, eval(e.args[0]));
            case Op::Count: {
                Denotation inner = eval(e.args[0]);
                if (inner.empty()) return {};
                FactSet all;
                for (const auto& [_, s] : inner) merge_into(all, s);
                return {{Term::of(make_literal(std::to_string(inner.size()), LiteralKind::Integer)), std::move(all)}};
            }
            case Op::ArgMax:
            case Op::ArgMin: return extremum(e.op, eval(e.args[0]), e.relation);
            case Op::Lt:
            case Op::Le:
            case Op::Gt:
            case Op::Ge: return comparative(e.op, e.relation, e.literal);
        }
        return {};
    }

private:
    static Denotation conj(const Denotation& a, const Denotation& b) {
        Denotation out;
        const Denotation& small = a.size() <= b.size() ? a : b;
        const Denotation& large = a.size() <= b.size() ? b : a;
        for (const auto& [term, support] : small) {
            auto it = large.find(term);
            if (it == large.end()) continue;
            FactSet s = support;
            merge_into(s, it->second);
            out.emplace(term, std::move(s));
        }
        return out;
    }

    Denotation join(const RelationTerm& r, const Denotation& x) const {
        Denotation out;
        auto add = [&](const Term& answer, const Fact& f, const FactSet& inner) {
            FactSet& s = out[answer];
            merge_into(s, inner);
            s.insert(f);
        };
        const FactSet& rel_facts = kb_.facts_of_relation(r.id);
        // Literal inputs can only match as objects, which the entity index
        // does not cover; otherwise probe from the smaller side.
        bool can_probe = true;
        std::size_t entity_side = 0;
        for (const auto& [t, _] : x) {
            if (t.is_literal)
                can_probe = can_probe && r.inverted;
            else
                entity_side += kb_.facts_of_entity(t.id).size();
        }
        if (can_probe && entity_side < rel_facts.size()) {
            for (const auto& [t, inner] : x) {
                if (t.is_literal) continue;
                for (const auto& f : kb_.facts_of_entity(t.id)) {
                    if (f.relation != r.id) continue;
                    if (r.inverted && f.subject == t.id) add(f.object, f, inner);
                    if (!r.inverted && !f.object.is_literal && f.object.id == t.id)
                        add(Term::entity(f.subject), f, inner);
                }
            }
            return out;
        }
        for (const auto& f : rel_facts) {
            if (r.inverted) {
                auto it = x.find(Term::entity(f.subject));
                if (it != x.end()) add(f.object, f, it->second);
            } else {
                auto it = x.find(f.object);
                if (it != x.end()) add(Term::entity(f.subject), f, it->second);
            }
        }
        return out;
    }

    // Values of `r` for `x`, with the facts that carry them.
    std::vector<std::pair<Literal, Fact>> values(const Term& x, const RelationTerm& r) const {
        std::vector<std::pair<Literal, Fact>> out;
        if (x.is_literal) return out;
        for (const auto& f : kb_.facts_of_entity(x.id)) {
            if (f.relation != r.id) continue;
            if (!r.inverted && f.subject == x.id) out.emplace_back(literal_or_throw(f.object, r), f);
            if (r.inverted && !f.object.is_literal && f.object.id == x.id)
                out.emplace_back(literal_or_throw(Term::entity(f.subject), r), f);
        }
        return out;
    }

    Denotation extremum(Op op, const Denotation& x, const RelationTerm& r) const {
        std::optional<Literal> best;
        struct Candidate {
            Term term;
            Literal value;
            FactSet carriers;
        };
        std::vector<Candidate> candidates;
        auto better = [op](const Literal& a, const Literal& b) {
            auto c = compare_or_throw(a, b);
            return op == Op::ArgMax ? c == std::partial_ordering::greater : c == std::partial_ordering::less;
        };
        for (const auto& [term, _] : x) {
            auto vals = values(term, r);
            if (vals.empty()) continue;
            Candidate cand{term, vals.front().first, {}};
            for (const auto& [v, f] : vals)
                if (better(v, cand.value)) cand.value = v;
            for (const auto& [v, f] : vals)
                if (compare_or_throw(v, cand.value) == std::partial_ordering::equivalent) cand.carriers.insert(f);
            if (!best || better(cand.value, *best)) best = cand.value;
            candidates.push_back(std::move(cand));
        }
        Denotation out;
        if (!best) return out;
        for (auto& cand : candidates) {
            if (compare_or_throw(cand.value, *best) != std::partial_ordering::equivalent) continue;
            FactSet s = x.at(cand.term);
            merge_into(s, cand.carriers);
            out.emplace(cand.term, std::move(s));
        }
        return out;
    }

    Denotation comparative(Op op, const RelationTerm& r, const Literal& bound) const {
        Denotation out;
        for (const auto& f : kb_.facts_of_relation(r.id)) {
            const Term& value = r.inverted ? Term::entity(f.subject) : f.object;
            Literal lit = literal_or_throw(value, r);
            if (!satisfies(op, compare_or_throw(lit, bound))) continue;
            Term answer = r.inverted ? f.object : Term::entity(f.subject);
            out[answer].insert(f);
        }
        return out;
    }

    const KnowledgeBase& kb_;
};

}  // namespace

AnswerSet Execution::answers() const {
    AnswerSet out;
    for (const auto& [t, _] : support) out.insert(t);
    return out;
}

FactSet Execution::all_support() const {
    FactSet out;
    for (const auto& [_, s] : support) merge_into(out, s);
    return out;
}

ValidityReport validate(const LogicalForm& lf, const KnowledgeBase& kb) {
    ValidityReport report;
    for (auto& ref : elements(lf))
        if (!kb.has(ref)) report.missing.push_back(std::move(ref));
    report.valid = report.missing.empty();
    return report;
}

Execution execute(const LogicalForm& lf, const KnowledgeBase& kb) {
    auto report = validate(lf, kb);
    if (!report.valid) {
        std::string msg = "invalid logical form, missing:";
        for (const auto& m : report.missing) msg += " " + render_element(m);
        throw ExecutionError(msg);
    }
    Execution exec;
    exec.support = Evaluator(kb).eval(lf);
    if (lf.op == Op::Count) exec.count = exec.empty() ? 0 : std::stoul(exec.support.begin()->first.literal.value);
    return exec;
}

namespace {

BatchResult run_one(const LogicalForm& lf, const KnowledgeBase& kb) {
    BatchResult r;
    try {
        r.execution = execute(lf, kb);
    } catch (const DataError& e) {
        r.error = e.what();
    }
    return r;
}

}  // namespace

std::vector<BatchResult> execute_batch(std::span<const LogicalForm> forms, const KnowledgeBase& kb) {
    std::vector<BatchResult> out(forms.size());
    const auto n = static_cast<std::ptrdiff_t>(forms.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = run_one(forms[i], kb);
    return out;
}

std::vector<BatchResult> execute_batch_serial(std::span<const LogicalForm> forms, const KnowledgeBase& kb) {
    std::vector<BatchResult> out;
    out.reserve(forms.size());
    for (const auto& lf : forms) out.push_back(run_one(lf, kb));
    return out;
}

}  // namespace kbforge
