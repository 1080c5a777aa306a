// Test-only helpers: a brute-force interpreter used as the execution oracle,
// random KB / form generators, and fixture loading.
#pragma once

#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "kbforge/dataset_io.hpp"
#include "kbforge/executor.hpp"
#include "kbforge/kb_io.hpp"
#include "kbforge/logical_form.hpp"
#include "kbforge/rng.hpp"

namespace oracle {

using namespace kbforge;

// Walks parent links upwards from every tag; no KB indices involved.
inline bool is_a(const KnowledgeBase& kb, const std::string& entity, const std::string& type) {
    auto it = kb.entities().find(entity);
    if (it == kb.entities().end()) return false;
    std::vector<std::string> todo(it->second.types.begin(), it->second.types.end());
    std::set<std::string> seen;
    while (!todo.empty()) {
        auto t = todo.back();
        todo.pop_back();
        if (t == type) return true;
        if (!seen.insert(t).second) continue;
        auto ti = kb.types().find(t);
        if (ti != kb.types().end()) todo.insert(todo.end(), ti->second.parents.begin(), ti->second.parents.end());
    }
    return false;
}

inline double num(const Literal& l) { return std::stod(l.value); }

inline bool cmp(Op op, double a, double b) {
    switch (op) {
        case Op::Lt: return a < b;
        case Op::Le: return a <= b;
        case Op::Gt: return a > b;
        case Op::Ge: return a >= b;
        default: return false;
    }
}

/// Set-comprehension semantics, scanning the whole fact set at every node.
/// Only integer literals are supported.
inline AnswerSet eval(const KnowledgeBase& kb, const Expr& e) {
    AnswerSet out;
    switch (e.op) {
        case Op::Entity: out.insert(Term::entity(e.id)); break;
        case Op::Literal: out.insert(Term::of(e.literal)); break;
        case Op::Type:
            for (const auto& [id, _] : kb.entities())
                if (is_a(kb, id, e.id)) out.insert(Term::entity(id));
            break;
        case Op::And: {
            auto a = eval(kb, e.args[0]);
            auto b = eval(kb, e.args[1]);
            for (const auto& t : a)
                if (b.count(t)) out.insert(t);
            break;
        }
        case Op::Join: {
            auto x = eval(kb, e.args[0]);
            for (const auto& f : kb.facts()) {
                if (f.relation != e.relation.id) continue;
                if (e.relation.inverted) {
                    if (x.count(Term::entity(f.subject))) out.insert(f.object);
                } else if (x.count(f.object)) {
                    out.insert(Term::entity(f.subject));
                }
            }
            break;
        }
        case Op::Count: {
            auto x = eval(kb, e.args[0]);
            if (!x.empty()) out.insert(Term::of(Literal{LiteralKind::Integer, std::to_string(x.size())}));
            break;
        }
        case Op::ArgMax:
        case Op::ArgMin: {
            auto x = eval(kb, e.args[0]);
            std::vector<std::pair<Term, double>> best_of;
            for (const auto& t : x) {
                bool have = false;
                double v = 0;
                for (const auto& f : kb.facts()) {
                    if (f.relation != e.relation.id || t.is_literal || f.subject != t.id) continue;
                    double w = num(f.object.literal);
                    if (!have || (e.op == Op::ArgMax ? w > v : w < v)) v = w;
                    have = true;
                }
                if (have) best_of.emplace_back(t, v);
            }
            if (best_of.empty()) break;
            double best = best_of.front().second;
            for (const auto& [t, v] : best_of) best = e.op == Op::ArgMax ? std::max(best, v) : std::min(best, v);
            for (const auto& [t, v] : best_of)
                if (v == best) out.insert(t);
            break;
        }
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
            for (const auto& f : kb.facts())
                if (f.relation == e.relation.id && f.object.is_literal && cmp(e.op, num(f.object.literal), num(e.literal)))
                    out.insert(Term::entity(f.subject));
            break;
    }
    return out;
}

/// Cited elements absent from `kb`, found by walking the tree.
inline bool cites_missing(const KnowledgeBase& kb, const Expr& e) {
    switch (e.op) {
        case Op::Entity:
            if (!kb.entities().count(e.id)) return true;
            break;
        case Op::Type:
            if (!kb.types().count(e.id)) return true;
            break;
        default: break;
    }
    if (!e.relation.id.empty() && !kb.relations().count(e.relation.id)) return true;
    for (const auto& a : e.args)
        if (cites_missing(kb, a)) return true;
    return false;
}

}  // namespace oracle

namespace testkit {

using namespace kbforge;

inline std::filesystem::path fixtures() { return KBFORGE_FIXTURES; }

inline KnowledgeBase toy_kb() { return load_kb(fixtures() / "toy" / "schema.tsv", fixtures() / "toy" / "facts.tsv"); }

inline std::vector<QuestionRecord> load_questions(const std::filesystem::path& dir, const KnowledgeBase& kb) {
    return read_dataset(dir / "questions.jsonl", types_of(kb));
}

inline QuestionRecord question(const std::string& qid, const std::string& sexpr, const KnowledgeBase& kb) {
    QuestionRecord q;
    q.qid = qid;
    q.question = qid;
    q.ideal_lf = parse(sexpr, types_of(kb));
    return q;
}

/// Random KB: up to `max_entities` entities, a small type forest, entity and
/// integer-valued relations.
inline KnowledgeBase random_kb(Rng& rng, std::size_t max_entities = 30) {
    KnowledgeBase kb;
    const std::size_t n_types = 2 + rng.below(4);
    std::vector<std::string> types;
    for (std::size_t i = 0; i < n_types; ++i) {
        std::string id = "t" + std::to_string(i);
        std::set<std::string> parents;
        if (i > 0 && rng.uniform() < 0.5) parents.insert(types[rng.below(i)]);
        kb.add_type(id, parents);
        types.push_back(id);
    }
    const std::size_t n_entities = 3 + rng.below(max_entities - 2);
    std::vector<std::string> entities;
    for (std::size_t i = 0; i < n_entities; ++i) {
        std::string id = "e" + std::to_string(i);
        EntityInfo info;
        info.types.insert(types[rng.below(types.size())]);
        if (rng.uniform() < 0.3) info.types.insert(types[rng.below(types.size())]);
        kb.add_entity(id, info);
        entities.push_back(id);
    }
    const std::size_t n_rel = 2 + rng.below(4);
    for (std::size_t i = 0; i < n_rel; ++i) {
        RelationInfo info;
        info.domain = types[rng.below(types.size())];
        info.range.type = types[rng.below(types.size())];
        std::string id = "r" + std::to_string(i);
        kb.add_relation(id, info);
        const std::size_t n_facts = rng.below(2 * n_entities);
        for (std::size_t k = 0; k < n_facts; ++k)
            kb.add_fact({entities[rng.below(n_entities)], id, Term::entity(entities[rng.below(n_entities)])});
    }
    for (std::size_t i = 0; i < 2; ++i) {
        RelationInfo info;
        info.domain = types[rng.below(types.size())];
        info.range.is_literal = true;
        info.range.literal = LiteralKind::Integer;
        std::string id = "v" + std::to_string(i);
        kb.add_relation(id, info);
        for (const auto& e : entities)
            if (rng.uniform() < 0.5)
                kb.add_fact({e, id, Term::of(make_literal(std::to_string(rng.below(6)), LiteralKind::Integer))});
    }
    return kb;
}

/// Random well-typed form of depth <= max_depth over `kb`.
inline Expr random_form(Rng& rng, const KnowledgeBase& kb, std::size_t max_depth) {
    std::vector<std::string> ents, types, rels, vals;
    for (const auto& [id, _] : kb.entities()) ents.push_back(id);
    for (const auto& [id, _] : kb.types()) types.push_back(id);
    for (const auto& [id, info] : kb.relations()) (info.range.is_literal ? vals : rels).push_back(id);
    auto pick = [&](const std::vector<std::string>& v) { return v[rng.below(v.size())]; };
    auto lit = [&] { return make_literal(std::to_string(rng.below(6)), LiteralKind::Integer); };
    std::function<Expr(std::size_t)> gen = [&](std::size_t d) -> Expr {
        if (d <= 1) {
            switch (rng.below(8)) {
                case 0:
                case 1:
                case 2: return Expr::entity(pick(ents));
                case 3:
                case 4: return Expr::type(pick(types));
                case 5: return Expr::literal_atom(lit());
                default: {
                    static constexpr Op ops[] = {Op::Lt, Op::Le, Op::Gt, Op::Ge};
                    return Expr::compare(ops[rng.below(4)], {pick(vals), false}, lit());
                }
            }
        }
        switch (rng.below(6)) {
            case 0:
            case 1: return Expr::join({pick(rels), rng.uniform() < 0.4}, gen(d - 1));
            case 2: return Expr::join({pick(vals), rng.uniform() < 0.5}, gen(d - 1));
            case 3: return Expr::conj(gen(d - 1), gen(1 + rng.below(d - 1)));
            case 4: return Expr::count(gen(d - 1));
            default: return Expr::arg(rng.uniform() < 0.5 ? Op::ArgMax : Op::ArgMin, gen(d - 1), {pick(vals), false});
        }
    };
    return gen(1 + rng.below(max_depth));
}

}  // namespace testkit
