#include "kbforge/kb.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <tuple>

namespace kbforge {

namespace {

struct DateParts {
    long year = 0;
    int month = 0;
    int day = 0;
    auto operator<=>(const DateParts&) const = default;
};

std::optional<DateParts> parse_date(std::string_view s) {
    DateParts d;
    bool negative = false;
    if (!s.empty() && s.front() == '-') {
        negative = true;
        s.remove_prefix(1);
    }
    auto take = [&](std::size_t width_min, std::size_t width_max, long& out) {
        std::size_t n = 0;
        while (n < s.size() && s[n] >= '0' && s[n] <= '9') ++n;
        if (n < width_min || n > width_max) return false;
        std::from_chars(s.data(), s.data() + n, out);
        s.remove_prefix(n);
        return true;
    };
    long year = 0, month = 0, day = 0;
    if (!take(4, 4, year)) return std::nullopt;
    d.year = negative ? -year : year;
    if (!s.empty()) {
        if (s.front() != '-') return std::nullopt;
        s.remove_prefix(1);
        if (!take(2, 2, month) || month < 1 || month > 12) return std::nullopt;
        d.month = static_cast<int>(month);
        if (!s.empty()) {
            if (s.front() != '-') return std::nullopt;
            s.remove_prefix(1);
            if (!take(2, 2, day) || day < 1 || day > 31) return std::nullopt;
            d.day = static_cast<int>(day);
        }
    }
    if (!s.empty()) return std::nullopt;
    return d;
}

double as_double(const Literal& lit) {
    double v = 0;
    std::from_chars(lit.value.data(), lit.value.data() + lit.value.size(), v);
    return v;
}

bool is_numeric(LiteralKind k) { return k == LiteralKind::Integer || k == LiteralKind::Float; }

const FactSet kNoFacts;
const std::set<std::string> kNoEntities;

}  // namespace

std::string_view to_string(LiteralKind kind) {
    switch (kind) {
        case LiteralKind::Integer: return "integer";
        case LiteralKind::Float: return "float";
        case LiteralKind::Date: return "date";
        case LiteralKind::String: return "string";
    }
    return "string";
}

std::optional<LiteralKind> literal_kind_from_string(std::string_view name) {
    if (name.starts_with("xsd:")) name.remove_prefix(4);
    if (name == "integer" || name == "int") return LiteralKind::Integer;
    if (name == "float" || name == "double") return LiteralKind::Float;
    if (name == "date" || name == "dateTime" || name == "gYear") return LiteralKind::Date;
    if (name == "string") return LiteralKind::String;
    return std::nullopt;
}

Literal make_literal(std::string_view value, LiteralKind kind) {
    Literal lit{kind, std::string(value)};
    switch (kind) {
        case LiteralKind::Integer: {
            std::string_view digits = value;
            if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
            long long v = 0;
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
            if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty())
                throw DataError("malformed integer literal '" + std::string(value) + "'");
            lit.value = std::to_string(v);
            break;
        }
        case LiteralKind::Float: {
            std::string_view digits = value;
            if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
            double v = 0;
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
            if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty() || !std::isfinite(v))
                throw DataError("malformed float literal '" + std::string(value) + "'");
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof buf, v);
            lit.value.assign(buf, res.ptr);
            break;
        }
        case LiteralKind::Date:
            if (!parse_date(value)) throw DataError("malformed date literal '" + std::string(value) + "'");
            break;
        case LiteralKind::String:
            if (value.find_first_of("\t\n\r") != std::string_view::npos)
                throw DataError("string literal contains a tab or newline");
            break;
    }
    return lit;
}

std::string render_literal(const Literal& lit) {
    std::string out = "\"";
    for (char c : lit.value) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out += "\"^^";
    out += to_string(lit.kind);
    return out;
}

std::optional<Literal> parse_literal(std::string_view text) {
    if (text.empty() || text.front() != '"') return std::nullopt;
    std::string value;
    std::size_t i = 1;
    bool closed = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\\') {
            if (i + 1 >= text.size()) break;
            value.push_back(text[++i]);
        } else if (c == '"') {
            closed = true;
            ++i;
            break;
        } else {
            value.push_back(c);
        }
    }
    if (!closed) throw DataError("unterminated literal " + std::string(text));
    std::string_view rest = text.substr(i);
    if (!rest.starts_with("^^")) throw DataError("literal without ^^kind: " + std::string(text));
    auto kind = literal_kind_from_string(rest.substr(2));
    if (!kind) throw DataError("unknown literal kind in " + std::string(text));
    return make_literal(value, *kind);
}

std::partial_ordering compare_literals(const Literal& a, const Literal& b) {
    if (is_numeric(a.kind) && is_numeric(b.kind)) {
        if (a.kind == LiteralKind::Integer && b.kind == LiteralKind::Integer)
            return std::stoll(a.value) <=> std::stoll(b.value);
        return as_double(a) <=> as_double(b);
    }
    if (a.kind == LiteralKind::Date && b.kind == LiteralKind::Date) return *parse_date(a.value) <=> *parse_date(b.value);
    throw DataError("cannot compare " + render_literal(a) + " with " + render_literal(b));
}

std::string render_term(const Term& term) { return term.is_literal ? render_literal(term.literal) : term.id; }

Term parse_term(std::string_view text) {
    if (auto lit = parse_literal(text)) return Term::of(std::move(*lit));
    if (text.empty()) throw DataError("empty term");
    return Term::entity(std::string(text));
}

std::string render_fact(const Fact& fact) {
    return "(" + fact.subject + ", " + fact.relation + ", " + render_term(fact.object) + ")";
}

std::string_view to_string(ElementKind kind) {
    switch (kind) {
        case ElementKind::Type: return "type";
        case ElementKind::Relation: return "relation";
        case ElementKind::Entity: return "entity";
        case ElementKind::Fact: return "fact";
    }
    return "entity";
}

std::string render_element(const ElementRef& ref) {
    std::string out(to_string(ref.kind));
    out += ':';
    out += ref.kind == ElementKind::Fact ? render_fact(ref.fact) : ref.id;
    return out;
}

// ---------------------------------------------------------------------------
// KnowledgeBase

void KnowledgeBase::add_type(const std::string& id, std::set<std::string> parents) {
    if (!types_.emplace(id, TypeInfo{std::move(parents)}).second) throw DataError("duplicate type '" + id + "'");
}

void KnowledgeBase::add_relation(const std::string& id, RelationInfo info) {
    if (!relations_.emplace(id, std::move(info)).second) throw DataError("duplicate relation '" + id + "'");
}

void KnowledgeBase::add_entity(const std::string& id, EntityInfo info) {
    if (info.types.empty()) throw DataError("entity '" + id + "' has no type");
    auto [it, inserted] = entities_.emplace(id, std::move(info));
    if (!inserted) throw DataError("duplicate entity '" + id + "'");
    for (const auto& t : it->second.types) index_.by_type[t].insert(id);
}

void KnowledgeBase::add_fact(Fact fact) {
    if (facts_.insert(fact).second) index_fact(fact);
}

void KnowledgeBase::index_fact(const Fact& f) {
    index_.by_entity[f.subject].insert(f);
    if (!f.object.is_literal) index_.by_entity[f.object.id].insert(f);
    index_.by_relation[f.relation].insert(f);
}

void KnowledgeBase::unindex_fact(const Fact& f) {
    auto erase_from = [&f](std::map<std::string, FactSet>& index, const std::string& key) {
        auto it = index.find(key);
        if (it == index.end()) return;
        it->second.erase(f);
        if (it->second.empty()) index.erase(it);
    };
    erase_from(index_.by_entity, f.subject);
    if (!f.object.is_literal) erase_from(index_.by_entity, f.object.id);
    erase_from(index_.by_relation, f.relation);
}

std::vector<std::string> KnowledgeBase::problems() const {
    std::vector<std::string> out;
    for (const auto& [id, info] : types_)
        for (const auto& p : info.parents)
            if (!types_.count(p)) out.push_back("type '" + id + "' has undeclared parent '" + p + "'");

    // Cycle detection over the parent graph.
    std::map<std::string, int> colour;
    std::function<bool(const std::string&)> visit = [&](const std::string& t) {
        int& c = colour[t];
        if (c == 1) return true;
        if (c == 2) return false;
        c = 1;
        auto it = types_.find(t);
        if (it != types_.end())
            for (const auto& p : it->second.parents)
                if (types_.count(p) && visit(p)) return true;
        colour[t] = 2;
        return false;
    };
    for (const auto& [id, info] : types_) {
        if (visit(id)) {
            out.push_back("cyclic type hierarchy through '" + id + "'");
            break;
        }
    }

    for (const auto& [id, info] : relations_) {
        if (!types_.count(info.domain))
            out.push_back("relation '" + id + "' has undeclared domain '" + info.domain + "'");
        if (!info.range.is_literal && !types_.count(info.range.type))
            out.push_back("relation '" + id + "' has undeclared range '" + info.range.type + "'");
    }
    for (const auto& [id, info] : entities_) {
        if (info.types.empty()) out.push_back("entity '" + id + "' has no type");
        for (const auto& t : info.types)
            if (!types_.count(t)) out.push_back("entity '" + id + "' tagged with undeclared type '" + t + "'");
    }
    for (const auto& f : facts_) {
        auto rel = relations_.find(f.relation);
        if (rel == relations_.end()) {
            out.push_back("fact " + render_fact(f) + " uses undeclared relation '" + f.relation + "'");
            continue;
        }
        if (!entities_.count(f.subject))
            out.push_back("fact " + render_fact(f) + " has undeclared subject '" + f.subject + "'");
        if (f.object.is_literal) {
            if (!rel->second.range.is_literal)
                out.push_back("fact " + render_fact(f) + " has a literal object but relation range is a type");
            else if (rel->second.range.literal != f.object.literal.kind)
                out.push_back("fact " + render_fact(f) + " literal kind does not match relation range");
        } else {
            if (rel->second.range.is_literal)
                out.push_back("fact " + render_fact(f) + " has an entity object but relation range is a literal");
            else if (!entities_.count(f.object.id))
                out.push_back("fact " + render_fact(f) + " has undeclared object '" + f.object.id + "'");
        }
    }
    return out;
}

void KnowledgeBase::check() const {
    auto found = problems();
    if (!found.empty()) throw DataError(found.front());
}

bool KnowledgeBase::has(const ElementRef& ref) const {
    switch (ref.kind) {
        case ElementKind::Type: return has_type(ref.id);
        case ElementKind::Relation: return has_relation(ref.id);
        case ElementKind::Entity: return has_entity(ref.id);
        case ElementKind::Fact: return has_fact(ref.fact);
    }
    return false;
}

const FactSet& KnowledgeBase::facts_of_entity(const std::string& entity) const {
    auto it = index_.by_entity.find(entity);
    return it == index_.by_entity.end() ? kNoFacts : it->second;
}

const FactSet& KnowledgeBase::facts_of_relation(const std::string& relation) const {
    auto it = index_.by_relation.find(relation);
    return it == index_.by_relation.end() ? kNoFacts : it->second;
}

const std::set<std::string>& KnowledgeBase::entities_of_type(const std::string& type) const {
    auto it = index_.by_type.find(type);
    return it == index_.by_type.end() ? kNoEntities : it->second;
}

std::set<std::string> KnowledgeBase::children(const std::string& type) const {
    std::set<std::string> out;
    for (const auto& [id, info] : types_)
        if (info.parents.count(type)) out.insert(id);
    return out;
}

std::set<std::string> KnowledgeBase::descendants_and_self(const std::string& type) const {
    std::set<std::string> out{type};
    std::vector<std::string> stack{type};
    while (!stack.empty()) {
        auto t = std::move(stack.back());
        stack.pop_back();
        for (const auto& c : children(t))
            if (out.insert(c).second) stack.push_back(c);
    }
    return out;
}

std::set<std::string> KnowledgeBase::ancestors_and_self(const std::string& type) const {
    std::set<std::string> out{type};
    std::vector<std::string> stack{type};
    while (!stack.empty()) {
        auto t = std::move(stack.back());
        stack.pop_back();
        auto it = types_.find(t);
        if (it == types_.end()) continue;
        for (const auto& p : it->second.parents)
            if (out.insert(p).second) stack.push_back(p);
    }
    return out;
}

std::set<std::string> KnowledgeBase::members(const std::string& type) const {
    std::set<std::string> out;
    for (const auto& t : descendants_and_self(type)) {
        const auto& tagged = entities_of_type(t);
        out.insert(tagged.begin(), tagged.end());
    }
    return out;
}

DropCascade KnowledgeBase::plan_drop(const ElementRef& root) const {
    if (!has(root)) throw DataError("cannot drop unknown " + render_element(root));
    DropCascade cascade{root, {}, {}, {}, {}};
    switch (root.kind) {
        case ElementKind::Fact:
            cascade.removed_facts.push_back(root.fact);
            break;
        case ElementKind::Entity: {
            const auto& fs = facts_of_entity(root.id);
            cascade.removed_facts.assign(fs.begin(), fs.end());
            cascade.removed_entities.push_back(root.id);
            break;
        }
        case ElementKind::Relation: {
            const auto& fs = facts_of_relation(root.id);
            cascade.removed_facts.assign(fs.begin(), fs.end());
            cascade.removed_relations.push_back(root.id);
            break;
        }
        case ElementKind::Type: {
            auto kids = children(root.id);
            if (!kids.empty())
                throw DataError("cannot drop type '" + root.id + "': subtype '" + *kids.begin() + "' still exists");
            FactSet facts;
            for (const auto& [id, info] : relations_) {
                bool touches = info.domain == root.id || (!info.range.is_literal && info.range.type == root.id);
                if (!touches) continue;
                cascade.removed_relations.push_back(id);
                const auto& fs = facts_of_relation(id);
                facts.insert(fs.begin(), fs.end());
            }
            for (const auto& e : entities_of_type(root.id)) {
                const auto& tags = entities_.at(e).types;
                if (tags.size() != 1) continue;
                cascade.removed_entities.push_back(e);
                const auto& fs = facts_of_entity(e);
                facts.insert(fs.begin(), fs.end());
            }
            cascade.removed_facts.assign(facts.begin(), facts.end());
            cascade.removed_types.push_back(root.id);
            break;
        }
    }
    return cascade;
}

void KnowledgeBase::remove_fact(const Fact& f) {
    if (facts_.erase(f)) unindex_fact(f);
}

void KnowledgeBase::remove_entity(const std::string& id) {
    auto it = entities_.find(id);
    if (it == entities_.end()) return;
    FactSet touching = facts_of_entity(id);
    for (const auto& f : touching) remove_fact(f);
    for (const auto& t : it->second.types) {
        auto idx = index_.by_type.find(t);
        if (idx == index_.by_type.end()) continue;
        idx->second.erase(id);
        if (idx->second.empty()) index_.by_type.erase(idx);
    }
    entities_.erase(it);
}

void KnowledgeBase::remove_relation(const std::string& id) {
    FactSet facts = facts_of_relation(id);
    for (const auto& f : facts) remove_fact(f);
    relations_.erase(id);
}

DropCascade KnowledgeBase::apply_drop(const ElementRef& root) {
    DropCascade cascade = plan_drop(root);
    for (const auto& f : cascade.removed_facts) remove_fact(f);
    for (const auto& e : cascade.removed_entities) remove_entity(e);
    for (const auto& r : cascade.removed_relations) remove_relation(r);
    for (const auto& t : cascade.removed_types) {
        auto tagged = index_.by_type.find(t);
        if (tagged != index_.by_type.end()) {
            for (const auto& e : tagged->second) entities_.at(e).types.erase(t);
            index_.by_type.erase(tagged);
        }
        types_.erase(t);
    }
    return cascade;
}

KnowledgeBase::Indices KnowledgeBase::build_indices() const {
    Indices fresh;
    for (const auto& f : facts_) {
        fresh.by_entity[f.subject].insert(f);
        if (!f.object.is_literal) fresh.by_entity[f.object.id].insert(f);
        fresh.by_relation[f.relation].insert(f);
    }
    for (const auto& [id, info] : entities_)
        for (const auto& t : info.types) fresh.by_type[t].insert(id);
    return fresh;
}

bool KnowledgeBase::indices_consistent() const { return build_indices() == index_; }

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
    return types_ == other.types_ && relations_ == other.relations_ && entities_ == other.entities_ &&
           facts_ == other.facts_;
}

// ---------------------------------------------------------------------------
// Popularity

PopularityTable::PopularityTable(const KnowledgeBase& ideal) : ideal_(&ideal) {
    for (const auto& [id, info] : ideal.relations()) relation_[id] = ideal.facts_of_relation(id).size();
    for (const auto& [id, info] : ideal.types()) {
        FactSet touching;
        for (const auto& e : ideal.members(id)) {
            const auto& fs = ideal.facts_of_entity(e);
            touching.insert(fs.begin(), fs.end());
        }
        type_[id] = touching.size();
    }
}

std::size_t PopularityTable::operator()(const ElementRef& ref) const {
    if (!ideal_->has(ref)) throw DataError("popularity of unknown " + render_element(ref));
    switch (ref.kind) {
        case ElementKind::Fact:
        case ElementKind::Entity: return 1;
        case ElementKind::Relation: return relation_.at(ref.id);
        case ElementKind::Type: return type_.at(ref.id);
    }
    return 1;
}

std::size_t popularity(const KnowledgeBase& ideal, const ElementRef& ref) { return PopularityTable(ideal)(ref); }

}  // namespace kbforge
