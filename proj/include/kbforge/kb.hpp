#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kbforge {

/// Raised for malformed input, dangling references and other data problems.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LiteralKind { Integer, Float, Date, String };

std::string_view to_string(LiteralKind kind);
std::optional<LiteralKind> literal_kind_from_string(std::string_view name);

/// A typed literal. `value` is kept in canonical form (see make_literal).
struct Literal {
    LiteralKind kind = LiteralKind::String;
    std::string value;

    auto operator<=>(const Literal&) const = default;
};

/// Builds a literal, normalizing numeric and date values. Throws DataError on
/// values that do not parse as the requested kind.
Literal make_literal(std::string_view value, LiteralKind kind);

/// Renders `"value"^^kind`.
std::string render_literal(const Literal& lit);

/// Parses `"value"^^kind`; returns nullopt when `text` is not literal syntax.
/// Throws DataError when it looks like a literal but is malformed.
std::optional<Literal> parse_literal(std::string_view text);

/// Orders two literals. Integer and float compare numerically with each other,
/// dates chronologically. Throws DataError for strings or mismatched kinds.
std::partial_ordering compare_literals(const Literal& a, const Literal& b);

/// Object position of a fact, and the answer value type: an entity or a literal.
struct Term {
    bool is_literal = false;
    std::string id;       // entity id when !is_literal
    Literal literal;      // when is_literal

    static Term entity(std::string id) { return Term{false, std::move(id), {}}; }
    static Term of(Literal lit) { return Term{true, {}, std::move(lit)}; }

    auto operator<=>(const Term&) const = default;
};

std::string render_term(const Term& term);
/// Inverse of render_term.
Term parse_term(std::string_view text);

struct Fact {
    std::string subject;
    std::string relation;
    Term object;

    auto operator<=>(const Fact&) const = default;
};

std::string render_fact(const Fact& fact);

using FactSet = std::set<Fact>;

enum class ElementKind { Type, Relation, Entity, Fact };

std::string_view to_string(ElementKind kind);

/// Reference to one KB element. Fact references carry the triple itself.
struct ElementRef {
    ElementKind kind = ElementKind::Entity;
    std::string id;
    Fact fact;

    static ElementRef type(std::string id) { return {ElementKind::Type, std::move(id), {}}; }
    static ElementRef relation(std::string id) { return {ElementKind::Relation, std::move(id), {}}; }
    static ElementRef entity(std::string id) { return {ElementKind::Entity, std::move(id), {}}; }
    static ElementRef of(Fact f) { return {ElementKind::Fact, {}, std::move(f)}; }

    auto operator<=>(const ElementRef&) const = default;
};

std::string render_element(const ElementRef& ref);

struct TypeInfo {
    std::set<std::string> parents;
    bool operator==(const TypeInfo&) const = default;
};

/// Range of a relation: either a type id or a literal kind.
struct RelationRange {
    bool is_literal = false;
    std::string type;
    LiteralKind literal = LiteralKind::String;
    bool operator==(const RelationRange&) const = default;
};

struct RelationInfo {
    std::string domain;
    RelationRange range;
    bool operator==(const RelationInfo&) const = default;
};

struct EntityInfo {
    std::set<std::string> types;
    std::string label;
    bool operator==(const EntityInfo&) const = default;
};

/// Everything removed by one drop, root included.
struct DropCascade {
    ElementRef root;
    std::vector<Fact> removed_facts;
    std::vector<std::string> removed_entities;
    std::vector<std::string> removed_relations;
    std::vector<std::string> removed_types;

    bool operator==(const DropCascade&) const = default;
};

/// In-memory typed knowledge graph.
///
/// Entity type tags are kept apart from the relational fact set. All mutation
/// goes through the add_* methods and apply_drop so that the lookup indices
/// (entity -> facts, relation -> facts, type -> entities) stay coherent.
class KnowledgeBase {
public:
    void add_type(const std::string& id, std::set<std::string> parents = {});
    void add_relation(const std::string& id, RelationInfo info);
    void add_entity(const std::string& id, EntityInfo info);
    void add_fact(Fact fact);

    /// Throws DataError on dangling references or a cyclic type hierarchy.
    void check() const;
    /// Every invariant violation found, empty when the KB is consistent.
    std::vector<std::string> problems() const;

    bool has(const ElementRef& ref) const;
    bool has_type(std::string_view id) const { return types_.find(std::string(id)) != types_.end(); }
    bool has_relation(std::string_view id) const {
        return relations_.find(std::string(id)) != relations_.end();
    }
    bool has_entity(std::string_view id) const { return entities_.find(std::string(id)) != entities_.end(); }
    bool has_fact(const Fact& f) const { return facts_.count(f) != 0; }

    const std::map<std::string, TypeInfo>& types() const { return types_; }
    const std::map<std::string, RelationInfo>& relations() const { return relations_; }
    const std::map<std::string, EntityInfo>& entities() const { return entities_; }
    const FactSet& facts() const { return facts_; }

    const FactSet& facts_of_entity(const std::string& entity) const;
    const FactSet& facts_of_relation(const std::string& relation) const;
    /// Entities tagged directly with `type`.
    const std::set<std::string>& entities_of_type(const std::string& type) const;

    /// Direct subtypes.
    std::set<std::string> children(const std::string& type) const;
    /// `type` plus every transitive subtype.
    std::set<std::string> descendants_and_self(const std::string& type) const;
    /// `type` plus every transitive supertype.
    std::set<std::string> ancestors_and_self(const std::string& type) const;
    /// Entities tagged with `type` or any descendant.
    std::set<std::string> members(const std::string& type) const;

    /// Removes `root` and everything that depends on it. Throws DataError if
    /// root does not resolve, or if it is a type with surviving subtypes.
    DropCascade apply_drop(const ElementRef& root);

    /// The cascade apply_drop would produce, without mutating.
    DropCascade plan_drop(const ElementRef& root) const;

    /// True when the incrementally maintained indices equal a fresh rebuild.
    bool indices_consistent() const;

    bool operator==(const KnowledgeBase& other) const;

private:
    void index_fact(const Fact& f);
    void unindex_fact(const Fact& f);
    void remove_fact(const Fact& f);
    void remove_entity(const std::string& id);
    void remove_relation(const std::string& id);

    struct Indices {
        std::map<std::string, FactSet> by_entity;
        std::map<std::string, FactSet> by_relation;
        std::map<std::string, std::set<std::string>> by_type;
        bool operator==(const Indices&) const = default;
    };
    Indices build_indices() const;

    std::map<std::string, TypeInfo> types_;
    std::map<std::string, RelationInfo> relations_;
    std::map<std::string, EntityInfo> entities_;
    FactSet facts_;
    Indices index_;
};

/// Precomputed drop popularity over an ideal KB.
///
/// Facts and entities are equally popular (1). A relation's popularity is its
/// fact count; a type's is the number of facts whose subject or object entity
/// is tagged with the type or one of its descendants.
class PopularityTable {
public:
    explicit PopularityTable(const KnowledgeBase& ideal);

    /// Throws DataError when `ref` is unknown to the ideal KB.
    std::size_t operator()(const ElementRef& ref) const;

private:
    const KnowledgeBase* ideal_;
    std::map<std::string, std::size_t> relation_;
    std::map<std::string, std::size_t> type_;
};

std::size_t popularity(const KnowledgeBase& ideal, const ElementRef& ref);

}  // namespace kbforge
