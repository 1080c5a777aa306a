#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "kbforge/kb.hpp"

namespace kbforge {

/// Syntax error with the byte offset where parsing stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t position)
        : std::runtime_error(msg + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// `r` or `(R r)`.
struct RelationTerm {
    std::string id;
    bool inverted = false;
    bool operator==(const RelationTerm&) const = default;
};

enum class Op { Entity, Type, Literal, And, Join, Count, ArgMax, ArgMin, Lt, Le, Gt, Ge };

/// One node of an s-expression logical form.
///
/// Atoms use `id` (Entity, Type) or `literal` (Literal). JOIN, ARGMAX/ARGMIN
/// and the comparatives carry `relation`; comparatives also carry `literal`.
/// Sub-expressions live in `args`: two for AND, one for JOIN, COUNT, ARGMAX,
/// ARGMIN, none for atoms and comparatives.
struct Expr {
    Op op = Op::Entity;
    std::string id;
    Literal literal;
    RelationTerm relation;
    std::vector<Expr> args;

    bool operator==(const Expr&) const = default;

    static Expr entity(std::string id) { return Expr{Op::Entity, std::move(id), {}, {}, {}}; }
    static Expr type(std::string id) { return Expr{Op::Type, std::move(id), {}, {}, {}}; }
    static Expr literal_atom(Literal lit) { return Expr{Op::Literal, {}, std::move(lit), {}, {}}; }
    static Expr join(RelationTerm r, Expr x) { return Expr{Op::Join, {}, {}, std::move(r), {std::move(x)}}; }
    static Expr conj(Expr a, Expr b) { return Expr{Op::And, {}, {}, {}, {std::move(a), std::move(b)}}; }
    static Expr count(Expr x) { return Expr{Op::Count, {}, {}, {}, {std::move(x)}}; }
    static Expr arg(Op op, Expr x, RelationTerm r) { return Expr{op, {}, {}, std::move(r), {std::move(x)}}; }
    static Expr compare(Op op, RelationTerm r, Literal v) { return Expr{op, {}, std::move(v), std::move(r), {}}; }
};

using LogicalForm = Expr;

/// Decides whether a bare expression atom names a type. Atoms it rejects are
/// entity atoms. With no resolver every bare atom is an entity.
using TypeResolver = std::function<bool(std::string_view)>;

/// Resolver backed by the type namespace of `kb`.
TypeResolver types_of(const KnowledgeBase& kb);

/// Parses one s-expression. Throws ParseError on unbalanced parentheses,
/// unknown operators, wrong arity, malformed literals, the reserved NK token,
/// or trailing input.
LogicalForm parse(std::string_view text, const TypeResolver& is_type = {});

/// Canonical text: single spaces, upper-case operators, lower-case
/// comparatives, canonical literals.
std::string render(const LogicalForm& lf);

/// Every KB element cited by the form, in document order, duplicates removed.
std::vector<ElementRef> elements(const LogicalForm& lf);

/// True iff `g` occurs in `lf` as an atom or relation term of matching kind.
/// Facts are never cited.
bool contains_element(const LogicalForm& lf, const ElementRef& g);

/// Depth of the tree (an atom has depth 1).
std::size_t depth(const LogicalForm& lf);

/// True when the form uses ARGMAX/ARGMIN or a comparative.
bool has_extremum_or_comparative(const LogicalForm& lf);

}  // namespace kbforge
