#include "kbforge/logical_form.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace kbforge {

namespace {

struct Token {
    enum Kind { Open, Close, Word, Lit, End } kind;
    std::string text;
    std::size_t pos;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
        if (pos_ >= src_.size()) return {Token::End, {}, pos_};
        std::size_t start = pos_;
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            return {Token::Open, "(", start};
        }
        if (c == ')') {
            ++pos_;
            return {Token::Close, ")", start};
        }
        if (c == '"') {
            ++pos_;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                if (src_[pos_] == '\\') ++pos_;
                ++pos_;
            }
            if (pos_ >= src_.size()) throw ParseError("unterminated literal", start);
            ++pos_;
            while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '(' && src_[pos_] != ')') ++pos_;
            return {Token::Lit, std::string(src_.substr(start, pos_ - start)), start};
        }
        while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '(' && src_[pos_] != ')') ++pos_;
        return {Token::Word, std::string(src_.substr(start, pos_ - start)), start};
    }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
    std::string_view src_;
    std::size_t pos_ = 0;
};

std::optional<Op> operator_of(std::string_view word) {
    if (word == "AND") return Op::And;
    if (word == "JOIN") return Op::Join;
    if (word == "COUNT") return Op::Count;
    if (word == "ARGMAX") return Op::ArgMax;
    if (word == "ARGMIN") return Op::ArgMin;
    if (word == "lt" || word == "LT") return Op::Lt;
    if (word == "le" || word == "LE") return Op::Le;
    if (word == "gt" || word == "GT") return Op::Gt;
    if (word == "ge" || word == "GE") return Op::Ge;
    return std::nullopt;
}

bool is_reserved(std::string_view word) { return operator_of(word) || word == "R" || word == "NK"; }

std::string_view op_name(Op op) {
    switch (op) {
        case Op::And: return "AND";
        case Op::Join: return "JOIN";
        case Op::Count: return "COUNT";
        case Op::ArgMax: return "ARGMAX";
        case Op::ArgMin: return "ARGMIN";
        case Op::Lt: return "lt";
        case Op::Le: return "le";
        case Op::Gt: return "gt";
        case Op::Ge: return "ge";
        default: return "";
    }
}

class Parser {
public:
    Parser(std::string_view text, const TypeResolver& is_type) : lex_(text), is_type_(is_type) { advance(); }

    LogicalForm parse_all() {
        if (cur_.kind == Token::End) throw ParseError("empty logical form", cur_.pos);
        LogicalForm lf = expr();
        if (cur_.kind != Token::End) {
            if (cur_.kind == Token::Close) throw ParseError("unbalanced ')'", cur_.pos);
            throw ParseError("trailing input '" + cur_.text + "'", cur_.pos);
        }
        return lf;
    }

private:
    void advance() { cur_ = lex_.next(); }

    void expect_close(Op op, std::size_t arity) {
        if (cur_.kind == Token::End) throw ParseError("unbalanced '(': missing ')'", cur_.pos);
        if (cur_.kind != Token::Close)
            throw ParseError(std::string(op_name(op)) + " expects " + std::to_string(arity) + " argument(s)", cur_.pos);
        advance();
    }

    void require_argument(Op op, std::size_t arity) {
        if (cur_.kind == Token::End) throw ParseError("unbalanced '(': missing ')'", cur_.pos);
        if (cur_.kind == Token::Close)
            throw ParseError(std::string(op_name(op)) + " expects " + std::to_string(arity) + " argument(s)", cur_.pos);
    }

    Literal literal_token() {
        if (cur_.kind != Token::Lit) throw ParseError("expected a literal", cur_.pos);
        try {
            auto lit = parse_literal(cur_.text);
            advance();
            return std::move(*lit);
        } catch (const DataError& e) {
            throw ParseError(std::string("malformed literal: ") + e.what(), cur_.pos);
        }
    }

    RelationTerm relation() {
        if (cur_.kind == Token::Word) {
            if (is_reserved(cur_.text)) throw ParseError("expected a relation, got '" + cur_.text + "'", cur_.pos);
            RelationTerm r{cur_.text, false};
            advance();
            return r;
        }
        if (cur_.kind == Token::Open) {
            std::size_t open = cur_.pos;
            advance();
            if (cur_.kind != Token::Word || cur_.text != "R")
                throw ParseError("expected (R relation) in relation position", open);
            advance();
            if (cur_.kind != Token::Word || is_reserved(cur_.text))
                throw ParseError("R expects 1 argument(s)", cur_.pos);
            RelationTerm r{cur_.text, true};
            advance();
            if (cur_.kind == Token::End) throw ParseError("unbalanced '(': missing ')'", cur_.pos);
            if (cur_.kind != Token::Close) throw ParseError("R expects 1 argument(s)", cur_.pos);
            advance();
            return r;
        }
        if (cur_.kind == Token::End) throw ParseError("unbalanced '(': missing ')'", cur_.pos);
        throw ParseError("expected a relation", cur_.pos);
    }

    Expr expr() {
        switch (cur_.kind) {
            case Token::Lit: return Expr::literal_atom(literal_token());
            case Token::Word: {
                if (cur_.text == "NK") throw ParseError("NK is a label, not a logical form", cur_.pos);
                if (is_reserved(cur_.text)) throw ParseError("operator '" + cur_.text + "' outside parentheses", cur_.pos);
                Expr atom = is_type_ && is_type_(cur_.text) ? Expr::type(cur_.text) : Expr::entity(cur_.text);
                advance();
                return atom;
            }
            case Token::Close: throw ParseError("unbalanced ')'", cur_.pos);
            case Token::End: throw ParseError("unexpected end of input", cur_.pos);
            case Token::Open: break;
        }
        std::size_t open = cur_.pos;
        advance();
        if (cur_.kind != Token::Word) throw ParseError("expected an operator after '('", cur_.pos);
        auto op = operator_of(cur_.text);
        if (!op) {
            if (cur_.text == "R") throw ParseError("(R ...) outside relation position", open);
            throw ParseError("unknown operator '" + cur_.text + "'", cur_.pos);
        }
        advance();
        Expr node;
        switch (*op) {
            case Op::And: {
                require_argument(*op, 2);
                Expr a = expr();
                require_argument(*op, 2);
                Expr b = expr();
                node = Expr::conj(std::move(a), std::move(b));
                expect_close(*op, 2);
                break;
            }
            case Op::Join: {
                require_argument(*op, 2);
                RelationTerm r = relation();
                require_argument(*op, 2);
                node = Expr::join(std::move(r), expr());
                expect_close(*op, 2);
                break;
            }
            case Op::Count:
                require_argument(*op, 1);
                node = Expr::count(expr());
                expect_close(*op, 1);
                break;
            case Op::ArgMax:
            case Op::ArgMin: {
                require_argument(*op, 2);
                Expr x = expr();
                require_argument(*op, 2);
                node = Expr::arg(*op, std::move(x), relation());
                expect_close(*op, 2);
                break;
            }
            default: {
                require_argument(*op, 2);
                RelationTerm r = relation();
                require_argument(*op, 2);
                node = Expr::compare(*op, std::move(r), literal_token());
                expect_close(*op, 2);
                break;
            }
        }
        return node;
    }

    Lexer lex_;
    const TypeResolver& is_type_;
    Token cur_{Token::End, {}, 0};
};

void render_relation(const RelationTerm& r, std::string& out) {
    if (r.inverted) {
        out += "(R ";
        out += r.id;
        out += ')';
    } else {
        out += r.id;
    }
}

void render_into(const Expr& e, std::string& out) {
    switch (e.op) {
        case Op::Entity:
        case Op::Type: out += e.id; return;
        case Op::Literal: out += render_literal(e.literal); return;
        default: break;
    }
    out += '(';
    out += op_name(e.op);
    out += ' ';
    switch (e.op) {
        case Op::And:
            render_into(e.args[0], out);
            out += ' ';
            render_into(e.args[1], out);
            break;
        case Op::Join:
            render_relation(e.relation, out);
            out += ' ';
            render_into(e.args[0], out);
            break;
        case Op::Count: render_into(e.args[0], out); break;
        case Op::ArgMax:
        case Op::ArgMin:
            render_into(e.args[0], out);
            out += ' ';
            render_relation(e.relation, out);
            break;
        default:
            render_relation(e.relation, out);
            out += ' ';
            out += render_literal(e.literal);
            break;
    }
    out += ')';
}

void collect(const Expr& e, std::vector<ElementRef>& out, std::set<ElementRef>& seen) {
    auto add = [&](ElementRef ref) {
        if (seen.insert(ref).second) out.push_back(std::move(ref));
    };
    switch (e.op) {
        case Op::Entity: add(ElementRef::entity(e.id)); return;
        case Op::Type: add(ElementRef::type(e.id)); return;
        case Op::Literal: return;
        case Op::Join:
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge: add(ElementRef::relation(e.relation.id)); break;
        default: break;
    }
    for (const auto& a : e.args) collect(a, out, seen);
    if (e.op == Op::ArgMax || e.op == Op::ArgMin) add(ElementRef::relation(e.relation.id));
}

}  // namespace

TypeResolver types_of(const KnowledgeBase& kb) {
    return [&kb](std::string_view id) { return kb.has_type(id); };
}

LogicalForm parse(std::string_view text, const TypeResolver& is_type) { return Parser(text, is_type).parse_all(); }

std::string render(const LogicalForm& lf) {
    std::string out;
    render_into(lf, out);
    return out;
}

std::vector<ElementRef> elements(const LogicalForm& lf) {
    std::vector<ElementRef> out;
    std::set<ElementRef> seen;
    collect(lf, out, seen);
    return out;
}

bool contains_element(const LogicalForm& lf, const ElementRef& g) {
    if (g.kind == ElementKind::Fact) return false;
    switch (lf.op) {
        case Op::Entity: return g.kind == ElementKind::Entity && lf.id == g.id;
        case Op::Type: return g.kind == ElementKind::Type && lf.id == g.id;
        case Op::Literal: return false;
        case Op::And:
        case Op::Count: break;
        default:
            if (g.kind == ElementKind::Relation && lf.relation.id == g.id) return true;
            break;
    }
    return std::any_of(lf.args.begin(), lf.args.end(), [&](const Expr& a) { return contains_element(a, g); });
}

std::size_t depth(const LogicalForm& lf) {
    std::size_t d = 0;
    for (const auto& a : lf.args) d = std::max(d, depth(a));
    return d + 1;
}

bool has_extremum_or_comparative(const LogicalForm& lf) {
    switch (lf.op) {
        case Op::ArgMax:
        case Op::ArgMin:
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge: return true;
        default: break;
    }
    return std::any_of(lf.args.begin(), lf.args.end(), has_extremum_or_comparative);
}

}  // namespace kbforge
