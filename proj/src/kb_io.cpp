#include "kbforge/kb_io.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace kbforge {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::set<std::string> split_commas(const std::string& text) {
    std::set<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.insert(item);
    return out;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

bool skippable(const std::string& line) {
    auto pos = line.find_first_not_of(" \t");
    return pos == std::string::npos || line[pos] == '#';
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& msg) {
    throw DataError(std::string(source) + ":" + std::to_string(line) + ": " + msg);
}

void check_version(std::string_view source, std::size_t lineno, const std::vector<std::string>& cols) {
    if (cols.size() != 2) fail(source, lineno, "format_version takes one value");
    if (cols[1] != std::to_string(kFormatVersion)) fail(source, lineno, "unsupported format_version " + cols[1]);
}

}  // namespace

KnowledgeBase load_kb(std::istream& schema, std::istream& facts) {
    KnowledgeBase kb;
    std::string line;
    std::size_t lineno = 0;

    struct PendingRelation {
        std::size_t line;
        std::string id, domain, range;
    };
    struct PendingEntity {
        std::size_t line;
        std::string id;
        std::set<std::string> types;
        std::string label;
    };
    std::vector<PendingRelation> relations;
    std::vector<PendingEntity> entities;
    std::map<std::string, std::size_t> type_lines;

    while (std::getline(schema, line)) {
        ++lineno;
        line = strip_cr(std::move(line));
        if (skippable(line)) continue;
        auto cols = split_tabs(line);
        const auto& tag = cols[0];
        if (tag == "format_version") {
            check_version("schema", lineno, cols);
        } else if (tag == "type") {
            if (cols.size() < 2 || cols.size() > 3 || cols[1].empty()) fail("schema", lineno, "malformed type line");
            if (literal_kind_from_string(cols[1])) fail("schema", lineno, "type id '" + cols[1] + "' is reserved");
            try {
                kb.add_type(cols[1], cols.size() == 3 ? split_commas(cols[2]) : std::set<std::string>{});
            } catch (const DataError& e) {
                fail("schema", lineno, e.what());
            }
            type_lines[cols[1]] = lineno;
        } else if (tag == "relation") {
            if (cols.size() != 4 || cols[1].empty()) fail("schema", lineno, "malformed relation line");
            relations.push_back({lineno, cols[1], cols[2], cols[3]});
        } else if (tag == "entity") {
            if (cols.size() < 3 || cols.size() > 4 || cols[1].empty()) fail("schema", lineno, "malformed entity line");
            if (cols[1].front() == '"') fail("schema", lineno, "entity id may not start with a quote");
            auto types = split_commas(cols[2]);
            if (types.empty()) fail("schema", lineno, "entity '" + cols[1] + "' has no type");
            entities.push_back({lineno, cols[1], std::move(types), cols.size() == 4 ? cols[3] : std::string{}});
        } else {
            fail("schema", lineno, "unknown declaration '" + tag + "'");
        }
    }

    for (const auto& [id, info] : kb.types())
        for (const auto& p : info.parents)
            if (!kb.has_type(p)) fail("schema", type_lines[id], "dangling reference: undeclared parent type '" + p + "'");

    for (const auto& r : relations) {
        if (!kb.has_type(r.domain)) fail("schema", r.line, "dangling reference: undeclared domain type '" + r.domain + "'");
        RelationRange range;
        if (auto kind = literal_kind_from_string(r.range)) {
            range.is_literal = true;
            range.literal = *kind;
        } else if (kb.has_type(r.range)) {
            range.type = r.range;
        } else {
            fail("schema", r.line, "dangling reference: undeclared range type '" + r.range + "'");
        }
        try {
            kb.add_relation(r.id, {r.domain, range});
        } catch (const DataError& e) {
            fail("schema", r.line, e.what());
        }
    }
    for (auto& e : entities) {
        for (const auto& t : e.types)
            if (!kb.has_type(t)) fail("schema", e.line, "dangling reference: undeclared type '" + t + "'");
        try {
            kb.add_entity(e.id, {std::move(e.types), std::move(e.label)});
        } catch (const DataError& err) {
            fail("schema", e.line, err.what());
        }
    }

    lineno = 0;
    while (std::getline(facts, line)) {
        ++lineno;
        line = strip_cr(std::move(line));
        if (skippable(line)) continue;
        auto cols = split_tabs(line);
        if (cols.size() == 2 && cols[0] == "format_version") {
            check_version("facts", lineno, cols);
            continue;
        }
        if (cols.size() != 3) fail("facts", lineno, "expected subject<TAB>relation<TAB>object");
        Fact fact;
        fact.subject = cols[0];
        fact.relation = cols[1];
        try {
            fact.object = parse_term(cols[2]);
        } catch (const DataError& e) {
            fail("facts", lineno, e.what());
        }
        if (!kb.has_relation(fact.relation))
            fail("facts", lineno, "dangling reference: undeclared relation '" + fact.relation + "'");
        if (!kb.has_entity(fact.subject))
            fail("facts", lineno, "dangling reference: undeclared entity '" + fact.subject + "'");
        if (!fact.object.is_literal && !kb.has_entity(fact.object.id))
            fail("facts", lineno, "dangling reference: undeclared entity '" + fact.object.id + "'");
        const auto& range = kb.relations().at(fact.relation).range;
        if (range.is_literal != fact.object.is_literal ||
            (range.is_literal && range.literal != fact.object.literal.kind))
            fail("facts", lineno, "object does not match the range of '" + fact.relation + "'");
        kb.add_fact(std::move(fact));
    }

    kb.check();
    return kb;
}

KnowledgeBase load_kb(const std::filesystem::path& schema, const std::filesystem::path& facts) {
    std::ifstream s(schema);
    if (!s) throw DataError("cannot open schema file " + schema.string());
    std::ifstream f(facts);
    if (!f) throw DataError("cannot open facts file " + facts.string());
    return load_kb(s, f);
}

KnowledgeBase load_kb_text(std::string_view schema, std::string_view facts) {
    std::istringstream s{std::string(schema)};
    std::istringstream f{std::string(facts)};
    return load_kb(s, f);
}

void write_schema(const KnowledgeBase& kb, std::ostream& out) {
    auto join = [](const std::set<std::string>& items) {
        std::string s;
        for (const auto& i : items) {
            if (!s.empty()) s += ',';
            s += i;
        }
        return s;
    };
    out << "format_version\t" << kFormatVersion << '\n';
    for (const auto& [id, info] : kb.types()) {
        out << "type\t" << id;
        if (!info.parents.empty()) out << '\t' << join(info.parents);
        out << '\n';
    }
    for (const auto& [id, info] : kb.relations()) {
        out << "relation\t" << id << '\t' << info.domain << '\t'
            << (info.range.is_literal ? std::string(to_string(info.range.literal)) : info.range.type) << '\n';
    }
    for (const auto& [id, info] : kb.entities()) {
        out << "entity\t" << id << '\t' << join(info.types);
        if (!info.label.empty()) out << '\t' << info.label;
        out << '\n';
    }
}

void write_facts(const KnowledgeBase& kb, std::ostream& out) {
    out << "format_version\t" << kFormatVersion << '\n';
    for (const auto& f : kb.facts()) out << f.subject << '\t' << f.relation << '\t' << render_term(f.object) << '\n';
}

void write_kb(const KnowledgeBase& kb, const std::filesystem::path& schema, const std::filesystem::path& facts) {
    std::ofstream s(schema);
    std::ofstream f(facts);
    if (!s || !f) throw DataError("cannot write KB files under " + schema.parent_path().string());
    write_schema(kb, s);
    write_facts(kb, f);
}

}  // namespace kbforge
