#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "kbforge/kb.hpp"

namespace kbforge {

inline constexpr int kFormatVersion = 1;

// Schema file, tab-separated, one declaration per line ('#' starts a comment):
//
//   format_version  1
//   type            researcher  person,agent
//   relation        works_at    person  org
//   relation        founded     org     date
//   entity          a1          researcher,person   Ada Lovelace
//
// A relation range naming a literal kind (integer, float, date, string) is a
// literal-valued relation. Facts file: `subject<TAB>relation<TAB>object`,
// object either an entity id or `"value"^^kind`.

/// Loads and checks a KB. Errors are DataError with `<source>:<line>:` prefixes.
KnowledgeBase load_kb(std::istream& schema, std::istream& facts);
KnowledgeBase load_kb(const std::filesystem::path& schema, const std::filesystem::path& facts);
KnowledgeBase load_kb_text(std::string_view schema, std::string_view facts);

void write_schema(const KnowledgeBase& kb, std::ostream& out);
void write_facts(const KnowledgeBase& kb, std::ostream& out);
void write_kb(const KnowledgeBase& kb, const std::filesystem::path& schema, const std::filesystem::path& facts);

}  // namespace kbforge
