#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace kbforge;

TEST(KbLoad, ToyFixtureCounts) {
    auto kb = testkit::toy_kb();
    EXPECT_EQ(kb.types().size(), 3u);
    EXPECT_EQ(kb.relations().size(), 3u);
    EXPECT_EQ(kb.entities().size(), 5u);
    EXPECT_EQ(kb.facts().size(), 7u);
    EXPECT_TRUE(kb.indices_consistent());
}

TEST(KbLoad, EmptyFactsFileIsFine) {
    auto kb = load_kb_text("type\tperson\nentity\tp1\tperson\n", "");
    EXPECT_TRUE(kb.facts().empty());
    EXPECT_EQ(kb.entities().size(), 1u);
}

TEST(KbLoad, DanglingRelationNamesTheId) {
    try {
        load_kb_text("type\tperson\nentity\tp1\tperson\n", "p1\tknows\tp1\n");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("knows"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("facts:1"), std::string::npos) << e.what();
    }
}

TEST(KbLoad, MalformedLineReportsLineNumber) {
    try {
        load_kb_text("type\tperson\nrelation\tonly_two\n", "");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("schema:2"), std::string::npos) << e.what();
    }
}

TEST(KbLoad, CyclicHierarchyRejected) {
    EXPECT_THROW(load_kb_text("type\ta\tb\ntype\tb\ta\n", ""), DataError);
}

TEST(KbLoad, LiteralKindMismatchRejected) {
    EXPECT_THROW(load_kb_text("type\torg\nrelation\tyear\torg\tinteger\nentity\to\torg\n", "o\tyear\t\"x\"^^string\n"),
                 DataError);
}

TEST(KbIo, WriteThenLoadRoundTrips) {
    auto kb = testkit::toy_kb();
    std::ostringstream schema, facts;
    write_schema(kb, schema);
    write_facts(kb, facts);
    auto again = load_kb_text(schema.str(), facts.str());
    EXPECT_TRUE(again == kb);
    std::ostringstream schema2, facts2;
    write_schema(again, schema2);
    write_facts(again, facts2);
    EXPECT_EQ(schema.str(), schema2.str());
    EXPECT_EQ(facts.str(), facts2.str());
}

TEST(Literals, Normalization) {
    EXPECT_EQ(make_literal("007", LiteralKind::Integer).value, "7");
    EXPECT_EQ(make_literal("1.50", LiteralKind::Float).value, "1.5");
    EXPECT_EQ(parse_literal("\"1990\"^^xsd:int")->kind, LiteralKind::Integer);
    EXPECT_THROW(make_literal("1990-13-01", LiteralKind::Date), DataError);
    EXPECT_EQ(compare_literals(make_literal("2", LiteralKind::Integer), make_literal("2.0", LiteralKind::Float)),
              std::partial_ordering::equivalent);
    EXPECT_EQ(compare_literals(make_literal("1999-12", LiteralKind::Date), make_literal("2000", LiteralKind::Date)),
              std::partial_ordering::less);
    EXPECT_THROW(compare_literals(make_literal("a", LiteralKind::String), make_literal("b", LiteralKind::String)),
                 DataError);
}

TEST(Popularity, ToyValues) {
    auto kb = testkit::toy_kb();
    PopularityTable pop(kb);
    EXPECT_EQ(pop(ElementRef::of(*kb.facts().begin())), 1u);
    EXPECT_EQ(pop(ElementRef::entity("a3")), 1u);
    EXPECT_EQ(pop(ElementRef::relation("works_at")), 3u);
    // Brute force: facts whose subject or object is a person or researcher.
    std::size_t person = 0;
    for (const auto& f : kb.facts()) {
        bool touches = oracle::is_a(kb, f.subject, "person") ||
                       (!f.object.is_literal && oracle::is_a(kb, f.object.id, "person"));
        person += touches;
    }
    EXPECT_EQ(person, 5u);
    EXPECT_EQ(pop(ElementRef::type("person")), person);
    EXPECT_THROW(pop(ElementRef::relation("nope")), DataError);
}

TEST(Popularity, ReadsOnlyTheIdealKb) {
    auto ideal = testkit::toy_kb();
    PopularityTable pop(ideal);
    auto degraded = ideal;
    degraded.apply_drop(ElementRef::relation("works_at"));
    EXPECT_EQ(pop(ElementRef::relation("works_at")), 3u);
    EXPECT_EQ(popularity(ideal, ElementRef::type("org")), 5u);
}

TEST(Drop, FactHasNoFurtherCascade) {
    auto kb = testkit::toy_kb();
    Fact f{"a1", "works_at", Term::entity("o1")};
    auto c = kb.apply_drop(ElementRef::of(f));
    ASSERT_EQ(c.removed_facts.size(), 1u);
    EXPECT_EQ(c.removed_facts[0], f);
    EXPECT_TRUE(c.removed_entities.empty() && c.removed_relations.empty() && c.removed_types.empty());
    EXPECT_FALSE(kb.has_fact(f));
}

TEST(Drop, EntityTakesItsFacts) {
    auto kb = testkit::toy_kb();
    auto c = kb.apply_drop(ElementRef::entity("o2"));
    EXPECT_EQ(c.removed_entities, std::vector<std::string>{"o2"});
    std::size_t expected = 0;
    const auto original = testkit::toy_kb();
    for (const auto& f : original.facts())
        expected += f.subject == "o2" || (!f.object.is_literal && f.object.id == "o2");
    EXPECT_EQ(c.removed_facts.size(), expected);
    EXPECT_EQ(expected, 2u);
    EXPECT_TRUE(kb.problems().empty());
}

TEST(Drop, TypeOrgCascade) {
    auto kb = testkit::toy_kb();
    auto c = kb.apply_drop(ElementRef::type("org"));
    EXPECT_EQ(c.removed_types, std::vector<std::string>{"org"});
    EXPECT_EQ(std::set<std::string>(c.removed_relations.begin(), c.removed_relations.end()),
              (std::set<std::string>{"works_at", "founded_year"}));
    EXPECT_EQ(std::set<std::string>(c.removed_entities.begin(), c.removed_entities.end()),
              (std::set<std::string>{"o1", "o2"}));
    EXPECT_EQ(kb.facts().size(), 2u);  // the advises facts survive
    EXPECT_TRUE(kb.problems().empty());
    EXPECT_TRUE(kb.indices_consistent());
}

TEST(Drop, TypeWithSurvivingChildRejected) {
    auto kb = testkit::toy_kb();
    EXPECT_THROW(kb.apply_drop(ElementRef::type("person")), DataError);
    EXPECT_THROW(kb.apply_drop(ElementRef::entity("ghost")), DataError);
}

TEST(Drop, TypeDropKeepsMultiTaggedEntities) {
    auto kb = testkit::toy_kb();
    auto c = kb.apply_drop(ElementRef::type("researcher"));
    EXPECT_TRUE(c.removed_entities.empty());  // a1, a2 are still persons
    EXPECT_EQ(c.removed_relations, std::vector<std::string>{"advises"});
    EXPECT_EQ(kb.entities().at("a1").types, std::set<std::string>{"person"});
}

TEST(Drop, PlanMatchesApply) {
    auto kb = testkit::toy_kb();
    for (const auto& g : {ElementRef::type("org"), ElementRef::relation("advises"), ElementRef::entity("a1")}) {
        auto copy = kb;
        EXPECT_EQ(kb.plan_drop(g), copy.apply_drop(g));
    }
}

// Random drop sequences keep indices coherent, never add anything and leave
// no dangling references.
TEST(Drop, RandomSequencesProperties) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        auto kb = testkit::random_kb(rng);
        for (int step = 0; step < 8; ++step) {
            std::vector<ElementRef> pool;
            for (const auto& [id, _] : kb.entities()) pool.push_back(ElementRef::entity(id));
            for (const auto& [id, _] : kb.relations()) pool.push_back(ElementRef::relation(id));
            for (const auto& [id, _] : kb.types())
                if (kb.children(id).empty()) pool.push_back(ElementRef::type(id));
            for (const auto& f : kb.facts()) pool.push_back(ElementRef::of(f));
            if (pool.empty()) break;
            auto g = pool[rng.below(pool.size())];
            const auto before = kb;
            auto c = kb.apply_drop(g);
            ASSERT_TRUE(kb.indices_consistent());
            ASSERT_TRUE(kb.problems().empty());
            ASSERT_LE(kb.facts().size(), before.facts().size());
            ASSERT_LE(kb.entities().size(), before.entities().size());
            ASSERT_LE(kb.relations().size(), before.relations().size());
            ASSERT_LE(kb.types().size(), before.types().size());
            ASSERT_FALSE(kb.has(g));
            for (const auto& f : c.removed_facts) ASSERT_TRUE(before.has_fact(f) && !kb.has_fact(f));
            for (const auto& e : c.removed_entities) ASSERT_TRUE(before.has_entity(e) && !kb.has_entity(e));
            ASSERT_EQ(before.facts().size() - kb.facts().size(), c.removed_facts.size());
        }
    }
}
