#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "auditsynth/entity_table.hpp"
#include "auditsynth/error.hpp"
#include "auditsynth/model.hpp"
#include "auditsynth/operations.hpp"
#include "auditsynth/rng.hpp"
#include "auditsynth/taxonomy.hpp"
#include "support.hpp"

using namespace auditsynth;

namespace {

Event at(std::int64_t t, std::uint64_t seq)
{
    Event e;
    e.time_us = t;
    e.seq = seq;
    e.subject = {EntityKind::process, "a.exe", {}};
    e.object = {EntityKind::file, "f", {}};
    e.operation = "ReadFile";
    return e;
}

} // namespace

TEST_CASE("compare_events orders by time then seq")
{
    CHECK(compare_events(at(100, 0), at(200, 0)) < 0);
    CHECK(compare_events(at(100, 5), at(100, 2)) > 0);
    CHECK(compare_events(at(100, 2), at(100, 2)) == 0);
}

TEST_CASE("sorting any permutation gives one sequence")
{
    std::vector<Event> events;
    Rng rng(11);
    for (std::uint64_t i = 0; i < 1000; ++i)
        events.push_back(at(static_cast<std::int64_t>(rng.below(200)), i));
    auto reference = events;
    std::stable_sort(reference.begin(), reference.end(), EventLess{});
    for (std::size_t i = 1; i < reference.size(); ++i)
        REQUIRE(compare_events(reference[i - 1], reference[i]) < 0);

    std::mt19937 shuffler(3);
    for (int round = 0; round < 100; ++round) {
        auto copy = events;
        std::shuffle(copy.begin(), copy.end(), shuffler);
        std::sort(copy.begin(), copy.end(), EventLess{});
        REQUIRE(copy == reference);
        std::sort(copy.begin(), copy.end(), EventLess{});
        REQUIRE(copy == reference);
    }
}

TEST_CASE("compare_events is a strict total order on (time, seq)")
{
    Rng rng(5);
    for (int i = 0; i < 5000; ++i) {
        auto a = at(static_cast<std::int64_t>(rng.below(4)), rng.below(4));
        auto b = at(static_cast<std::int64_t>(rng.below(4)), rng.below(4));
        const auto ab = compare_events(a, b), ba = compare_events(b, a);
        const int outcomes = (ab < 0) + (ba < 0) + (ab == 0);
        REQUIRE(outcomes == 1);
        REQUIRE((ab == 0) == (a.time_us == b.time_us && a.seq == b.seq));
    }
}

TEST_CASE("builtin taxonomy")
{
    const auto& tax = Taxonomy::builtin();
    CHECK(tax.all().size() == 34);
    std::set<std::pair<Category, std::string>> seen;
    for (const auto& d : tax.all())
        CHECK(seen.emplace(d.category, d.name).second);

    auto browser = tax.find("process.browser");
    REQUIRE(browser);
    CHECK(browser->token() == "Process.Browser");
    CHECK(browser->faker_generated);
    CHECK(tax.find("Network.Host IP")->name == "HostIP");
    CHECK_FALSE(tax.find("File.Banana"));
    CHECK_THROWS_AS(tax.require("File.Banana"), Error);

    const auto reparsed = Taxonomy::parse(tax.to_text());
    CHECK(std::equal(reparsed.all().begin(), reparsed.all().end(), tax.all().begin(), tax.all().end()));
}

TEST_CASE("taxonomy closure over shipped templates")
{
    const auto& tax = Taxonomy::builtin();
    auto known = [&](const CategoryDescriptor& d) {
        return std::find(tax.all().begin(), tax.all().end(), d) != tax.all().end();
    };
    for (const auto& t : testsupport::shipped_templates().all()) {
        for (const auto& e : t->events) {
            CHECK(known(e.subject.descriptor));
            if (auto* p = std::get_if<Placeholder>(&e.object))
                CHECK(known(p->descriptor));
        }
        for (const auto& p : t->prerequisites)
            CHECK(known(p.descriptor));
        for (const auto& p : t->outcomes)
            CHECK(known(p.descriptor));
    }
}

TEST_CASE("lookup_descriptor with the sample corpus")
{
    const auto table = build_entity_table(testsupport::sample_corpus());
    auto browser = lookup_descriptor("firefox.exe", EntityKind::process, table);
    REQUIRE(browser);
    CHECK(browser->token() == "Process.Browser");
    CHECK(lookup_descriptor("FireFox.EXE", EntityKind::process, table)->token() == "Process.Browser");

    auto phishing = lookup_descriptor("IOC_09_11.rar", EntityKind::file, table);
    REQUIRE(phishing);
    CHECK(phishing->token() == "File.Phishing");
    CHECK_FALSE(lookup_descriptor("nonexistent_entity_xyz", EntityKind::file, table));
}

TEST_CASE("lookup is case-sensitive outside files and processes")
{
    EntityDescriptorTable table;
    const auto key = testsupport::desc("Registry.Key");
    CHECK(table.add(EntityKind::registry, "HKCU\\Software\\Foo", key));
    CHECK(lookup_descriptor("HKCU\\Software\\Foo", EntityKind::registry, table));
    CHECK_FALSE(lookup_descriptor("hkcu\\software\\foo", EntityKind::registry, table));
    CHECK_FALSE(table.add(EntityKind::registry, "HKCU\\Software\\Foo", key));

    CHECK(table.add(EntityKind::file, "Report.DOCX", testsupport::desc("File.Phishing")));
    CHECK(lookup_descriptor("report.docx", EntityKind::file, table));
}

TEST_CASE("entity table literals and merge")
{
    EntityDescriptorTable a, b;
    a.add(EntityKind::process, "x.exe", testsupport::desc("Process.Payload"));
    b.add(EntityKind::process, "x.exe", testsupport::desc("Process.Browser"));
    b.add(EntityKind::process, "y.exe", testsupport::desc("Process.Browser"));
    b.add_literal(EntityKind::process, "cmd.exe");
    a.merge(b);
    CHECK(a.find(EntityKind::process, "x.exe")->token() == "Process.Payload");
    CHECK(a.find(EntityKind::process, "y.exe")->token() == "Process.Browser");
    CHECK(a.is_literal(EntityKind::process, "CMD.EXE"));
    CHECK_FALSE(a.find(EntityKind::process, "cmd.exe"));

    const auto parsed = EntityDescriptorTable::parse("Process\tfirefox.exe\tProcess.Browser\n"
                                                     "# comment\n"
                                                     "Process\tcmd.exe\t-\n");
    CHECK(parsed.size() == 1);
    CHECK(parsed.literal_count() == 1);
}

TEST_CASE("timestamps round trip")
{
    const std::int64_t t = 1'709'283'600'000'123;
    CHECK(format_timestamp(t) == "2024-03-01T09:00:00.000123Z");
    CHECK(parse_timestamp("2024-03-01T09:00:00.000123Z") == t);
    CHECK(parse_timestamp("2024-03-01T09:00:00Z") == 1'709'283'600'000'000);
    CHECK_FALSE(parse_timestamp("yesterday"));
    Rng rng(9);
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.between(0, 4'102'444'800'000'000);
        REQUIRE(parse_timestamp(format_timestamp(v)) == v);
        REQUIRE(format_timestamp(v) == testsupport::ref_timestamp(v));
    }
}

TEST_CASE("stage vocabulary")
{
    CHECK(stage_index(Stage::IC) == 1);
    CHECK(stage_index(Stage::CM) == 7);
    CHECK(parse_stage("Initial Compromise") == Stage::IC);
    CHECK(parse_stage("ml") == Stage::ML);
    CHECK(parse_stage("5") == Stage::ML);
    CHECK_FALSE(parse_stage("8"));
    CHECK(stage_title(Stage::CM) == "Complete Mission");
}

TEST_CASE("technique ids")
{
    CHECK(is_valid_technique_id("T1566"));
    CHECK(is_valid_technique_id("T1566.001"));
    CHECK_FALSE(is_valid_technique_id("T156"));
    CHECK_FALSE(is_valid_technique_id("1566.001"));
    CHECK_FALSE(is_valid_technique_id("T1566.01"));
}

TEST_CASE("label triples are coupled")
{
    AttackIdentification id{Stage::IC, "T1566.001", "PA"};
    const auto b = LabelTriple::chunk(id, true);
    const auto i = LabelTriple::chunk(id, false);
    CHECK(b.stage_tag == "B-IC");
    CHECK(b.technique_tag == "B-T1566.001");
    CHECK(b.ability_tag == "B-PA");
    CHECK(i.technique_tag == "I-T1566.001");
    CHECK(b.coupled());
    CHECK(LabelTriple::outside().coupled());
    LabelTriple mixed = b;
    mixed.ability_tag = "O";
    CHECK_FALSE(mixed.coupled());
}

TEST_CASE("entity invariants")
{
    CHECK(entity_problem({EntityKind::file, "a.txt", {}}).empty());
    CHECK_FALSE(entity_problem({EntityKind::file, "", {}}).empty());
    CHECK_FALSE(entity_problem({EntityKind::file, "a", testsupport::desc("Process.Browser")}).empty());
}

TEST_CASE("operation roles")
{
    CHECK(object_role("CreateFile") == ObjectRole::create);
    CHECK(object_role("WriteFile") == ObjectRole::create);
    CHECK(object_role("TCP Connect") == ObjectRole::consume);
    CHECK(object_role("RegDeleteKey") == ObjectRole::remove);
    CHECK(infer_object_kind("RegSetValue") == EntityKind::registry);
    CHECK(infer_object_kind("TCP Send") == EntityKind::network_socket);
    CHECK(infer_object_kind(process_create_op) == EntityKind::process);
    CHECK(infer_object_kind("SomethingElse") == EntityKind::file);
}

TEST_CASE("derive_seed separates streams")
{
    CHECK(derive_seed(1, "C1") != derive_seed(1, "C2"));
    CHECK(derive_seed(1, "C1") != derive_seed(2, "C1"));
    CHECK(derive_seed(1, "C1") == derive_seed(1, "C1"));
    Rng a(derive_seed(1, "x")), b(derive_seed(1, "x"));
    for (int i = 0; i < 100; ++i)
        REQUIRE(a.next() == b.next());
}

TEST_CASE("rng draws stay in range")
{
    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const auto v = rng.between(-3, 3);
        REQUIRE(v >= -3);
        REQUIRE(v <= 3);
        const auto u = rng.unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("errors map to distinct exit codes")
{
    std::set<int> codes;
    for (auto c : {Errc::config, Errc::syntax, Errc::invalid_lifecycle, Errc::planning_failed, Errc::unknown_entity,
                   Errc::lapse_too_small, Errc::validation, Errc::io})
        codes.insert(exit_code_for(c));
    CHECK(codes.size() == 8);
    CHECK(codes.count(0) == 0);
    Error e(Errc::csv_parse, "row 3", 3);
    CHECK(e.code() == Errc::csv_parse);
    CHECK(e.position() == 3u);
}
