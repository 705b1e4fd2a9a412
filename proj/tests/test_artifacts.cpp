#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <regex>

#include "auditsynth/artifacts.hpp"
#include "auditsynth/error.hpp"
#include "auditsynth/log.hpp"
#include "support.hpp"

using namespace auditsynth;
using testsupport::desc;
using testsupport::ph;

namespace {

struct QuietLogs {
    QuietLogs() { set_log_level(LogLevel::quiet); }
} quiet_logs;

Errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return Errc::config;
}

InstantiatedTechnique instantiate(const AttackPatternTemplate& t, const std::map<Placeholder, std::string>& bound,
                                  std::uint64_t seed, const TakenValues& taken = {})
{
    FallbackCounters counters;
    Rng rng(seed);
    InstantiationContext ctx{testsupport::sample_corpus(), counters, taken, "C3"};
    return instantiate_template(t, bound, rng, ctx);
}

std::map<Placeholder, std::string> pa_bindings()
{
    return {{ph("Process.Browser"), "firefox.exe"}, {ph("Network.MailServer"), "mail.ru-post.org:443"}};
}

} // namespace

TEST_CASE("ingest the sample corpus")
{
    const auto& corpus = testsupport::sample_corpus();
    const auto& payloads = corpus.pool(desc("File.Payload"));
    CHECK(std::find(payloads.begin(), payloads.end(), "twainResolver.lnk") != payloads.end());
    CHECK(corpus.source_tags.at({desc("File.Payload"), "twainResolver.lnk"}) ==
          "vt:78a3e4702d9fc13b2ef917211cd65b44");
    CHECK(corpus.diagnostics.empty());

    const auto text = testsupport::read_file(testsupport::data_dir() / "corpus" / "sample_corpus.tsv");
    const auto again = ingest_corpus(text);
    CHECK(again.pools == corpus.pools);
    CHECK(again.value_count() == corpus.value_count());

    // Every non-faker descriptor has a pool.
    for (const auto& d : Taxonomy::builtin().all())
        if (!d.faker_generated)
            CHECK_MESSAGE(!corpus.pool(d).empty(), d.token());
}

TEST_CASE("ingest rejects descriptors outside the taxonomy")
{
    const auto corpus = ingest_corpus("File\tPayload\ta.exe\tt\n"
                                      "File\tBanana\tb.exe\tt\n"
                                      "File\tFile.Payload\ta.exe\tdup\n");
    CHECK(corpus.pool(desc("File.Payload")) == std::vector<std::string>{"a.exe"});
    REQUIRE(corpus.diagnostics.size() == 1);
    CHECK(corpus.diagnostics[0].row == 2);
    CHECK(corpus.diagnostics[0].message.find("Banana") != std::string::npos);

    CHECK(code_of([] { ingest_corpus("File\tPayload\n"); }) == Errc::corpus_syntax);
    CHECK(code_of([] { ingest_corpus("# only a comment\n"); }) == Errc::empty_corpus);
    CHECK(code_of([] { ingest_corpus("File\tBanana\tb\tt\n"); }) == Errc::empty_corpus);
}

TEST_CASE("golden corpus draw")
{
    // From tests/oracles/golden.py.
    FallbackCounters counters;
    Rng rng(7);
    CHECK(draw_artifact(desc("File.Payload"), testsupport::sample_corpus(), rng, counters) ==
          "SearchIndexerHost.exe");
}

TEST_CASE("empty pool falls back to a counter")
{
    ArtifactCorpus empty;
    FallbackCounters counters;
    Rng rng(1);
    CHECK(draw_artifact(desc("File.Payload"), empty, rng, counters) == "file_payload_1");
    CHECK(draw_artifact(desc("File.Payload"), empty, rng, counters) == "file_payload_2");
    CHECK(draw_artifact(desc("Registry.Key"), empty, rng, counters) == "registry_key_1");
}

TEST_CASE("every pool entry is reachable")
{
    ArtifactCorpus corpus;
    auto& pool = corpus.pools[desc("File.Recon")];
    for (int i = 0; i < 10; ++i)
        pool.push_back("r" + std::to_string(i) + ".txt");
    FallbackCounters counters;
    Rng rng(99);
    std::map<std::string, int> hits;
    for (int i = 0; i < 10000; ++i)
        ++hits[draw_artifact(desc("File.Recon"), corpus, rng, counters)];
    CHECK(hits.size() == 10);
    for (const auto& [v, n] : hits)
        CHECK(n > 800);
}

TEST_CASE("golden faker value")
{
    Rng rng(0);
    CHECK(fake_value(desc("System.User"), rng) == "jschmidt");
}

TEST_CASE("faker format contracts")
{
    const std::regex ip(R"(^(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})$)");
    const std::regex user("^[a-z]+$");
    const std::regex host("^[a-z0-9]+(-[a-z0-9]+)*$");
    const std::regex iso(R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$)");
    const auto browsers = browser_names();
    const auto shells = shell_names();

    Rng rng(2023);
    for (int i = 0; i < 10000; ++i) {
        std::smatch m;
        const auto a = fake_value(desc("Network.HostIP"), rng);
        REQUIRE(std::regex_match(a, m, ip));
        for (int k = 1; k <= 4; ++k)
            REQUIRE(std::stoi(m[k]) <= 255);

        REQUIRE(std::regex_match(fake_value(desc("System.User"), rng), user));
        REQUIRE(std::regex_match(fake_value(desc("System.Host"), rng), host));
        REQUIRE(std::regex_match(fake_value(desc("Network.HostMachine"), rng), host));

        for (auto port : {"System.ProxyPort", "System.FirewallPort"}) {
            const auto v = std::stol(fake_value(desc(port), rng));
            REQUIRE(v >= 1024);
            REQUIRE(v <= 65535);
        }

        const auto ts = fake_value(desc("System.Time"), rng);
        REQUIRE(std::regex_match(ts, iso));
        REQUIRE(parse_timestamp(ts));

        const auto pw = fake_value(desc("System.Password"), rng);
        REQUIRE(pw.size() >= 12);
        REQUIRE(pw.size() <= 20);
        for (char c : pw)
            REQUIRE((c >= 33 && c <= 126));

        const auto b = fake_value(desc("Process.Browser"), rng);
        REQUIRE(std::find(browsers.begin(), browsers.end(), b) != browsers.end());
        const auto s = fake_value(desc("Process.Explorer"), rng);
        REQUIRE(std::find(shells.begin(), shells.end(), s) != shells.end());
    }
    CHECK(code_of([&] { fake_value(desc("File.Payload"), rng); }) == Errc::not_faker_descriptor);
}

TEST_CASE("instantiate the PA template")
{
    const auto pa = testsupport::shipped_templates().find("PA");
    REQUIRE(pa);
    const auto inst = instantiate(*pa, pa_bindings(), 3);
    REQUIRE(inst.events.size() == pa->events.size());
    CHECK(inst.events[0].subject.value == "firefox.exe");
    CHECK(inst.events[0].label.stage_tag == "B-IC");
    CHECK(inst.events[0].label.technique_tag == "B-T1566.001");
    CHECK(inst.events[0].label.ability_tag == "B-PA");
    for (std::size_t i = 1; i < inst.events.size(); ++i) {
        CHECK(inst.events[i].label.technique_tag == "I-T1566.001");
        CHECK(inst.events[i].campaign_id == "C3");
    }
    REQUIRE(inst.new_values.count(ph("File.Phishing")));
    const auto& pool = testsupport::sample_corpus().pool(desc("File.Phishing"));
    CHECK(std::find(pool.begin(), pool.end(), inst.new_values.at(ph("File.Phishing"))) != pool.end());
    CHECK(inst.bound_values == pa_bindings());
    for (std::size_t i = 0; i < inst.events.size(); ++i)
        CHECK(inst.relative_us[i] == pa->events[i].relative_us);
}

TEST_CASE("binding consistency and label shape over every shipped template")
{
    const auto& corpus = testsupport::sample_corpus();
    for (const auto& t : testsupport::shipped_templates().all()) {
        std::map<Placeholder, std::string> bound;
        FallbackCounters counters;
        Rng vr(17);
        for (const auto& p : t->prerequisites)
            bound[p] = p.descriptor.faker_generated ? fake_value(p.descriptor, vr)
                                                    : draw_artifact(p.descriptor, corpus, vr, counters);
        const auto inst = instantiate(*t, bound, 5);
        REQUIRE(inst.events.size() == t->events.size());

        std::map<Placeholder, std::string> seen;
        for (std::size_t i = 0; i < t->events.size(); ++i) {
            const auto& te = t->events[i];
            const auto& e = inst.events[i];
            auto check = [&](const Placeholder& p, const std::string& value) {
                auto [it, fresh] = seen.emplace(p, value);
                CHECK_MESSAGE(it->second == value, t->ident.ability_id, " ", p.token());
            };
            check(te.subject, e.subject.value);
            if (auto* p = std::get_if<Placeholder>(&te.object))
                check(*p, e.object.value);
            else
                CHECK(e.object.value == std::get<SystemEntity>(te.object).value);
            CHECK(e.operation == te.operation);
            CHECK(e.label.coupled());
            CHECK_FALSE(e.label.is_outside());
            CHECK(e.label.stage_tag.substr(0, 2) == (i == 0 ? "B-" : "I-"));
            CHECK(e.detail.find("{") == std::string::npos);
        }
        for (const auto& p : t->prerequisites)
            CHECK(inst.bound_values.at(p) == bound.at(p));
    }
}

TEST_CASE("template with only prerequisites has no new values")
{
    const auto t = parse_template("stage: IR\ntechnique: T1082\nability: X\nprerequisites:\n  Process.Payload\n"
                                  "events:\n  0 Process.Payload QueryOpen File:\"C:\\Windows\\win.ini\"\noutcomes:\n");
    const auto inst = instantiate(t, {{ph("Process.Payload"), "winupd.exe"}}, 1);
    CHECK(inst.new_values.empty());
    CHECK(inst.events[0].object.value == "C:\\Windows\\win.ini");
}

TEST_CASE("instantiation is seeded and diverse")
{
    // Template with the most fresh placeholders.
    const AttackPatternTemplate* best = nullptr;
    std::size_t fresh = 0;
    for (const auto& t : testsupport::shipped_templates().all()) {
        std::set<Placeholder> all;
        for (const auto& e : t->events)
            if (auto* p = std::get_if<Placeholder>(&e.object))
                all.insert(*p);
        for (const auto& p : t->prerequisites)
            all.erase(p);
        if (all.size() > fresh) {
            fresh = all.size();
            best = t.get();
        }
    }
    REQUIRE(best);
    std::map<Placeholder, std::string> bound;
    FallbackCounters counters;
    Rng vr(1);
    for (const auto& p : best->prerequisites)
        bound[p] = p.descriptor.faker_generated ? fake_value(p.descriptor, vr)
                                                : draw_artifact(p.descriptor, testsupport::sample_corpus(), vr, counters);

    CHECK(instantiate(*best, bound, 11).events == instantiate(*best, bound, 11).events);
    int differ = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial)
        differ += instantiate(*best, bound, 1000 + 2 * trial).new_values !=
                  instantiate(*best, bound, 1001 + 2 * trial).new_values;
    MESSAGE(best->ident.ability_id, " fresh placeholders: ", fresh, ", differing pairs: ", differ);
    CHECK(differ / 100.0 > 0.99);
}

TEST_CASE("fresh values avoid taken values")
{
    const auto pa = testsupport::shipped_templates().find("PA");
    const auto& pool = testsupport::sample_corpus().pool(desc("File.Phishing"));
    TakenValues taken;
    for (std::size_t i = 0; i + 1 < pool.size(); ++i)
        taken.insert(EntityKind::file, pool[i]);
    int last = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto v = instantiate(*pa, pa_bindings(), seed, taken).new_values.at(ph("File.Phishing"));
        CHECK_FALSE(taken.contains(EntityKind::file, v));
        last += v == pool.back();
    }
    // 100 retries find the single free entry with probability 1 - (24/25)^100.
    CHECK(last >= 15);

    taken.insert(EntityKind::file, pool.back());
    const auto v = instantiate(*pa, pa_bindings(), 1, taken).new_values.at(ph("File.Phishing"));
    CHECK_FALSE(taken.contains(EntityKind::file, v));
}

TEST_CASE("taken values are case-insensitive for files")
{
    TakenValues t;
    t.insert(EntityKind::file, "A.EXE");
    CHECK(t.contains(EntityKind::file, "a.exe"));
    t.insert(EntityKind::registry, "HKCU\\X");
    CHECK_FALSE(t.contains(EntityKind::registry, "hkcu\\x"));
}

TEST_CASE("entity table built from the corpus")
{
    const auto table = build_entity_table(testsupport::sample_corpus());
    CHECK(table.find(EntityKind::file, "twainResolver.lnk")->token() == "File.Payload");
    CHECK(table.find(EntityKind::process, "chrome.exe")->token() == "Process.Browser");
    CHECK(table.find(EntityKind::process, "powershell.exe"));
}
