#include "auditsynth/artifacts.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "auditsynth/error.hpp"
#include "auditsynth/log.hpp"
#include "auditsynth/operations.hpp"
#include "text_util.hpp"

namespace auditsynth {

namespace {

constexpr std::array<std::string_view, 6> browsers = {"firefox.exe", "chrome.exe", "msedge.exe",
                                                       "iexplore.exe", "opera.exe", "brave.exe"};
constexpr std::array<std::string_view, 4> shells = {"explorer.exe", "cmd.exe", "powershell.exe", "pwsh.exe"};

constexpr std::array<std::string_view, 32> given_names = {
    "alice", "bob",   "carol", "dave",  "erin",  "frank", "grace", "heidi", "ivan",  "judy",  "mallory",
    "niaj",  "olivia", "peggy", "rupert", "sybil", "trent", "victor", "walter", "yvonne", "zoe", "amir",
    "bianca", "chen",  "dmitri", "elena", "farah", "goran", "hana",  "igor",  "jonas", "kenji"};
constexpr std::array<std::string_view, 16> family_names = {"smith", "jones",  "garcia", "miller", "davis", "lopez",
                                                           "wilson", "tanaka", "kowalski", "nguyen", "ivanova",
                                                           "schmidt", "rossi", "silva", "haddad", "okafor"};
constexpr std::array<std::string_view, 6> host_prefixes = {"desktop", "laptop", "ws", "pc", "srv", "finance"};

constexpr std::string_view alnum = "abcdefghijklmnopqrstuvwxyz0123456789";

std::string lower_join(const CategoryDescriptor& d, int n)
{
    return fmt::format("{}_{}_{}", to_lower(to_string(d.category)), to_lower(d.name), n);
}

std::string suffixed(std::string_view value, int n)
{
    const auto dot = value.rfind('.');
    const auto sep = value.find_last_of("\\/");
    if (dot != std::string_view::npos && dot > 0 && (sep == std::string_view::npos || dot > sep))
        return fmt::format("{}_{}{}", value.substr(0, dot), n, value.substr(dot));
    return fmt::format("{}_{}", value, n);
}

std::string substitute_detail(std::string_view pattern, const std::map<Placeholder, std::string>& values,
                              const Taxonomy& taxonomy)
{
    std::string out;
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern[i] == '{') {
            const auto close = pattern.find('}', i);
            if (close != std::string_view::npos) {
                if (auto p = parse_placeholder(pattern.substr(i + 1, close - i - 1), taxonomy)) {
                    if (auto it = values.find(*p); it != values.end()) {
                        out += it->second;
                        i = close + 1;
                        continue;
                    }
                }
            }
        }
        out.push_back(pattern[i++]);
    }
    return out;
}

} // namespace

const std::vector<std::string>& ArtifactCorpus::pool(const CategoryDescriptor& d) const
{
    static const std::vector<std::string> empty;
    auto it = pools.find(d);
    return it == pools.end() ? empty : it->second;
}

std::size_t ArtifactCorpus::value_count() const
{
    std::size_t n = 0;
    for (const auto& [d, values] : pools)
        n += values.size();
    return n;
}

ArtifactCorpus ingest_corpus(std::string_view document, const Taxonomy& taxonomy)
{
    ArtifactCorpus corpus;
    std::size_t row = 0;
    std::size_t accepted = 0;
    for (auto line : text::split_lines(document)) {
        ++row;
        if (text::trim(line).empty() || text::trim(line).front() == '#')
            continue;
        auto fields = text::split(line, '\t');
        if (fields.size() != 4)
            throw Error(Errc::corpus_syntax, fmt::format("corpus row {}: expected 4 tab-separated fields, got {}", row,
                                                         fields.size()),
                        row);
        const auto category_text = text::trim(fields[0]);
        auto descriptor_text = text::trim(fields[1]);
        const auto value = fields[2];
        if (value.empty())
            throw Error(Errc::corpus_syntax, fmt::format("corpus row {}: empty value", row), row);

        std::optional<CategoryDescriptor> d;
        if (descriptor_text.find('.') != std::string_view::npos) {
            d = taxonomy.find(descriptor_text);
            if (d && !iequals(to_string(d->category), category_text))
                d.reset();
        } else if (auto category = parse_category(category_text)) {
            d = taxonomy.find(*category, descriptor_text);
        }
        if (!d) {
            corpus.diagnostics.push_back(
                {row, fmt::format("'{}.{}' is not in the taxonomy; row rejected", category_text, descriptor_text)});
            continue;
        }
        ++accepted;
        auto& pool = corpus.pools[*d];
        if (std::find(pool.begin(), pool.end(), value) != pool.end())
            continue;
        pool.emplace_back(value);
        corpus.source_tags[{*d, std::string(value)}] = std::string(text::trim(fields[3]));
    }
    if (accepted == 0)
        throw Error(Errc::empty_corpus, "corpus holds no valid rows");
    return corpus;
}

ArtifactCorpus load_corpus(const std::string& path, const Taxonomy& taxonomy)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open corpus {}", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return ingest_corpus(buffer.str(), taxonomy);
}

std::string draw_artifact(const CategoryDescriptor& d, const ArtifactCorpus& corpus, Rng& rng,
                          FallbackCounters& counters)
{
    const auto& pool = corpus.pool(d);
    if (pool.empty()) {
        const int n = ++counters[d];
        log_warning(fmt::format("corpus has no values for {}; using fallback", d.token()));
        return lower_join(d, n);
    }
    return pool[rng.below(pool.size())];
}

std::string fake_value(const CategoryDescriptor& d, Rng& rng)
{
    if (!d.faker_generated)
        throw Error(Errc::not_faker_descriptor, fmt::format("{} is not generated synthetically", d.token()));

    auto pick = [&](auto const& list) { return std::string(list[rng.below(list.size())]); };
    auto hostname = [&] {
        std::string name = pick(host_prefixes) + "-";
        for (int i = 0; i < 7; ++i)
            name.push_back(alnum[rng.below(alnum.size())]);
        return name;
    };

    const auto& n = d.name;
    // Draws are sequenced explicitly; argument evaluation order is unspecified.
    if (n == "HostIP") {
        const auto a = rng.between(1, 223);
        const auto b = rng.between(0, 255);
        const auto c = rng.between(0, 255);
        const auto d = rng.between(1, 254);
        return fmt::format("{}.{}.{}.{}", a, b, c, d);
    }
    if (n == "HostMachine" || n == "Host")
        return hostname();
    if (n == "User") {
        const auto given = pick(given_names);
        return given.substr(0, 1) + pick(family_names);
    }
    if (n == "ProxyPort" || n == "FirewallPort")
        return std::to_string(rng.between(1024, 65535));
    if (n == "Time") {
        // 2020-01-01 .. 2025-12-31, second precision.
        const std::int64_t lo = 1'577'836'800LL, hi = 1'767'225'599LL;
        auto ts = format_timestamp(rng.between(lo, hi) * 1'000'000LL);
        return ts.substr(0, 19) + "Z";
    }
    if (n == "Password") {
        const auto len = rng.between(12, 20);
        std::string pw;
        for (std::int64_t i = 0; i < len; ++i)
            pw.push_back(static_cast<char>(rng.between(33, 126)));
        return pw;
    }
    if (n == "Browser")
        return pick(browsers);
    if (n == "Explorer")
        return pick(shells);
    // Faker-flagged descriptor added through a custom taxonomy.
    return fmt::format("{}-{}", to_lower(n), hostname());
}

std::span<const std::string_view> browser_names() { return browsers; }
std::span<const std::string_view> shell_names() { return shells; }

EntityDescriptorTable build_entity_table(const ArtifactCorpus& corpus, const Taxonomy& taxonomy)
{
    EntityDescriptorTable table;
    for (const auto& [d, values] : corpus.pools)
        for (const auto& v : values)
            table.add(kind_of(d.category), v, d);
    if (auto browser = taxonomy.find(Category::process, "Browser"))
        for (auto v : browsers)
            table.add(EntityKind::process, v, *browser);
    if (auto explorer = taxonomy.find(Category::process, "Explorer"))
        for (auto v : shells)
            table.add(EntityKind::process, v, *explorer);
    return table;
}

void TakenValues::insert(EntityKind kind, std::string_view value)
{
    values_.emplace(kind, is_case_insensitive(kind) ? to_lower(value) : std::string(value));
}

bool TakenValues::contains(EntityKind kind, std::string_view value) const
{
    return values_.count({kind, is_case_insensitive(kind) ? to_lower(value) : std::string(value)}) > 0;
}

InstantiatedTechnique instantiate_template(const AttackPatternTemplate& t,
                                           const std::map<Placeholder, std::string>& bound_values, Rng& rng,
                                           const InstantiationContext& ctx)
{
    for (const auto& p : t.prerequisites)
        if (!bound_values.count(p))
            throw Error(Errc::schema,
                        fmt::format("{}: prerequisite {} has no binding", t.ident.ability_id, p.token()));

    // Placeholders in order of first reference.
    std::vector<Placeholder> order;
    auto note = [&](const Placeholder& p) {
        if (std::find(order.begin(), order.end(), p) == order.end())
            order.push_back(p);
    };
    TakenValues local;
    for (const auto& e : t.events) {
        note(e.subject);
        if (const auto* p = std::get_if<Placeholder>(&e.object))
            note(*p);
        else
            local.insert(std::get<SystemEntity>(e.object).kind, std::get<SystemEntity>(e.object).value);
        for (const auto& ref : detail_references(e.detail_pattern, ctx.taxonomy))
            note(ref);
    }

    InstantiatedTechnique out;
    out.ident = t.ident;
    out.campaign_id = ctx.campaign_id;

    std::map<Placeholder, std::string> values;
    for (const auto& p : order) {
        if (auto it = bound_values.find(p); it != bound_values.end()) {
            values[p] = it->second;
            out.bound_values[p] = it->second;
            local.insert(kind_of(p.descriptor.category), it->second);
        }
    }
    for (const auto& p : order) {
        if (values.count(p))
            continue;
        const auto kind = kind_of(p.descriptor.category);
        auto draw = [&] {
            return p.descriptor.faker_generated ? fake_value(p.descriptor, rng)
                                                : draw_artifact(p.descriptor, ctx.corpus, rng, ctx.counters);
        };
        auto clashes = [&](const std::string& v) { return ctx.taken.contains(kind, v) || local.contains(kind, v); };
        std::string value = draw();
        for (int attempt = 0; attempt < fresh_value_retries && clashes(value); ++attempt)
            value = draw();
        if (clashes(value)) {
            const std::string base = value;
            for (int n = 2; clashes(value); ++n)
                value = suffixed(base, n);
        }
        local.insert(kind, value);
        values[p] = value;
        out.new_values[p] = value;
    }

    // Technique-local process keys, 1-based, in first-appearance order.
    std::map<std::string, std::uint64_t> process_keys;
    auto process_key = [&](const std::string& id) {
        auto [it, inserted] = process_keys.emplace(id, process_keys.size() + 1);
        return it->second;
    };

    out.events.reserve(t.events.size());
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        const auto& te = t.events[i];
        Event ev;
        ev.time_us = te.relative_us;
        ev.subject = {EntityKind::process, values.at(te.subject), te.subject.descriptor};
        ev.pid = process_key("p:" + te.subject.token());
        ev.operation = te.operation;
        if (const auto* p = std::get_if<Placeholder>(&te.object)) {
            ev.object = {kind_of(p->descriptor.category), values.at(*p), p->descriptor};
            if (ev.object.kind == EntityKind::process && te.operation == process_create_op)
                ev.child_local = process_key("p:" + p->token());
        } else {
            ev.object = std::get<SystemEntity>(te.object);
            if (ev.object.kind == EntityKind::process && te.operation == process_create_op)
                ev.child_local = process_key("l:" + to_lower(ev.object.value));
        }
        ev.result = "SUCCESS";
        ev.detail = substitute_detail(te.detail_pattern, values, ctx.taxonomy);
        ev.label = LabelTriple::chunk(t.ident, i == 0);
        ev.campaign_id = ctx.campaign_id;
        out.relative_us.push_back(te.relative_us);
        out.events.push_back(std::move(ev));
    }
    return out;
}

} // namespace auditsynth
