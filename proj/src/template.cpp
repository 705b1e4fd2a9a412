#include "auditsynth/template.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "auditsynth/error.hpp"
#include "auditsynth/operations.hpp"
#include "text_util.hpp"

namespace auditsynth {

std::string Placeholder::token() const
{
    if (slot == 0)
        return descriptor.token();
    return fmt::format("{}#{}", descriptor.token(), slot);
}

std::optional<Placeholder> parse_placeholder(std::string_view token, const Taxonomy& taxonomy)
{
    int slot = 0;
    if (auto hash = token.find('#'); hash != std::string_view::npos) {
        auto n = text::parse_int<int>(token.substr(hash + 1));
        if (!n || *n < 0)
            return std::nullopt;
        slot = *n;
        token = token.substr(0, hash);
    }
    auto d = taxonomy.find(token);
    if (!d)
        return std::nullopt;
    return Placeholder{*d, slot};
}

std::vector<Placeholder> detail_references(std::string_view pattern, const Taxonomy& taxonomy)
{
    std::vector<Placeholder> refs;
    std::size_t pos = 0;
    while ((pos = pattern.find('{', pos)) != std::string_view::npos) {
        const auto close = pattern.find('}', pos);
        if (close == std::string_view::npos)
            break;
        if (auto p = parse_placeholder(pattern.substr(pos + 1, close - pos - 1), taxonomy))
            refs.push_back(*p);
        pos = close + 1;
    }
    return refs;
}

std::vector<Placeholder> detail_parameters(const AttackPatternTemplate& t, const Taxonomy& taxonomy)
{
    std::set<Placeholder> structural;
    for (const auto& e : t.events) {
        structural.insert(e.subject);
        if (const auto* p = std::get_if<Placeholder>(&e.object))
            structural.insert(*p);
    }
    std::vector<Placeholder> params;
    for (const auto& e : t.events)
        for (auto& ref : detail_references(e.detail_pattern, taxonomy))
            if (!structural.count(ref) && std::find(params.begin(), params.end(), ref) == params.end())
                params.push_back(ref);
    return params;
}

std::string_view to_string(ViolationKind kind)
{
    switch (kind) {
    case ViolationKind::empty_events: return "EmptyEvents";
    case ViolationKind::bad_technique_id: return "BadTechniqueId";
    case ViolationKind::empty_ability: return "EmptyAbility";
    case ViolationKind::negative_time: return "NegativeTime";
    case ViolationKind::non_monotonic_time: return "NonMonotonicTime";
    case ViolationKind::subject_not_process: return "SubjectNotProcess";
    case ViolationKind::object_kind_mismatch: return "ObjectKindMismatch";
    case ViolationKind::unbound_placeholder: return "UnboundPlaceholder";
    case ViolationKind::dangling_outcome: return "DanglingOutcome";
    }
    return "Violation";
}

std::string Violation::message() const
{
    if (event_index)
        return fmt::format("{} {} at event {}", to_string(kind), what, *event_index);
    return fmt::format("{} {}", to_string(kind), what);
}

std::vector<Violation> validate_template(const AttackPatternTemplate& t)
{
    std::vector<Violation> out;
    if (!is_valid_technique_id(t.ident.technique_id))
        out.push_back({ViolationKind::bad_technique_id, t.ident.technique_id, std::nullopt});
    if (t.ident.ability_id.empty())
        out.push_back({ViolationKind::empty_ability, "ability", std::nullopt});
    if (t.events.empty())
        out.push_back({ViolationKind::empty_events, "events", std::nullopt});

    std::set<Placeholder> bound = t.prerequisites;
    std::set<Placeholder> referenced;
    std::int64_t previous = 0;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        const auto& e = t.events[i];
        if (e.relative_us < 0)
            out.push_back({ViolationKind::negative_time, std::to_string(e.relative_us), i});
        else if (e.relative_us < previous)
            out.push_back({ViolationKind::non_monotonic_time, std::to_string(e.relative_us), i});
        previous = std::max(previous, e.relative_us);

        if (e.subject.descriptor.category != Category::process)
            out.push_back({ViolationKind::subject_not_process, e.subject.token(), i});
        referenced.insert(e.subject);
        if (!bound.count(e.subject)) {
            out.push_back({ViolationKind::unbound_placeholder, e.subject.token(), i});
            bound.insert(e.subject); // report once
        }

        const auto* op = find_operation(e.operation);
        if (const auto* p = std::get_if<Placeholder>(&e.object)) {
            referenced.insert(*p);
            if (op && kind_of(p->descriptor.category) != op->object_kind)
                out.push_back({ViolationKind::object_kind_mismatch, p->token(), i});
            if (object_role(e.operation) == ObjectRole::create) {
                bound.insert(*p);
            } else if (!bound.count(*p)) {
                out.push_back({ViolationKind::unbound_placeholder, p->token(), i});
                bound.insert(*p);
            }
        } else {
            const auto& lit = std::get<SystemEntity>(e.object);
            if (op && lit.kind != op->object_kind)
                out.push_back({ViolationKind::object_kind_mismatch, lit.value, i});
        }
    }
    for (const auto& o : t.outcomes)
        if (!referenced.count(o))
            out.push_back({ViolationKind::dangling_outcome, o.token(), std::nullopt});
    return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

bool needs_quotes(std::string_view s)
{
    return s.empty() || s.find_first_of(" \t\"") != std::string_view::npos;
}

std::string quote(std::string_view s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += "\"\"";
        else
            out.push_back(c);
    }
    out.push_back('"');
    return out;
}

// Reads one whitespace-delimited token starting at `pos`; a token may contain
// a double-quoted section with "" escapes. Returns false at end of line.
bool next_token(std::string_view line, std::size_t& pos, std::string& token, std::size_t line_no)
{
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t'))
        ++pos;
    if (pos >= line.size())
        return false;
    token.clear();
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') {
        if (line[pos] == '"') {
            ++pos;
            for (;;) {
                if (pos >= line.size())
                    throw Error(Errc::syntax, fmt::format("line {}: unterminated quote", line_no), line_no);
                if (line[pos] == '"') {
                    if (pos + 1 < line.size() && line[pos + 1] == '"') {
                        token.push_back('"');
                        pos += 2;
                        continue;
                    }
                    ++pos;
                    break;
                }
                token.push_back(line[pos++]);
            }
        } else {
            token.push_back(line[pos++]);
        }
    }
    return true;
}

std::string render_object(const ObjectRef& object)
{
    if (const auto* p = std::get_if<Placeholder>(&object))
        return p->token();
    const auto& e = std::get<SystemEntity>(object);
    return fmt::format("{}:{}", to_string(e.kind), quote(e.value));
}

enum class Section { header, prerequisites, events, outcomes };

} // namespace

AttackPatternTemplate parse_template(std::string_view text, const Taxonomy& taxonomy)
{
    static const std::regex key_line(R"(^([A-Za-z_]+):\s*(.*)$)");

    AttackPatternTemplate t;
    bool have_stage = false, have_technique = false, have_ability = false, have_events_section = false;
    Section section = Section::header;
    std::size_t line_no = 0;

    auto placeholder_or_throw = [&](std::string_view token) {
        auto p = parse_placeholder(token, taxonomy);
        if (!p)
            throw Error(Errc::syntax, fmt::format("line {}: '{}' is not a category.descriptor placeholder", line_no, token),
                        line_no);
        return *p;
    };

    for (std::string_view raw : text::split_lines(text)) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#')
            continue;

        const bool numeric_start = std::isdigit(static_cast<unsigned char>(line.front())) || line.front() == '-';
        std::cmatch m;
        if (!(section == Section::events && numeric_start) && std::regex_match(line.begin(), line.end(), m, key_line)) {
            const std::string key = to_lower(m[1].str());
            const std::string value(text::trim(m[2].str()));
            if (key == "prerequisites" || key == "events" || key == "outcomes") {
                if (!value.empty())
                    throw Error(Errc::syntax, fmt::format("line {}: section '{}' takes no inline value", line_no, key),
                                line_no);
                section = key == "prerequisites" ? Section::prerequisites
                          : key == "events"      ? Section::events
                                                 : Section::outcomes;
                have_events_section |= section == Section::events;
                continue;
            }
            if (key == "stage") {
                auto stage = parse_stage(value);
                if (!stage)
                    throw Error(Errc::syntax, fmt::format("line {}: unknown stage '{}'", line_no, value), line_no);
                t.ident.stage = *stage;
                have_stage = true;
            } else if (key == "technique") {
                t.ident.technique_id = value;
                have_technique = true;
            } else if (key == "ability") {
                t.ident.ability_id = value;
                have_ability = true;
            } else if (key == "lapse_us") {
                auto lapse = text::parse_int<std::int64_t>(value);
                if (!lapse || *lapse < 0)
                    throw Error(Errc::syntax, fmt::format("line {}: bad lapse_us '{}'", line_no, value), line_no);
                t.default_lapse_us = *lapse;
            } else {
                throw Error(Errc::syntax, fmt::format("line {}: unknown key '{}'", line_no, key), line_no);
            }
            continue;
        }

        switch (section) {
        case Section::header:
            throw Error(Errc::syntax, fmt::format("line {}: content outside any section", line_no), line_no);
        case Section::prerequisites:
            t.prerequisites.insert(placeholder_or_throw(line));
            break;
        case Section::outcomes:
            t.outcomes.insert(placeholder_or_throw(line));
            break;
        case Section::events: {
            std::size_t pos = 0;
            std::string rel_tok, subject_tok, op_tok, object_tok;
            if (!next_token(line, pos, rel_tok, line_no) || !next_token(line, pos, subject_tok, line_no) ||
                !next_token(line, pos, op_tok, line_no) || !next_token(line, pos, object_tok, line_no))
                throw Error(Errc::syntax,
                            fmt::format("line {}: event needs <rel_us> <subject> <operation> <object>", line_no),
                            line_no);
            TemplateEvent ev;
            auto rel = text::parse_int<std::int64_t>(rel_tok);
            if (!rel)
                throw Error(Errc::syntax, fmt::format("line {}: bad relative time '{}'", line_no, rel_tok), line_no);
            ev.relative_us = *rel;
            ev.subject = placeholder_or_throw(subject_tok);
            ev.operation = op_tok;
            if (auto colon = object_tok.find(':'); colon != std::string::npos && colon > 0 &&
                                                   parse_entity_kind(std::string_view(object_tok).substr(0, colon))) {
                SystemEntity lit;
                lit.kind = *parse_entity_kind(std::string_view(object_tok).substr(0, colon));
                lit.value = object_tok.substr(colon + 1);
                if (lit.value.empty())
                    throw Error(Errc::syntax, fmt::format("line {}: empty literal object", line_no), line_no);
                ev.object = std::move(lit);
            } else {
                ev.object = placeholder_or_throw(object_tok);
            }
            ev.detail_pattern = std::string(text::trim(line.substr(std::min(pos, line.size()))));
            t.events.push_back(std::move(ev));
            break;
        }
        }
    }

    if (!have_stage)
        throw Error(Errc::schema, "missing field 'stage'");
    if (!have_technique)
        throw Error(Errc::schema, "missing field 'technique'");
    if (!have_ability)
        throw Error(Errc::schema, "missing field 'ability'");
    if (!have_events_section || t.events.empty())
        throw Error(Errc::schema, "missing field 'events'");

    if (auto violations = validate_template(t); !violations.empty())
        throw Error(Errc::schema, fmt::format("template {} is invalid: {}", t.ident.ability_id, violations.front().message()));
    return t;
}

std::string serialize_template(const AttackPatternTemplate& t)
{
    std::string out;
    out += fmt::format("stage: {}\n", to_string(t.ident.stage));
    out += fmt::format("technique: {}\n", t.ident.technique_id);
    out += fmt::format("ability: {}\n", t.ident.ability_id);
    if (t.default_lapse_us)
        out += fmt::format("lapse_us: {}\n", *t.default_lapse_us);
    out += "prerequisites:\n";
    for (const auto& p : t.prerequisites)
        out += fmt::format("  {}\n", p.token());
    out += "events:\n";
    for (const auto& e : t.events) {
        out += fmt::format("  {} {} {} {}", e.relative_us, e.subject.token(),
                           needs_quotes(e.operation) ? quote(e.operation) : e.operation, render_object(e.object));
        const auto detail = text::trim(e.detail_pattern);
        if (!detail.empty())
            out += fmt::format(" {}", detail);
        out.push_back('\n');
    }
    out += "outcomes:\n";
    for (const auto& o : t.outcomes)
        out += fmt::format("  {}\n", o.token());
    return out;
}

// ---------------------------------------------------------------------------
// Abstraction

namespace {

struct EntityKey {
    EntityKind kind;
    std::string value; // lower-cased for case-insensitive kinds

    friend auto operator<=>(const EntityKey&, const EntityKey&) = default;
};

EntityKey key_of(const SystemEntity& e)
{
    return {e.kind, is_case_insensitive(e.kind) ? to_lower(e.value) : e.value};
}

std::string strip_pid_prefix(std::string_view detail)
{
    static const std::regex pid_prefix(R"(^PID: \d+(, )?)");
    std::cmatch m;
    if (std::regex_search(detail.begin(), detail.end(), m, pid_prefix))
        return std::string(detail.substr(static_cast<std::size_t>(m.length(0))));
    return std::string(detail);
}

// Replaces every occurrence of a known entity value with its placeholder
// reference, preferring the longest match at each position.
std::string generalise_detail(std::string_view detail, const std::vector<std::pair<std::string, std::string>>& values)
{
    std::string out;
    std::size_t i = 0;
    while (i < detail.size()) {
        const std::pair<std::string, std::string>* best = nullptr;
        for (const auto& kv : values)
            if (!kv.first.empty() && detail.substr(i, kv.first.size()) == kv.first &&
                (!best || kv.first.size() > best->first.size()))
                best = &kv;
        if (best) {
            out += "{" + best->second + "}";
            i += best->first.size();
        } else {
            out.push_back(detail[i++]);
        }
    }
    return out;
}

} // namespace

AttackPatternTemplate abstract_template(const LabeledAttackPattern& pattern, const EntityDescriptorTable& table)
{
    if (pattern.events.empty())
        throw Error(Errc::empty_pattern, fmt::format("attack pattern {} has no events", pattern.ident.ability_id));

    AttackPatternTemplate t;
    t.ident = pattern.ident;

    std::map<EntityKey, Placeholder> mapping;
    std::map<CategoryDescriptor, int> next_slot;
    std::map<Placeholder, bool> created, alive;
    std::vector<std::pair<std::string, std::string>> value_tokens;

    auto resolve = [&](const SystemEntity& entity, bool consuming) -> Placeholder {
        auto key = key_of(entity);
        if (auto it = mapping.find(key); it != mapping.end())
            return it->second;
        auto descriptor = lookup_descriptor(entity.value, entity.kind, table);
        if (!descriptor)
            throw Error(Errc::unknown_entity,
                        fmt::format("{} entity '{}' has no descriptor", to_string(entity.kind), entity.value));
        Placeholder p{*descriptor, next_slot[*descriptor]++};
        mapping.emplace(std::move(key), p);
        value_tokens.emplace_back(entity.value, p.token());
        if (consuming)
            t.prerequisites.insert(p);
        return p;
    };

    const std::int64_t t0 = pattern.events.front().time_us;
    std::int64_t previous = t0;
    for (std::size_t i = 0; i < pattern.events.size(); ++i) {
        const auto& ev = pattern.events[i];
        if (ev.time_us < previous)
            throw Error(Errc::schema, fmt::format("attack pattern event {} goes back in time", i), i);
        previous = ev.time_us;

        TemplateEvent te;
        te.relative_us = ev.time_us - t0;
        te.operation = ev.operation;
        te.subject = resolve(ev.subject, true);

        const auto role = object_role(ev.operation);
        if (table.is_literal(ev.object.kind, ev.object.value) &&
            !mapping.count(key_of(ev.object))) {
            te.object = SystemEntity{ev.object.kind, ev.object.value, std::nullopt};
        } else {
            const auto p = resolve(ev.object, role != ObjectRole::create);
            te.object = p;
            if (role == ObjectRole::create) {
                created[p] = true;
                alive[p] = true;
            } else if (role == ObjectRole::remove) {
                alive[p] = false;
            }
        }
        std::string detail = ev.operation == process_create_op ? strip_pid_prefix(ev.detail) : ev.detail;
        te.detail_pattern = std::string(text::trim(generalise_detail(detail, value_tokens)));
        t.events.push_back(std::move(te));
    }

    for (const auto& [p, was_created] : created)
        if (was_created && alive[p])
            t.outcomes.insert(p);
    return t;
}

// ---------------------------------------------------------------------------

void TemplateRepository::add(AttackPatternTemplate t)
{
    if (by_ability_.count(t.ident.ability_id))
        throw Error(Errc::schema, fmt::format("duplicate ability id '{}'", t.ident.ability_id));
    by_ability_.emplace(t.ident.ability_id, templates_.size());
    templates_.push_back(std::make_shared<const AttackPatternTemplate>(std::move(t)));
}

TemplateRepository TemplateRepository::load_directory(const std::filesystem::path& dir, const Taxonomy& taxonomy)
{
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec))
        throw Error(Errc::io, fmt::format("template directory {} does not exist", dir.string()));
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".tpl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    TemplateRepository repo;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in)
            throw Error(Errc::io, fmt::format("cannot read {}", file.string()));
        std::stringstream buffer;
        buffer << in.rdbuf();
        try {
            repo.add(parse_template(buffer.str(), taxonomy));
        } catch (const Error& e) {
            throw Error(e.code(), fmt::format("{}: {}", file.filename().string(), e.what()), e.position());
        }
    }
    return repo;
}

std::vector<TemplateRepository::Ptr> TemplateRepository::by_stage(Stage stage) const
{
    std::vector<Ptr> out;
    for (const auto& t : templates_)
        if (t->ident.stage == stage)
            out.push_back(t);
    return out;
}

TemplateRepository::Ptr TemplateRepository::find(std::string_view ability_id) const
{
    auto it = by_ability_.find(ability_id);
    return it == by_ability_.end() ? nullptr : templates_[it->second];
}

} // namespace auditsynth
