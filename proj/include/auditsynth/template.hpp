#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "auditsynth/entity_table.hpp"
#include "auditsynth/model.hpp"
#include "auditsynth/taxonomy.hpp"

namespace auditsynth {

struct Placeholder {
    CategoryDescriptor descriptor;
    int slot = 0;

    std::string token() const; // "File.Payload" or "File.Payload#1"

    friend bool operator==(const Placeholder&, const Placeholder&) = default;
    friend std::strong_ordering operator<=>(const Placeholder& a, const Placeholder& b)
    {
        if (auto c = a.descriptor <=> b.descriptor; c != 0)
            return c;
        return a.slot <=> b.slot;
    }
};

std::optional<Placeholder> parse_placeholder(std::string_view token, const Taxonomy& taxonomy);

using ObjectRef = std::variant<Placeholder, SystemEntity>;

struct TemplateEvent {
    std::int64_t relative_us = 0;
    Placeholder subject;
    std::string operation;
    ObjectRef object;
    // Free text; "{Category.Descriptor#n}" is replaced by the bound value.
    std::string detail_pattern;

    friend bool operator==(const TemplateEvent&, const TemplateEvent&) = default;
};

struct AttackPatternTemplate {
    AttackIdentification ident;
    std::vector<TemplateEvent> events;
    std::set<Placeholder> prerequisites;
    std::set<Placeholder> outcomes;
    std::optional<std::int64_t> default_lapse_us;

    // Relative time of the last event.
    std::int64_t span_us() const { return events.empty() ? 0 : events.back().relative_us; }

    friend bool operator==(const AttackPatternTemplate&, const AttackPatternTemplate&) = default;
};

// Placeholders referenced only inside detail patterns (never as subject or
// object). They receive a fresh value on every instantiation.
std::vector<Placeholder> detail_parameters(const AttackPatternTemplate& t, const Taxonomy& taxonomy);

// Placeholder references found in a detail pattern, in order of appearance.
std::vector<Placeholder> detail_references(std::string_view pattern, const Taxonomy& taxonomy);

struct LabeledAttackPattern {
    AttackIdentification ident;
    std::vector<Event> events;
};

enum class ViolationKind {
    empty_events,
    bad_technique_id,
    empty_ability,
    negative_time,
    non_monotonic_time,
    subject_not_process,
    object_kind_mismatch,
    unbound_placeholder,
    dangling_outcome,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string what; // offending placeholder token or field
    std::optional<std::size_t> event_index;

    std::string message() const;
};

std::vector<Violation> validate_template(const AttackPatternTemplate& t);

// Throws Errc::syntax (with line number) or Errc::schema.
AttackPatternTemplate parse_template(std::string_view text, const Taxonomy& taxonomy = Taxonomy::builtin());
std::string serialize_template(const AttackPatternTemplate& t);

// Generalises a labelled trace into a template. Throws Errc::empty_pattern,
// Errc::unknown_entity or Errc::schema (non-monotonic trace).
AttackPatternTemplate abstract_template(const LabeledAttackPattern& pattern, const EntityDescriptorTable& table);

class TemplateRepository {
public:
    using Ptr = std::shared_ptr<const AttackPatternTemplate>;

    // Throws Errc::schema on a duplicate ability id.
    void add(AttackPatternTemplate t);
    // Loads every *.tpl file in lexical filename order.
    static TemplateRepository load_directory(const std::filesystem::path& dir,
                                             const Taxonomy& taxonomy = Taxonomy::builtin());

    const std::vector<Ptr>& all() const { return templates_; }
    std::vector<Ptr> by_stage(Stage stage) const;
    Ptr find(std::string_view ability_id) const;
    std::size_t size() const { return templates_.size(); }
    bool empty() const { return templates_.empty(); }

private:
    std::vector<Ptr> templates_;
    std::map<std::string, std::size_t, std::less<>> by_ability_;
};

} // namespace auditsynth
