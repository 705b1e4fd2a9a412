#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace auditsynth {

enum class EntityKind : std::uint8_t { process, file, registry, network_socket, system, cmdline };

enum class Category : std::uint8_t { file, network, cmdline, process, registry, system };

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view text);

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

EntityKind kind_of(Category category);
Category category_of(EntityKind kind);

// Windows semantics: file and process names compare case-insensitively.
bool is_case_insensitive(EntityKind kind);

/// A (category, descriptor) pair from the loaded taxonomy. Obtain instances
/// through Taxonomy::find / Taxonomy::require rather than building them.
struct CategoryDescriptor {
    Category category = Category::file;
    std::string name;
    bool faker_generated = false;

    std::string token() const; // "File.Payload"

    friend bool operator==(const CategoryDescriptor& a, const CategoryDescriptor& b)
    {
        return a.category == b.category && a.name == b.name;
    }
    friend std::strong_ordering operator<=>(const CategoryDescriptor& a, const CategoryDescriptor& b)
    {
        if (auto c = a.category <=> b.category; c != 0)
            return c;
        return a.name.compare(b.name) <=> 0;
    }
};

struct SystemEntity {
    EntityKind kind = EntityKind::file;
    std::string value;
    std::optional<CategoryDescriptor> descriptor;

    friend bool operator==(const SystemEntity&, const SystemEntity&) = default;
};

/// Empty string when the entity satisfies its invariants, otherwise the reason.
std::string entity_problem(const SystemEntity& entity);

// Lifecycle stages; the integer values are the fixed 1..7 indices.
enum class Stage : std::uint8_t { IC = 1, EF = 2, EP = 3, IR = 4, ML = 5, MP = 6, CM = 7 };

inline constexpr Stage all_stages[] = {Stage::IC, Stage::EF, Stage::EP, Stage::IR,
                                       Stage::ML, Stage::MP, Stage::CM};

std::string_view to_string(Stage stage);     // "IC"
std::string_view stage_title(Stage stage);   // "Initial Compromise"
int stage_index(Stage stage);
std::optional<Stage> stage_from_index(int index);
// Accepts abbreviations, titles (case-insensitive) and "1".."7".
std::optional<Stage> parse_stage(std::string_view text);

struct AttackIdentification {
    Stage stage = Stage::IC;
    std::string technique_id;
    std::string ability_id;

    friend bool operator==(const AttackIdentification&, const AttackIdentification&) = default;
};

bool is_valid_technique_id(std::string_view id);

struct LabelTriple {
    std::string stage_tag = "O";
    std::string technique_tag = "O";
    std::string ability_tag = "O";

    static LabelTriple outside() { return {}; }
    static LabelTriple chunk(const AttackIdentification& ident, bool begin);

    bool is_outside() const { return stage_tag == "O"; }
    // True when the three tags are all "O" or all non-"O".
    bool coupled() const;

    friend bool operator==(const LabelTriple&, const LabelTriple&) = default;
};

struct Event {
    std::uint64_t seq = 0;
    std::int64_t time_us = 0;
    SystemEntity subject;
    // Before process linking this holds a source-local process key.
    std::uint64_t pid = 0;
    std::string operation;
    SystemEntity object;
    std::string result;
    std::string detail;
    LabelTriple label;
    std::optional<std::string> campaign_id;
    // Source-local key of the process created by a ProcessCreate event; 0 otherwise.
    std::uint64_t child_local = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

std::strong_ordering compare_events(const Event& a, const Event& b);

struct EventLess {
    bool operator()(const Event& a, const Event& b) const { return compare_events(a, b) < 0; }
};

// Microseconds since the Unix epoch <-> "2024-03-01T09:00:00.000000Z".
std::string format_timestamp(std::int64_t time_us);
std::optional<std::int64_t> parse_timestamp(std::string_view text);

std::string to_lower(std::string_view text);
bool iequals(std::string_view a, std::string_view b);

} // namespace auditsynth
