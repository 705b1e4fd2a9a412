#include "auditsynth/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include <fmt/format.h>

namespace auditsynth {

namespace {

constexpr std::array<std::string_view, 6> kind_names = {"Process", "File", "Registry", "Network", "System", "Cmdline"};
constexpr std::array<std::string_view, 6> category_names = {"File", "Network", "Cmdline", "Process", "Registry", "System"};

constexpr std::array<std::string_view, 7> stage_abbrevs = {"IC", "EF", "EP", "IR", "ML", "MP", "CM"};
constexpr std::array<std::string_view, 7> stage_titles = {
    "Initial Compromise",      "Establish Foothold", "Escalate Privileges", "Internal Reconnaissance",
    "Move Laterally",          "Maintain Presence",  "Complete Mission",
};

// Howard Hinnant's civil-calendar conversions.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d)
{
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
    std::int64_t year;
    unsigned month;
    unsigned day;
};

constexpr Civil civil_from_days(std::int64_t z)
{
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

std::int64_t floor_div(std::int64_t a, std::int64_t b)
{
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0)))
        --q;
    return q;
}

} // namespace

std::string_view to_string(EntityKind kind) { return kind_names[static_cast<std::size_t>(kind)]; }

std::optional<EntityKind> parse_entity_kind(std::string_view text)
{
    for (std::size_t i = 0; i < kind_names.size(); ++i)
        if (iequals(text, kind_names[i]))
            return static_cast<EntityKind>(i);
    if (iequals(text, "NetworkSocket"))
        return EntityKind::network_socket;
    return std::nullopt;
}

std::string_view to_string(Category category) { return category_names[static_cast<std::size_t>(category)]; }

std::optional<Category> parse_category(std::string_view text)
{
    for (std::size_t i = 0; i < category_names.size(); ++i)
        if (iequals(text, category_names[i]))
            return static_cast<Category>(i);
    return std::nullopt;
}

EntityKind kind_of(Category category)
{
    switch (category) {
    case Category::file: return EntityKind::file;
    case Category::network: return EntityKind::network_socket;
    case Category::cmdline: return EntityKind::cmdline;
    case Category::process: return EntityKind::process;
    case Category::registry: return EntityKind::registry;
    case Category::system: return EntityKind::system;
    }
    return EntityKind::file;
}

Category category_of(EntityKind kind)
{
    switch (kind) {
    case EntityKind::process: return Category::process;
    case EntityKind::file: return Category::file;
    case EntityKind::registry: return Category::registry;
    case EntityKind::network_socket: return Category::network;
    case EntityKind::system: return Category::system;
    case EntityKind::cmdline: return Category::cmdline;
    }
    return Category::file;
}

bool is_case_insensitive(EntityKind kind) { return kind == EntityKind::file || kind == EntityKind::process; }

std::string CategoryDescriptor::token() const { return fmt::format("{}.{}", to_string(category), name); }

std::string entity_problem(const SystemEntity& entity)
{
    if (entity.value.empty())
        return "entity value is empty";
    if (entity.descriptor && kind_of(entity.descriptor->category) != entity.kind)
        return fmt::format("descriptor {} does not fit a {} entity", entity.descriptor->token(), to_string(entity.kind));
    return {};
}

std::string_view to_string(Stage stage) { return stage_abbrevs[stage_index(stage) - 1]; }
std::string_view stage_title(Stage stage) { return stage_titles[stage_index(stage) - 1]; }
int stage_index(Stage stage) { return static_cast<int>(stage); }

std::optional<Stage> stage_from_index(int index)
{
    if (index < 1 || index > 7)
        return std::nullopt;
    return static_cast<Stage>(index);
}

std::optional<Stage> parse_stage(std::string_view text)
{
    for (std::size_t i = 0; i < stage_abbrevs.size(); ++i)
        if (iequals(text, stage_abbrevs[i]) || iequals(text, stage_titles[i]))
            return static_cast<Stage>(i + 1);
    if (text.size() == 1 && text[0] >= '1' && text[0] <= '7')
        return static_cast<Stage>(text[0] - '0');
    return std::nullopt;
}

bool is_valid_technique_id(std::string_view id)
{
    static const std::regex pattern(R"(T\d{4}(\.\d{3})?)");
    return std::regex_match(id.begin(), id.end(), pattern);
}

LabelTriple LabelTriple::chunk(const AttackIdentification& ident, bool begin)
{
    const std::string_view prefix = begin ? "B-" : "I-";
    return {fmt::format("{}{}", prefix, to_string(ident.stage)), fmt::format("{}{}", prefix, ident.technique_id),
            fmt::format("{}{}", prefix, ident.ability_id)};
}

bool LabelTriple::coupled() const
{
    const bool s = stage_tag == "O";
    return s == (technique_tag == "O") && s == (ability_tag == "O");
}

std::strong_ordering compare_events(const Event& a, const Event& b)
{
    if (auto c = a.time_us <=> b.time_us; c != 0)
        return c;
    return a.seq <=> b.seq;
}

std::string format_timestamp(std::int64_t time_us)
{
    const std::int64_t days = floor_div(time_us, 86'400'000'000LL);
    std::int64_t rem = time_us - days * 86'400'000'000LL;
    const Civil c = civil_from_days(days);
    const auto hh = rem / 3'600'000'000LL;
    rem %= 3'600'000'000LL;
    const auto mm = rem / 60'000'000LL;
    rem %= 60'000'000LL;
    const auto ss = rem / 1'000'000LL;
    const auto us = rem % 1'000'000LL;
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:06}Z", c.year, c.month, c.day, hh, mm, ss, us);
}

std::optional<std::int64_t> parse_timestamp(std::string_view text)
{
    // YYYY-MM-DDTHH:MM:SS[.f{1,6}]Z
    auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
        if (pos + n > text.size())
            return std::nullopt;
        int v = 0;
        for (std::size_t i = pos; i < pos + n; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i])))
                return std::nullopt;
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    if (text.size() < 20 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
        text[13] != ':' || text[16] != ':')
        return std::nullopt;
    auto y = digits(0, 4), mo = digits(5, 2), d = digits(8, 2), h = digits(11, 2), mi = digits(14, 2),
         s = digits(17, 2);
    if (!y || !mo || !d || !h || !mi || !s || *mo < 1 || *mo > 12 || *d < 1 || *d > 31 || *h > 23 || *mi > 59 ||
        *s > 60)
        return std::nullopt;
    std::size_t pos = 19;
    std::int64_t frac = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t n = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (n == 6)
                return std::nullopt;
            frac = frac * 10 + (text[pos] - '0');
            ++pos;
            ++n;
        }
        if (n == 0)
            return std::nullopt;
        for (; n < 6; ++n)
            frac *= 10;
    }
    if (pos + 1 != text.size() || text[pos] != 'Z')
        return std::nullopt;
    const std::int64_t days = days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d));
    return ((days * 24 + *h) * 60 + *mi) * 60'000'000LL + static_cast<std::int64_t>(*s) * 1'000'000LL + frac;
}

std::string to_lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

} // namespace auditsynth
