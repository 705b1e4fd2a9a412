#include "auditsynth/entity_table.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "auditsynth/error.hpp"
#include "text_util.hpp"

namespace auditsynth {

EntityDescriptorTable::Key EntityDescriptorTable::make_key(EntityKind kind, std::string_view value)
{
    return {kind, is_case_insensitive(kind) ? to_lower(value) : std::string(value)};
}

bool EntityDescriptorTable::add(EntityKind kind, std::string_view value, CategoryDescriptor descriptor)
{
    auto key = make_key(kind, value);
    if (literals_.count(key))
        return false;
    return entries_.emplace(std::move(key), std::move(descriptor)).second;
}

bool EntityDescriptorTable::add_literal(EntityKind kind, std::string_view value)
{
    auto key = make_key(kind, value);
    if (entries_.count(key))
        return false;
    return literals_.insert(std::move(key)).second;
}

std::optional<CategoryDescriptor> EntityDescriptorTable::find(EntityKind kind, std::string_view value) const
{
    auto it = entries_.find(make_key(kind, value));
    if (it == entries_.end())
        return std::nullopt;
    return it->second;
}

bool EntityDescriptorTable::is_literal(EntityKind kind, std::string_view value) const
{
    return literals_.count(make_key(kind, value)) > 0;
}

void EntityDescriptorTable::merge(const EntityDescriptorTable& other)
{
    for (const auto& [key, d] : other.entries_)
        if (!literals_.count(key))
            entries_.emplace(key, d);
    for (const auto& key : other.literals_)
        if (!entries_.count(key))
            literals_.insert(key);
}

EntityDescriptorTable EntityDescriptorTable::parse(std::string_view text, const Taxonomy& taxonomy)
{
    EntityDescriptorTable table;
    std::size_t line_no = 0;
    for (auto line : text::split_lines(text)) {
        ++line_no;
        if (text::trim(line).empty() || text::trim(line).front() == '#')
            continue;
        auto fields = text::split(line, '\t');
        if (fields.size() != 3)
            throw Error(Errc::syntax, fmt::format("entity table line {}: expected 3 fields", line_no), line_no);
        auto kind = parse_entity_kind(text::trim(fields[0]));
        if (!kind)
            throw Error(Errc::syntax, fmt::format("entity table line {}: unknown kind '{}'", line_no, fields[0]),
                        line_no);
        const auto value = fields[1];
        const auto desc = text::trim(fields[2]);
        bool fresh;
        if (desc == "-") {
            fresh = table.add_literal(*kind, value);
        } else {
            auto d = taxonomy.find(desc);
            if (!d)
                throw Error(Errc::syntax, fmt::format("entity table line {}: unknown descriptor '{}'", line_no, desc),
                            line_no);
            if (kind_of(d->category) != *kind)
                throw Error(Errc::syntax,
                            fmt::format("entity table line {}: {} does not fit kind {}", line_no, desc, fields[0]),
                            line_no);
            fresh = table.add(*kind, value, *d);
        }
        if (!fresh)
            throw Error(Errc::syntax, fmt::format("entity table line {}: duplicate entity '{}'", line_no, value),
                        line_no);
    }
    return table;
}

EntityDescriptorTable EntityDescriptorTable::load(const std::string& path, const Taxonomy& taxonomy)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open entity table {}", path));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), taxonomy);
}

std::optional<CategoryDescriptor> lookup_descriptor(std::string_view value, EntityKind kind,
                                                    const EntityDescriptorTable& table)
{
    return table.find(kind, value);
}

} // namespace auditsynth
