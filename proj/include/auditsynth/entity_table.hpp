#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>

#include "auditsynth/model.hpp"
#include "auditsynth/taxonomy.hpp"

namespace auditsynth {

// Known system entities and their descriptors. Entities registered as
// literals are recognised but never generalised (system binaries, well-known
// registry paths).
class EntityDescriptorTable {
public:
    // false when (kind, value) is already registered.
    bool add(EntityKind kind, std::string_view value, CategoryDescriptor descriptor);
    bool add_literal(EntityKind kind, std::string_view value);

    std::optional<CategoryDescriptor> find(EntityKind kind, std::string_view value) const;
    bool is_literal(EntityKind kind, std::string_view value) const;

    // Adds the other table's rows; rows already known here win.
    void merge(const EntityDescriptorTable& other);

    std::size_t size() const { return entries_.size(); }
    std::size_t literal_count() const { return literals_.size(); }

    // TSV rows: <Kind> <TAB> <value> <TAB> <Category.Descriptor or '-'>
    static EntityDescriptorTable parse(std::string_view text, const Taxonomy& taxonomy = Taxonomy::builtin());
    static EntityDescriptorTable load(const std::string& path, const Taxonomy& taxonomy = Taxonomy::builtin());

private:
    using Key = std::pair<EntityKind, std::string>;
    static Key make_key(EntityKind kind, std::string_view value);

    std::map<Key, CategoryDescriptor> entries_;
    std::set<Key> literals_;
};

std::optional<CategoryDescriptor> lookup_descriptor(std::string_view value, EntityKind kind,
                                                    const EntityDescriptorTable& table);

} // namespace auditsynth
