#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auditsynth/model.hpp"

namespace auditsynth {

// Category/descriptor vocabulary. Text form is one row per descriptor:
//   <Category> <TAB> <Descriptor> <TAB> <0|1 faker flag>
// Blank lines and '#' comments are ignored.
class Taxonomy {
public:
    static const Taxonomy& builtin();
    static std::string_view builtin_text();
    static Taxonomy parse(std::string_view text);
    static Taxonomy load(const std::string& path);

    // Lookup ignores case, spaces and underscores: "process.browser" and
    // "Network.Host IP" both resolve.
    std::optional<CategoryDescriptor> find(Category category, std::string_view descriptor) const;
    std::optional<CategoryDescriptor> find(std::string_view token) const;
    CategoryDescriptor require(std::string_view token) const; // throws Errc::schema

    std::span<const CategoryDescriptor> all() const { return entries_; }
    std::string to_text() const;

private:
    std::vector<CategoryDescriptor> entries_;
};

} // namespace auditsynth
