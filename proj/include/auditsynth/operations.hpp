#pragma once

#include <span>
#include <string_view>

#include "auditsynth/model.hpp"

namespace auditsynth {

// What an operation does to its object entity. Creating operations make the
// object exist (or rewrite it); deleting ones end its lifetime; everything
// else requires the object to exist already.
enum class ObjectRole : std::uint8_t { consume, create, remove };

struct OperationInfo {
    std::string_view name;
    EntityKind object_kind;
    ObjectRole role;
};

// The fixed Procmon-style operation vocabulary.
std::span<const OperationInfo> operation_vocabulary();

const OperationInfo* find_operation(std::string_view name);
bool is_known_operation(std::string_view name);

// Unknown operations default to a consumed File object.
EntityKind infer_object_kind(std::string_view operation);
ObjectRole object_role(std::string_view operation);

inline constexpr std::string_view process_create_op = "ProcessCreate";

} // namespace auditsynth
