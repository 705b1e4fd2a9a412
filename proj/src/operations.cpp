#include "auditsynth/operations.hpp"

#include <array>

namespace auditsynth {

namespace {

using K = EntityKind;
using R = ObjectRole;

constexpr std::array<OperationInfo, 36> vocabulary = {{
    {"CreateFile", K::file, R::create},
    {"WriteFile", K::file, R::create},
    {"ReadFile", K::file, R::consume},
    {"CloseFile", K::file, R::consume},
    {"QueryOpen", K::file, R::consume},
    {"QueryDirectory", K::file, R::consume},
    {"QueryBasicInformationFile", K::file, R::consume},
    {"QueryStandardInformationFile", K::file, R::consume},
    {"QueryNetworkOpenInformationFile", K::file, R::consume},
    {"SetBasicInformationFile", K::file, R::consume},
    {"SetDispositionInformationFile", K::file, R::remove},
    {"CreateFileMapping", K::file, R::consume},
    {"FileSystemControl", K::file, R::consume},
    {"Load Image", K::file, R::consume},
    {"RegOpenKey", K::registry, R::consume},
    {"RegCloseKey", K::registry, R::consume},
    {"RegQueryKey", K::registry, R::consume},
    {"RegQueryValue", K::registry, R::consume},
    {"RegEnumKey", K::registry, R::consume},
    {"RegEnumValue", K::registry, R::consume},
    {"RegCreateKey", K::registry, R::create},
    {"RegSetValue", K::registry, R::create},
    {"RegSetInfoKey", K::registry, R::consume},
    {"RegDeleteKey", K::registry, R::remove},
    {"RegDeleteValue", K::registry, R::remove},
    {"TCP Connect", K::network_socket, R::consume},
    {"TCP Send", K::network_socket, R::consume},
    {"TCP Receive", K::network_socket, R::consume},
    {"TCP Disconnect", K::network_socket, R::consume},
    {"UDP Send", K::network_socket, R::consume},
    {"UDP Receive", K::network_socket, R::consume},
    {"ProcessCreate", K::process, R::create},
    {"Process Start", K::process, R::consume},
    {"Process Exit", K::process, R::remove},
    {"Thread Create", K::process, R::consume},
    {"Thread Exit", K::process, R::consume},
}};

} // namespace

std::span<const OperationInfo> operation_vocabulary() { return vocabulary; }

const OperationInfo* find_operation(std::string_view name)
{
    for (const auto& op : vocabulary)
        if (op.name == name)
            return &op;
    return nullptr;
}

bool is_known_operation(std::string_view name) { return find_operation(name) != nullptr; }

EntityKind infer_object_kind(std::string_view operation)
{
    const auto* op = find_operation(operation);
    return op ? op->object_kind : EntityKind::file;
}

ObjectRole object_role(std::string_view operation)
{
    const auto* op = find_operation(operation);
    return op ? op->role : ObjectRole::consume;
}

} // namespace auditsynth
