#pragma once

#include <string_view>

namespace auditsynth {

enum class LogLevel { quiet, warning, info };

void set_log_level(LogLevel level);
LogLevel log_level();

// Thread-safe line output to stderr.
void log_warning(std::string_view message);
void log_info(std::string_view message);

} // namespace auditsynth
