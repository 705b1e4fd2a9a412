#include "auditsynth/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace auditsynth {

namespace {
std::atomic<LogLevel> current_level{LogLevel::warning};
std::mutex output_mutex;
} // namespace

void set_log_level(LogLevel level) { current_level = level; }
LogLevel log_level() { return current_level; }

void log_warning(std::string_view message)
{
    if (current_level.load() < LogLevel::warning)
        return;
    std::lock_guard lock(output_mutex);
    std::cerr << "warning: " << message << '\n';
}

void log_info(std::string_view message)
{
    if (current_level.load() < LogLevel::info)
        return;
    std::lock_guard lock(output_mutex);
    std::cerr << message << '\n';
}

} // namespace auditsynth
