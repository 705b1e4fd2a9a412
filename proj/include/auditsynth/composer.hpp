#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "auditsynth/artifacts.hpp"
#include "auditsynth/model.hpp"
#include "auditsynth/rng.hpp"

namespace auditsynth {

// A recorded benign trace. Event times hold offsets from the first row until
// the log is composed.
struct BenignLog {
    std::string name;
    std::vector<Event> events;
    std::int64_t start_us = 0;
    std::int64_t length_us = 0;
};

/// Throws Errc::csv_parse or Errc::non_monotonic_time (a row earlier than
/// the latest preceding row by more than `slack_us`).
BenignLog load_benign_log(std::istream& in, std::int64_t start_us, std::int64_t slack_us = 0);
BenignLog load_benign_file(const std::filesystem::path& path, std::int64_t start_us, std::int64_t slack_us = 0);

// Ambient events used for tiling and for benign prefixes.
struct BackgroundPool {
    std::vector<Event> events;
    std::int64_t length_us = 0;

    static BackgroundPool from(BenignLog log);
};

struct MaliciousStep {
    std::size_t prefix_len = 0;
    std::vector<Event> prefix;
    InstantiatedTechnique tq;
};

struct MaliciousSequence {
    std::string campaign_id;
    std::int64_t start_us = 0;
    std::vector<MaliciousStep> steps;
};

inline constexpr std::uint64_t explorer_pid = 1000;
inline constexpr std::uint64_t services_pid = 1001;
inline constexpr std::uint64_t first_dynamic_pid = 1002;

struct SyntheticLogOptions {
    std::size_t max_mem_events = 20'000'000;
    // Off only for merge-only uses where pids are already global.
    bool link = true;
    std::filesystem::path spill_dir = std::filesystem::temp_directory_path();
};

class SpillStore;

// Finalized, time-ordered stream. Iteration merges spilled segments with the
// in-memory runs and numbers events densely from 0.
class OrderedLog {
public:
    OrderedLog() = default;

    std::size_t size() const { return size_; }
    void for_each(const std::function<void(const Event&)>& fn) const;
    std::vector<Event> to_vector() const;

private:
    friend class SyntheticLog;
    std::vector<std::vector<Event>> runs_;
    std::shared_ptr<SpillStore> spill_;
    std::size_t size_ = 0;
};

/// The growing synthetic audit log. Sources are added as runs; each run is
/// time-ordered and owns a private pid namespace (Event::pid and
/// Event::child_local hold run-local keys until linking).
class SyntheticLog {
public:
    explicit SyntheticLog(SyntheticLogOptions options = {});
    ~SyntheticLog();
    SyntheticLog(SyntheticLog&&) noexcept;
    SyntheticLog& operator=(SyntheticLog&&) noexcept;

    void add_run(std::vector<Event> events);

    // Assigns global pids to every pending run, adding a ProcessCreate from a
    // root shell for processes with no creator in their run.
    void link_processes();

    OrderedLog finalize();

    std::size_t size() const { return total_; }
    std::size_t spill_count() const;
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& lineage() const { return lineage_; }
    const std::map<std::uint64_t, std::string>& pid_registry() const { return registry_; }

private:
    void link_run(std::vector<Event>& run, std::uint64_t seq_base);
    void spill();

    struct Run {
        std::vector<Event> events;
        std::uint64_t seq_base = 0;
        bool linked = false;
    };

    SyntheticLogOptions options_;
    std::vector<Run> runs_;
    std::shared_ptr<SpillStore> spill_;
    std::size_t in_memory_ = 0;
    std::size_t total_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_pid_ = first_dynamic_pid;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> lineage_;
    std::map<std::uint64_t, std::string> registry_;
};

void compose_benign(SyntheticLog& sa, const BenignLog& ba);

// Tiles the pool back to back over [start_us, start_us + duration_us).
// Returns the number of events added.
std::size_t compose_background(SyntheticLog& sa, const BackgroundPool& pool, std::int64_t start_us,
                               std::int64_t duration_us);

/// Places each technique at end(previous) + lapse, with sampled benign
/// prefixes inside the lapse window, and fills the techniques' start/end.
/// Throws Errc::lapse_too_small or Errc::empty_background.
void compose_malicious(SyntheticLog& sa, MaliciousSequence& ma, const BackgroundPool& pool, Rng& rng);

// Parses the leading "PID: n" of a ProcessCreate detail.
std::optional<std::uint64_t> detail_child_pid(std::string_view detail);

} // namespace auditsynth
