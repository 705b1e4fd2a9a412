#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "auditsynth/lifecycle.hpp"
#include "auditsynth/planner.hpp"

namespace auditsynth {

struct BenignSource {
    std::filesystem::path path;
    // Offset from the log start; drawn uniformly when empty.
    std::optional<std::int64_t> offset_us;
};

struct GenerationConfig {
    std::uint64_t master_seed = 1;
    std::int64_t duration_us = 900'000'000;
    std::int64_t start_us = 1'709'283'600'000'000; // 2024-03-01T09:00:00Z
    std::filesystem::path templates;
    std::filesystem::path corpus;
    std::optional<std::filesystem::path> taxonomy;
    std::optional<std::filesystem::path> background;
    bool background_fill = true;
    std::vector<BenignSource> benign;
    std::int64_t benign_slack_us = 0;
    // Defaults to 5% / 90% of the log duration.
    std::optional<std::int64_t> campaign_offset_us;
    std::optional<std::int64_t> campaign_duration_us;
    GrammarParams grammar;
    PlannerConfig planner;
    int random_campaigns = 0;
    std::vector<CampaignRequest> campaigns;

    std::int64_t campaign_start_us() const { return start_us + campaign_offset_us.value_or(duration_us / 20); }
    std::int64_t default_campaign_duration_us() const
    {
        return campaign_duration_us.value_or(duration_us / 10 * 9);
    }
    // Throws Errc::config.
    void validate() const;
};

// "15min", "1hour", "1day", "90s", "2.5h" or a plain number of seconds.
std::optional<std::int64_t> parse_duration_us(std::string_view text);

/// YAML config; relative paths resolve against `base_dir`. Throws Errc::config.
GenerationConfig parse_config(std::string_view yaml, const std::filesystem::path& base_dir,
                              const Taxonomy& taxonomy = Taxonomy::builtin());
GenerationConfig load_config(const std::filesystem::path& path);

} // namespace auditsynth
