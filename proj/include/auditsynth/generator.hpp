#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "auditsynth/artifacts.hpp"
#include "auditsynth/composer.hpp"
#include "auditsynth/config.hpp"
#include "auditsynth/export.hpp"
#include "auditsynth/planner.hpp"
#include "auditsynth/template.hpp"

namespace auditsynth {

struct RunOptions {
    unsigned threads = 1;
    std::size_t max_mem_events = 20'000'000;
    std::filesystem::path spill_dir = std::filesystem::temp_directory_path();
};

// Inputs loaded once per generation.
struct GenerationInputs {
    Taxonomy taxonomy;
    TemplateRepository repo;
    ArtifactCorpus corpus;
    std::vector<BenignLog> benign;
    BackgroundPool background;

    static GenerationInputs load(const GenerationConfig& cfg);
};

struct GenerationResult {
    std::vector<PlannedCampaign> campaigns;
    std::vector<MaliciousSequence> sequences;
    std::vector<ManifestRow> manifest;
    OrderedLog log;
    double synthesis_seconds = 0;
    double composition_seconds = 0;
};

// Campaign requests in planning order: pinned specs, then "R1".."Rn" with
// lifecycles drawn from the grammar.
std::vector<CampaignRequest> campaign_requests(const GenerationConfig& cfg);

/// Plans every campaign (in parallel over `threads`), then composes the log.
/// Output is independent of the thread count.
GenerationResult generate(const GenerationConfig& cfg, const GenerationInputs& inputs, const RunOptions& options);

struct OutputFiles {
    std::filesystem::path csv, sidecar, manifest, stats;
};

OutputFiles output_files(const std::filesystem::path& dir);

// Writes the four output files; returns the statistics report.
StatsReport write_outputs(const GenerationResult& result, const std::filesystem::path& dir, bool sparse);

} // namespace auditsynth
