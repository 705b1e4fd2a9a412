#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "auditsynth/composer.hpp"
#include "auditsynth/lifecycle.hpp"
#include "auditsynth/model.hpp"

namespace auditsynth {

// ---- log and sidecar -------------------------------------------------------

std::uint64_t emit_procmon_csv(const OrderedLog& log, std::ostream& out);
std::uint64_t emit_procmon_csv(const std::vector<Event>& events, std::ostream& out);

// JSON line with keys event_index, campaign_id, stage_tag, technique_tag,
// ability_tag (in that order), without the trailing newline.
std::string sidecar_record(const Event& e);

std::uint64_t emit_label_sidecar(const OrderedLog& log, std::ostream& out, bool sparse = false);
std::uint64_t emit_label_sidecar(const std::vector<Event>& events, std::ostream& out, bool sparse = false);

struct SidecarRecord {
    std::uint64_t event_index = 0;
    std::optional<std::string> campaign_id;
    LabelTriple label;
};

// Throws Errc::syntax with the 1-based line number.
std::vector<SidecarRecord> read_sidecar(std::istream& in);

struct Finding {
    std::uint64_t index;
    std::string message;
};

/// BIO2 audit: tag shape, coupling of the three tags, and every I-<id>
/// immediately preceded within its campaign by B-<id> or I-<id>.
/// `expected_rows` enables the dense-index check for non-sparse sidecars.
std::vector<Finding> check_bio2(const std::vector<SidecarRecord>& records,
                                std::optional<std::uint64_t> expected_rows = std::nullopt);

/// Lineage audit over a finalized stream: every subject pid is a root or was
/// named by an earlier ProcessCreate ("PID: n" detail) whose object matches
/// the process name.
std::vector<Finding> check_lineage(const std::vector<Event>& events);

class LineageAuditor {
public:
    void feed(const Event& e, std::uint64_t index);
    const std::vector<Finding>& findings() const { return findings_; }

private:
    std::map<std::uint64_t, std::string> created_;
    std::vector<Finding> findings_;
};

// ---- manifest ----------------------------------------------------------------

inline constexpr std::string_view manifest_header =
    "id,lifecycle,stages,abilities,seed,step_start_us,step_end_us,lapse_us,skipped";

struct ManifestRow {
    std::string id;
    StageSequence lifecycle; // as requested
    StageSequence stages;    // one per executed step
    std::vector<std::string> abilities;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> step_start_us;
    std::vector<std::int64_t> step_end_us;
    std::vector<std::int64_t> lapse_us;
    std::vector<std::size_t> skipped; // positions in `lifecycle`

    friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

std::uint64_t emit_manifest(const std::vector<ManifestRow>& rows, std::ostream& out);
std::vector<ManifestRow> read_manifest(std::istream& in);

// ---- statistics ----------------------------------------------------------------

struct StatsReport {
    std::uint64_t total_events = 0;
    std::uint64_t malicious_events = 0;
    std::uint64_t distinct_entities = 0;
    std::uint64_t csv_bytes = 0;
    std::int64_t first_us = 0;
    std::int64_t last_us = 0;
    std::map<std::string, std::uint64_t> per_technique;

    std::int64_t span_us() const { return total_events ? last_us - first_us : 0; }
    std::string to_text() const;

    friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

// Single-pass accumulator; feed events in stream order.
class StatsAccumulator {
public:
    void feed(const Event& e);
    StatsReport report(std::uint64_t csv_bytes) const;

private:
    StatsReport r_;
    std::set<std::pair<EntityKind, std::string>> entities_;
};

StatsReport compute_stats(const std::vector<Event>& events, std::uint64_t csv_bytes);
StatsReport compute_stats(const OrderedLog& log, std::uint64_t csv_bytes);
// Re-reads an emitted CSV and its sidecar (dense or sparse).
StatsReport compute_stats(const std::filesystem::path& csv, const std::filesystem::path& sidecar);
StatsReport parse_stats(std::string_view text);

// Writes CSV, sidecar and statistics in one merge pass over the log.
struct EmitResult {
    std::uint64_t csv_bytes = 0;
    std::uint64_t sidecar_bytes = 0;
    StatsReport stats;
};

EmitResult emit_all(const OrderedLog& log, std::ostream& csv, std::ostream& sidecar, bool sparse);

} // namespace auditsynth
