#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "auditsynth/artifacts.hpp"
#include "auditsynth/lifecycle.hpp"
#include "auditsynth/model.hpp"
#include "auditsynth/rng.hpp"
#include "auditsynth/template.hpp"

namespace auditsynth {

enum class RecordStatus : std::uint8_t { available, consumed, deleted };

std::string_view to_string(RecordStatus status);

struct EntityRecord {
    CategoryDescriptor descriptor;
    int slot = 0;
    std::optional<std::string> value;
    RecordStatus status = RecordStatus::available;
    std::string provenance = "environment";
};

// An environment entity the campaign may assume exists before its first step.
// An empty value is drawn from the corpus or the faker on seeding.
struct EnvironmentEntry {
    CategoryDescriptor descriptor;
    std::string value;
};

std::vector<EnvironmentEntry> default_environment(const Taxonomy& taxonomy = Taxonomy::builtin());

struct CampaignInfoTable {
    std::vector<EntityRecord> records;
    std::vector<std::pair<Stage, std::string>> executed;

    static CampaignInfoTable with_environment(const std::vector<EnvironmentEntry>& env, Rng& rng,
                                              const ArtifactCorpus& corpus, FallbackCounters& counters);

    // Every bound value, for freshness checks.
    TakenValues taken_values() const;
};

// Prerequisite placeholder -> index into CampaignInfoTable::records.
using Bindings = std::map<Placeholder, std::size_t>;

/// Binds each prerequisite to a distinct non-deleted record with the same
/// descriptor, most recently added first.
std::optional<Bindings> check_prerequisites(const AttackPatternTemplate& t, const CampaignInfoTable& info);

struct Selection {
    TemplateRepository::Ptr tpl;
    Bindings bindings;
};

/// Uniform choice among the stage's satisfiable templates, or the pinned
/// ability. Throws Errc::pinned_unsatisfiable when the pinned ability is
/// unknown, belongs to another stage, or its prerequisites are missing.
std::optional<Selection> select_template(Stage stage, const TemplateRepository& repo, const CampaignInfoTable& info,
                                         Rng& rng, std::optional<std::string_view> pinned = std::nullopt);

struct PlannedStep {
    Stage stage = Stage::IC;
    TemplateRepository::Ptr tpl;
    Bindings bindings;
    std::int64_t lapse_us = 0;
    std::size_t prefix_len = 0;
};

// Records the step's outcomes, consumes its bound prerequisites and marks
// the ones its events delete.
void apply_outcomes(CampaignInfoTable& info, const PlannedStep& step, const InstantiatedTechnique& inst);

struct CampaignPlan {
    std::string campaign_id;
    StageSequence lifecycle;
    std::vector<PlannedStep> steps;
    std::uint64_t seed = 0;
};

struct CampaignRequest {
    std::string id;
    StageSequence lifecycle;
    // One ability per lifecycle entry when pinned.
    std::vector<std::string> abilities;
    std::optional<std::int64_t> duration_us;
    // Per-step pinned lapses; entries left empty are drawn.
    std::vector<std::optional<std::int64_t>> lapse_us;
};

struct PlannerConfig {
    // Fixed attack count per EF/incubation stage occurrence; uniform 1..3 when empty.
    std::optional<int> attacks_per_stage;
    std::int64_t default_duration_us = 810'000'000;
    std::size_t prefix_min = 1;
    std::size_t prefix_max = 5;
    std::vector<EnvironmentEntry> environment = default_environment();
};

struct PlannedCampaign {
    CampaignPlan plan;
    std::vector<InstantiatedTechnique> techniques;
    CampaignInfoTable info;
    // Table built from the environment alone, before step 0.
    CampaignInfoTable initial;
    // Indices into plan.lifecycle of optional stage occurrences left empty.
    std::vector<std::size_t> skipped;
    std::int64_t duration_us = 0;

    StageSequence executed_stages() const;
    std::vector<std::string> executed_abilities() const;
};

// Timing policy: the budget left after template spans and pinned lapses is
// split across the free lapses by normalized unit-exponential weights.
std::vector<std::int64_t> assign_lapses(std::int64_t duration_us, const std::vector<std::int64_t>& spans,
                                        const std::vector<std::optional<std::int64_t>>& pinned, Rng& rng);

/// Throws Errc::planning_failed when IC or EF has no satisfiable template,
/// Errc::pinned_unsatisfiable for a bad pinned ability and Errc::config for
/// malformed requests.
PlannedCampaign plan_campaign(const CampaignRequest& request, const TemplateRepository& repo,
                              const PlannerConfig& config, const ArtifactCorpus& corpus, Rng& rng,
                              const Taxonomy& taxonomy = Taxonomy::builtin());

} // namespace auditsynth
