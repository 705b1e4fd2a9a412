#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "auditsynth/entity_table.hpp"
#include "auditsynth/model.hpp"
#include "auditsynth/rng.hpp"
#include "auditsynth/taxonomy.hpp"
#include "auditsynth/template.hpp"

namespace auditsynth {

struct CorpusDiagnostic {
    std::size_t row;
    std::string message;
};

// Concrete artifact values per descriptor. Pools keep ingestion order and
// hold each value once.
struct ArtifactCorpus {
    std::map<CategoryDescriptor, std::vector<std::string>> pools;
    std::map<std::pair<CategoryDescriptor, std::string>, std::string> source_tags;
    std::vector<CorpusDiagnostic> diagnostics;

    const std::vector<std::string>& pool(const CategoryDescriptor& d) const;
    std::size_t value_count() const;
};

/// Parses the four-column TSV corpus (category, descriptor, value, source_tag).
/// Rows naming descriptors outside the taxonomy are skipped and reported in
/// `diagnostics`. Throws Errc::corpus_syntax for a malformed row and
/// Errc::empty_corpus when no row survives.
ArtifactCorpus ingest_corpus(std::string_view document, const Taxonomy& taxonomy = Taxonomy::builtin());
ArtifactCorpus load_corpus(const std::string& path, const Taxonomy& taxonomy = Taxonomy::builtin());

// Per-campaign counters for the "<category>_<descriptor>_<n>" fallback.
using FallbackCounters = std::map<CategoryDescriptor, int>;

std::string draw_artifact(const CategoryDescriptor& d, const ArtifactCorpus& corpus, Rng& rng,
                          FallbackCounters& counters);

// Synthetic value for a faker-generated descriptor; throws
// Errc::not_faker_descriptor otherwise.
std::string fake_value(const CategoryDescriptor& d, Rng& rng);

std::span<const std::string_view> browser_names();
std::span<const std::string_view> shell_names();

// Descriptor table covering every corpus value plus the browser/shell lists.
EntityDescriptorTable build_entity_table(const ArtifactCorpus& corpus, const Taxonomy& taxonomy = Taxonomy::builtin());

// Values already in use, keyed case-insensitively where Windows would.
class TakenValues {
public:
    void insert(EntityKind kind, std::string_view value);
    bool contains(EntityKind kind, std::string_view value) const;

private:
    std::set<std::pair<EntityKind, std::string>> values_;
};

struct InstantiatedTechnique {
    AttackIdentification ident;
    std::string campaign_id;
    // time_us holds the template-relative offset until the composer places
    // the technique; pid holds a technique-local process key.
    std::vector<Event> events;
    std::vector<std::int64_t> relative_us;
    std::map<Placeholder, std::string> new_values;
    std::map<Placeholder, std::string> bound_values;
    std::int64_t lapse_us = 0;
    std::int64_t start_us = 0;
    std::int64_t end_us = 0;
};

struct InstantiationContext {
    const ArtifactCorpus& corpus;
    FallbackCounters& counters;
    const TakenValues& taken;
    std::string campaign_id;
    const Taxonomy& taxonomy = Taxonomy::builtin();
};

inline constexpr int fresh_value_retries = 100;

InstantiatedTechnique instantiate_template(const AttackPatternTemplate& t,
                                           const std::map<Placeholder, std::string>& bound_values, Rng& rng,
                                           const InstantiationContext& ctx);

} // namespace auditsynth
