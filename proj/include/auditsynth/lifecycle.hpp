#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auditsynth/model.hpp"
#include "auditsynth/rng.hpp"

namespace auditsynth {

using StageSequence = std::vector<Stage>;

// Stochastic policy for drawing lifecycles from the campaign grammar.
struct GrammarParams {
    double continue_prob = 0.6;
    // Weights for EP, IR, ML, MP in that order.
    std::array<double, 4> stage_weights{1.0, 1.0, 1.0, 1.0};
    double cm_prob = 0.9;
    int max_incubation = 12;

    // Throws Errc::config when a field is out of range.
    void validate() const;
};

StageSequence generate_lifecycle(Rng& rng, const GrammarParams& params);

/// Accepted language: IC EF+ (EP|IR|ML|MP)* CM?
///
/// EF may repeat because the known-campaign specs list several foothold
/// techniques in a row. Returns the index of the first stage that cannot be
/// accepted, or the sequence length when the sequence ends too early.
std::optional<std::size_t> first_lifecycle_violation(std::span<const Stage> seq);
bool validate_lifecycle(std::span<const Stage> seq);

// Throws Errc::index_out_of_range or Errc::invalid_lifecycle.
StageSequence parse_stage_indices(std::span<const int> indices);
// Accepts "IC"/"Initial Compromise"/"1" style entries.
StageSequence parse_stage_list(std::span<const std::string> items);

std::string format_stage_indices(std::span<const Stage> seq); // "{1,2,2,4,4,7}"
std::string format_stage_names(std::span<const Stage> seq);   // "[IC,EF,...]"

} // namespace auditsynth
