#include "auditsynth/lifecycle.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include <fmt/format.h>

#include "auditsynth/error.hpp"

namespace auditsynth {

namespace {

constexpr std::array<Stage, 4> incubation_stages = {Stage::EP, Stage::IR, Stage::ML, Stage::MP};

bool is_incubation(Stage s) { return s == Stage::EP || s == Stage::IR || s == Stage::ML || s == Stage::MP; }

} // namespace

void GrammarParams::validate() const
{
    if (!(continue_prob > 0.0 && continue_prob < 1.0))
        throw Error(Errc::config, fmt::format("continue_prob must lie in (0,1), got {}", continue_prob));
    if (!(cm_prob >= 0.0 && cm_prob <= 1.0))
        throw Error(Errc::config, fmt::format("cm_prob must lie in [0,1], got {}", cm_prob));
    if (max_incubation < 0)
        throw Error(Errc::config, "max_incubation must be >= 0");
    if (std::any_of(stage_weights.begin(), stage_weights.end(), [](double w) { return !(w >= 0.0); }))
        throw Error(Errc::config, "stage weights must be >= 0");
    if (std::accumulate(stage_weights.begin(), stage_weights.end(), 0.0) <= 0.0)
        throw Error(Errc::config, "at least one stage weight must be positive");
}

StageSequence generate_lifecycle(Rng& rng, const GrammarParams& params)
{
    params.validate();
    StageSequence seq{Stage::IC, Stage::EF};
    const double total = std::accumulate(params.stage_weights.begin(), params.stage_weights.end(), 0.0);
    for (int n = 0; n < params.max_incubation && rng.chance(params.continue_prob); ++n) {
        double r = rng.unit() * total;
        std::size_t pick = 0;
        for (; pick + 1 < incubation_stages.size(); ++pick) {
            if (r < params.stage_weights[pick])
                break;
            r -= params.stage_weights[pick];
        }
        // Skip zero-weight tail picks caused by rounding.
        while (params.stage_weights[pick] <= 0.0)
            pick = pick == 0 ? incubation_stages.size() - 1 : pick - 1;
        seq.push_back(incubation_stages[pick]);
    }
    if (rng.chance(params.cm_prob))
        seq.push_back(Stage::CM);
    return seq;
}

std::optional<std::size_t> first_lifecycle_violation(std::span<const Stage> seq)
{
    // States: 0 start, 1 after IC, 2 in EF+, 3 in incubation, 4 after CM.
    int state = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const Stage s = seq[i];
        switch (state) {
        case 0:
            if (s != Stage::IC)
                return i;
            state = 1;
            break;
        case 1:
            if (s != Stage::EF)
                return i;
            state = 2;
            break;
        case 2:
            if (s == Stage::EF)
                break;
            [[fallthrough]];
        case 3:
            if (is_incubation(s))
                state = 3;
            else if (s == Stage::CM)
                state = 4;
            else
                return i;
            break;
        default:
            return i;
        }
    }
    if (state < 2)
        return seq.size();
    return std::nullopt;
}

bool validate_lifecycle(std::span<const Stage> seq) { return !first_lifecycle_violation(seq).has_value(); }

StageSequence parse_stage_indices(std::span<const int> indices)
{
    StageSequence seq;
    seq.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto stage = stage_from_index(indices[i]);
        if (!stage)
            throw Error(Errc::index_out_of_range, fmt::format("stage index {} at position {} is outside 1..7", indices[i], i),
                        i);
        seq.push_back(*stage);
    }
    if (auto bad = first_lifecycle_violation(seq))
        throw Error(Errc::invalid_lifecycle,
                    fmt::format("lifecycle {} is not accepted (position {})", format_stage_indices(seq), *bad), *bad);
    return seq;
}

StageSequence parse_stage_list(std::span<const std::string> items)
{
    std::vector<int> indices;
    indices.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (auto stage = parse_stage(items[i])) {
            indices.push_back(stage_index(*stage));
            continue;
        }
        int value = 0;
        auto [ptr, ec] = std::from_chars(items[i].data(), items[i].data() + items[i].size(), value);
        if (ec == std::errc{} && ptr == items[i].data() + items[i].size())
            throw Error(Errc::index_out_of_range, fmt::format("stage index {} at position {} is outside 1..7", value, i), i);
        throw Error(Errc::config, fmt::format("unknown stage '{}' at position {}", items[i], i), i);
    }
    return parse_stage_indices(indices);
}

std::string format_stage_indices(std::span<const Stage> seq)
{
    std::string out = "{";
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i)
            out.push_back(',');
        out += std::to_string(stage_index(seq[i]));
    }
    out.push_back('}');
    return out;
}

std::string format_stage_names(std::span<const Stage> seq)
{
    std::string out = "[";
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i)
            out.push_back(',');
        out += to_string(seq[i]);
    }
    out.push_back(']');
    return out;
}

} // namespace auditsynth
