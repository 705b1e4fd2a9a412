#include "auditsynth/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "auditsynth/error.hpp"
#include "auditsynth/log.hpp"
#include "auditsynth/operations.hpp"

namespace auditsynth {

std::string_view to_string(RecordStatus status)
{
    switch (status) {
    case RecordStatus::available: return "available";
    case RecordStatus::consumed: return "consumed";
    case RecordStatus::deleted: return "deleted";
    }
    return "?";
}

std::vector<EnvironmentEntry> default_environment(const Taxonomy& taxonomy)
{
    std::vector<EnvironmentEntry> env;
    for (auto [token, value] : std::initializer_list<std::pair<std::string_view, std::string_view>>{
             {"Process.Browser", ""},
             {"Process.Explorer", "explorer.exe"},
             {"Network.MailServer", ""},
             {"System.Host", ""},
             {"System.User", ""},
             {"Network.C2", ""},
             {"Network.HostIP", ""},
             {"Network.HostMachine", ""},
         }) {
        if (auto d = taxonomy.find(token))
            env.push_back({*d, std::string(value)});
    }
    return env;
}

CampaignInfoTable CampaignInfoTable::with_environment(const std::vector<EnvironmentEntry>& env, Rng& rng,
                                                      const ArtifactCorpus& corpus, FallbackCounters& counters)
{
    CampaignInfoTable info;
    for (const auto& e : env) {
        EntityRecord r;
        r.descriptor = e.descriptor;
        if (!e.value.empty())
            r.value = e.value;
        else if (e.descriptor.faker_generated)
            r.value = fake_value(e.descriptor, rng);
        else
            r.value = draw_artifact(e.descriptor, corpus, rng, counters);
        info.records.push_back(std::move(r));
    }
    return info;
}

TakenValues CampaignInfoTable::taken_values() const
{
    TakenValues taken;
    for (const auto& r : records)
        if (r.value)
            taken.insert(kind_of(r.descriptor.category), *r.value);
    return taken;
}

std::optional<Bindings> check_prerequisites(const AttackPatternTemplate& t, const CampaignInfoTable& info)
{
    Bindings bindings;
    std::vector<bool> used(info.records.size(), false);
    for (const auto& p : t.prerequisites) {
        bool found = false;
        for (std::size_t i = info.records.size(); i-- > 0;) {
            const auto& r = info.records[i];
            if (used[i] || r.status == RecordStatus::deleted || r.descriptor != p.descriptor)
                continue;
            used[i] = true;
            bindings[p] = i;
            found = true;
            break;
        }
        if (!found)
            return std::nullopt;
    }
    return bindings;
}

namespace {

std::string missing_descriptors(const AttackPatternTemplate& t, const CampaignInfoTable& info)
{
    std::vector<std::string> missing;
    for (const auto& p : t.prerequisites) {
        const auto have = std::count_if(info.records.begin(), info.records.end(), [&](const EntityRecord& r) {
            return r.status != RecordStatus::deleted && r.descriptor == p.descriptor;
        });
        const auto need = std::count_if(t.prerequisites.begin(), t.prerequisites.end(),
                                        [&](const Placeholder& q) { return q.descriptor == p.descriptor; });
        if (have < need && std::find(missing.begin(), missing.end(), p.descriptor.token()) == missing.end())
            missing.push_back(p.descriptor.token());
    }
    return fmt::format("{}", fmt::join(missing, ", "));
}

bool is_mandatory(Stage s) { return s == Stage::IC || s == Stage::EF; }

} // namespace

std::optional<Selection> select_template(Stage stage, const TemplateRepository& repo, const CampaignInfoTable& info,
                                         Rng& rng, std::optional<std::string_view> pinned)
{
    if (pinned) {
        auto t = repo.find(*pinned);
        if (!t)
            throw Error(Errc::pinned_unsatisfiable, fmt::format("ability {} is not in the repository", *pinned));
        if (t->ident.stage != stage)
            throw Error(Errc::pinned_unsatisfiable, fmt::format("ability {} belongs to stage {}, not {}", *pinned,
                                                                to_string(t->ident.stage), to_string(stage)));
        auto b = check_prerequisites(*t, info);
        if (!b)
            throw Error(Errc::pinned_unsatisfiable,
                        fmt::format("ability {} is missing {}", *pinned, missing_descriptors(*t, info)));
        return Selection{t, std::move(*b)};
    }
    std::vector<Selection> candidates;
    for (const auto& t : repo.by_stage(stage))
        if (auto b = check_prerequisites(*t, info))
            candidates.push_back({t, std::move(*b)});
    if (candidates.empty())
        return std::nullopt;
    return std::move(candidates[rng.below(candidates.size())]);
}

void apply_outcomes(CampaignInfoTable& info, const PlannedStep& step, const InstantiatedTechnique& inst)
{
    const auto& t = *step.tpl;
    for (const auto& [p, index] : step.bindings)
        if (info.records[index].status == RecordStatus::available)
            info.records[index].status = RecordStatus::consumed;
    for (const auto& e : t.events) {
        const auto* p = std::get_if<Placeholder>(&e.object);
        if (!p || object_role(e.operation) != ObjectRole::remove)
            continue;
        if (auto it = step.bindings.find(*p); it != step.bindings.end())
            info.records[it->second].status = RecordStatus::deleted;
    }
    for (const auto& p : t.outcomes) {
        EntityRecord r;
        r.descriptor = p.descriptor;
        r.slot = p.slot;
        if (auto it = inst.new_values.find(p); it != inst.new_values.end())
            r.value = it->second;
        else if (auto jt = inst.bound_values.find(p); jt != inst.bound_values.end())
            r.value = jt->second;
        r.provenance = t.ident.ability_id;
        info.records.push_back(std::move(r));
    }
    info.executed.emplace_back(step.stage, t.ident.ability_id);
}

StageSequence PlannedCampaign::executed_stages() const
{
    StageSequence out;
    for (const auto& s : plan.steps)
        out.push_back(s.stage);
    return out;
}

std::vector<std::string> PlannedCampaign::executed_abilities() const
{
    std::vector<std::string> out;
    for (const auto& s : plan.steps)
        out.push_back(s.tpl->ident.ability_id);
    return out;
}

std::vector<std::int64_t> assign_lapses(std::int64_t duration_us, const std::vector<std::int64_t>& spans,
                                        const std::vector<std::optional<std::int64_t>>& pinned, Rng& rng)
{
    const auto n = spans.size();
    std::int64_t budget = duration_us - std::accumulate(spans.begin(), spans.end(), std::int64_t{0});
    std::vector<std::int64_t> lapses(n, 0);
    std::vector<double> weights(n, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j < pinned.size() && pinned[j]) {
            lapses[j] = *pinned[j];
            budget -= *pinned[j];
        } else {
            weights[j] = rng.exponential();
            total += weights[j];
        }
    }
    if (budget < 0) {
        log_warning(fmt::format("campaign spans and pinned lapses exceed the {} us duration", duration_us));
        budget = 0;
    }
    for (std::size_t j = 0; j < n; ++j)
        if (!(j < pinned.size() && pinned[j]) && total > 0.0)
            lapses[j] = static_cast<std::int64_t>(std::floor(static_cast<double>(budget) * weights[j] / total));
    return lapses;
}

PlannedCampaign plan_campaign(const CampaignRequest& request, const TemplateRepository& repo,
                              const PlannerConfig& config, const ArtifactCorpus& corpus, Rng& rng,
                              const Taxonomy& taxonomy)
{
    if (repo.empty())
        throw Error(Errc::planning_failed, "template repository is empty");
    if (auto bad = first_lifecycle_violation(request.lifecycle))
        throw Error(Errc::invalid_lifecycle,
                    fmt::format("campaign {}: lifecycle {} rejected at position {}", request.id,
                                format_stage_indices(request.lifecycle), *bad));
    const bool pinned = !request.abilities.empty();
    if (pinned && request.abilities.size() != request.lifecycle.size())
        throw Error(Errc::config, fmt::format("campaign {}: {} abilities for {} stages", request.id,
                                              request.abilities.size(), request.lifecycle.size()));
    if (config.attacks_per_stage && *config.attacks_per_stage < 1)
        throw Error(Errc::config, "attacks_per_stage must be >= 1");
    if (config.prefix_min > config.prefix_max)
        throw Error(Errc::config, "prefix range is empty");

    PlannedCampaign out;
    out.plan.campaign_id = request.id;
    out.plan.lifecycle = request.lifecycle;
    out.duration_us = request.duration_us.value_or(config.default_duration_us);

    FallbackCounters counters;
    out.info = CampaignInfoTable::with_environment(config.environment, rng, corpus, counters);
    out.initial = out.info;

    for (std::size_t k = 0; k < request.lifecycle.size(); ++k) {
        const Stage stage = request.lifecycle[k];
        int attacks = 1;
        if (!pinned && stage != Stage::IC && stage != Stage::CM)
            attacks = config.attacks_per_stage ? *config.attacks_per_stage : static_cast<int>(rng.between(1, 3));
        int placed = 0;
        for (int a = 0; a < attacks; ++a) {
            std::optional<std::string_view> pin;
            if (pinned)
                pin = request.abilities[k];
            auto sel = select_template(stage, repo, out.info, rng, pin);
            if (!sel)
                break;
            PlannedStep step{stage, sel->tpl, std::move(sel->bindings), 0, 0};
            std::map<Placeholder, std::string> bound;
            for (const auto& [p, index] : step.bindings)
                bound[p] = *out.info.records[index].value;
            const auto taken = out.info.taken_values();
            InstantiationContext ctx{corpus, counters, taken, request.id, taxonomy};
            auto inst = instantiate_template(*step.tpl, bound, rng, ctx);
            apply_outcomes(out.info, step, inst);
            out.plan.steps.push_back(std::move(step));
            out.techniques.push_back(std::move(inst));
            ++placed;
        }
        if (placed == 0) {
            if (is_mandatory(stage))
                throw Error(Errc::planning_failed,
                            fmt::format("campaign {}: no satisfiable {} template at lifecycle position {}",
                                        request.id, to_string(stage), k));
            log_warning(fmt::format("campaign {}: skipping {} at lifecycle position {}, no satisfiable template",
                                    request.id, to_string(stage), k));
            out.skipped.push_back(k);
        }
    }

    std::vector<std::int64_t> spans;
    std::vector<std::optional<std::int64_t>> pins;
    for (std::size_t j = 0; j < out.plan.steps.size(); ++j) {
        const auto& t = *out.plan.steps[j].tpl;
        spans.push_back(t.span_us());
        std::optional<std::int64_t> pin = t.default_lapse_us;
        if (j < request.lapse_us.size() && request.lapse_us[j])
            pin = request.lapse_us[j];
        if (pin && *pin < 0)
            throw Error(Errc::config, fmt::format("campaign {}: negative lapse for step {}", request.id, j));
        pins.push_back(pin);
    }
    const auto lapses = assign_lapses(out.duration_us, spans, pins, rng);
    for (std::size_t j = 0; j < out.plan.steps.size(); ++j) {
        auto& step = out.plan.steps[j];
        step.lapse_us = lapses[j];
        const auto want = static_cast<std::size_t>(
            rng.between(static_cast<std::int64_t>(config.prefix_min), static_cast<std::int64_t>(config.prefix_max)));
        // Prefix events sit strictly between two technique occurrences.
        step.prefix_len = step.lapse_us < 2 ? 0 : want;
        out.techniques[j].lapse_us = step.lapse_us;
    }
    return out;
}

} // namespace auditsynth
