#include "auditsynth/generator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "auditsynth/error.hpp"
#include "auditsynth/log.hpp"

namespace auditsynth {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(work);
    }
    // Report the failure of the lowest index so errors do not depend on scheduling.
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::io, fmt::format("cannot write {}", p.string()));
    return out;
}

} // namespace

GenerationInputs GenerationInputs::load(const GenerationConfig& cfg)
{
    GenerationInputs in{cfg.taxonomy ? Taxonomy::load(cfg.taxonomy->string()) : Taxonomy::builtin(), {}, {}, {}, {}};
    in.repo = TemplateRepository::load_directory(cfg.templates, in.taxonomy);
    if (in.repo.empty())
        throw Error(Errc::config, fmt::format("no templates in {}", cfg.templates.string()));
    in.corpus = load_corpus(cfg.corpus.string(), in.taxonomy);
    for (const auto& d : in.corpus.diagnostics)
        log_warning(fmt::format("{}: row {}: {}", cfg.corpus.string(), d.row, d.message));
    Rng rng(derive_seed(cfg.master_seed, "benign-placement"));
    for (const auto& src : cfg.benign) {
        auto log = load_benign_file(src.path, 0, cfg.benign_slack_us);
        if (src.offset_us) {
            log.start_us = cfg.start_us + *src.offset_us;
        } else {
            const auto room = std::max<std::int64_t>(0, cfg.duration_us - log.length_us - 1);
            log.start_us = cfg.start_us + rng.between(0, room);
        }
        in.benign.push_back(std::move(log));
    }
    if (cfg.background)
        in.background = BackgroundPool::from(load_benign_file(*cfg.background, 0, cfg.benign_slack_us));
    else if (!in.benign.empty())
        in.background = BackgroundPool::from(in.benign.front()); // prefixes borrow from the first benign log
    return in;
}

std::vector<CampaignRequest> campaign_requests(const GenerationConfig& cfg)
{
    auto out = cfg.campaigns;
    for (int i = 1; i <= cfg.random_campaigns; ++i) {
        CampaignRequest c;
        c.id = fmt::format("R{}", i);
        Rng rng(derive_seed(cfg.master_seed, c.id + "/lifecycle"));
        c.lifecycle = generate_lifecycle(rng, cfg.grammar);
        out.push_back(std::move(c));
    }
    return out;
}

GenerationResult generate(const GenerationConfig& cfg, const GenerationInputs& inputs, const RunOptions& options)
{
    GenerationResult result;
    const auto requests = campaign_requests(cfg);

    const auto t0 = Clock::now();
    result.campaigns.resize(requests.size());
    parallel_for(requests.size(), options.threads, [&](std::size_t i) {
        const auto seed = derive_seed(cfg.master_seed, requests[i].id);
        Rng rng(seed);
        result.campaigns[i] =
            plan_campaign(requests[i], inputs.repo, cfg.planner, inputs.corpus, rng, inputs.taxonomy);
        result.campaigns[i].plan.seed = seed;
    });
    result.synthesis_seconds = seconds_since(t0);

    const auto t1 = Clock::now();
    SyntheticLog sa({options.max_mem_events, true, options.spill_dir});
    if (cfg.background && cfg.background_fill)
        compose_background(sa, inputs.background, cfg.start_us, cfg.duration_us);
    for (const auto& b : inputs.benign)
        compose_benign(sa, b);
    for (auto& pc : result.campaigns) {
        MaliciousSequence ma;
        ma.campaign_id = pc.plan.campaign_id;
        ma.start_us = cfg.campaign_start_us();
        for (std::size_t j = 0; j < pc.techniques.size(); ++j)
            ma.steps.push_back({pc.plan.steps[j].prefix_len, {}, pc.techniques[j]});
        Rng rng(derive_seed(cfg.master_seed, pc.plan.campaign_id + "/compose"));
        compose_malicious(sa, ma, inputs.background, rng);
        for (std::size_t j = 0; j < ma.steps.size(); ++j) {
            pc.techniques[j].start_us = ma.steps[j].tq.start_us;
            pc.techniques[j].end_us = ma.steps[j].tq.end_us;
        }

        ManifestRow row;
        row.id = pc.plan.campaign_id;
        row.lifecycle = pc.plan.lifecycle;
        row.stages = pc.executed_stages();
        row.abilities = pc.executed_abilities();
        row.seed = pc.plan.seed;
        for (const auto& tq : pc.techniques) {
            row.step_start_us.push_back(tq.start_us);
            row.step_end_us.push_back(tq.end_us);
            row.lapse_us.push_back(tq.lapse_us);
        }
        row.skipped = pc.skipped;
        result.manifest.push_back(std::move(row));
        result.sequences.push_back(std::move(ma));
    }
    result.log = sa.finalize();
    result.composition_seconds = seconds_since(t1);
    return result;
}

OutputFiles output_files(const std::filesystem::path& dir)
{
    return {dir / "synthetic.csv", dir / "synthetic.labels.jsonl", dir / "manifest.csv", dir / "stats.txt"};
}

StatsReport write_outputs(const GenerationResult& result, const std::filesystem::path& dir, bool sparse)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error(Errc::io, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    const auto files = output_files(dir);
    auto csv = open_out(files.csv);
    auto side = open_out(files.sidecar);
    const auto emitted = emit_all(result.log, csv, side, sparse);
    auto manifest = open_out(files.manifest);
    emit_manifest(result.manifest, manifest);
    auto stats = open_out(files.stats);
    stats << emitted.stats.to_text();
    if (!stats)
        throw Error(Errc::io, fmt::format("cannot write {}", files.stats.string()));
    return emitted.stats;
}

} // namespace auditsynth
