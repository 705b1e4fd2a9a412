// auditsynth command line: generate, abstract, validate, stats.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "auditsynth/artifacts.hpp"
#include "auditsynth/csv.hpp"
#include "auditsynth/error.hpp"
#include "auditsynth/export.hpp"
#include "auditsynth/generator.hpp"
#include "auditsynth/lifecycle.hpp"
#include "auditsynth/log.hpp"
#include "auditsynth/template.hpp"

namespace fs = std::filesystem;
using namespace auditsynth;

namespace {

constexpr const char* exit_codes = R"(Exit codes:
  0  success
  1  unexpected internal error
  2  configuration error
  3  input parse error (template, corpus, taxonomy, CSV, sidecar, manifest)
  4  invalid lifecycle or stage index
  5  planning failed or pinned ability unsatisfiable
  6  abstraction error (empty pattern, unknown entity)
  7  composition error (lapse too small, empty background pool)
  8  validation found violations
  9  I/O error)";

std::ifstream open_in(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open {}", p.string()));
    return in;
}

struct GenerateArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    bool sparse = false;
    unsigned threads = 1;
    std::size_t max_mem_events = 20'000'000;
};

int run_generate(const GenerateArgs& a)
{
    auto cfg = load_config(a.config);
    if (a.seed)
        cfg.master_seed = *a.seed;
    const auto inputs = GenerationInputs::load(cfg);
    RunOptions opts;
    opts.threads = a.threads;
    opts.max_mem_events = a.max_mem_events;
    auto result = generate(cfg, inputs, opts);
    const auto t0 = std::chrono::steady_clock::now();
    const auto stats = write_outputs(result, a.out, a.sparse);
    const double emit = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    fmt::print("Synthesizing APT Campaign: {:.2f} s, Audit Log Composition: {:.2f} s\n", result.synthesis_seconds,
               result.composition_seconds + emit);
    fmt::print("{} events ({} malicious) in {} campaign(s) written to {}\n", stats.total_events,
               stats.malicious_events, result.campaigns.size(), a.out);
    return 0;
}

struct AbstractArgs {
    std::string trace;
    std::string stage;
    std::string technique;
    std::string ability;
    std::string corpus;
    std::string entities;
    std::string taxonomy;
    std::string out;
};

int run_abstract(const AbstractArgs& a)
{
    const Taxonomy tax = a.taxonomy.empty() ? Taxonomy::builtin() : Taxonomy::load(a.taxonomy);
    auto stage = parse_stage(a.stage);
    if (!stage)
        throw Error(Errc::index_out_of_range, fmt::format("unknown stage '{}'", a.stage));
    EntityDescriptorTable table;
    if (!a.entities.empty())
        table = EntityDescriptorTable::load(a.entities, tax);
    if (!a.corpus.empty())
        table.merge(build_entity_table(load_corpus(a.corpus, tax), tax));
    auto in = open_in(a.trace);
    LabeledAttackPattern pattern;
    pattern.ident = {*stage, a.technique, a.ability};
    pattern.events = read_procmon_events(in);
    const auto t = abstract_template(pattern, table);
    const auto text = serialize_template(t);
    if (a.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(a.out, std::ios::binary);
        out << text;
        if (!out)
            throw Error(Errc::io, fmt::format("cannot write {}", a.out));
    }
    return 0;
}

struct ValidateArgs {
    std::string dir;
    std::string log;
    std::string labels;
    std::string manifest;
    std::vector<std::string> templates;
    std::string taxonomy;
};

int run_validate(const ValidateArgs& a)
{
    std::size_t problems = 0;
    auto report = [&](std::string_view what, const Finding& f) {
        ++problems;
        if (problems <= 50)
            fmt::print(stderr, "{}: index {}: {}\n", what, f.index, f.message);
    };

    const Taxonomy tax = a.taxonomy.empty() ? Taxonomy::builtin() : Taxonomy::load(a.taxonomy);
    for (const auto& path : a.templates) {
        auto in = open_in(path);
        std::stringstream buf;
        buf << in.rdbuf();
        parse_template(buf.str(), tax); // throws on violations
        fmt::print("{}: ok\n", path);
    }

    fs::path log = a.log, labels = a.labels, manifest = a.manifest;
    if (!a.dir.empty()) {
        const auto files = output_files(a.dir);
        if (log.empty())
            log = files.csv;
        if (labels.empty())
            labels = files.sidecar;
        if (manifest.empty() && fs::exists(files.manifest))
            manifest = files.manifest;
    }

    std::uint64_t rows = 0;
    if (!log.empty()) {
        auto in = open_in(log);
        LineageAuditor lineage;
        std::int64_t previous = INT64_MIN;
        read_procmon_csv(in, [&](Event&& e) {
            if (e.time_us < previous)
                report("order", {rows, "time decreases"});
            previous = e.time_us;
            lineage.feed(e, rows);
            ++rows;
        });
        for (const auto& f : lineage.findings())
            report("lineage", f);
    }
    if (!labels.empty()) {
        auto in = open_in(labels);
        const auto records = read_sidecar(in);
        // Dense sidecars must align one-to-one with CSV rows.
        const bool dense = !log.empty() && records.size() == rows;
        for (const auto& f : check_bio2(records, dense ? std::optional<std::uint64_t>(rows) : std::nullopt))
            report("bio2", f);
        if (!log.empty())
            for (const auto& r : records)
                if (r.event_index >= rows)
                    report("bio2", {r.event_index, "record points past the last CSV row"});
    }
    if (!manifest.empty()) {
        auto in = open_in(manifest);
        std::size_t i = 0;
        for (const auto& row : read_manifest(in)) {
            if (!validate_lifecycle(row.stages))
                report("manifest", {i, fmt::format("{}: stages {} violate the lifecycle grammar", row.id,
                                                   format_stage_indices(row.stages))});
            if (row.abilities.size() != row.stages.size() || row.step_start_us.size() != row.stages.size())
                report("manifest", {i, fmt::format("{}: list lengths differ", row.id)});
            ++i;
        }
    }
    if (problems) {
        fmt::print(stderr, "{} violation(s)\n", problems);
        return exit_code_for(Errc::validation);
    }
    fmt::print("valid\n");
    return 0;
}

int run_stats(const std::string& dir, std::string log, std::string labels)
{
    if (!dir.empty()) {
        const auto files = output_files(dir);
        if (log.empty())
            log = files.csv.string();
        if (labels.empty())
            labels = files.sidecar.string();
    }
    if (log.empty() || labels.empty())
        throw Error(Errc::config, "stats needs an output directory or --log and --labels");
    std::cout << compute_stats(log, labels).to_text();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Synthetic APT audit-log generator"};
    app.footer(exit_codes);
    app.require_subcommand(1);
    bool quiet = false, verbose = false;
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");
    app.add_flag("-v,--verbose", verbose, "Print progress information");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Plan campaigns and compose a labelled synthetic log");
    g->add_option("-c,--config", gen.config, "YAML configuration file")->required()->check(CLI::ExistingFile);
    g->add_option("-s,--seed", gen.seed, "Override the master seed");
    g->add_option("-o,--out", gen.out, "Output directory")->capture_default_str();
    g->add_flag("--sparse", gen.sparse, "Omit O-labelled records from the label sidecar");
    g->add_option("-j,--threads", gen.threads, "Planning threads")->check(CLI::Range(1u, 256u))->capture_default_str();
    g->add_option("--max-mem-events", gen.max_mem_events, "In-memory event cap before spilling to disk")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    AbstractArgs abs;
    auto* ab = app.add_subcommand("abstract", "Generalise a labelled technique trace into a template");
    ab->add_option("trace", abs.trace, "Procmon-style CSV of one technique occurrence")
        ->required()
        ->check(CLI::ExistingFile);
    ab->add_option("--stage", abs.stage, "Lifecycle stage (IC, EF, ... or 1..7)")->required();
    ab->add_option("--technique", abs.technique, "ATT&CK technique id")->required();
    ab->add_option("--ability", abs.ability, "Ability id")->required();
    ab->add_option("--corpus", abs.corpus, "Artifact corpus used to recognise entities")->check(CLI::ExistingFile);
    ab->add_option("--entities", abs.entities, "Entity descriptor table (TSV)")->check(CLI::ExistingFile);
    ab->add_option("--taxonomy", abs.taxonomy, "Custom taxonomy (TSV)")->check(CLI::ExistingFile);
    ab->add_option("-o,--out", abs.out, "Write the template here instead of stdout");

    ValidateArgs val;
    auto* v = app.add_subcommand("validate", "Audit emitted outputs or template files");
    v->add_option("dir", val.dir, "Output directory of a generate run")->check(CLI::ExistingDirectory);
    v->add_option("--log", val.log, "Synthetic CSV")->check(CLI::ExistingFile);
    v->add_option("--labels", val.labels, "Label sidecar (JSON lines)")->check(CLI::ExistingFile);
    v->add_option("--manifest", val.manifest, "Campaign manifest")->check(CLI::ExistingFile);
    v->add_option("--template", val.templates, "Template file(s) to check")->check(CLI::ExistingFile);
    v->add_option("--taxonomy", val.taxonomy, "Custom taxonomy (TSV)")->check(CLI::ExistingFile);

    std::string stats_dir, stats_log, stats_labels;
    auto* st = app.add_subcommand("stats", "Recompute statistics from emitted files");
    st->add_option("dir", stats_dir, "Output directory of a generate run")->check(CLI::ExistingDirectory);
    st->add_option("--log", stats_log, "Synthetic CSV")->check(CLI::ExistingFile);
    st->add_option("--labels", stats_labels, "Label sidecar")->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);
    set_log_level(quiet ? LogLevel::quiet : verbose ? LogLevel::info : LogLevel::warning);

    try {
        if (g->parsed())
            return run_generate(gen);
        if (ab->parsed())
            return run_abstract(abs);
        if (v->parsed())
            return run_validate(val);
        if (st->parsed())
            return run_stats(stats_dir, stats_log, stats_labels);
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 1;
}
