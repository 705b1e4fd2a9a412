#pragma once

#include <algorithm>
#include <cstdint>
#include <cctype>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "auditsynth/artifacts.hpp"
#include "auditsynth/model.hpp"
#include "auditsynth/planner.hpp"
#include "auditsynth/template.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace auditsynth;

inline fs::path data_dir() { return AUDITSYNTH_DATA_DIR; }
inline fs::path config_dir() { return AUDITSYNTH_CONFIG_DIR; }

inline const TemplateRepository& shipped_templates()
{
    static const auto repo = TemplateRepository::load_directory(data_dir() / "templates");
    return repo;
}

inline const ArtifactCorpus& sample_corpus()
{
    static const auto corpus = load_corpus((data_dir() / "corpus" / "sample_corpus.tsv").string());
    return corpus;
}

inline std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Scratch directory removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
    {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("auditsynth-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline CategoryDescriptor desc(std::string_view token) { return Taxonomy::builtin().require(token); }

inline Placeholder ph(std::string_view token, int slot = 0) { return Placeholder{desc(token), slot}; }

// ---- lifecycle oracle ---------------------------------------------------------

// IC EF+ (EP|IR|ML|MP)* CM? over stage digits.
inline bool lifecycle_regex_accepts(const std::vector<Stage>& seq)
{
    static const std::regex re("^12+[3-6]*7?$");
    std::string digits;
    for (auto s : seq)
        digits.push_back(static_cast<char>('0' + static_cast<int>(s)));
    return std::regex_match(digits, re);
}

// ---- plan replay oracle -----------------------------------------------------------

// Replays a planned campaign against a plain list of (descriptor, value, alive)
// rows, starting from the environment table. Returns one message per problem.
inline std::vector<std::string> replay_plan(const PlannedCampaign& pc)
{
    struct Row {
        std::string token;
        std::string value;
        bool alive;
    };
    auto norm = [](const std::string& token, const std::string& v) {
        const bool ci = token.rfind("File.", 0) == 0 || token.rfind("Process.", 0) == 0;
        if (!ci)
            return v;
        std::string out = v;
        for (auto& c : out)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    };
    static const std::set<std::string> removals = {"SetDispositionInformationFile", "RegDeleteKey",
                                                   "RegDeleteValue", "Process Exit"};

    std::vector<Row> rows;
    for (const auto& r : pc.initial.records)
        if (r.value && r.status != RecordStatus::deleted)
            rows.push_back({r.descriptor.token(), norm(r.descriptor.token(), *r.value), true});

    std::vector<std::string> problems;
    if (pc.techniques.size() != pc.plan.steps.size())
        problems.push_back("technique count differs from step count");

    for (std::size_t j = 0; j < pc.plan.steps.size() && j < pc.techniques.size(); ++j) {
        const auto& step = pc.plan.steps[j];
        const auto& tpl = *step.tpl;
        const auto& inst = pc.techniques[j];
        const auto where = "step " + std::to_string(j) + " (" + tpl.ident.ability_id + ")";
        if (tpl.ident.stage != step.stage)
            problems.push_back(where + ": template stage differs from step stage");

        std::vector<std::size_t> used;
        for (const auto& p : tpl.prerequisites) {
            auto it = inst.bound_values.find(p);
            if (it == inst.bound_values.end()) {
                problems.push_back(where + ": prerequisite " + p.token() + " has no bound value");
                continue;
            }
            const auto token = p.descriptor.token();
            const auto value = norm(token, it->second);
            bool found = false;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].alive && rows[i].token == token && rows[i].value == value &&
                    std::find(used.begin(), used.end(), i) == used.end()) {
                    used.push_back(i);
                    found = true;
                    break;
                }
            }
            if (!found)
                problems.push_back(where + ": prerequisite " + token + "='" + it->second + "' not available");

            bool referenced = false;
            for (const auto& e : inst.events)
                if (norm(token, e.subject.value) == value || norm(token, e.object.value) == value)
                    referenced = true;
            if (!referenced)
                problems.push_back(where + ": bound value of " + token + " never used by an event");
        }

        for (const auto& e : inst.events) {
            if (!removals.count(e.operation))
                continue;
            for (auto& r : rows)
                if (r.alive && r.token.substr(0, r.token.find('.')) ==
                                   std::string(to_string(category_of(e.object.kind))) &&
                    r.value == norm(r.token, e.object.value))
                    r.alive = false;
        }
        for (const auto& p : tpl.outcomes) {
            std::optional<std::string> v;
            if (auto it = inst.new_values.find(p); it != inst.new_values.end())
                v = it->second;
            else if (auto jt = inst.bound_values.find(p); jt != inst.bound_values.end())
                v = jt->second;
            if (!v) {
                problems.push_back(where + ": outcome " + p.token() + " has no value");
                continue;
            }
            rows.push_back({p.descriptor.token(), norm(p.descriptor.token(), *v), true});
        }
    }
    return problems;
}

// ---- independent CSV writer --------------------------------------------------------

inline std::string ref_timestamp(std::int64_t us)
{
    std::int64_t secs = us / 1'000'000, frac = us % 1'000'000;
    if (frac < 0) {
        frac += 1'000'000;
        --secs;
    }
    const std::time_t t = static_cast<std::time_t>(secs);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<long long>(frac));
    return buf;
}

inline std::string ref_field(const std::string& f)
{
    if (f.find_first_of(",\"\r\n") == std::string::npos)
        return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string ref_csv(const std::vector<Event>& events)
{
    std::string out = "Time,Process Name,PID,Operation,Path,Result,Detail\r\n";
    for (const auto& e : events) {
        out += ref_field(ref_timestamp(e.time_us)) + "," + ref_field(e.subject.value) + "," +
               std::to_string(e.pid) + "," + ref_field(e.operation) + "," + ref_field(e.object.value) + "," +
               ref_field(e.result) + "," + ref_field(e.detail) + "\r\n";
    }
    return out;
}

} // namespace testsupport
