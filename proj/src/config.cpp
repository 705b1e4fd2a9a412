#include "auditsynth/config.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "auditsynth/error.hpp"

namespace auditsynth {

namespace {

Error config_error(const YAML::Node& node, std::string_view what)
{
    const auto mark = node.Mark();
    if (mark.is_null())
        return Error(Errc::config, std::string(what));
    return Error(Errc::config, fmt::format("line {}: {}", mark.line + 1, what), mark.line + 1);
}

template <typename T>
T scalar(const YAML::Node& node, std::string_view key)
{
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw config_error(node, fmt::format("'{}' has the wrong type", key));
    }
}

std::int64_t duration_node(const YAML::Node& node, std::string_view key, bool allow_zero = false)
{
    auto d = parse_duration_us(scalar<std::string>(node, key));
    if (!d || *d < 0 || (*d == 0 && !allow_zero))
        throw config_error(node, fmt::format("'{}' is not a positive duration", key));
    return *d;
}

std::filesystem::path path_node(const YAML::Node& node, std::string_view key, const std::filesystem::path& base)
{
    std::filesystem::path p = scalar<std::string>(node, key);
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

StageSequence stages_node(const YAML::Node& node)
{
    if (!node.IsSequence())
        throw config_error(node, "'stages' must be a list");
    std::vector<std::string> items;
    for (const auto& item : node)
        items.push_back(scalar<std::string>(item, "stages"));
    try {
        return parse_stage_list(items);
    } catch (const Error& e) {
        throw Error(e.code(), fmt::format("line {}: {}", node.Mark().line + 1, e.what()), node.Mark().line + 1);
    }
}

CampaignRequest campaign_node(const YAML::Node& node, std::size_t index)
{
    if (!node.IsMap())
        throw config_error(node, "campaign entries must be maps");
    CampaignRequest c;
    c.id = node["id"] ? scalar<std::string>(node["id"], "id") : fmt::format("C{}", index + 1);
    if (!node["stages"])
        throw config_error(node, fmt::format("campaign {} has no 'stages'", c.id));
    c.lifecycle = stages_node(node["stages"]);
    if (const auto a = node["abilities"]) {
        if (!a.IsSequence())
            throw config_error(a, "'abilities' must be a list");
        for (const auto& item : a)
            c.abilities.push_back(scalar<std::string>(item, "abilities"));
    }
    if (const auto d = node["duration"])
        c.duration_us = duration_node(d, "duration");
    if (const auto l = node["lapse_us"]) {
        if (!l.IsSequence())
            throw config_error(l, "'lapse_us' must be a list");
        for (const auto& item : l) {
            if (item.IsNull() || (item.IsScalar() && item.Scalar() == "~"))
                c.lapse_us.emplace_back();
            else
                c.lapse_us.emplace_back(scalar<std::int64_t>(item, "lapse_us"));
        }
    }
    return c;
}

} // namespace

std::optional<std::int64_t> parse_duration_us(std::string_view text)
{
    static const std::regex re(R"(^\s*([0-9]+(?:\.[0-9]+)?)\s*([a-zA-Z]*)\s*$)");
    std::cmatch m;
    if (!std::regex_match(text.begin(), text.end(), m, re))
        return std::nullopt;
    const double value = std::stod(m[1].str());
    const std::string unit = to_lower(m[2].str());
    double scale;
    if (unit.empty() || unit == "s" || unit == "sec" || unit == "secs" || unit == "second" || unit == "seconds")
        scale = 1e6;
    else if (unit == "us")
        scale = 1;
    else if (unit == "ms")
        scale = 1e3;
    else if (unit == "m" || unit == "min" || unit == "mins" || unit == "minute" || unit == "minutes")
        scale = 60e6;
    else if (unit == "h" || unit == "hour" || unit == "hours")
        scale = 3600e6;
    else if (unit == "d" || unit == "day" || unit == "days")
        scale = 86400e6;
    else
        return std::nullopt;
    return static_cast<std::int64_t>(std::llround(value * scale));
}

void GenerationConfig::validate() const
{
    if (duration_us <= 0)
        throw Error(Errc::config, "duration must be positive");
    if (!background && benign.empty())
        throw Error(Errc::config, "config needs a background or at least one benign source");
    if (templates.empty())
        throw Error(Errc::config, "config needs 'templates'");
    if (corpus.empty())
        throw Error(Errc::config, "config needs 'corpus'");
    if (random_campaigns < 0)
        throw Error(Errc::config, "random_campaigns must be >= 0");
    grammar.validate();
    std::set<std::string> ids;
    for (const auto& c : campaigns)
        if (!ids.insert(c.id).second)
            throw Error(Errc::config, fmt::format("duplicate campaign id {}", c.id));
}

GenerationConfig parse_config(std::string_view yaml, const std::filesystem::path& base_dir, const Taxonomy& taxonomy)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::Exception& e) {
        throw Error(Errc::config, fmt::format("line {}: {}", e.mark.line + 1, e.msg), e.mark.line + 1);
    }
    if (!root.IsMap())
        throw Error(Errc::config, "config must be a YAML map");

    GenerationConfig cfg;
    std::optional<Taxonomy> custom;
    if (const auto n = root["taxonomy"]) {
        cfg.taxonomy = path_node(n, "taxonomy", base_dir);
        custom = Taxonomy::load(cfg.taxonomy->string());
    }
    const Taxonomy& tax = custom ? *custom : taxonomy;
    cfg.planner.environment = default_environment(tax);

    static const std::set<std::string> known = {
        "seed",          "duration",          "start",          "templates",         "corpus",
        "taxonomy",      "background",        "background_fill", "benign",           "benign_slack_us",
        "campaign_offset", "campaign_duration", "attacks_per_stage", "prefix_events", "grammar",
        "environment",   "random_campaigns",  "campaigns"};
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!known.count(key))
            throw config_error(kv.first, fmt::format("unknown key '{}'", key));
    }

    if (const auto n = root["seed"])
        cfg.master_seed = scalar<std::uint64_t>(n, "seed");
    if (const auto n = root["duration"])
        cfg.duration_us = duration_node(n, "duration");
    if (const auto n = root["start"]) {
        auto t = parse_timestamp(scalar<std::string>(n, "start"));
        if (!t)
            throw config_error(n, "'start' must be an ISO-8601 UTC timestamp");
        cfg.start_us = *t;
    }
    if (const auto n = root["templates"])
        cfg.templates = path_node(n, "templates", base_dir);
    if (const auto n = root["corpus"])
        cfg.corpus = path_node(n, "corpus", base_dir);
    if (const auto n = root["background"])
        cfg.background = path_node(n, "background", base_dir);
    if (const auto n = root["background_fill"])
        cfg.background_fill = scalar<bool>(n, "background_fill");
    if (const auto n = root["benign"]) {
        if (!n.IsSequence())
            throw config_error(n, "'benign' must be a list");
        for (const auto& item : n) {
            BenignSource s;
            if (item.IsScalar()) {
                s.path = path_node(item, "benign", base_dir);
            } else {
                if (!item["path"])
                    throw config_error(item, "benign entry needs 'path'");
                s.path = path_node(item["path"], "path", base_dir);
                if (const auto st = item["start"]; st && scalar<std::string>(st, "start") != "random")
                    s.offset_us = duration_node(st, "start", true);
            }
            cfg.benign.push_back(std::move(s));
        }
    }
    if (const auto n = root["benign_slack_us"])
        cfg.benign_slack_us = scalar<std::int64_t>(n, "benign_slack_us");
    if (const auto n = root["campaign_offset"])
        cfg.campaign_offset_us = duration_node(n, "campaign_offset", true);
    if (const auto n = root["campaign_duration"])
        cfg.campaign_duration_us = duration_node(n, "campaign_duration");
    if (const auto n = root["attacks_per_stage"]) {
        if (scalar<std::string>(n, "attacks_per_stage") != "random") {
            const auto v = scalar<int>(n, "attacks_per_stage");
            if (v < 1)
                throw config_error(n, "'attacks_per_stage' must be >= 1 or 'random'");
            cfg.planner.attacks_per_stage = v;
        }
    }
    if (const auto n = root["prefix_events"]) {
        if (!n.IsSequence() || n.size() != 2)
            throw config_error(n, "'prefix_events' must be [min, max]");
        const auto lo = scalar<std::int64_t>(n[0], "prefix_events");
        const auto hi = scalar<std::int64_t>(n[1], "prefix_events");
        if (lo < 0 || hi < lo)
            throw config_error(n, "'prefix_events' must satisfy 0 <= min <= max");
        cfg.planner.prefix_min = static_cast<std::size_t>(lo);
        cfg.planner.prefix_max = static_cast<std::size_t>(hi);
    }
    if (const auto n = root["grammar"]) {
        if (const auto v = n["continue_prob"])
            cfg.grammar.continue_prob = scalar<double>(v, "continue_prob");
        if (const auto v = n["cm_prob"])
            cfg.grammar.cm_prob = scalar<double>(v, "cm_prob");
        if (const auto v = n["max_incubation"])
            cfg.grammar.max_incubation = scalar<int>(v, "max_incubation");
        if (const auto v = n["stage_weights"]) {
            if (!v.IsSequence() || v.size() != 4)
                throw config_error(v, "'stage_weights' needs 4 entries (EP, IR, ML, MP)");
            for (std::size_t i = 0; i < 4; ++i)
                cfg.grammar.stage_weights[i] = scalar<double>(v[i], "stage_weights");
        }
    }
    if (const auto n = root["environment"]) {
        if (!n.IsSequence())
            throw config_error(n, "'environment' must be a list");
        cfg.planner.environment.clear();
        for (const auto& item : n) {
            std::string token = item.IsMap() ? scalar<std::string>(item["descriptor"], "descriptor")
                                             : scalar<std::string>(item, "environment");
            auto d = tax.find(token);
            if (!d)
                throw config_error(item, fmt::format("unknown descriptor '{}'", token));
            std::string value = item.IsMap() && item["value"] ? scalar<std::string>(item["value"], "value") : "";
            cfg.planner.environment.push_back({*d, value});
        }
    }
    if (const auto n = root["random_campaigns"])
        cfg.random_campaigns = scalar<int>(n, "random_campaigns");
    if (const auto n = root["campaigns"]) {
        if (!n.IsSequence())
            throw config_error(n, "'campaigns' must be a list");
        for (std::size_t i = 0; i < n.size(); ++i)
            cfg.campaigns.push_back(campaign_node(n[i], i));
    }
    cfg.planner.default_duration_us = cfg.default_campaign_duration_us();
    cfg.validate();
    return cfg;
}

GenerationConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open config {}", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.parent_path());
}

} // namespace auditsynth
