#include "auditsynth/export.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "auditsynth/csv.hpp"
#include "auditsynth/error.hpp"
#include "auditsynth/lifecycle.hpp"
#include "auditsynth/operations.hpp"
#include "text_util.hpp"

namespace auditsynth {

namespace {

constexpr std::size_t flush_bytes = 1 << 20;

class BufferedSink {
public:
    explicit BufferedSink(std::ostream& out) : out_(out) { buf_.reserve(flush_bytes + 4096); }
    std::string& buffer() { return buf_; }
    void maybe_flush()
    {
        if (buf_.size() >= flush_bytes)
            flush();
    }
    void flush()
    {
        out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        written_ += buf_.size();
        buf_.clear();
        if (!out_)
            throw Error(Errc::io, "write failed");
    }
    std::uint64_t written() const { return written_ + buf_.size(); }

private:
    std::ostream& out_;
    std::string buf_;
    std::uint64_t written_ = 0;
};

std::string json_string(std::string_view s) { return nlohmann::json(s).dump(); }

std::string_view tag_id(std::string_view tag) { return tag.size() > 2 ? tag.substr(2) : std::string_view{}; }

template <typename Seq>
std::string brace_list(const Seq& items)
{
    return fmt::format("{{{}}}", fmt::join(items, ","));
}

std::vector<std::string_view> brace_items(std::string_view text, std::size_t row)
{
    text = text::trim(text);
    if (text.size() < 2 || text.front() != '{' || text.back() != '}')
        throw Error(Errc::syntax, fmt::format("manifest row {}: expected '{{...}}', got '{}'", row, text), row);
    text = text.substr(1, text.size() - 2);
    if (text::trim(text).empty())
        return {};
    auto items = text::split(text, ',');
    for (auto& i : items)
        i = text::trim(i);
    return items;
}

template <typename Int>
std::vector<Int> int_list(std::string_view text, std::size_t row)
{
    std::vector<Int> out;
    for (auto item : brace_items(text, row)) {
        auto v = text::parse_int<Int>(item);
        if (!v)
            throw Error(Errc::syntax, fmt::format("manifest row {}: bad integer '{}'", row, item), row);
        out.push_back(*v);
    }
    return out;
}

StageSequence stage_list(std::string_view text, std::size_t row)
{
    StageSequence out;
    for (int i : int_list<int>(text, row)) {
        auto s = stage_from_index(i);
        if (!s)
            throw Error(Errc::index_out_of_range, fmt::format("manifest row {}: stage index {}", row, i), row);
        out.push_back(*s);
    }
    return out;
}

std::string basename_of(std::string_view path)
{
    const auto cut = path.find_last_of("\\/");
    return std::string(cut == std::string_view::npos ? path : path.substr(cut + 1));
}

bool valid_tag(std::string_view tag)
{
    return tag == "O" || ((tag.starts_with("B-") || tag.starts_with("I-")) && tag.size() > 2);
}

} // namespace

// ---- log and sidecar -------------------------------------------------------

std::uint64_t emit_procmon_csv(const OrderedLog& log, std::ostream& out)
{
    BufferedSink sink(out);
    sink.buffer() += procmon_header;
    sink.buffer() += "\r\n";
    log.for_each([&](const Event& e) {
        append_procmon_row(sink.buffer(), e);
        sink.maybe_flush();
    });
    sink.flush();
    return sink.written();
}

std::uint64_t emit_procmon_csv(const std::vector<Event>& events, std::ostream& out)
{
    BufferedSink sink(out);
    sink.buffer() += procmon_header;
    sink.buffer() += "\r\n";
    for (const auto& e : events) {
        append_procmon_row(sink.buffer(), e);
        sink.maybe_flush();
    }
    sink.flush();
    return sink.written();
}

std::string sidecar_record(const Event& e)
{
    return fmt::format(R"({{"event_index":{},"campaign_id":{},"stage_tag":{},"technique_tag":{},"ability_tag":{}}})",
                       e.seq, e.campaign_id ? json_string(*e.campaign_id) : "null", json_string(e.label.stage_tag),
                       json_string(e.label.technique_tag), json_string(e.label.ability_tag));
}

std::uint64_t emit_label_sidecar(const OrderedLog& log, std::ostream& out, bool sparse)
{
    BufferedSink sink(out);
    log.for_each([&](const Event& e) {
        if (sparse && e.label.is_outside())
            return;
        sink.buffer() += sidecar_record(e);
        sink.buffer() += '\n';
        sink.maybe_flush();
    });
    sink.flush();
    return sink.written();
}

std::uint64_t emit_label_sidecar(const std::vector<Event>& events, std::ostream& out, bool sparse)
{
    BufferedSink sink(out);
    for (const auto& e : events) {
        if (sparse && e.label.is_outside())
            continue;
        sink.buffer() += sidecar_record(e);
        sink.buffer() += '\n';
        sink.maybe_flush();
    }
    sink.flush();
    return sink.written();
}

std::vector<SidecarRecord> read_sidecar(std::istream& in)
{
    std::vector<SidecarRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty())
            continue;
        try {
            const auto j = nlohmann::json::parse(line);
            SidecarRecord r;
            r.event_index = j.at("event_index").get<std::uint64_t>();
            if (!j.at("campaign_id").is_null())
                r.campaign_id = j.at("campaign_id").get<std::string>();
            r.label.stage_tag = j.at("stage_tag").get<std::string>();
            r.label.technique_tag = j.at("technique_tag").get<std::string>();
            r.label.ability_tag = j.at("ability_tag").get<std::string>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::syntax, fmt::format("sidecar line {}: {}", line_no, e.what()), line_no);
        }
    }
    return out;
}

std::vector<Finding> check_bio2(const std::vector<SidecarRecord>& records, std::optional<std::uint64_t> expected_rows)
{
    std::vector<Finding> findings;
    std::map<std::string, const SidecarRecord*> last_in_campaign;
    std::optional<std::uint64_t> previous_index;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto idx = r.event_index;
        auto report = [&](std::string msg) { findings.push_back({idx, std::move(msg)}); };
        if (previous_index && idx <= *previous_index)
            report(fmt::format("event_index {} does not increase", idx));
        if (expected_rows && idx != i)
            report(fmt::format("record {} has event_index {}; a dense sidecar needs {}", i, idx, i));
        previous_index = idx;

        const std::string_view tags[] = {r.label.stage_tag, r.label.technique_tag, r.label.ability_tag};
        bool shape_ok = true;
        for (auto t : tags)
            if (!valid_tag(t)) {
                report(fmt::format("malformed tag '{}'", t));
                shape_ok = false;
            }
        if (!shape_ok)
            continue;
        if (!r.label.coupled()) {
            report("stage, technique and ability tags disagree on O");
            continue;
        }
        if (r.label.is_outside()) {
            if (r.campaign_id)
                report("O-labelled event carries a campaign_id");
            continue;
        }
        if (!r.campaign_id) {
            report("labelled event has no campaign_id");
            continue;
        }
        const char b0 = tags[0][0];
        if (tags[1][0] != b0 || tags[2][0] != b0)
            report("B-/I- prefixes differ across the three tags");
        const auto* prev = last_in_campaign[*r.campaign_id];
        if (b0 == 'I') {
            const std::string_view prev_tags[] = {prev ? std::string_view(prev->label.stage_tag) : "",
                                                  prev ? std::string_view(prev->label.technique_tag) : "",
                                                  prev ? std::string_view(prev->label.ability_tag) : ""};
            for (int k = 0; k < 3; ++k) {
                if (tags[k][0] != 'I')
                    continue;
                if (!prev || prev_tags[k] == "O" || tag_id(prev_tags[k]) != tag_id(tags[k]))
                    report(fmt::format("{} is not preceded by B-{} or I-{} in campaign {}", tags[k], tag_id(tags[k]),
                                       tag_id(tags[k]), *r.campaign_id));
            }
        }
        last_in_campaign[*r.campaign_id] = &r;
    }
    if (expected_rows && records.size() != *expected_rows)
        findings.push_back({records.size(), fmt::format("sidecar has {} records for {} rows", records.size(),
                                                        *expected_rows)});
    return findings;
}

void LineageAuditor::feed(const Event& e, std::uint64_t index)
{
    const bool root = e.pid == explorer_pid || e.pid == services_pid;
    if (!root) {
        auto it = created_.find(e.pid);
        if (it == created_.end())
            findings_.push_back({index, fmt::format("pid {} ({}) acts before any ProcessCreate names it", e.pid,
                                                    e.subject.value)});
        else if (!iequals(it->second, e.subject.value))
            findings_.push_back({index, fmt::format("pid {} was created as {} but runs as {}", e.pid, it->second,
                                                    e.subject.value)});
    }
    if (e.operation == process_create_op) {
        if (auto child = detail_child_pid(e.detail))
            created_.emplace(*child, basename_of(e.object.value));
        else
            findings_.push_back({index, "ProcessCreate without a 'PID: n' detail"});
    }
}

std::vector<Finding> check_lineage(const std::vector<Event>& events)
{
    LineageAuditor audit;
    for (std::size_t i = 0; i < events.size(); ++i)
        audit.feed(events[i], i);
    return audit.findings();
}

// ---- manifest ----------------------------------------------------------------

std::uint64_t emit_manifest(const std::vector<ManifestRow>& rows, std::ostream& out)
{
    std::string buf(manifest_header);
    buf += "\r\n";
    for (const auto& r : rows) {
        std::vector<int> lifecycle, stages;
        for (auto s : r.lifecycle)
            lifecycle.push_back(stage_index(s));
        for (auto s : r.stages)
            stages.push_back(stage_index(s));
        const std::string cols[] = {r.id,
                                    brace_list(lifecycle),
                                    brace_list(stages),
                                    brace_list(r.abilities),
                                    std::to_string(r.seed),
                                    brace_list(r.step_start_us),
                                    brace_list(r.step_end_us),
                                    brace_list(r.lapse_us),
                                    brace_list(r.skipped)};
        append_csv_row(buf, std::vector<std::string_view>(std::begin(cols), std::end(cols)));
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw Error(Errc::io, "manifest write failed");
    return buf.size();
}

std::vector<ManifestRow> read_manifest(std::istream& in)
{
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields))
        throw Error(Errc::syntax, "manifest is empty");
    const auto expected = text::split(manifest_header, ',');
    if (fields.size() != expected.size() || !std::equal(fields.begin(), fields.end(), expected.begin()))
        throw Error(Errc::syntax, fmt::format("manifest header must be '{}'", manifest_header), 0);
    std::vector<ManifestRow> rows;
    std::size_t row = 0;
    while (reader.next(fields)) {
        ++row;
        if (fields.size() != expected.size())
            throw Error(Errc::syntax, fmt::format("manifest row {}: expected {} fields", row, expected.size()), row);
        ManifestRow r;
        r.id = fields[0];
        r.lifecycle = stage_list(fields[1], row);
        r.stages = stage_list(fields[2], row);
        for (auto a : brace_items(fields[3], row))
            r.abilities.emplace_back(a);
        auto seed = text::parse_int<std::uint64_t>(fields[4]);
        if (!seed)
            throw Error(Errc::syntax, fmt::format("manifest row {}: bad seed", row), row);
        r.seed = *seed;
        r.step_start_us = int_list<std::int64_t>(fields[5], row);
        r.step_end_us = int_list<std::int64_t>(fields[6], row);
        r.lapse_us = int_list<std::int64_t>(fields[7], row);
        r.skipped = int_list<std::size_t>(fields[8], row);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---- statistics ----------------------------------------------------------------

std::string StatsReport::to_text() const
{
    std::string out;
    auto line = [&](std::string_view k, auto v) { fmt::format_to(std::back_inserter(out), "{}={}\n", k, v); };
    line("total_events", total_events);
    line("malicious_events", malicious_events);
    line("benign_events", total_events - malicious_events);
    line("distinct_entities", distinct_entities);
    line("csv_bytes", csv_bytes);
    line("first_time", total_events ? format_timestamp(first_us) : std::string());
    line("last_time", total_events ? format_timestamp(last_us) : std::string());
    line("span_us", span_us());
    for (const auto& [t, n] : per_technique)
        line(fmt::format("technique.{}", t), n);
    return out;
}

StatsReport parse_stats(std::string_view text)
{
    StatsReport r;
    for (auto line : text::split_lines(text)) {
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            continue;
        const auto key = line.substr(0, eq);
        const auto value = line.substr(eq + 1);
        auto num = [&] {
            auto v = text::parse_int<std::uint64_t>(value);
            if (!v)
                throw Error(Errc::syntax, fmt::format("stats: bad value for {}", key));
            return *v;
        };
        if (key == "total_events")
            r.total_events = num();
        else if (key == "malicious_events")
            r.malicious_events = num();
        else if (key == "distinct_entities")
            r.distinct_entities = num();
        else if (key == "csv_bytes")
            r.csv_bytes = num();
        else if (key == "first_time" && !value.empty())
            r.first_us = parse_timestamp(value).value_or(0);
        else if (key == "last_time" && !value.empty())
            r.last_us = parse_timestamp(value).value_or(0);
        else if (key.starts_with("technique."))
            r.per_technique[std::string(key.substr(10))] = num();
    }
    return r;
}

void StatsAccumulator::feed(const Event& e)
{
    if (r_.total_events == 0)
        r_.first_us = e.time_us;
    r_.last_us = e.time_us;
    ++r_.total_events;
    if (!e.label.is_outside()) {
        ++r_.malicious_events;
        ++r_.per_technique[std::string(tag_id(e.label.technique_tag))];
    }
    if (!e.subject.value.empty())
        entities_.emplace(EntityKind::process, e.subject.value);
    if (!e.object.value.empty())
        entities_.emplace(e.object.kind, e.object.value);
}

StatsReport StatsAccumulator::report(std::uint64_t csv_bytes) const
{
    auto r = r_;
    r.distinct_entities = entities_.size();
    r.csv_bytes = csv_bytes;
    return r;
}

StatsReport compute_stats(const std::vector<Event>& events, std::uint64_t csv_bytes)
{
    StatsAccumulator acc;
    for (const auto& e : events)
        acc.feed(e);
    return acc.report(csv_bytes);
}

StatsReport compute_stats(const OrderedLog& log, std::uint64_t csv_bytes)
{
    StatsAccumulator acc;
    log.for_each([&](const Event& e) { acc.feed(e); });
    return acc.report(csv_bytes);
}

StatsReport compute_stats(const std::filesystem::path& csv, const std::filesystem::path& sidecar)
{
    std::ifstream in(csv, std::ios::binary);
    if (!in)
        throw Error(Errc::io, fmt::format("cannot open {}", csv.string()));
    std::ifstream side(sidecar, std::ios::binary);
    if (!side)
        throw Error(Errc::io, fmt::format("cannot open {}", sidecar.string()));
    const auto records = read_sidecar(side);
    std::size_t next_record = 0;
    StatsAccumulator acc;
    std::uint64_t index = 0;
    read_procmon_csv(in, [&](Event&& e) {
        while (next_record < records.size() && records[next_record].event_index < index)
            ++next_record;
        if (next_record < records.size() && records[next_record].event_index == index) {
            e.label = records[next_record].label;
            e.campaign_id = records[next_record].campaign_id;
        }
        acc.feed(e);
        ++index;
    });
    return acc.report(std::filesystem::file_size(csv));
}

EmitResult emit_all(const OrderedLog& log, std::ostream& csv, std::ostream& sidecar, bool sparse)
{
    BufferedSink csv_sink(csv);
    BufferedSink side_sink(sidecar);
    StatsAccumulator acc;
    csv_sink.buffer() += procmon_header;
    csv_sink.buffer() += "\r\n";
    log.for_each([&](const Event& e) {
        append_procmon_row(csv_sink.buffer(), e);
        csv_sink.maybe_flush();
        if (!(sparse && e.label.is_outside())) {
            side_sink.buffer() += sidecar_record(e);
            side_sink.buffer() += '\n';
            side_sink.maybe_flush();
        }
        acc.feed(e);
    });
    csv_sink.flush();
    side_sink.flush();
    return {csv_sink.written(), side_sink.written(), acc.report(csv_sink.written())};
}

} // namespace auditsynth
