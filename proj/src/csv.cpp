#include "auditsynth/csv.hpp"

#include <fmt/format.h>

#include "auditsynth/error.hpp"
#include "auditsynth/operations.hpp"
#include "text_util.hpp"

namespace auditsynth {

bool CsvReader::next(std::vector<std::string>& fields)
{
    fields.clear();
    int c = in_.get();
    if (c == std::char_traits<char>::eof())
        return false;
    ++record_;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (;; c = in_.get()) {
        if (c == std::char_traits<char>::eof()) {
            if (quoted)
                throw Error(Errc::csv_parse,
                            fmt::format("record {}, column {}: unterminated quoted field", record_, fields.size() + 1),
                            record_);
            fields.push_back(std::move(field));
            return true;
        }
        const char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"' && field.empty() && !was_quoted) {
            quoted = was_quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else if (ch == '\n' || ch == '\r') {
            if (ch == '\r' && in_.peek() == '\n')
                in_.get();
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(ch);
        }
    }
}

void append_csv_field(std::string& out, std::string_view field)
{
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        out += field;
        return;
    }
    out.push_back('"');
    for (char c : field) {
        if (c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

void append_csv_row(std::string& out, const std::vector<std::string_view>& fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out.push_back(',');
        append_csv_field(out, fields[i]);
    }
    out += "\r\n";
}

void append_procmon_row(std::string& out, const Event& e)
{
    out += format_timestamp(e.time_us);
    out.push_back(',');
    append_csv_field(out, e.subject.value);
    out.push_back(',');
    fmt::format_to(std::back_inserter(out), "{}", e.pid);
    out.push_back(',');
    append_csv_field(out, e.operation);
    out.push_back(',');
    append_csv_field(out, e.object.value);
    out.push_back(',');
    append_csv_field(out, e.result);
    out.push_back(',');
    append_csv_field(out, e.detail);
    out += "\r\n";
}

void check_procmon_header(const std::vector<std::string>& fields)
{
    const auto expected = text::split(procmon_header, ',');
    bool ok = fields.size() == expected.size();
    for (std::size_t i = 0; ok && i < fields.size(); ++i) {
        // Tolerate a UTF-8 byte order mark on the first column.
        std::string_view f = fields[i];
        if (i == 0 && f.substr(0, 3) == "\xEF\xBB\xBF")
            f.remove_prefix(3);
        ok = f == expected[i];
    }
    if (!ok)
        throw Error(Errc::csv_parse, fmt::format("header must be '{}'", procmon_header), 0);
}

Event event_from_row(const std::vector<std::string>& fields, std::size_t row)
{
    auto fail = [&](std::size_t column, std::string_view what) {
        return Error(Errc::csv_parse, fmt::format("row {}, column {}: {}", row, column, what), row);
    };
    if (fields.size() != 7)
        throw fail(fields.size() < 7 ? fields.size() + 1 : 8, fmt::format("expected 7 fields, got {}", fields.size()));
    Event e;
    auto t = parse_timestamp(fields[0]);
    if (!t)
        throw fail(1, fmt::format("bad timestamp '{}'", fields[0]));
    e.time_us = *t;
    if (fields[1].empty())
        throw fail(2, "empty process name");
    e.subject = {EntityKind::process, fields[1], std::nullopt};
    auto pid = text::parse_int<std::uint64_t>(fields[2]);
    if (!pid)
        throw fail(3, fmt::format("bad PID '{}'", fields[2]));
    e.pid = *pid;
    if (fields[3].empty())
        throw fail(4, "empty operation");
    e.operation = fields[3];
    e.object = {infer_object_kind(e.operation), fields[4], std::nullopt};
    e.result = fields[5];
    e.detail = fields[6];
    e.seq = row - 1;
    return e;
}

std::vector<Event> read_procmon_events(std::istream& in)
{
    std::vector<Event> out;
    read_procmon_csv(in, [&](Event&& e) { out.push_back(std::move(e)); });
    return out;
}

} // namespace auditsynth
