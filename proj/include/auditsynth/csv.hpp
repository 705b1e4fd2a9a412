#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "auditsynth/model.hpp"

namespace auditsynth {

inline constexpr std::string_view procmon_header = "Time,Process Name,PID,Operation,Path,Result,Detail";

// RFC-4180 record reader. Quoted fields may contain commas, doubled quotes
// and line breaks; CRLF and LF endings are both accepted.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // false at end of input; throws Errc::csv_parse on an unterminated quote.
    bool next(std::vector<std::string>& fields);
    // 1-based number of the last record returned.
    std::size_t record() const { return record_; }

private:
    std::istream& in_;
    std::size_t record_ = 0;
};

void append_csv_field(std::string& out, std::string_view field);
void append_csv_row(std::string& out, const std::vector<std::string_view>& fields);

// One CRLF-terminated CSV record for an event.
void append_procmon_row(std::string& out, const Event& e);

// Converts a data row; `row` is the 1-based data row used in error positions.
// The object kind is inferred from the operation. Labels are left "O".
Event event_from_row(const std::vector<std::string>& fields, std::size_t row);

// Checks the header, then calls `fn(Event&&)` for every data row in order.
template <typename Fn>
void read_procmon_csv(std::istream& in, Fn&& fn);

void check_procmon_header(const std::vector<std::string>& fields);

std::vector<Event> read_procmon_events(std::istream& in);

template <typename Fn>
void read_procmon_csv(std::istream& in, Fn&& fn)
{
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) {
        check_procmon_header({});
        return;
    }
    check_procmon_header(fields);
    std::size_t row = 0;
    while (reader.next(fields))
        fn(event_from_row(fields, ++row));
}

} // namespace auditsynth
