#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace auditsynth {

enum class Errc {
    config,
    syntax,
    schema,
    unknown_entity,
    empty_pattern,
    corpus_syntax,
    empty_corpus,
    not_faker_descriptor,
    index_out_of_range,
    invalid_lifecycle,
    pinned_unsatisfiable,
    planning_failed,
    csv_parse,
    non_monotonic_time,
    lapse_too_small,
    orphan_process,
    empty_background,
    io,
    validation,
};

std::string_view errc_name(Errc code);

/// Process exit status for an error category; documented in `auditsynth --help`.
int exit_code_for(Errc code);

// Single exception type for the library; `position()` carries the line, row,
// step or sequence index the error refers to when one exists.
class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message, std::optional<std::size_t> position = std::nullopt);

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> position() const noexcept { return position_; }

private:
    Errc code_;
    std::optional<std::size_t> position_;
};

} // namespace auditsynth
