#include "auditsynth/error.hpp"

#include <fmt/format.h>

namespace auditsynth {

std::string_view errc_name(Errc code)
{
    switch (code) {
    case Errc::config: return "ConfigError";
    case Errc::syntax: return "SyntaxError";
    case Errc::schema: return "SchemaError";
    case Errc::unknown_entity: return "UnknownEntity";
    case Errc::empty_pattern: return "EmptyPattern";
    case Errc::corpus_syntax: return "CorpusSyntaxError";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::not_faker_descriptor: return "NotFakerDescriptor";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::invalid_lifecycle: return "InvalidLifecycle";
    case Errc::pinned_unsatisfiable: return "PinnedUnsatisfiable";
    case Errc::planning_failed: return "PlanningFailed";
    case Errc::csv_parse: return "CsvParseError";
    case Errc::non_monotonic_time: return "NonMonotonicTime";
    case Errc::lapse_too_small: return "LapseTooSmall";
    case Errc::orphan_process: return "OrphanProcess";
    case Errc::empty_background: return "EmptyBackgroundPool";
    case Errc::io: return "IoError";
    case Errc::validation: return "ValidationFailed";
    }
    return "Error";
}

int exit_code_for(Errc code)
{
    switch (code) {
    case Errc::config: return 2;
    case Errc::syntax:
    case Errc::schema:
    case Errc::corpus_syntax:
    case Errc::empty_corpus:
    case Errc::csv_parse:
    case Errc::non_monotonic_time: return 3;
    case Errc::index_out_of_range:
    case Errc::invalid_lifecycle: return 4;
    case Errc::pinned_unsatisfiable:
    case Errc::planning_failed: return 5;
    case Errc::unknown_entity:
    case Errc::empty_pattern: return 6;
    case Errc::lapse_too_small:
    case Errc::empty_background:
    case Errc::not_faker_descriptor:
    case Errc::orphan_process: return 7;
    case Errc::validation: return 8;
    case Errc::io: return 9;
    }
    return 1;
}

Error::Error(Errc code, std::string message, std::optional<std::size_t> position)
    : std::runtime_error(fmt::format("{}: {}", errc_name(code), message))
    , code_(code)
    , position_(position)
{
}

} // namespace auditsynth
