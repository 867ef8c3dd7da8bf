#pragma once

#include <stdexcept>
#include <string>

namespace textad {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    ok = 0,
    config_or_data = 2,
    numerical = 3,
    artifact_mismatch = 4,
};

/// Root of all library errors. Every error maps onto one exit code.
class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& prefix, const std::string& detail)
        : std::runtime_error(prefix + detail), code_(code), detail_(detail) {}
    [[nodiscard]] ExitCode code() const noexcept { return code_; }
    /// Message without the category prefix, for re-throwing with added context.
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

private:
    ExitCode code_;
    std::string detail_;
};

#define TEXTAD_DEFINE_ERROR(Name, Code, prefix)                                        \
    class Name : public Error {                                                        \
    public:                                                                            \
        explicit Name(const std::string& what) : Error(Code, prefix, what) {}                \
    }

TEXTAD_DEFINE_ERROR(ConfigError, ExitCode::config_or_data, "config error: ");
TEXTAD_DEFINE_ERROR(FormatError, ExitCode::config_or_data, "format error: ");
TEXTAD_DEFINE_ERROR(EmptyInputError, ExitCode::config_or_data, "empty input: ");
TEXTAD_DEFINE_ERROR(CapacityError, ExitCode::config_or_data, "capacity error: ");
TEXTAD_DEFINE_ERROR(InfeasibleError, ExitCode::config_or_data, "infeasible: ");
TEXTAD_DEFINE_ERROR(DomainError, ExitCode::config_or_data, "domain error: ");
TEXTAD_DEFINE_ERROR(RangeError, ExitCode::config_or_data, "range error: ");
TEXTAD_DEFINE_ERROR(ShapeError, ExitCode::config_or_data, "shape error: ");
TEXTAD_DEFINE_ERROR(ModeError, ExitCode::config_or_data, "mode error: ");
TEXTAD_DEFINE_ERROR(DataError, ExitCode::config_or_data, "data error: ");
TEXTAD_DEFINE_ERROR(DegenerateInputError, ExitCode::config_or_data, "degenerate input: ");
TEXTAD_DEFINE_ERROR(UndefinedMetricError, ExitCode::config_or_data, "undefined metric: ");
TEXTAD_DEFINE_ERROR(IoError, ExitCode::config_or_data, "io error: ");
TEXTAD_DEFINE_ERROR(NumericalError, ExitCode::numerical, "numerical failure: ");
TEXTAD_DEFINE_ERROR(ArtifactMismatchError, ExitCode::artifact_mismatch, "artifact mismatch: ");

#undef TEXTAD_DEFINE_ERROR

}  // namespace textad
