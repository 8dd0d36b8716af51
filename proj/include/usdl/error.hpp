#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace usdl {

enum class ErrorCode {
    InvalidScale,
    InvalidSpec,
    LabelOutOfRange,
    ScaleMismatch,
    ShapeMismatch,
    EmptyDataset,
    InsufficientJudges,
    InconsistentPanelSize,
    MissingDD,
    MissingDDHead,
    LengthMismatch,
    DegenerateSeries,
    DegenerateRange,
    OutOfRange,
    NonHalfPointScore,
    VideoTooShort,
    ParseError,
    ValidationError,
    InvalidConfig,
    ModeMismatch,
    ReportMissing,
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Non-fatal diagnostics (Fisher-z clamping, fusion-consistency mismatches).
// The default handler writes to stderr.
using WarningHandler = std::function<void(std::string_view)>;

WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace usdl
