#include "usdl/error.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace usdl {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::ScaleMismatch: return "ScaleMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InsufficientJudges: return "InsufficientJudges";
    case ErrorCode::InconsistentPanelSize: return "InconsistentPanelSize";
    case ErrorCode::MissingDD: return "MissingDD";
    case ErrorCode::MissingDDHead: return "MissingDDHead";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::NonHalfPointScore: return "NonHalfPointScore";
    case ErrorCode::VideoTooShort: return "VideoTooShort";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::ReportMissing: return "ReportMissing";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

namespace {

std::mutex& handler_mutex() {
    static std::mutex m;
    return m;
}

WarningHandler& handler_slot() {
    static WarningHandler h = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return h;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(handler_mutex());
    return std::exchange(handler_slot(), std::move(handler));
}

void warn(std::string_view message) {
    WarningHandler h;
    {
        std::lock_guard lock(handler_mutex());
        h = handler_slot();
    }
    if (h) h(message);
}

}  // namespace usdl
