#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ticksync {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- series / alignment ---
struct RateMismatch : Error { using Error::Error; };
struct EmptySeries : Error { using Error::Error; };
struct InsufficientEvents : Error { using Error::Error; };
struct NoPresses : Error { using Error::Error; };

// --- clock simulation ---
struct InvalidDuration : Error { using Error::Error; };
struct EmptyWindow : Error { using Error::Error; };
struct TraceTooShort : Error { using Error::Error; };

// --- ingestion ---
struct NoSuchPlayer : Error { using Error::Error; };
struct MissingChannel : Error { using Error::Error; };
struct UpsamplingUnsupported : Error { using Error::Error; };

// Parse-time failure; line_no is 1-based, 0 when not tied to a line.
struct ParseError : Error {
    std::int64_t line_no;
    explicit ParseError(const std::string& msg, std::int64_t line = 0)
        : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_no(line) {}
};

struct SchemaError : ParseError { using ParseError::ParseError; };
struct NonMonotonicTimestamps : ParseError { using ParseError::ParseError; };
struct PeriodMismatch : ParseError { using ParseError::ParseError; };
struct MalformedLine : ParseError { using ParseError::ParseError; };
struct MissingTick : ParseError { using ParseError::ParseError; };
struct NegativeTick : ParseError { using ParseError::ParseError; };
struct NonMonotonicTicks : ParseError { using ParseError::ParseError; };

} // namespace ticksync
