#pragma once

#include <stdexcept>
#include <string>

namespace vucal {

// Error taxonomy shared across the library. The CLI maps categories to
// process exit codes: config -> 2, data/input -> 3, transport -> 4,
// anything else -> 5.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration detected before any compute starts.
struct ConfigError : Error {
    using Error::Error;
};

// Malformed or inconsistent data supplied by the caller.
struct DataError : Error {
    using Error::Error;
};

// Caller-side precondition violation (bad argument, dimension mismatch).
struct InputError : DataError {
    using DataError::DataError;
};

// Text that failed to parse; carries the offending raw text.
struct ParseError : DataError {
    ParseError(const std::string& what, std::string raw)
        : DataError(what), raw_text(std::move(raw)) {}
    std::string raw_text;
};

// Artifact kind or schema_version did not match what the loader expected.
struct VersioningError : DataError {
    using DataError::DataError;
};

// Contrastive selection produced an empty side.
struct SelectionError : DataError {
    using DataError::DataError;
};

// Numerically degenerate input (rank-0 data, singular system, ...).
struct DegenerateDataError : DataError {
    using DataError::DataError;
};

// Metric undefined on this input (single-class labels, constant series).
struct UndefinedMetricError : DataError {
    using DataError::DataError;
};

// External service failed after all retries; carries the retry count.
struct TransportError : Error {
    TransportError(const std::string& what, int retries_attempted)
        : Error(what), retries(retries_attempted) {}
    int retries = 0;
};

// External service rejected the request (4xx); never retried.
struct RequestError : Error {
    using Error::Error;
};

// An internal invariant was violated; indicates a bug, not bad input.
struct InternalError : Error {
    using Error::Error;
};

}  // namespace vucal
