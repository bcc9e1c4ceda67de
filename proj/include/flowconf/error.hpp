#pragma once

#include <stdexcept>
#include <string>

namespace flowconf {

// Numeric values double as CLI exit codes and C API status codes.
enum class ErrorCode : int {
    kUsage = 1,
    kData = 2,
    kCell = 3,
    kDiscard = 4,
    kUnreachable = 5,
    kInternal = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Bad arguments or configuration.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorCode::kUsage, what) {}
};

/// Malformed or inconsistent input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorCode::kData, what) {}
};

/// A flow has fewer packets than hash windows and must be left out.
class DiscardFlow : public Error {
public:
    explicit DiscardFlow(const std::string& what) : Error(ErrorCode::kDiscard, what) {}
};

/// Padding-rate calibration could not reach its target inside the scale bounds.
class CalibrationError : public Error {
public:
    CalibrationError(const std::string& what, double achieved_rate, double scale)
        : Error(ErrorCode::kUnreachable, what), achieved_rate_(achieved_rate), scale_(scale) {}

    double achieved_rate() const noexcept { return achieved_rate_; }
    double scale() const noexcept { return scale_; }

private:
    double achieved_rate_;
    double scale_;
};

}  // namespace flowconf
