#pragma once

#include <stdexcept>
#include <string>

namespace ppg2ecg {

/// Failure categories surfaced by the pipeline. Each maps to one contract
/// violation; the message carries the human-readable detail.
enum class ErrorCode {
    NonFiniteSample,
    LengthMismatchBeyondTolerance,
    NonMonotonePeaks,
    TooFewPeaks,
    InsufficientPeaks,
    EmptyOverlap,
    SignalTooShort,
    NoValidCycles,
    AllCyclesDegenerate,
    TooFewCycles,
    LengthMismatch,
    BadCount,
    SingularSystem,
    DimensionMismatch,
    ZeroReference,
    ConstantInput,
    TooFewSessions,
    RankDeficientDesign,
    InvalidConfig,
    ParseError,
    MissingMeta,
    UnitMismatch,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, long long index = -1)
        : std::runtime_error(message), code_(code), index_(index) {}

    ErrorCode code() const noexcept { return code_; }

    /// Sample index, line number, or similar locator when one applies; -1 otherwise.
    long long index() const noexcept { return index_; }

private:
    ErrorCode code_;
    long long index_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message, long long index = -1) {
    throw Error(code, message, index);
}

}  // namespace ppg2ecg
