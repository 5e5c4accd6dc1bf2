#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stsr {

enum class ErrorCode {
    ParseError,
    SizeMismatch,
    IoError,
    MissingCase,
    NotRigid,
    OutOfBounds,
    GeometryMismatch,
    InvalidTolerance,
    InvalidArgument,
    ZeroVariance,
    EmptyInput,
    TooFewSamples,
    Degenerate,
    NoCorrespondences,
    EmptyCloud,
    DegenerateCloud,
    InvalidSpec,
    DegeneratePrior,
    UnknownMetric,
};

std::string_view error_name(ErrorCode code);

/// Process exit code for an error class: 2 for I/O and parse failures, 1 for everything else.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace stsr
